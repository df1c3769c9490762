//! Experiment configuration: schema, validation with field paths, defaults.
//!
//! Validation walks the raw JSON document against the schema of the named
//! experiment, collects every problem, and only then returns either a fully
//! normalized [`ExperimentConfig`] or the complete error list.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;
use serde_json::{json, Map, Value};

use fluctlab_core::qstate::checked_dim;
use fluctlab_core::rqc::MAX_STATE_DIM;
use fluctlab_core::hamspin::MAX_SITES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    RqcRelax,
    RqcTails,
    RqcTailMeans,
    HamRelax,
    HamStationary,
    HamTtf,
    CcrqcHomog,
    CcrqcStep,
    BoundsSweep,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 9] = [
        ExperimentId::RqcRelax,
        ExperimentId::RqcTails,
        ExperimentId::RqcTailMeans,
        ExperimentId::HamRelax,
        ExperimentId::HamStationary,
        ExperimentId::HamTtf,
        ExperimentId::CcrqcHomog,
        ExperimentId::CcrqcStep,
        ExperimentId::BoundsSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::RqcRelax => "rqc_relax",
            ExperimentId::RqcTails => "rqc_tails",
            ExperimentId::RqcTailMeans => "rqc_tail_means",
            ExperimentId::HamRelax => "ham_relax",
            ExperimentId::HamStationary => "ham_stationary",
            ExperimentId::HamTtf => "ham_ttf",
            ExperimentId::CcrqcHomog => "ccrqc_homog",
            ExperimentId::CcrqcStep => "ccrqc_step",
            ExperimentId::BoundsSweep => "bounds_sweep",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.as_str() == s)
    }

    fn family(self) -> Family {
        match self {
            ExperimentId::RqcRelax | ExperimentId::RqcTails | ExperimentId::RqcTailMeans => Family::Circuit,
            ExperimentId::CcrqcHomog | ExperimentId::CcrqcStep => Family::Charge,
            ExperimentId::HamRelax | ExperimentId::HamStationary | ExperimentId::HamTtf => Family::Ising,
            ExperimentId::BoundsSweep => Family::Sweep,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Circuit,
    Charge,
    Ising,
    Sweep,
}

/// One violated constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub message: String,
    /// The value is well formed but the run would exceed a resource guard.
    pub resource: bool,
}

impl ConfigIssue {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into(), resource: false }
    }

    pub fn resource(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into(), resource: true }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Uint { min: u64, max: u64 },
    Float { min: f64, max: f64 },
    Choice(&'static [&'static str]),
    Text,
    Bool,
    UintList { min: u64, max: u64 },
    FloatList { min: f64, max: f64 },
}

struct Field {
    path: &'static str,
    kind: Kind,
    default: Option<fn() -> Value>,
}

const fn field(path: &'static str, kind: Kind, default: Option<fn() -> Value>) -> Field {
    Field { path, kind, default }
}

const U: u64 = u64::MAX;
const ENSEMBLES: &[&str] = &["haar", "u1_conserving"];
const INITIAL_STATES: &[&str] = &["all_zero", "homogeneous_half_filling", "step_function"];
const BOUNDARIES: &[&str] = &["periodic", "open"];
const HAM_INITIAL: &[&str] = &["y_plus", "random_product"];

fn default_delta_s() -> Value {
    json!([0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6])
}

fn schema(id: ExperimentId) -> Vec<Field> {
    use Kind::*;
    let mut f = vec![
        field("experiment", Text, None),
        field("seed", Uint { min: 0, max: U }, Some(|| json!(0))),
        field("trials", Uint { min: 1, max: U }, Some(|| json!(1000))),
        field("workers", Uint { min: 1, max: 1024 }, Some(|| json!(1))),
        field("output", Text, None),
    ];
    let region = |f: &mut Vec<Field>, len: u64| {
        f.push(field("region.start", Uint { min: 0, max: U }, Some(|| json!(0))));
        f.push(match len {
            1 => field("region.len", Uint { min: 1, max: U }, Some(|| json!(1))),
            _ => field("region.len", Uint { min: 1, max: U }, Some(|| json!(2))),
        });
    };
    let couplings = |f: &mut Vec<Field>| {
        f.push(field("model.sizes", UintList { min: 1, max: 64 }, None));
        f.push(field("model.j", Float { min: f64::MIN, max: f64::MAX }, Some(|| json!(1.0))));
        f.push(field("model.g", Float { min: f64::MIN, max: f64::MAX }, Some(|| json!(-1.05))));
        f.push(field("model.h", Float { min: f64::MIN, max: f64::MAX }, Some(|| json!(0.5))));
        f.push(field("model.boundary", Choice(BOUNDARIES), Some(|| json!("periodic"))));
    };
    match id.family() {
        Family::Circuit => {
            f.push(field("model.n", Uint { min: 4, max: 64 }, None));
            f.push(field("model.q", Uint { min: 2, max: 64 }, Some(|| json!(2))));
            f.push(field("model.depth", Uint { min: 0, max: U }, None));
            f.push(field("model.ensemble", Choice(ENSEMBLES), Some(|| json!("haar"))));
            f.push(field("model.initial_state", Choice(INITIAL_STATES), Some(|| json!("all_zero"))));
            f.push(field("model.record_every", Uint { min: 1, max: U }, Some(|| json!(1))));
            region(&mut f, 1);
        }
        Family::Charge => {
            f.push(field("model.sizes", UintList { min: 4, max: 64 }, None));
            f.push(field("model.q", Uint { min: 2, max: 64 }, Some(|| json!(2))));
            f.push(field("model.depth", Uint { min: 0, max: U }, None));
            f.push(field("model.record_every", Uint { min: 1, max: U }, Some(|| json!(1))));
            region(&mut f, 1);
        }
        Family::Ising => {
            couplings(&mut f);
            region(&mut f, if id == ExperimentId::HamRelax { 2 } else { 1 });
        }
        Family::Sweep => {
            f.push(field("model.sizes", UintList { min: 2, max: 64 }, None));
            f.push(field("model.qs", UintList { min: 2, max: 64 }, Some(|| json!([2]))));
            f.push(field("region.len", Uint { min: 1, max: U }, Some(|| json!(2))));
        }
    }
    match id {
        ExperimentId::RqcTails => {
            f.push(field("analysis.delta_s", FloatList { min: 0.0, max: f64::MAX }, Some(default_delta_s)));
            f.push(field("analysis.times", UintList { min: 0, max: U }, Some(|| json!([]))));
        }
        ExperimentId::RqcTailMeans => {
            f.push(field("analysis.alphas", FloatList { min: 0.0, max: 12.0 }, Some(|| json!([0.0, 1.0, 2.0]))));
            f.push(field("analysis.times", UintList { min: 0, max: U }, Some(|| json!([]))));
        }
        ExperimentId::HamRelax => {
            f.push(field("analysis.t_min", Float { min: 0.0, max: f64::MAX }, Some(|| json!(0.1))));
            f.push(field("analysis.t_max", Float { min: 0.0, max: f64::MAX }, Some(|| json!(1e4))));
            f.push(field("analysis.points", Uint { min: 2, max: 1_000_000 }, Some(|| json!(200))));
            f.push(field("analysis.window_start", Float { min: 0.0, max: f64::MAX }, Some(|| json!(100.0))));
            f.push(field("analysis.window_end", Float { min: 0.0, max: f64::MAX }, Some(|| json!(1e4))));
            f.push(field("analysis.window_samples", Uint { min: 1, max: 10_000_000 }, Some(|| json!(1000))));
            f.push(field("analysis.plateau_start_per_site", Float { min: 0.0, max: f64::MAX }, Some(|| json!(10.0))));
        }
        ExperimentId::HamStationary => {
            f.push(field("analysis.initial", Choice(HAM_INITIAL), Some(|| json!("y_plus"))));
            f.push(field("analysis.initial_states", Uint { min: 1, max: 100_000 }, Some(|| json!(1))));
            f.push(field("analysis.window_start", Float { min: 0.0, max: f64::MAX }, Some(|| json!(100.0))));
            f.push(field("analysis.window_end", Float { min: 0.0, max: f64::MAX }, Some(|| json!(1e6))));
            f.push(field("analysis.samples", Uint { min: 1, max: 100_000_000 }, Some(|| json!(10_000))));
            f.push(field("analysis.delta_s", FloatList { min: 0.0, max: f64::MAX }, Some(default_delta_s)));
            f.push(field("analysis.min_count", Uint { min: 1, max: U }, Some(|| json!(10))));
        }
        ExperimentId::HamTtf => {
            f.push(field("analysis.initial", Choice(HAM_INITIAL), Some(|| json!("random_product"))));
            f.push(field("analysis.initial_states", Uint { min: 1, max: 100_000 }, Some(|| json!(10))));
            f.push(field("analysis.t_start", Float { min: 0.0, max: f64::MAX }, Some(|| json!(100.0))));
            f.push(field("analysis.dt", Float { min: 1e-9, max: f64::MAX }, Some(|| json!(1.0))));
            f.push(field("analysis.t_max", Float { min: 0.0, max: f64::MAX }, Some(|| json!(1e4))));
            f.push(field("analysis.delta_s", FloatList { min: 0.0, max: f64::MAX }, Some(default_delta_s)));
        }
        ExperimentId::BoundsSweep => {
            f.push(field("analysis.times", UintList { min: 1, max: U }, Some(|| json!([1, 2, 4, 8, 16]))));
            f.push(field("analysis.taus", FloatList { min: 1e-12, max: f64::MAX }, Some(|| json!([0.5, 1.0]))));
            f.push(field("analysis.ks", UintList { min: 1, max: 1_000_000 }, Some(|| json!([1, 2, 4]))));
            f.push(field("analysis.eps", Float { min: 0.0, max: f64::MAX }, Some(|| json!(0.0))));
            f.push(field("analysis.design_c", Float { min: 1e-12, max: f64::MAX }, Some(|| json!(1.0))));
            f.push(field("analysis.design_c_prime", Float { min: 1e-12, max: 1.0 - 1e-12 }, Some(|| json!(0.5))));
            f.push(field("analysis.count_c", Float { min: 1.0 + 1e-12, max: f64::MAX }, Some(|| json!(5.0))));
            f.push(field("analysis.empirical", Bool, Some(|| json!(false))));
        }
        _ => {}
    }
    f
}

fn lookup<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(root, |v, key| v.get(key))
}

fn insert(root: &mut Map<String, Value>, path: &str, value: Value) {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().expect("non-empty path");
    let mut cur = root;
    for p in parts {
        cur = cur
            .entry(p.to_string())
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .expect("schema sections are objects");
    }
    cur.insert(last.to_string(), value);
}

fn check_kind(kind: Kind, v: &Value) -> Result<Value, String> {
    let uint = |x: &Value, min: u64, max: u64| -> Result<u64, String> {
        let n = x.as_u64().ok_or_else(|| format!("expected a nonnegative integer, got {x}"))?;
        if n < min || n > max {
            return Err(format!("must lie in [{min}, {max}], got {n}"));
        }
        Ok(n)
    };
    let float = |x: &Value, min: f64, max: f64| -> Result<f64, String> {
        let f = x.as_f64().filter(|f| f.is_finite()).ok_or_else(|| format!("expected a number, got {x}"))?;
        if f < min || f > max {
            return Err(format!("must lie in [{min}, {max}], got {f}"));
        }
        Ok(f)
    };
    match kind {
        Kind::Uint { min, max } => uint(v, min, max).map(Value::from),
        Kind::Float { min, max } => float(v, min, max).map(Value::from),
        Kind::Choice(options) => match v.as_str() {
            Some(s) if options.contains(&s) => Ok(v.clone()),
            _ => Err(format!("must be one of {options:?}, got {v}")),
        },
        Kind::Text => v.as_str().map(|_| v.clone()).ok_or_else(|| format!("expected a string, got {v}")),
        Kind::Bool => v.as_bool().map(Value::from).ok_or_else(|| format!("expected true or false, got {v}")),
        Kind::UintList { min, max } => {
            let items = v.as_array().ok_or_else(|| format!("expected a list, got {v}"))?;
            items.iter().map(|x| uint(x, min, max).map(Value::from)).collect::<Result<Vec<_>, _>>().map(Value::Array)
        }
        Kind::FloatList { min, max } => {
            let items = v.as_array().ok_or_else(|| format!("expected a list, got {v}"))?;
            items.iter().map(|x| float(x, min, max).map(Value::from)).collect::<Result<Vec<_>, _>>().map(Value::Array)
        }
    }
}

fn collect_unknown(raw: &Value, prefix: &str, known: &[&str], out: &mut Vec<ConfigIssue>) {
    if let Some(obj) = raw.as_object() {
        for (k, v) in obj {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            let is_leaf = known.contains(&path.as_str());
            let is_section = known.iter().any(|p| p.starts_with(&format!("{path}.")));
            if is_leaf {
                continue;
            }
            if is_section {
                if v.is_object() {
                    collect_unknown(v, &path, known, out);
                } else {
                    out.push(ConfigIssue::invalid(path, "expected an object"));
                }
            } else {
                out.push(ConfigIssue::invalid(path, "unknown key"));
            }
        }
    }
}

/// Validated configuration; [`ExperimentConfig::document`] holds every field with defaults filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub trials: u64,
    pub workers: usize,
    pub output: PathBuf,
    document: Value,
}

impl ExperimentConfig {
    /// Normalized document (canonical key order).
    pub fn document(&self) -> &Value {
        &self.document
    }

    pub fn uint(&self, path: &str) -> u64 {
        lookup(&self.document, path).and_then(Value::as_u64).unwrap_or_else(|| panic!("validated field {path}"))
    }

    pub fn usize(&self, path: &str) -> usize {
        self.uint(path) as usize
    }

    pub fn float(&self, path: &str) -> f64 {
        lookup(&self.document, path).and_then(Value::as_f64).unwrap_or_else(|| panic!("validated field {path}"))
    }

    pub fn text(&self, path: &str) -> &str {
        lookup(&self.document, path).and_then(Value::as_str).unwrap_or_else(|| panic!("validated field {path}"))
    }

    pub fn flag(&self, path: &str) -> bool {
        lookup(&self.document, path).and_then(Value::as_bool).unwrap_or_else(|| panic!("validated field {path}"))
    }

    pub fn uint_list(&self, path: &str) -> Vec<usize> {
        lookup(&self.document, path)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_u64).map(|x| x as usize).collect())
            .unwrap_or_else(|| panic!("validated field {path}"))
    }

    pub fn float_list(&self, path: &str) -> Vec<f64> {
        lookup(&self.document, path)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_f64).collect())
            .unwrap_or_else(|| panic!("validated field {path}"))
    }

    /// Applies command-line overrides and revalidates.
    pub fn with_overrides(&self, o: &Overrides) -> Result<Self, Vec<ConfigIssue>> {
        let mut doc = self.document.clone();
        let obj = doc.as_object_mut().expect("document is an object");
        if let Some(s) = o.seed {
            obj.insert("seed".into(), json!(s));
        }
        if let Some(w) = o.workers {
            obj.insert("workers".into(), json!(w));
        }
        if let Some(t) = o.trials {
            obj.insert("trials".into(), json!(t));
        }
        if let Some(dir) = &o.out_dir {
            let name = PathBuf::from(self.output.file_name().map(PathBuf::from).unwrap_or_default());
            obj.insert("output".into(), json!(dir.join(name).to_string_lossy()));
        }
        validate_config(&doc)
    }

    /// Canonical JSON text of everything except the worker count, which never
    /// affects results.
    pub fn echo(&self) -> String {
        let mut doc = self.document.clone();
        if let Some(obj) = doc.as_object_mut() {
            obj.remove("workers");
        }
        doc.to_string()
    }
}

/// Command-line overrides of top-level fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub trials: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// Validates a raw document, returning every violated constraint on failure.
pub fn validate_config(raw: &Value) -> Result<ExperimentConfig, Vec<ConfigIssue>> {
    let mut issues = Vec::new();
    let issue = |path: &str, message: String| ConfigIssue::invalid(path, message);
    if !raw.is_object() {
        return Err(vec![issue("", "configuration must be a JSON object".into())]);
    }
    let id = match raw.get("experiment").and_then(Value::as_str) {
        Some(s) => match ExperimentId::parse(s) {
            Some(id) => id,
            None => {
                let names: Vec<&str> = ExperimentId::ALL.iter().map(|e| e.as_str()).collect();
                return Err(vec![issue("experiment", format!("unknown experiment {s:?}; expected one of {names:?}"))]);
            }
        },
        None => return Err(vec![issue("experiment", "required string field is missing".into())]),
    };

    let fields = schema(id);
    let known: Vec<&str> = fields.iter().map(|f| f.path).collect();
    collect_unknown(raw, "", &known, &mut issues);

    let unknown = issues.len();
    let mut doc = Map::new();
    for f in &fields {
        let value = match lookup(raw, f.path) {
            Some(v) => match check_kind(f.kind, v) {
                Ok(v) => v,
                Err(msg) => {
                    issues.push(issue(f.path, msg));
                    continue;
                }
            },
            None => match (f.default, f.path) {
                (Some(d), _) => d(),
                (None, "output") => json!(format!("{id}.csv")),
                (None, _) => {
                    issues.push(issue(f.path, "required field is missing".into()));
                    continue;
                }
            },
        };
        insert(&mut doc, f.path, value);
    }
    let doc = Value::Object(doc);
    // Cross-field checks need every field present and well typed.
    if issues.len() == unknown {
        cross_checks(id, &doc, &mut issues);
    }
    if !issues.is_empty() {
        return Err(issues);
    }
    let get_u = |p: &str| lookup(&doc, p).and_then(Value::as_u64).unwrap_or(0);
    Ok(ExperimentConfig {
        experiment: id,
        seed: get_u("seed"),
        trials: get_u("trials"),
        workers: get_u("workers") as usize,
        output: PathBuf::from(lookup(&doc, "output").and_then(Value::as_str).unwrap_or_default()),
        document: doc,
    })
}

fn cross_checks(id: ExperimentId, doc: &Value, issues: &mut Vec<ConfigIssue>) {
    let u = |p: &str| lookup(doc, p).and_then(Value::as_u64).unwrap_or(0) as usize;
    let s = |p: &str| lookup(doc, p).and_then(Value::as_str).unwrap_or("").to_string();
    let list = |p: &str| -> Vec<usize> {
        lookup(doc, p)
            .and_then(Value::as_array)
            .map(|a| a.iter().filter_map(Value::as_u64).map(|x| x as usize).collect())
            .unwrap_or_default()
    };
    let refused = std::cell::RefCell::new(Vec::new());
    let mut push = |path: &str, message: String| issues.push(ConfigIssue::invalid(path, message));
    let region_fits = |n: usize, push: &mut dyn FnMut(&str, String)| {
        let (start, len) = (u("region.start"), u("region.len"));
        if start >= n {
            push("region.start", format!("must be below the chain length {n}, got {start}"));
        }
        if len >= n {
            push("region.len", format!("must be below the chain length {n}, got {len}"));
        }
    };
    let state_guard = |n: usize, q: usize, path: &str| match checked_dim(q, n) {
        Ok(d) if d <= MAX_STATE_DIM => {}
        _ => refused.borrow_mut().push(ConfigIssue::resource(
            path,
            format!("state vector needs q^n = {q}^{n} amplitudes, limit is 2^24"),
        )),
    };
    match id.family() {
        Family::Circuit => {
            let (n, q) = (u("model.n"), u("model.q"));
            let charged = s("model.initial_state") != "all_zero";
            if n % 2 != 0 {
                let msg = if charged {
                    format!("n must be even for half filling and brickwork pairing, got {n}")
                } else {
                    format!("n must be even for brickwork pairing, got {n}")
                };
                push("model.n", msg);
            }
            if s("model.ensemble") == "u1_conserving" && q != 2 {
                push("model.q", format!("u1_conserving requires q = 2, got q = {q}"));
            } else if charged && q != 2 {
                push("model.q", format!("charge initial states require q = 2, got q = {q}"));
            }
            state_guard(n, q, "model.n");
            region_fits(n, &mut push);
            if id == ExperimentId::RqcTailMeans {
                let trials = u("trials") as f64;
                for a in lookup(doc, "analysis.alphas").and_then(Value::as_array).into_iter().flatten() {
                    let alpha = a.as_f64().unwrap_or(0.0);
                    let need = (10.0 * 10f64.powf(alpha)).ceil();
                    if trials < need {
                        push("trials", format!("alpha = {alpha} needs at least {need} trials"));
                    }
                }
            }
            let (depth, every) = (u("model.depth"), u("model.record_every"));
            for t in list("analysis.times") {
                if t > depth {
                    push("analysis.times", format!("time {t} exceeds depth {depth}"));
                } else if t % every != 0 {
                    push("analysis.times", format!("time {t} is not recorded with record_every = {every}"));
                }
            }
        }
        Family::Charge => {
            if u("model.q") != 2 {
                push("model.q", format!("u1_conserving requires q = 2, got q = {}", u("model.q")));
            }
            let sizes = list("model.sizes");
            if sizes.is_empty() {
                push("model.sizes", "must list at least one chain length".into());
            }
            for n in sizes {
                if n % 2 != 0 {
                    push("model.sizes", format!("half filling requires even n, got {n}"));
                }
                state_guard(n, 2, "model.sizes");
                region_fits(n, &mut push);
            }
        }
        Family::Ising => {
            let sizes = list("model.sizes");
            if sizes.is_empty() {
                push("model.sizes", "must list at least one chain length".into());
            }
            for n in sizes {
                if n > MAX_SITES {
                    refused.borrow_mut().push(ConfigIssue::resource(
                        "model.sizes",
                        format!("dense diagonalization of 2^{n} exceeds the limit 2^{MAX_SITES}"),
                    ));
                }
                region_fits(n.max(1), &mut push);
            }
            let (t0, t1) = match id {
                ExperimentId::HamRelax | ExperimentId::HamStationary => ("analysis.window_start", "analysis.window_end"),
                _ => ("analysis.t_start", "analysis.t_max"),
            };
            if !t0.is_empty() {
                let f = |p: &str| lookup(doc, p).and_then(Value::as_f64).unwrap_or(0.0);
                if f(t0) >= f(t1) {
                    push(t1, format!("must exceed {t0}"));
                }
            }
            if id == ExperimentId::HamRelax {
                let f = |p: &str| lookup(doc, p).and_then(Value::as_f64).unwrap_or(0.0);
                if !(f("analysis.t_min") > 0.0 && f("analysis.t_min") < f("analysis.t_max")) {
                    push("analysis.t_min", "must be positive and below analysis.t_max".into());
                }
            }
        }
        Family::Sweep => {
            let len = u("region.len");
            for n in list("model.sizes") {
                if len >= n {
                    push("region.len", format!("must be below every chain length, got {len} for n = {n}"));
                }
            }
            if lookup(doc, "analysis.empirical").and_then(Value::as_bool).unwrap_or(false) {
                for n in list("model.sizes") {
                    for q in list("model.qs") {
                        if n % 2 != 0 {
                            push("model.sizes", format!("empirical sweeps need even n, got {n}"));
                        }
                        state_guard(n, q, "model.sizes");
                    }
                }
            }
        }
    }
    issues.extend(refused.into_inner());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paths(r: Result<ExperimentConfig, Vec<ConfigIssue>>) -> Vec<String> {
        r.unwrap_err().into_iter().map(|i| i.path).collect()
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = validate_config(&json!({"experiment": "rqc_tails", "model": {"n": 6, "depth": 10}})).unwrap();
        assert_eq!(cfg.experiment, ExperimentId::RqcTails);
        assert_eq!(cfg.usize("model.q"), 2);
        assert_eq!(cfg.text("model.ensemble"), "haar");
        assert_eq!(cfg.usize("region.len"), 1);
        assert_eq!(cfg.trials, 1000);
        assert_eq!(cfg.output, PathBuf::from("rqc_tails.csv"));
        assert!(!cfg.float_list("analysis.delta_s").is_empty());
        // Normalization is idempotent.
        assert_eq!(validate_config(cfg.document()).unwrap(), cfg);
    }

    #[test]
    fn odd_n_with_half_filling_names_parity() {
        let issues = validate_config(&json!({
            "experiment": "rqc_relax",
            "model": {"n": 7, "depth": 3, "ensemble": "u1_conserving", "initial_state": "step_function"}
        }))
        .unwrap_err();
        assert!(issues.iter().any(|i| i.path == "model.n" && i.message.contains("even")));
        let issues = validate_config(&json!({"experiment": "ccrqc_step", "model": {"sizes": [6, 7], "depth": 3}}))
            .unwrap_err();
        assert!(issues.iter().any(|i| i.path == "model.sizes" && i.message.contains("even")));
    }

    #[test]
    fn u1_requires_qubits() {
        let issues = validate_config(&json!({
            "experiment": "rqc_relax",
            "model": {"n": 6, "q": 3, "depth": 3, "ensemble": "u1_conserving"}
        }))
        .unwrap_err();
        assert!(issues.iter().any(|i| i.message.contains("u1_conserving requires q = 2")));
    }

    #[test]
    fn every_problem_is_reported() {
        let p = paths(validate_config(&json!({
            "experiment": "rqc_tails",
            "trials": 0,
            "bogus": 1,
            "model": {"n": "six", "depth": 3, "extra": true},
            "analysis": {"delta_s": [0.1, -1.0]}
        })));
        for expected in ["bogus", "model.extra", "trials", "model.n", "analysis.delta_s"] {
            assert!(p.iter().any(|x| x == expected), "{expected} missing from {p:?}");
        }
    }

    #[test]
    fn missing_and_unknown_experiment() {
        assert_eq!(paths(validate_config(&json!({}))), vec!["experiment"]);
        assert_eq!(paths(validate_config(&json!({"experiment": "nope"}))), vec!["experiment"]);
        assert_eq!(paths(validate_config(&json!({"experiment": "ham_relax"}))), vec!["model.sizes"]);
    }

    #[test]
    fn resource_guard_is_a_config_issue() {
        let p = paths(validate_config(&json!({"experiment": "rqc_relax", "model": {"n": 26, "depth": 1}})));
        assert_eq!(p, vec!["model.n"]);
        let p = paths(validate_config(&json!({"experiment": "ham_relax", "model": {"sizes": [16]}})));
        assert_eq!(p, vec!["model.sizes"]);
    }

    #[test]
    fn overrides_revalidate() {
        let cfg = validate_config(&json!({"experiment": "rqc_relax", "model": {"n": 6, "depth": 2}, "output": "a/b.csv"})).unwrap();
        let o = Overrides { seed: Some(9), workers: Some(8), trials: Some(5), out_dir: Some(PathBuf::from("out")) };
        let c2 = cfg.with_overrides(&o).unwrap();
        assert_eq!((c2.seed, c2.workers, c2.trials), (9, 8, 5));
        assert_eq!(c2.output, PathBuf::from("out/b.csv"));
        assert_eq!(c2.echo().contains("workers"), false);
        let bad = Overrides { trials: Some(0), ..Overrides::default() };
        assert!(cfg.with_overrides(&bad).is_err());
    }
}
