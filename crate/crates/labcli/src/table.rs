//! Result tables and their CSV persistence.
//!
//! A file consists of `#`-prefixed metadata lines followed by a header row and
//! the data rows (the body). Everything except the `wall_time_s` line is a
//! pure function of the configuration.

use std::fmt;
use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::{LabError, LabResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Build identifier baked in at compile time (short git revision or `unknown`).
pub const BUILD_ID: &str = env!("FLUCTLAB_BUILD_ID");

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Shortest round-trip decimal, switching to exponent form outside `[1e-4, 1e15)`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => f.write_str(&format_float(*v)),
            Cell::Text(s) => f.write_str(s),
            Cell::Bool(b) => write!(f, "{b}"),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub experiment: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Canonical configuration echo (compact JSON).
    pub config_echo: String,
    /// Deterministic notes (sampling conventions and the like).
    pub notes: Vec<(String, String)>,
    pub wall_time_s: f64,
}

impl ResultTable {
    pub fn new(experiment: impl Into<String>, columns: &[&'static str]) -> Self {
        Self {
            experiment: experiment.into(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            config_echo: String::new(),
            notes: Vec::new(),
            wall_time_s: 0.0,
        }
    }

    /// Appends a row; the arity must match the header.
    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row arity differs from the {} schema", self.experiment);
        self.rows.push(row);
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.notes.push((key.into(), value.into()));
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| *c == name)
    }

    /// Header row and data rows as CSV text.
    pub fn body(&self) -> LabResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::io("flushing csv buffer", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn preamble(&self) -> String {
        let mut lines = vec![
            format!("schema_version: {SCHEMA_VERSION}"),
            format!("experiment: {}", self.experiment),
            format!("config: {}", self.config_echo),
            format!("build_id: {BUILD_ID}"),
            format!("prng: {}", fluctlab_core::rng::PRNG_ALGORITHM),
        ];
        lines.extend(self.notes.iter().map(|(k, v)| format!("{k}: {v}")));
        lines.push(format!("wall_time_s: {:.3}", self.wall_time_s));
        lines.iter().map(|l| format!("# {l}\n")).collect()
    }

    pub fn render(&self) -> LabResult<String> {
        Ok(self.preamble() + &self.body()?)
    }

    /// Writes to a temporary file beside `path` and renames it into place.
    pub fn write_atomic(&self, path: &Path) -> LabResult<()> {
        let text = self.render()?;
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(format!("creating {}", dir.display()), e))?;
        let mut tmp = NamedTempFile::new_in(dir).map_err(|e| LabError::io("creating temporary file", e))?;
        tmp.write_all(text.as_bytes()).map_err(|e| LabError::io("writing temporary file", e))?;
        tmp.as_file().sync_all().map_err(|e| LabError::io("syncing temporary file", e))?;
        tmp.persist(path).map_err(|e| LabError::io(format!("renaming into {}", path.display()), e.error))?;
        Ok(())
    }
}

/// Splits a rendered file into its metadata map and its body.
pub fn split_rendered(text: &str) -> (Vec<(String, String)>, String) {
    let mut meta = Vec::new();
    let mut body = String::new();
    for line in text.split_inclusive('\n') {
        match line.strip_prefix("# ") {
            Some(m) if body.is_empty() => {
                let (k, v) = m.trim_end().split_once(": ").unwrap_or((m.trim_end(), ""));
                meta.push((k.to_string(), v.to_string()));
            }
            _ => body.push_str(line),
        }
    }
    (meta, body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.0, 1.0, -2.5, 0.1, 1e-5, 123456.789, 6.02e23, -3.3e-300, 1.0 / 3.0] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_float(1e-5), "1e-5");
        assert_eq!(format_float(0.25), "0.25");
        assert_eq!(format_float(f64::NAN), "nan");
    }

    #[test]
    fn render_and_split() {
        let mut t = ResultTable::new("demo", &["a", "b"]);
        t.config_echo = "{\"x\":1}".into();
        t.note("sampling", "none");
        t.push(vec![Cell::from(1usize), Cell::from(0.5)]);
        t.push(vec![Cell::Empty, Cell::from("x")]);
        let text = t.render().unwrap();
        let (meta, body) = split_rendered(&text);
        assert_eq!(body, "a,b\n1,0.5\n,x\n");
        assert!(meta.iter().any(|(k, v)| k == "config" && v == "{\"x\":1}"));
        assert!(meta.iter().any(|(k, _)| k == "wall_time_s"));
    }

    #[test]
    #[should_panic]
    fn arity_is_enforced() {
        let mut t = ResultTable::new("demo", &["a", "b"]);
        t.push(vec![Cell::from(1usize)]);
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.csv");
        let mut t = ResultTable::new("demo", &["a"]);
        t.push(vec![Cell::from(1usize)]);
        t.write_atomic(&path).unwrap();
        t.push(vec![Cell::from(2usize)]);
        t.write_atomic(&path).unwrap();
        let (_, body) = split_rendered(&std::fs::read_to_string(&path).unwrap());
        assert_eq!(body, "a\n1\n2\n");
        let leftovers = std::fs::read_dir(path.parent().unwrap()).unwrap().count();
        assert_eq!(leftovers, 1);
    }
}
