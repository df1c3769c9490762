use std::f64::consts::LN_2;
use std::path::Path;
use std::process::Command;

use serde_json::{json, Value};

use fluctlab::table::split_rendered;
use fluctlab::{load_config, run_experiment, run_to_file, validate_config, ExperimentConfig, ExperimentId};
use fluctlab_core::bounds::{early_time_bound, purity_walk_bound};
use fluctlab_core::rng::StreamSeeder;
use fluctlab_core::rqc::{run_brickwork_with_rng, CircuitConfig};
use fluctlab_core::Subregion;

fn config(doc: Value) -> ExperimentConfig {
    validate_config(&doc).unwrap_or_else(|issues| panic!("{issues:?}"))
}

fn configs_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rows(text: &str) -> Vec<csv::StringRecord> {
    let (_, body) = split_rendered(text);
    csv::Reader::from_reader(body.as_bytes()).records().map(Result::unwrap).collect()
}

/// A cheap instance of every experiment.
fn tiny(id: ExperimentId) -> Value {
    let mut doc = match id {
        ExperimentId::RqcRelax | ExperimentId::RqcTails => json!({"model": {"n": 4, "depth": 3}}),
        ExperimentId::RqcTailMeans => json!({"model": {"n": 4, "depth": 3}, "analysis": {"alphas": [0, 1]}}),
        ExperimentId::CcrqcHomog | ExperimentId::CcrqcStep => json!({"model": {"sizes": [4], "depth": 3}}),
        ExperimentId::HamRelax => {
            json!({"model": {"sizes": [4]}, "analysis": {"points": 5, "window_samples": 20, "window_end": 1000}})
        }
        ExperimentId::HamStationary => json!({"model": {"sizes": [4]}, "analysis": {"samples": 200}}),
        ExperimentId::HamTtf => json!({"model": {"sizes": [4]}, "analysis": {"initial_states": 2, "t_max": 300}}),
        ExperimentId::BoundsSweep => json!({"model": {"sizes": [4]}, "analysis": {"empirical": true}}),
    };
    doc["experiment"] = json!(id.as_str());
    doc["trials"] = json!(200);
    doc
}

#[test]
fn shipped_configs_validate() {
    let mut seen = Vec::new();
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen.push(cfg.experiment);
    }
    for id in ExperimentId::ALL {
        assert!(seen.contains(&id), "no shipped config for {id}");
    }
}

#[test]
fn headers_match_documented_columns() {
    let expected: &[(ExperimentId, &str)] = &[
        (ExperimentId::RqcRelax, "time,mean_entropy,se_entropy,mean_dist,se_dist,mean_purity,se_purity,rms_entropy,purity_walk_bound,n_trials"),
        (ExperimentId::RqcTails, "time,delta_s,prob,stderr_lo,stderr_hi,n_trials"),
        (ExperimentId::RqcTailMeans, "time,alpha,tail_mean,jackknife_se,n_tail,n_trials"),
        (ExperimentId::CcrqcHomog, "n,time,rms_entropy,mean_entropy,max_leakage,n_trials"),
        (ExperimentId::CcrqcStep, "n,time,rms_entropy,mean_entropy,max_leakage,n_trials"),
        (ExperimentId::HamRelax, "n,time,dist_avg,entropy,d_eff,bound,window_mean_dist,plateau_median_dist"),
        (ExperimentId::HamStationary, "n,delta_s,prob,stderr_lo,stderr_hi,n_samples,log_slope"),
        (ExperimentId::HamTtf, "n,delta_s,mean_first_time,se_first_time,n_reached,n_states"),
        (ExperimentId::BoundsSweep, "bound_id,n,q,region_sites,t,tau,k,raw,clamped,empirical,empirical_se,within_3sigma,status"),
    ];
    for &(id, header) in expected {
        let text = run_experiment(&config(tiny(id))).unwrap().render().unwrap();
        let (meta, body) = split_rendered(&text);
        assert_eq!(body.lines().next(), Some(header), "{id}");
        assert!(body.lines().count() > 1, "{id} produced no rows");
        let keys: Vec<&str> = meta.iter().map(|(k, _)| k.as_str()).collect();
        assert_eq!(&keys[..5], &["schema_version", "experiment", "config", "build_id", "prng"], "{id}");
        assert_eq!(keys.last(), Some(&"wall_time_s"));
        let echoed: Value = serde_json::from_str(&meta[2].1).unwrap();
        assert_eq!(echoed["experiment"], id.as_str());
        // Every data row is rectangular and numeric fields parse.
        let width = header.split(',').count();
        for r in rows(&text) {
            assert_eq!(r.len(), width);
        }
    }
}

#[test]
fn depth_zero_single_trial_tail_is_certain() {
    let cfg = config(json!({
        "experiment": "rqc_tails", "trials": 1,
        "model": {"n": 4, "depth": 0}, "analysis": {"delta_s": [LN_2]}
    }));
    let text = run_experiment(&cfg).unwrap().render().unwrap();
    let r = rows(&text);
    assert_eq!(r.len(), 1);
    assert_eq!(&r[0][0], "0");
    assert_eq!(r[0][2].parse::<f64>().unwrap(), 1.0);
}

#[test]
fn tail_counts_match_direct_recount() {
    let grid = [0.0, 0.01, 0.05, 0.2];
    let cfg = config(json!({
        "experiment": "rqc_tails", "seed": 77, "trials": 600,
        "model": {"n": 6, "depth": 5}, "region": {"start": 1, "len": 2},
        "analysis": {"delta_s": grid, "times": [2, 5]}
    }));
    let table = run_experiment(&cfg).unwrap();
    let text = table.render().unwrap();

    let circuit = CircuitConfig::haar(6, 2, 5, 77);
    let region = Subregion::interval(1, 2, 6).unwrap();
    let seeder = StreamSeeder::new(77, "rqc_tails");
    let mut counts = vec![[0u64; 4]; 2];
    for i in 0..600 {
        let s = run_brickwork_with_rng(&circuit, seeder.stream(i), i, std::slice::from_ref(&region), 1).unwrap();
        for (c, t) in counts.iter_mut().zip([2, 5]) {
            let dev = 2.0 * LN_2 - s[0].entropy[t];
            for (k, &d) in grid.iter().enumerate() {
                c[k] += u64::from(dev >= d);
            }
        }
    }
    let recs = rows(&text);
    assert_eq!(recs.len(), 8);
    for (j, r) in recs.iter().enumerate() {
        let expect = counts[j / 4][j % 4] as f64 / 600.0;
        assert!((r[2].parse::<f64>().unwrap() - expect).abs() < 1e-12, "row {j}");
    }
}

#[test]
fn sweep_point_matches_direct_evaluation() {
    let cfg = config(json!({
        "experiment": "bounds_sweep",
        "model": {"sizes": [8], "qs": [2]}, "region": {"len": 2},
        "analysis": {"times": [3], "taus": [0.5], "ks": [2]}
    }));
    let text = run_experiment(&cfg).unwrap().render().unwrap();
    let recs = rows(&text);
    let find = |id: &str| recs.iter().find(|r| &r[0] == id).unwrap_or_else(|| panic!("{id}"));
    let walk = find("purity_walk");
    assert_eq!(walk[7].parse::<f64>().unwrap(), purity_walk_bound(2, 2, 6, 3, 1).unwrap());
    let early = find("early_entropy");
    let direct = early_time_bound(0.5, 4, 64, 2, 3, 1).unwrap().entropy;
    assert_eq!(early[7].parse::<f64>().unwrap(), direct);
    assert_eq!(&early[12], "ok");
}

#[test]
fn reruns_are_identical_apart_from_wall_time() {
    let cfg = config(tiny(ExperimentId::CcrqcStep));
    let a = run_experiment(&cfg).unwrap().render().unwrap();
    let b = run_experiment(&cfg).unwrap().render().unwrap();
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("# wall_time_s")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn failed_runs_leave_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("means.csv");
    let doc = json!({
        "experiment": "rqc_tail_means", "trials": 150, "output": out,
        "model": {"n": 4, "depth": 2}, "analysis": {"alphas": [0]}
    });
    // A 10^-3 tail cannot be resolved from 150 trials.
    let mut weak = doc.clone();
    weak["analysis"]["alphas"] = json!([0, 3]);
    let issues = validate_config(&weak).unwrap_err();
    assert!(issues.iter().any(|i| i.path == "trials"), "{issues:?}");

    std::fs::write(&out, "previous").unwrap();
    run_to_file(&config(doc.clone())).unwrap();
    assert_ne!(std::fs::read_to_string(&out).unwrap(), "previous");

    // The output directory is a regular file, so the write fails after the run.
    let blocked = dir.path().join("blocked");
    std::fs::write(&blocked, "").unwrap();
    let mut doc = doc;
    doc["output"] = json!(blocked.join("x.csv"));
    assert!(run_to_file(&config(doc)).is_err());
    let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 2, "temporary files left behind: {names:?}");
}

fn fluctlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fluctlab")).args(args).output().unwrap()
}

fn write_json(dir: &Path, name: &str, doc: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, doc.to_string()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_json(dir.path(), "bad.json", &json!({"experiment": "rqc_tails", "model": {"n": 5, "depth": 2}, "bogus": 1}));
    let out = fluctlab(&["run", &bad]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("model.n") && err.contains("bogus"), "{err}");

    let huge = write_json(dir.path(), "huge.json", &json!({"experiment": "rqc_relax", "model": {"n": 26, "depth": 2}}));
    assert_eq!(fluctlab(&["run", &huge]).status.code(), Some(3));

    let malformed = dir.path().join("broken.json");
    std::fs::write(&malformed, "{").unwrap();
    assert_eq!(fluctlab(&["validate", malformed.to_str().unwrap()]).status.code(), Some(2));

    let relax = write_json(dir.path(), "relax.json", &json!({"experiment": "rqc_relax", "model": {"n": 4, "depth": 2}}));
    assert_eq!(fluctlab(&["sweep-bounds", &relax]).status.code(), Some(2));
}

#[test]
fn cli_run_writes_under_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_json(dir.path(), "c.json", &tiny(ExperimentId::RqcRelax));
    let out_dir = dir.path().join("results");
    let status = fluctlab(&["run", &cfg, "--seed", "5", "--workers", "2", "--out-dir", out_dir.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = std::fs::read_to_string(out_dir.join("rqc_relax.csv")).unwrap();
    let (meta, _) = split_rendered(&text);
    let echoed: Value = serde_json::from_str(&meta[2].1).unwrap();
    assert_eq!(echoed["seed"], 5);
}

#[test]
fn stream_seeds_do_not_collide() {
    use rand::RngCore;
    let seeder = StreamSeeder::new(0, "collisions");
    let mut firsts: Vec<u64> = (0..1_000_000).map(|i| seeder.stream(i).next_u64()).collect();
    firsts.sort_unstable();
    firsts.dedup();
    assert_eq!(firsts.len(), 1_000_000);
}
