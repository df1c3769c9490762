//! Configuration-driven experiment runner.
//!
//! [`config::validate_config`] turns a JSON document into an
//! [`ExperimentConfig`]; [`run_experiment`] produces a [`ResultTable`] and
//! [`run_to_file`] persists it atomically. Output depends only on the
//! configuration and seed, never on the worker count.

pub mod circuits;
pub mod config;
pub mod error;
pub mod hamiltonian;
pub mod sched;
pub mod sweep;
pub mod table;

use std::path::Path;
use std::time::Instant;

pub use config::{validate_config, ConfigIssue, ExperimentConfig, ExperimentId, Overrides};
pub use error::{LabError, LabResult};
pub use table::{Cell, ResultTable};

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> LabResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
    let raw: serde_json::Value = serde_json::from_str(&text)?;
    validate_config(&raw).map_err(LabError::Config)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> LabResult<ResultTable> {
    let started = Instant::now();
    let pool = sched::pool(cfg.workers)?;
    log::info!("running {} with {} trials on {} workers", cfg.experiment, cfg.trials, cfg.workers);
    let mut table = match cfg.experiment {
        ExperimentId::RqcRelax => circuits::rqc_relax(cfg, &pool),
        ExperimentId::RqcTails => circuits::rqc_tails(cfg, &pool),
        ExperimentId::RqcTailMeans => circuits::rqc_tail_means(cfg, &pool),
        ExperimentId::CcrqcHomog | ExperimentId::CcrqcStep => circuits::ccrqc(cfg, &pool),
        ExperimentId::HamRelax => hamiltonian::ham_relax(cfg, &pool),
        ExperimentId::HamStationary => hamiltonian::ham_stationary(cfg, &pool),
        ExperimentId::HamTtf => hamiltonian::ham_ttf(cfg, &pool),
        ExperimentId::BoundsSweep => sweep::bounds_sweep(cfg, &pool),
    }?;
    table.config_echo = cfg.echo();
    table.wall_time_s = started.elapsed().as_secs_f64();
    Ok(table)
}

/// Runs and writes the table to `cfg.output`; on failure no file is created or replaced.
pub fn run_to_file(cfg: &ExperimentConfig) -> LabResult<ResultTable> {
    let table = run_experiment(cfg)?;
    table.write_atomic(&cfg.output)?;
    Ok(table)
}
