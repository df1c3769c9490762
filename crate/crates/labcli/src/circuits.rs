//! Random-circuit experiments: relaxation, tails, tail means, charge-conserving RMS.

use rayon::ThreadPool;

use fluctlab_core::bounds::purity_walk_bound;
use fluctlab_core::fluxstats::{rms_about_mean, tail_conditional_mean_of, Moments, TailCounter};
use fluctlab_core::qstate::subsystem_entropy_series_point;
use fluctlab_core::rng::StreamSeeder;
use fluctlab_core::rqc::{
    boundary_exponent_offset, run_brickwork_with_rng, Brickwork, ChargeSector, CircuitConfig, GateEnsemble,
    InitialState,
};
use fluctlab_core::{Result, Subregion};

use crate::config::{ExperimentConfig, ExperimentId};
use crate::sched::fold_trials;
use crate::table::ResultTable;

fn ensemble(s: &str) -> GateEnsemble {
    match s {
        "u1_conserving" => GateEnsemble::U1Conserving,
        _ => GateEnsemble::Haar,
    }
}

fn initial_state(s: &str) -> InitialState {
    match s {
        "homogeneous_half_filling" => InitialState::HomogeneousHalfFilling,
        "step_function" => InitialState::StepFunction,
        _ => InitialState::AllZero,
    }
}

pub(crate) fn circuit_config(cfg: &ExperimentConfig) -> CircuitConfig {
    CircuitConfig {
        n: cfg.usize("model.n"),
        q: cfg.usize("model.q"),
        depth: cfg.usize("model.depth"),
        ensemble: ensemble(cfg.text("model.ensemble")),
        initial_state: initial_state(cfg.text("model.initial_state")),
        master_seed: cfg.seed,
    }
}

/// Recorded layer indices for a run of `depth` layers.
fn recorded_times(depth: usize, every: usize) -> Vec<usize> {
    (0..=depth).filter(|t| t % every == 0).collect()
}

/// Requested times (or `default` when none are listed) as indices into the recorded series.
fn selected_indices(cfg: &ExperimentConfig, every: usize, default: Vec<usize>) -> Vec<(usize, usize)> {
    let mut times = cfg.uint_list("analysis.times");
    if times.is_empty() {
        times = default;
    }
    times.into_iter().map(|t| (t, t / every)).collect()
}

struct CircuitRun {
    config: CircuitConfig,
    region: Subregion,
    every: usize,
    seeder: StreamSeeder,
    s_max: f64,
}

impl CircuitRun {
    fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let config = circuit_config(cfg);
        config.validate()?;
        let region = Subregion::interval(cfg.usize("region.start"), cfg.usize("region.len"), config.n)?;
        let s_max = region.len() as f64 * (config.q as f64).ln();
        Ok(Self {
            config,
            region,
            every: cfg.usize("model.record_every"),
            seeder: StreamSeeder::new(cfg.seed, cfg.experiment.as_str()),
            s_max,
        })
    }

    fn trial(&self, i: u64) -> Result<fluctlab_core::fluxstats::FluctuationSeries> {
        let mut out = run_brickwork_with_rng(
            &self.config,
            self.seeder.stream(i),
            i,
            std::slice::from_ref(&self.region),
            self.every,
        )?;
        let series = out.pop().expect("one region requested");
        series.validate(self.config.q.pow(self.region.len() as u32))?;
        Ok(series)
    }
}

pub const RELAX_COLUMNS: &[&str] = &[
    "time",
    "mean_entropy",
    "se_entropy",
    "mean_dist",
    "se_dist",
    "mean_purity",
    "se_purity",
    "rms_entropy",
    "purity_walk_bound",
    "n_trials",
];

pub fn rqc_relax(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<ResultTable> {
    let run = CircuitRun::new(cfg)?;
    let times = recorded_times(run.config.depth, run.every);
    let slots = times.len();
    let acc = fold_trials(
        pool,
        cfg.trials,
        || vec![[Moments::default(); 3]; slots],
        |acc, i| {
            let s = run.trial(i)?;
            for (k, m) in acc.iter_mut().enumerate() {
                m[0].push(s.entropy[k]);
                m[1].push(s.dist_mm[k]);
                m[2].push(s.purity[k]);
            }
            Ok(())
        },
        |a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                for (m, o) in x.iter_mut().zip(&y) {
                    m.merge(o);
                }
            }
            Ok(())
        },
    )?;
    let mut table = ResultTable::new(ExperimentId::RqcRelax.as_str(), RELAX_COLUMNS);
    let (n, q, a) = (run.config.n, run.config.q, run.region.len());
    let walk_applies = run.config.ensemble == GateEnsemble::Haar && run.config.initial_state == InitialState::AllZero;
    for (&t, m) in times.iter().zip(&acc) {
        let bound = if walk_applies && t >= 1 {
            boundary_exponent_offset(&run.region, n, t).and_then(|o| purity_walk_bound(q, a, n - a, t, o).ok())
        } else {
            None
        };
        table.push(vec![
            t.into(),
            m[0].mean().into(),
            m[0].stderr().into(),
            m[1].mean().into(),
            m[1].stderr().into(),
            m[2].mean().into(),
            m[2].stderr().into(),
            m[0].variance().sqrt().into(),
            bound.into(),
            cfg.trials.into(),
        ]);
    }
    table.note("purity_walk_bound", "tightest alignment offset; empty where the walker picture does not apply");
    Ok(table)
}

pub const TAILS_COLUMNS: &[&str] = &["time", "delta_s", "prob", "stderr_lo", "stderr_hi", "n_trials"];

pub fn rqc_tails(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<ResultTable> {
    let run = CircuitRun::new(cfg)?;
    let grid = cfg.float_list("analysis.delta_s");
    let picks = selected_indices(cfg, run.every, recorded_times(run.config.depth, run.every));
    let acc = fold_trials(
        pool,
        cfg.trials,
        || vec![TailCounter::new(&grid); picks.len()],
        |acc, i| {
            let s = run.trial(i)?;
            for (c, &(_, k)) in acc.iter_mut().zip(&picks) {
                c.observe(run.s_max - s.entropy[k]);
            }
            Ok(())
        },
        |a, b| a.iter_mut().zip(&b).try_for_each(|(x, y)| x.merge(y)),
    )?;
    let mut table = ResultTable::new(ExperimentId::RqcTails.as_str(), TAILS_COLUMNS);
    for (counter, &(t, _)) in acc.iter().zip(&picks) {
        let tab = counter.table(t.to_string());
        for j in 0..grid.len() {
            table.push(vec![
                t.into(),
                grid[j].into(),
                tab.prob[j].into(),
                tab.wilson_lo[j].into(),
                tab.wilson_hi[j].into(),
                cfg.trials.into(),
            ]);
        }
    }
    table.note("deviation", format!("ln d_A - S(t) in nats, ln d_A = {}", run.s_max));
    table.note("stderr", "one-sigma Wilson score interval endpoints");
    Ok(table)
}

pub const TAIL_MEANS_COLUMNS: &[&str] = &["time", "alpha", "tail_mean", "jackknife_se", "n_tail", "n_trials"];

pub fn rqc_tail_means(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<ResultTable> {
    let run = CircuitRun::new(cfg)?;
    let picks = selected_indices(cfg, run.every, vec![run.config.depth - run.config.depth % run.every]);
    let devs = fold_trials(
        pool,
        cfg.trials,
        || vec![Vec::new(); picks.len()],
        |acc: &mut Vec<Vec<f64>>, i| {
            let s = run.trial(i)?;
            for (v, &(_, k)) in acc.iter_mut().zip(&picks) {
                v.push(run.s_max - s.entropy[k]);
            }
            Ok(())
        },
        |a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| x.extend(y));
            Ok(())
        },
    )?;
    let mut table = ResultTable::new(ExperimentId::RqcTailMeans.as_str(), TAIL_MEANS_COLUMNS);
    for (d, &(t, _)) in devs.iter().zip(&picks) {
        for alpha in cfg.float_list("analysis.alphas") {
            let tm = tail_conditional_mean_of(d, alpha)?;
            table.push(vec![
                t.into(),
                alpha.into(),
                tm.mean.into(),
                tm.jackknife_se.into(),
                tm.n_tail.into(),
                cfg.trials.into(),
            ]);
        }
    }
    table.note("tail", "mean of ln d_A - S over the rarest ceil(N 10^-alpha) trials, ties included");
    Ok(table)
}

pub const CHARGE_COLUMNS: &[&str] = &["n", "time", "rms_entropy", "mean_entropy", "max_leakage", "n_trials"];

/// Charge-conserving circuits from a fixed half-filled product state, one block of rows per size.
pub fn ccrqc(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<ResultTable> {
    let pattern = match cfg.experiment {
        ExperimentId::CcrqcStep => InitialState::StepFunction,
        _ => InitialState::HomogeneousHalfFilling,
    };
    let depth = cfg.usize("model.depth");
    let every = cfg.usize("model.record_every");
    let times = recorded_times(depth, every);
    let mut table = ResultTable::new(cfg.experiment.as_str(), CHARGE_COLUMNS);
    for n in cfg.uint_list("model.sizes") {
        let config = CircuitConfig {
            n,
            q: 2,
            depth,
            ensemble: GateEnsemble::U1Conserving,
            initial_state: pattern,
            master_seed: cfg.seed,
        };
        config.validate()?;
        let region = Subregion::interval(cfg.usize("region.start"), cfg.usize("region.len"), n)?;
        let sector = ChargeSector { total_charge: n / 2 };
        let seeder = StreamSeeder::new(cfg.seed, &format!("{}/n={n}", cfg.experiment));
        let slots = times.len();
        let (entropies, leak) = fold_trials(
            pool,
            cfg.trials,
            || (vec![Vec::new(); slots], vec![0.0f64; slots]),
            |(ent, leak), i| {
                let mut c = Brickwork::new(&config, seeder.stream(i))?;
                let mut k = 0;
                for t in 0..=depth {
                    if t > 0 {
                        c.step()?;
                    }
                    if t % every == 0 {
                        ent[k].push(subsystem_entropy_series_point(c.state(), &region)?.entropy);
                        leak[k] = leak[k].max(sector.leakage(c.state()));
                        k += 1;
                    }
                }
                Ok(())
            },
            |(ea, la), (eb, lb)| {
                ea.iter_mut().zip(eb).for_each(|(x, y)| x.extend(y));
                la.iter_mut().zip(lb).for_each(|(x, y)| *x = x.max(y));
                Ok(())
            },
        )?;
        for ((&t, e), &l) in times.iter().zip(&entropies).zip(&leak) {
            let mean = e.iter().sum::<f64>() / e.len() as f64;
            table.push(vec![n.into(), t.into(), rms_about_mean(e).into(), mean.into(), l.into(), cfg.trials.into()]);
        }
    }
    table.note("rms", "population RMS of S over trials about the trial mean, two-pass");
    table.note("max_leakage", "largest out-of-sector weight over trials at that layer");
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recorded_times_include_zero() {
        assert_eq!(recorded_times(5, 2), vec![0, 2, 4]);
        assert_eq!(recorded_times(0, 3), vec![0]);
    }
}
