//! Spin-chain experiments: relaxation to the dephased average, stationary
//! tails, and time to first fluctuation.

use rand::Rng;
use rayon::ThreadPool;

use fluctlab_core::fluxstats::{log_tail_slope, TailCounter};
use fluctlab_core::hamspin::{
    dephased_average, diagonalize, effective_dimension_grouped, make_y_plus_state, random_product_state, Boundary,
    IsingConfig, SpectralData, TIME_BATCH,
};
use fluctlab_core::qstate::{partial_trace, trace_distance, von_neumann_entropy};
use fluctlab_core::rng::StreamSeeder;
use fluctlab_core::{Result, StateVector, Subregion, C64};

use crate::config::{ExperimentConfig, ExperimentId};
use crate::sched::map_ordered;
use crate::table::{Cell, ResultTable};

/// Times per parallel work item; a multiple of the GEMM batch so batching is schedule independent.
const TIME_CHUNK: usize = 4 * TIME_BATCH;

fn ising(cfg: &ExperimentConfig, n: usize) -> IsingConfig {
    IsingConfig {
        n,
        j: cfg.float("model.j"),
        g: cfg.float("model.g"),
        h: cfg.float("model.h"),
        boundary: match cfg.text("model.boundary") {
            "open" => Boundary::Open,
            _ => Boundary::Periodic,
        },
    }
}

/// Evaluates `f` on the evolved state at every time, in parallel over fixed time chunks.
fn observe<T, F>(pool: &ThreadPool, spec: &SpectralData, psi0: &StateVector, times: &[f64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&StateVector) -> Result<T> + Sync,
{
    let coeffs = spec.coefficients(psi0)?;
    let chunks: Vec<&[f64]> = times.chunks(TIME_CHUNK).collect();
    let parts = map_ordered(pool, &chunks, |chunk| {
        let mut out = Vec::with_capacity(chunk.len());
        spec.for_each_evolved(&coeffs, chunk, |_, amps: Vec<C64>| {
            out.push(f(&StateVector::new(spec.n(), 2, amps)?)?);
            Ok(())
        })?;
        Ok(out)
    })?;
    Ok(parts.into_iter().flatten().collect())
}

pub fn log_spaced(t_min: f64, t_max: f64, points: usize) -> Vec<f64> {
    let (a, b) = (t_min.ln(), t_max.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

pub fn lin_spaced(t0: f64, t1: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![t0];
    }
    (0..points).map(|i| t0 + (t1 - t0) * i as f64 / (points - 1) as f64).collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub const RELAX_COLUMNS: &[&str] = &[
    "n",
    "time",
    "dist_avg",
    "entropy",
    "d_eff",
    "bound",
    "window_mean_dist",
    "plateau_median_dist",
];

pub fn ham_relax(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<ResultTable> {
    let curve = log_spaced(cfg.float("analysis.t_min"), cfg.float("analysis.t_max"), cfg.usize("analysis.points"));
    let (w0, w1) = (cfg.float("analysis.window_start"), cfg.float("analysis.window_end"));
    let samples = cfg.usize("analysis.window_samples");
    let mut table = ResultTable::new(ExperimentId::HamRelax.as_str(), RELAX_COLUMNS);
    for n in cfg.uint_list("model.sizes") {
        let spec = diagonalize(&ising(cfg, n))?;
        let psi0 = make_y_plus_state(n)?;
        let region = Subregion::interval(cfg.usize("region.start"), cfg.usize("region.len"), n)?;
        let avg = dephased_average(&spec, &psi0, &region)?;
        let d_eff = effective_dimension_grouped(&spec, &psi0)?;
        let bound = (1usize << region.len()) as f64 / d_eff.sqrt();
        let point = |psi: &StateVector| -> Result<(f64, f64)> {
            let rho = partial_trace(psi, &region)?;
            Ok((trace_distance(&rho, &avg)?, von_neumann_entropy(&rho)?))
        };
        let dist_only = |psi: &StateVector| Ok(point(psi)?.0);

        let window = observe(pool, &spec, &psi0, &lin_spaced(w0, w1, samples), dist_only)?;
        let window_mean = window.iter().sum::<f64>() / window.len() as f64;
        let p0 = cfg.float("analysis.plateau_start_per_site") * n as f64;
        let plateau = median(observe(pool, &spec, &psi0, &lin_spaced(p0, w1.max(p0), samples), dist_only)?);

        for (&t, (dist, s)) in curve.iter().zip(observe(pool, &spec, &psi0, &curve, point)?) {
            table.push(vec![
                n.into(),
                t.into(),
                dist.into(),
                s.into(),
                d_eff.into(),
                bound.into(),
                window_mean.into(),
                plateau.into(),
            ]);
        }
    }
    table.note("initial_state", "y_plus product state");
    table.note("dist_avg", "||rho_A(t) - rho_A^avg||_1 with rho_A^avg the dephased average over degenerate eigenspaces");
    table.note("bound", "d_A / sqrt(d_eff), d_eff over degenerate eigenspaces");
    table.note("window", format!("{samples} evenly spaced times in [{w0}, {w1}] for the mean; plateau median over [plateau_start_per_site n, {w1}]"));
    Ok(table)
}

fn initial_states(cfg: &ExperimentConfig, n: usize) -> Result<Vec<StateVector>> {
    let count = match cfg.text("analysis.initial") {
        "random_product" => cfg.usize("analysis.initial_states"),
        _ => return Ok(vec![make_y_plus_state(n)?]),
    };
    let seeder = StreamSeeder::new(cfg.seed, &format!("{}/n={n}/initial", cfg.experiment));
    (0..count as u64).map(|i| random_product_state(n, &mut seeder.stream(i))).collect()
}

fn single_site(cfg: &ExperimentConfig, n: usize) -> Result<Subregion> {
    Subregion::interval(cfg.usize("region.start"), cfg.usize("region.len"), n)
}

pub const STATIONARY_COLUMNS: &[&str] =
    &["n", "delta_s", "prob", "stderr_lo", "stderr_hi", "n_samples", "log_slope"];

pub fn ham_stationary(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<ResultTable> {
    let grid = cfg.float_list("analysis.delta_s");
    let (w0, w1) = (cfg.float("analysis.window_start"), cfg.float("analysis.window_end"));
    let samples = cfg.usize("analysis.samples");
    let mut table = ResultTable::new(ExperimentId::HamStationary.as_str(), STATIONARY_COLUMNS);
    for n in cfg.uint_list("model.sizes") {
        let spec = diagonalize(&ising(cfg, n))?;
        let region = single_site(cfg, n)?;
        let s_max = region.len() as f64 * std::f64::consts::LN_2;
        let seeder = StreamSeeder::new(cfg.seed, &format!("{}/n={n}/times", cfg.experiment));
        let mut counter = TailCounter::new(&grid);
        for (i, psi0) in initial_states(cfg, n)?.iter().enumerate() {
            let mut rng = seeder.stream(i as u64);
            let times: Vec<f64> = (0..samples).map(|_| rng.random_range(w0..=w1)).collect();
            let devs = observe(pool, &spec, psi0, &times, |psi| {
                Ok(s_max - von_neumann_entropy(&partial_trace(psi, &region)?)?)
            })?;
            devs.into_iter().for_each(|d| counter.observe(d));
        }
        let tab = counter.table(format!("[{w0}, {w1}]"));
        let min_prob = cfg.uint("analysis.min_count") as f64 / tab.samples as f64;
        let slope = log_tail_slope(&tab, min_prob);
        for j in 0..grid.len() {
            table.push(vec![
                n.into(),
                grid[j].into(),
                tab.prob[j].into(),
                tab.wilson_lo[j].into(),
                tab.wilson_hi[j].into(),
                tab.samples.into(),
                slope.into(),
            ]);
        }
    }
    table.note("sampling", format!("{samples} uniform-random times per initial state in [{w0}, {w1}]"));
    table.note("deviation", "ln(2) |A| - S(t) in nats");
    table.note("log_slope", "least-squares slope of ln prob against delta_s over points with count >= min_count and prob < 1");
    table.note("stderr", "one-sigma Wilson endpoints treating sampled times as independent");
    Ok(table)
}

pub const TTF_COLUMNS: &[&str] = &["n", "delta_s", "mean_first_time", "se_first_time", "n_reached", "n_states"];

pub fn ham_ttf(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<ResultTable> {
    let grid = cfg.float_list("analysis.delta_s");
    let (t0, dt, t_max) = (cfg.float("analysis.t_start"), cfg.float("analysis.dt"), cfg.float("analysis.t_max"));
    let steps = ((t_max - t0) / dt).floor() as usize + 1;
    let mut table = ResultTable::new(ExperimentId::HamTtf.as_str(), TTF_COLUMNS);
    for n in cfg.uint_list("model.sizes") {
        let spec = diagonalize(&ising(cfg, n))?;
        let region = single_site(cfg, n)?;
        let s_max = region.len() as f64 * std::f64::consts::LN_2;
        let states = initial_states(cfg, n)?;
        // One work item per initial state; each scans forward and stops once every threshold is hit.
        let firsts = map_ordered(pool, &states, |psi0| {
            let coeffs = spec.coefficients(psi0)?;
            let mut first: Vec<Option<f64>> = vec![None; grid.len()];
            let mut start = 0;
            while start < steps && first.iter().any(Option::is_none) {
                let end = (start + TIME_CHUNK).min(steps);
                let times: Vec<f64> = (start..end).map(|k| t0 + k as f64 * dt).collect();
                spec.for_each_evolved(&coeffs, &times, |idx, amps| {
                    let psi = StateVector::new(n, 2, amps)?;
                    let dev = s_max - von_neumann_entropy(&partial_trace(&psi, &region)?)?;
                    for (f, &g) in first.iter_mut().zip(&grid) {
                        if f.is_none() && dev >= g {
                            *f = Some(times[idx]);
                        }
                    }
                    Ok(())
                })?;
                start = end;
            }
            Ok(first)
        })?;
        for (j, &g) in grid.iter().enumerate() {
            let hits: Vec<f64> = firsts.iter().filter_map(|f| f[j]).collect();
            let (mean, se) = match hits.len() {
                0 => (None, None),
                1 => (Some(hits[0]), None),
                k => {
                    let m = hits.iter().sum::<f64>() / k as f64;
                    let v = hits.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k as f64 - 1.0);
                    (Some(m), Some((v / k as f64).sqrt()))
                }
            };
            table.push(vec![
                n.into(),
                g.into(),
                Cell::from(mean),
                Cell::from(se),
                hits.len().into(),
                states.len().into(),
            ]);
        }
    }
    table.note("scan", format!("times t_start + k dt up to {t_max}; thresholds never reached are excluded from the mean"));
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_helpers() {
        let l = log_spaced(0.1, 1000.0, 5);
        assert!((l[0] - 0.1).abs() < 1e-15 && (l[4] - 1000.0).abs() < 1e-9);
        assert!((l[2] - 10.0).abs() < 1e-12);
        assert_eq!(lin_spaced(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
