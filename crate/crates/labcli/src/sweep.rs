//! Tabulation of every bound evaluator over parameter grids, optionally next
//! to Monte-Carlo estimates from Haar brickwork circuits.

use rayon::ThreadPool;

use fluctlab_core::bounds::{
    centered_moment_bound, clamp_probability, counting_bound, design_bound, early_time_bound, late_time_bound,
    purity_walk_bound, two_design_bound, BoundId, BoundMode,
};
use fluctlab_core::fluxstats::{Moments, TailCounter};
use fluctlab_core::haar::levy_entropy_tail;
use fluctlab_core::rng::StreamSeeder;
use fluctlab_core::rqc::{run_brickwork_with_rng, CircuitConfig};
use fluctlab_core::{Error, Result, Subregion};

use crate::config::{ExperimentConfig, ExperimentId};
use crate::sched::fold_trials;
use crate::table::{Cell, ResultTable};

pub const COLUMNS: &[&str] = &[
    "bound_id",
    "n",
    "q",
    "region_sites",
    "t",
    "tau",
    "k",
    "raw",
    "clamped",
    "empirical",
    "empirical_se",
    "within_3sigma",
    "status",
];

fn status(e: &Error) -> &'static str {
    match e {
        Error::Input(_) => "input_error",
        Error::Domain(_) => "domain_error",
        Error::Resource { .. } => "resource_error",
        Error::Numerical(_) => "numerical_error",
        Error::StatisticalPower { .. } => "power_error",
    }
}

/// Per-time Monte-Carlo estimates: mean purity, and exceedance counts over the tau grid.
struct Empirical {
    purity: Vec<Moments>,
    entropy_tail: Vec<TailCounter>,
    trace_tail: Vec<TailCounter>,
}

impl Empirical {
    fn probability(counter: &TailCounter, j: usize) -> (f64, f64) {
        let n = counter.total() as f64;
        let p = counter.counts()[j] as f64 / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }
}

fn simulate(
    cfg: &ExperimentConfig,
    pool: &ThreadPool,
    n: usize,
    q: usize,
    a: usize,
    depth: usize,
    taus: &[f64],
) -> Result<Empirical> {
    let config = CircuitConfig::haar(n, q, depth, cfg.seed);
    config.validate()?;
    let region = Subregion::interval(0, a, n)?;
    let s_max = a as f64 * (q as f64).ln();
    let seeder = StreamSeeder::new(cfg.seed, &format!("{}/n={n}/q={q}", cfg.experiment));
    let init = || Empirical {
        purity: vec![Moments::default(); depth + 1],
        entropy_tail: vec![TailCounter::new(taus); depth + 1],
        trace_tail: vec![TailCounter::new(taus); depth + 1],
    };
    fold_trials(
        pool,
        cfg.trials,
        init,
        |acc, i| {
            let s = run_brickwork_with_rng(&config, seeder.stream(i), i, std::slice::from_ref(&region), 1)?.remove(0);
            for t in 0..=depth {
                acc.purity[t].push(s.purity[t]);
                acc.entropy_tail[t].observe(s_max - s.entropy[t]);
                acc.trace_tail[t].observe(s.dist_mm[t]);
            }
            Ok(())
        },
        |a, b| {
            a.purity.iter_mut().zip(&b.purity).for_each(|(x, y)| x.merge(y));
            a.entropy_tail.iter_mut().zip(&b.entropy_tail).try_for_each(|(x, y)| x.merge(y))?;
            a.trace_tail.iter_mut().zip(&b.trace_tail).try_for_each(|(x, y)| x.merge(y))
        },
    )
}

struct Point {
    id: BoundId,
    t: Option<usize>,
    tau: Option<f64>,
    k: Option<u64>,
}

pub fn bounds_sweep(cfg: &ExperimentConfig, pool: &ThreadPool) -> Result<ResultTable> {
    let times = cfg.uint_list("analysis.times");
    let taus = cfg.float_list("analysis.taus");
    let ks: Vec<u64> = cfg.uint_list("analysis.ks").into_iter().map(|k| k as u64).collect();
    let eps = cfg.float("analysis.eps");
    let (c, c_prime, count_c) =
        (cfg.float("analysis.design_c"), cfg.float("analysis.design_c_prime"), cfg.float("analysis.count_c"));
    let a = cfg.usize("region.len");
    let empirical = cfg.flag("analysis.empirical");
    let mut table = ResultTable::new(ExperimentId::BoundsSweep.as_str(), COLUMNS);

    for n in cfg.uint_list("model.sizes") {
        for q in cfg.uint_list("model.qs") {
            let dims = (q as u64).checked_pow(a as u32).zip((q as u64).checked_pow((n - a) as u32));
            let d_total = (q as u64).checked_pow(n as u32);
            let emp = if empirical && !times.is_empty() {
                Some(simulate(cfg, pool, n, q, a, times.iter().copied().max().unwrap_or(0), &taus)?)
            } else {
                None
            };

            let mut points = Vec::new();
            for &t in &times {
                points.push(Point { id: BoundId::PurityWalk, t: Some(t), tau: None, k: None });
            }
            for &tau in &taus {
                for &t in &times {
                    points.push(Point { id: BoundId::EarlyEntropy, t: Some(t), tau: Some(tau), k: None });
                    points.push(Point { id: BoundId::EarlyTrace, t: Some(t), tau: Some(tau), k: None });
                }
                for &k in &ks {
                    points.push(Point { id: BoundId::DesignEntropy, t: None, tau: Some(tau), k: Some(k) });
                    points.push(Point { id: BoundId::DesignTrace, t: None, tau: Some(tau), k: Some(k) });
                }
                for &t in &times {
                    points.push(Point { id: BoundId::LateEntropy, t: Some(t), tau: Some(tau), k: None });
                    points.push(Point { id: BoundId::LateTrace, t: Some(t), tau: Some(tau), k: None });
                }
                for id in [
                    BoundId::CountEntropy,
                    BoundId::CountTrace,
                    BoundId::TwoDesignEntropy,
                    BoundId::TwoDesignTrace,
                    BoundId::Levy,
                ] {
                    points.push(Point { id, t: None, tau: Some(tau), k: None });
                }
            }
            for &k in &ks {
                points.push(Point { id: BoundId::MomentCentered, t: None, tau: None, k: Some(k) });
            }

            for p in points {
                let raw = match dims {
                    None => Err(Error::Resource {
                        what: format!("subsystem dimensions {q}^{a} and {q}^{}", n - a),
                        required: u128::MAX,
                        limit: u64::MAX as u128,
                    }),
                    Some((d_a, d_b)) => evaluate(&p, n, q, a, (d_a, d_b, d_total), eps, (c, c_prime, count_c)),
                };
                let tau_index = p.tau.and_then(|x| taus.iter().position(|&y| y == x));
                let estimate = match (&emp, p.id, p.t) {
                    (Some(e), BoundId::PurityWalk, Some(t)) => Some((e.purity[t].mean(), e.purity[t].stderr())),
                    (Some(e), BoundId::EarlyEntropy, Some(t)) => {
                        tau_index.map(|j| Empirical::probability(&e.entropy_tail[t], j))
                    }
                    (Some(e), BoundId::EarlyTrace, Some(t)) => {
                        tau_index.map(|j| Empirical::probability(&e.trace_tail[t], j))
                    }
                    _ => None,
                };
                let (raw_cell, clamped, within, stat) = match raw {
                    Ok(v) => {
                        let cl = if p.id.is_probability() { clamp_probability(v) } else { v };
                        let within = estimate.map(|(m, se)| m <= cl + 3.0 * se);
                        (Cell::from(v), Cell::from(cl), Cell::from(within), "ok")
                    }
                    Err(e) => (Cell::Empty, Cell::Empty, Cell::Empty, status(&e)),
                };
                table.push(vec![
                    p.id.as_str().into(),
                    n.into(),
                    q.into(),
                    a.into(),
                    p.t.into(),
                    p.tau.into(),
                    p.k.into(),
                    raw_cell,
                    clamped,
                    estimate.map(|e| e.0).into(),
                    estimate.map(|e| e.1).into(),
                    within,
                    stat.into(),
                ]);
            }
        }
    }
    table.note("region", "contiguous sites starting at 0; bounds use exponent offset 1 (valid at any alignment)");
    table.note("empirical", "Haar brickwork from the all-zero state: mean purity, Pr(ln d_A - S >= tau), Pr(||rho_A - 1/d_A||_1 >= tau)");
    Ok(table)
}

/// `dims` is `(d_A, d_B, d)`; `consts` is `(C, C', c)` for the late-time and counting bounds.
fn evaluate(
    p: &Point,
    n: usize,
    q: usize,
    a: usize,
    dims: (u64, u64, Option<u64>),
    eps: f64,
    consts: (f64, f64, f64),
) -> Result<f64> {
    let (d_a, d_b, d_total) = dims;
    let (c, c_prime, count_c) = consts;
    let tau = p.tau.unwrap_or(0.0);
    let t = p.t.unwrap_or(0);
    let k = p.k.unwrap_or(0);
    match p.id {
        BoundId::PurityWalk => purity_walk_bound(q, a, n - a, t, 1),
        BoundId::EarlyEntropy => Ok(early_time_bound(tau, d_a, d_b, q, t, 1)?.entropy),
        BoundId::EarlyTrace => Ok(early_time_bound(tau, d_a, d_b, q, t, 1)?.trace),
        BoundId::DesignEntropy => design_bound(tau, k, d_a, d_b, BoundMode::Entropy),
        BoundId::DesignTrace => design_bound(tau, k, d_a, d_b, BoundMode::Trace),
        BoundId::LateEntropy => late_time_bound(tau, t as u64, n, q, d_a, c, c_prime, BoundMode::Entropy),
        BoundId::LateTrace => late_time_bound(tau, t as u64, n, q, d_a, c, c_prime, BoundMode::Trace),
        BoundId::CountEntropy => counting_bound(tau, d_a, d_b, count_c, BoundMode::Entropy),
        BoundId::CountTrace => counting_bound(tau, d_a, d_b, count_c, BoundMode::Trace),
        BoundId::TwoDesignEntropy => two_design_bound(tau, d_a, d_b, eps, BoundMode::Entropy),
        BoundId::TwoDesignTrace => two_design_bound(tau, d_a, d_b, eps, BoundMode::Trace),
        BoundId::Levy => levy_entropy_tail(d_a, d_b, tau),
        BoundId::MomentCentered => match d_total {
            Some(d) => centered_moment_bound(k, d, eps, d_a, d_b),
            None => Err(Error::Resource { what: format!("dimension {q}^{n}"), required: u128::MAX, limit: u64::MAX as u128 }),
        },
    }
}
