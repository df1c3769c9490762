//! Fluctuation statistics over trials and over time.
//!
//! Deviations are measured from a reference entropy `s_max` (usually
//! `ln d_A`). Collectors such as [`TailCounter`] and [`Moments`] merge
//! associatively so sharded runs can be combined in any grouping.

use crate::error::{input, Error, Result};
use crate::qstate::Observables;

/// Time-indexed record of the observables of one region in one trial.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FluctuationSeries {
    /// Layer index or physical time.
    pub times: Vec<f64>,
    /// Von Neumann entropy (nats).
    pub entropy: Vec<f64>,
    /// `||rho_A - 1/d_A||_1`.
    pub dist_mm: Vec<f64>,
    pub purity: Vec<f64>,
    pub trial_id: u64,
    pub config_hash: u64,
}

impl FluctuationSeries {
    pub fn new(trial_id: u64, config_hash: u64) -> Self {
        Self { trial_id, config_hash, ..Self::default() }
    }

    pub fn push(&mut self, time: f64, obs: Observables) {
        self.times.push(time);
        self.entropy.push(obs.entropy);
        self.dist_mm.push(obs.dist_mm);
        self.purity.push(obs.purity);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Checks the length and range invariants for a region of dimension `d_a`.
    pub fn validate(&self, d_a: usize) -> Result<()> {
        let n = self.times.len();
        if self.entropy.len() != n || self.dist_mm.len() != n || self.purity.len() != n {
            return Err(input("fluctuation series columns differ in length"));
        }
        let s_cap = (d_a as f64).ln() + 1e-9;
        if let Some(s) = self.entropy.iter().find(|&&s| !(0.0..=s_cap).contains(&s)) {
            return Err(Error::Numerical(format!("entropy {s} outside [0, ln {d_a}]")));
        }
        if let Some(x) = self.dist_mm.iter().find(|&&x| !(0.0..=2.0 + 1e-9).contains(&x)) {
            return Err(Error::Numerical(format!("distance {x} outside [0, 2]")));
        }
        Ok(())
    }
}

/// Exceedance probabilities `Pr(deviation >= grid[j])` with error bars.
#[derive(Debug, Clone, PartialEq)]
pub struct TailTable {
    pub delta_s_grid: Vec<f64>,
    pub prob: Vec<f64>,
    /// Binomial standard error `sqrt(p(1-p)/N)`.
    pub stderr: Vec<f64>,
    /// One-sigma Wilson score interval.
    pub wilson_lo: Vec<f64>,
    pub wilson_hi: Vec<f64>,
    /// Number of samples behind each probability.
    pub samples: usize,
    pub time_label: String,
}

/// Wilson score interval for `successes / n` at `z` standard deviations.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Mergeable exceedance counter over a fixed deviation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCounter {
    grid: Vec<f64>,
    counts: Vec<usize>,
    total: usize,
}

impl TailCounter {
    pub fn new(grid: &[f64]) -> Self {
        Self { grid: grid.to_vec(), counts: vec![0; grid.len()], total: 0 }
    }

    pub fn observe(&mut self, deviation: f64) {
        self.total += 1;
        for (c, &g) in self.counts.iter_mut().zip(&self.grid) {
            if deviation >= g {
                *c += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &TailCounter) -> Result<()> {
        if self.grid != other.grid {
            return Err(input("cannot merge tail counters over different grids"));
        }
        self.total += other.total;
        self.counts.iter_mut().zip(&other.counts).for_each(|(a, b)| *a += b);
        Ok(())
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn table(&self, time_label: impl Into<String>) -> TailTable {
        let n = self.total.max(1) as f64;
        let prob: Vec<f64> = self.counts.iter().map(|&c| c as f64 / n).collect();
        let stderr = prob.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
        let (wilson_lo, wilson_hi) =
            self.counts.iter().map(|&c| wilson_interval(c, self.total, 1.0)).unzip();
        TailTable {
            delta_s_grid: self.grid.clone(),
            prob,
            stderr,
            wilson_lo,
            wilson_hi,
            samples: self.total,
            time_label: time_label.into(),
        }
    }
}

/// Streaming count / sum / sum of squares.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Moments {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }

    /// Population variance (divides by `count`).
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        (self.sum_sq / self.count as f64 - m * m).max(0.0)
    }

    /// Standard error of the mean using the unbiased variance.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        (self.variance() * n / (n - 1.0) / n).sqrt()
    }
}

fn check_ensemble(ensemble: &[FluctuationSeries], time: usize) -> Result<()> {
    let first = ensemble.first().ok_or_else(|| input("empty ensemble"))?;
    for s in ensemble {
        if s.config_hash != first.config_hash {
            return Err(input("ensemble mixes configurations"));
        }
        if s.times != first.times {
            return Err(input("ensemble series do not share time points"));
        }
    }
    if time >= first.len() {
        return Err(input(format!("time index {time} beyond series length {}", first.len())));
    }
    Ok(())
}

/// Fraction of trials with `s_max - S(t) >= grid[j]` at recorded time index `time`.
pub fn tail_distribution(
    ensemble: &[FluctuationSeries],
    time: usize,
    s_max: f64,
    grid: &[f64],
) -> Result<TailTable> {
    check_ensemble(ensemble, time)?;
    let mut counter = TailCounter::new(grid);
    for s in ensemble {
        counter.observe(s_max - s.entropy[time]);
    }
    Ok(counter.table(format!("{}", ensemble[0].times[time])))
}

/// Mean of the rarest `10^-alpha` fraction of deviations with its jackknife error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailMean {
    pub mean: f64,
    pub jackknife_se: f64,
    /// Number of samples averaged (ties at the cutoff included).
    pub n_tail: usize,
}

const JACKKNIFE_GROUPS: usize = 20;

/// Tail mean of `deviations` with no sample-size check.
pub fn tail_mean_of(deviations: &[f64], alpha: f64) -> f64 {
    let mut sorted = deviations.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    tail_mean_sorted(&sorted, alpha).0
}

fn tail_mean_sorted(desc: &[f64], alpha: f64) -> (f64, usize) {
    let n = desc.len();
    let m = ((n as f64) * 10f64.powf(-alpha)).ceil().clamp(1.0, n as f64) as usize;
    let cutoff = desc[m - 1];
    let included = m + desc[m..].iter().take_while(|&&x| x == cutoff).count();
    (desc[..included].iter().sum::<f64>() / included as f64, included)
}

/// Mean of `s_max - S` over the rarest `10^-alpha` fraction of trials.
pub fn tail_conditional_mean(
    ensemble: &[FluctuationSeries],
    time: usize,
    s_max: f64,
    alpha: f64,
) -> Result<TailMean> {
    check_ensemble(ensemble, time)?;
    let devs: Vec<f64> = ensemble.iter().map(|s| s_max - s.entropy[time]).collect();
    tail_conditional_mean_of(&devs, alpha)
}

/// [`tail_conditional_mean`] on raw deviations, in trial order.
pub fn tail_conditional_mean_of(devs: &[f64], alpha: f64) -> Result<TailMean> {
    let required = (10.0 * 10f64.powf(alpha)).ceil() as usize;
    if devs.len() < required {
        return Err(Error::StatisticalPower { required, available: devs.len() });
    }
    let mut sorted = devs.to_vec();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let (mean, n_tail) = tail_mean_sorted(&sorted, alpha);

    let groups = JACKKNIFE_GROUPS.min(devs.len());
    let block = devs.len().div_ceil(groups);
    let estimates: Vec<f64> = (0..groups)
        .filter_map(|g| {
            let lo = g * block;
            let hi = ((g + 1) * block).min(devs.len());
            if lo >= hi {
                return None;
            }
            let mut rest: Vec<f64> = devs[..lo].iter().chain(&devs[hi..]).copied().collect();
            if rest.is_empty() {
                return None;
            }
            rest.sort_unstable_by(|a, b| b.total_cmp(a));
            Some(tail_mean_sorted(&rest, alpha).0)
        })
        .collect();
    let g = estimates.len() as f64;
    let bar = estimates.iter().sum::<f64>() / g;
    let jackknife_se = ((g - 1.0) / g * estimates.iter().map(|e| (e - bar).powi(2)).sum::<f64>()).sqrt();
    Ok(TailMean { mean, jackknife_se, n_tail })
}

/// Earliest recorded time with `s_max - S(t) >= delta_s`.
pub fn time_to_first_fluctuation(series: &FluctuationSeries, s_max: f64, delta_s: f64) -> Option<f64> {
    series
        .entropy
        .iter()
        .position(|&s| s_max - s >= delta_s)
        .map(|i| series.times[i])
}

/// Fraction of recorded times inside `window` (inclusive) with deviation at least each grid value.
pub fn fraction_of_time_deviating(
    series: &FluctuationSeries,
    s_max: f64,
    grid: &[f64],
    window: (f64, f64),
) -> Result<TailTable> {
    let mut counter = TailCounter::new(grid);
    for (&t, &s) in series.times.iter().zip(&series.entropy) {
        if t >= window.0 && t <= window.1 {
            counter.observe(s_max - s);
        }
    }
    if counter.total() == 0 {
        return Err(input(format!("no samples in window [{}, {}]", window.0, window.1)));
    }
    Ok(counter.table(format!("[{}, {}]", window.0, window.1)))
}

/// Root-mean-square deviation of the entropy from its trial average at one time.
pub fn rms_over_trials(ensemble: &[FluctuationSeries], time: usize) -> Result<f64> {
    check_ensemble(ensemble, time)?;
    if ensemble.len() < 2 {
        return Err(input("rms over trials needs at least two trials"));
    }
    let values: Vec<f64> = ensemble.iter().map(|s| s.entropy[time]).collect();
    Ok(rms_about_mean(&values))
}

/// Two-pass population RMS deviation.
pub fn rms_about_mean(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Number of recorded times in `window` (inclusive) with `S(t) <= s_eq - tau`.
pub fn empirical_fluctuation_count(
    series: &FluctuationSeries,
    s_eq: f64,
    tau: f64,
    window: (f64, f64),
) -> usize {
    series
        .times
        .iter()
        .zip(&series.entropy)
        .filter(|(&t, &s)| t >= window.0 && t <= window.1 && s <= s_eq - tau)
        .count()
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Slope of `ln Pr` against `Delta S`, over grid points with `min_prob <= Pr < 1`.
pub fn log_tail_slope(table: &TailTable, min_prob: f64) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = table
        .delta_s_grid
        .iter()
        .zip(&table.prob)
        .filter(|(_, &p)| p >= min_prob && p < 1.0)
        .map(|(&g, &p)| (g, p.ln()))
        .unzip();
    linear_fit(&x, &y).map(|(slope, _)| slope)
}
