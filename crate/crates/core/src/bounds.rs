//! Fluctuation bounds for random circuits and designs, and the domain-wall
//! walker combinatorics behind the averaged purity of brickwork circuits.
//!
//! Large factorials and powers are combined in log space and exponentiated
//! once. Probability-type values are returned raw; use [`clamp_probability`]
//! for display.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{domain, input, Error, Result};
use crate::qstate::Subregion;

/// Which deviation a bound controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundMode {
    /// `S(rho_A) <= ln d_A - tau`.
    Entropy,
    /// `||rho_A - 1/d_A||_1 >= tau`.
    Trace,
}

/// Denominator of the early-time trace-distance bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TraceDenominator {
    /// `max{tau^2, e^{tau^2/2} - 1}`.
    #[default]
    Max,
    /// `tau^2`.
    TauSquared,
}

/// Form of `gamma` in the trace-mode design bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum TraceGamma {
    /// `max{tau^2, e^{tau^2/2} - 1} - d_A/d_B`.
    #[default]
    Max,
    /// `e^{tau^2/2} - 1 - d_A/d_B`.
    Exponential,
    /// `tau^2 - d_A/d_B`.
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundId {
    EarlyEntropy,
    EarlyTrace,
    DesignEntropy,
    DesignTrace,
    LateEntropy,
    LateTrace,
    CountEntropy,
    CountTrace,
    PurityWalk,
    TwoDesignEntropy,
    TwoDesignTrace,
    Levy,
    MomentCentered,
}

impl BoundId {
    pub const ALL: [BoundId; 13] = [
        BoundId::EarlyEntropy,
        BoundId::EarlyTrace,
        BoundId::DesignEntropy,
        BoundId::DesignTrace,
        BoundId::LateEntropy,
        BoundId::LateTrace,
        BoundId::CountEntropy,
        BoundId::CountTrace,
        BoundId::PurityWalk,
        BoundId::TwoDesignEntropy,
        BoundId::TwoDesignTrace,
        BoundId::Levy,
        BoundId::MomentCentered,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BoundId::EarlyEntropy => "early_entropy",
            BoundId::EarlyTrace => "early_trace",
            BoundId::DesignEntropy => "design_entropy",
            BoundId::DesignTrace => "design_trace",
            BoundId::LateEntropy => "late_entropy",
            BoundId::LateTrace => "late_trace",
            BoundId::CountEntropy => "count_entropy",
            BoundId::CountTrace => "count_trace",
            BoundId::PurityWalk => "purity_walk",
            BoundId::TwoDesignEntropy => "two_design_entropy",
            BoundId::TwoDesignTrace => "two_design_trace",
            BoundId::Levy => "levy",
            BoundId::MomentCentered => "moment_centered",
        }
    }

    /// Whether the value bounds a probability (and so may be clamped to `[0, 1]`).
    pub fn is_probability(self) -> bool {
        !matches!(self, BoundId::PurityWalk | BoundId::MomentCentered | BoundId::CountEntropy | BoundId::CountTrace)
    }
}

/// A bound evaluated along one abscissa (time, tau, or k).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub bound_id: BoundId,
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
}

impl BoundCurve {
    pub fn evaluate(
        bound_id: BoundId,
        abscissa: &[f64],
        mut f: impl FnMut(f64) -> Result<f64>,
    ) -> Result<Self> {
        let values = abscissa.iter().map(|&x| f(x)).collect::<Result<Vec<_>>>()?;
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Numerical(format!("{} produced {v}", bound_id.as_str())));
        }
        Ok(Self { bound_id, abscissa: abscissa.to_vec(), values })
    }

    /// Values clamped to `[0, 1]` for probability-type bounds, unchanged otherwise.
    pub fn clamped(&self) -> Vec<f64> {
        if self.bound_id.is_probability() {
            self.values.iter().map(|&v| clamp_probability(v)).collect()
        } else {
            self.values.clone()
        }
    }
}

pub fn clamp_probability(raw: f64) -> f64 {
    raw.clamp(0.0, 1.0)
}

/// `2q / (q^2 + 1)`: single-wall decay factor per layer.
pub fn wall_factor(q: usize) -> f64 {
    let q = q as f64;
    2.0 * q / (q * q + 1.0)
}

/// `q / (q^2 + 1)`: weight of one wall step in one direction.
pub fn step_weight(q: usize) -> f64 {
    wall_factor(q) / 2.0
}

fn trace_denominator(tau: f64, form: TraceDenominator) -> f64 {
    match form {
        TraceDenominator::Max => (tau * tau).max((tau * tau / 2.0).exp_m1()),
        TraceDenominator::TauSquared => tau * tau,
    }
}

fn check_dims(d_a: u64, d_b: u64) -> Result<(f64, f64)> {
    if d_a == 0 || d_b == 0 {
        return Err(input("subsystem dimensions must be at least 1"));
    }
    Ok((d_a as f64, d_b as f64))
}

fn check_offset(offset: usize, t: usize) -> Result<()> {
    if offset > 1 {
        return Err(input(format!("exponent offset must be 0 or 1, got {offset}")));
    }
    if t < 1 {
        return Err(input("t must be at least 1"));
    }
    Ok(())
}

/// Early-time entropy and trace-distance bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyTimeBound {
    pub entropy: f64,
    pub trace: f64,
}

/// `(d_A/d_B + d_A (2q/(q^2+1))^{2(t - offset)})` over `e^tau - 1` and over the
/// trace denominator.
pub fn early_time_bound(
    tau: f64,
    d_a: u64,
    d_b: u64,
    q: usize,
    t: usize,
    exponent_offset: usize,
) -> Result<EarlyTimeBound> {
    early_time_bound_with(tau, d_a, d_b, q, t, exponent_offset, TraceDenominator::Max)
}

pub fn early_time_bound_with(
    tau: f64,
    d_a: u64,
    d_b: u64,
    q: usize,
    t: usize,
    exponent_offset: usize,
    denominator: TraceDenominator,
) -> Result<EarlyTimeBound> {
    if !(tau > 0.0) {
        return Err(domain(format!("tau must be positive, got {tau}")));
    }
    check_offset(exponent_offset, t)?;
    let (a, b) = check_dims(d_a, d_b)?;
    let exponent = 2.0 * (t - exponent_offset) as f64;
    let numerator = a / b + a * (exponent * wall_factor(q).ln()).exp();
    Ok(EarlyTimeBound {
        entropy: numerator / tau.exp_m1(),
        trace: numerator / trace_denominator(tau, denominator),
    })
}

/// `ln k!` by direct summation.
pub fn ln_factorial(k: u64) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Deviation parameter (`delta` or `gamma`) of the design bound, checked.
pub fn design_gap(tau: f64, d_a: u64, d_b: u64, mode: BoundMode, gamma: TraceGamma) -> Result<f64> {
    let (a, b) = check_dims(d_a, d_b)?;
    let ratio = a / b;
    let gap = match mode {
        BoundMode::Entropy => {
            if !(tau >= ratio) {
                return Err(domain(format!("requires tau >= d_A/d_B, got tau = {tau}, d_A/d_B = {ratio}")));
            }
            tau.exp_m1() - ratio
        }
        BoundMode::Trace => {
            if !(tau * tau >= ratio) {
                return Err(domain(format!("requires tau^2 >= d_A/d_B, got tau^2 = {}, d_A/d_B = {ratio}", tau * tau)));
            }
            let t2 = tau * tau;
            let e = (t2 / 2.0).exp_m1();
            match gamma {
                TraceGamma::Max => t2.max(e) - ratio,
                TraceGamma::Exponential => e - ratio,
                TraceGamma::Quadratic => t2 - ratio,
            }
        }
    };
    if !(gap > 0.0) {
        return Err(domain(format!("requires a positive deviation gap, got {gap}")));
    }
    Ok(gap)
}

/// `2 (k! + d^{-k}) (9 pi^3 / gap^2 * d_A/d_B)^k` for approximate `4k`-designs.
pub fn design_bound(tau: f64, k: u64, d_a: u64, d_b: u64, mode: BoundMode) -> Result<f64> {
    design_bound_with(tau, k, d_a, d_b, mode, TraceGamma::Max)
}

pub fn design_bound_with(
    tau: f64,
    k: u64,
    d_a: u64,
    d_b: u64,
    mode: BoundMode,
    gamma: TraceGamma,
) -> Result<f64> {
    Ok(log_design_bound(tau, k, d_a, d_b, mode, gamma)?.exp())
}

/// Natural log of [`design_bound_with`].
pub fn log_design_bound(
    tau: f64,
    k: u64,
    d_a: u64,
    d_b: u64,
    mode: BoundMode,
    gamma: TraceGamma,
) -> Result<f64> {
    if k == 0 {
        return Err(input("design order k must be at least 1"));
    }
    let gap = design_gap(tau, d_a, d_b, mode, gamma)?;
    let (a, b) = (d_a as f64, d_b as f64);
    let kf = k as f64;
    let ln_d = a.ln() + b.ln();
    let prefactor = 2f64.ln() + log_add_exp(ln_factorial(k), -kf * ln_d);
    let base = (9.0 * PI.powi(3)).ln() - 2.0 * gap.ln() + a.ln() - b.ln();
    Ok(prefactor + kf * base)
}

/// Late-time bound for a circuit that is an approximate `k`-design after `C n k` layers.
///
/// `(e^{-2 tau} t/d)^{t/(C n)}` (entropy) or `(e^{-tau^2} t/d)^{t/(C n)}` (trace)
/// for `t <= C' d`, and `e^{-C' d / n}` afterwards, with `d = q^n`.
#[allow(clippy::too_many_arguments)]
pub fn late_time_bound(
    tau: f64,
    t: u64,
    n: usize,
    q: usize,
    d_a: u64,
    c: f64,
    c_prime: f64,
    mode: BoundMode,
) -> Result<f64> {
    Ok(log_late_time_bound(tau, t, n, q, d_a, c, c_prime, mode)?.exp())
}

#[allow(clippy::too_many_arguments)]
pub fn log_late_time_bound(
    tau: f64,
    t: u64,
    n: usize,
    q: usize,
    d_a: u64,
    c: f64,
    c_prime: f64,
    mode: BoundMode,
) -> Result<f64> {
    if !(c > 0.0) {
        return Err(input(format!("C must be positive, got {c}")));
    }
    if !(c_prime > 0.0 && c_prime < 1.0) {
        return Err(input(format!("C' must lie in (0, 1), got {c_prime}")));
    }
    if n == 0 || q < 2 || t == 0 {
        return Err(input("late-time bound needs n >= 1, q >= 2, t >= 1"));
    }
    let ln_d = n as f64 * (q as f64).ln();
    let ln_da = (d_a.max(1) as f64).ln();
    if ln_da > ln_d {
        return Err(input("d_A exceeds the total dimension"));
    }
    let ratio = (ln_da - (ln_d - ln_da)).exp();
    let decay = match mode {
        BoundMode::Entropy => {
            if !(tau >= ratio) {
                return Err(domain(format!("requires tau >= d_A/d_B, got tau = {tau}, d_A/d_B = {ratio}")));
            }
            2.0 * tau
        }
        BoundMode::Trace => {
            if !(tau >= ratio * ratio) {
                return Err(domain(format!("requires tau >= (d_A/d_B)^2, got tau = {tau}")));
            }
            tau * tau
        }
    };
    let tf = t as f64;
    let ln_cd = c_prime.ln() + ln_d;
    if tf.ln() <= ln_cd {
        Ok(tf / (c * n as f64) * (-decay + tf.ln() - ln_d))
    } else {
        Ok(-(ln_cd.exp()) / n as f64)
    }
}

/// Expected number of large deviations between `c ln d_A` and `e^{c' d}`:
/// `2 / denom * d_A^{1 - 2c/5}`.
pub fn counting_bound(tau: f64, d_a: u64, d_b: u64, c: f64, mode: BoundMode) -> Result<f64> {
    let (a, b) = check_dims(d_a, d_b)?;
    if !(c > 1.0) {
        return Err(domain(format!("requires c > 1, got {c}")));
    }
    if c <= 2.5 {
        log::warn!("counting bound with c = {c} <= 5/2 does not decay in d_A");
    }
    let ratio = a / b;
    let denom = match mode {
        BoundMode::Entropy => {
            if !(tau >= ratio) {
                return Err(domain(format!("requires tau >= d_A/d_B, got tau = {tau}, d_A/d_B = {ratio}")));
            }
            tau.exp_m1()
        }
        BoundMode::Trace => {
            if !(tau * tau >= ratio) {
                return Err(domain(format!("requires tau^2 >= d_A/d_B, got tau^2 = {}", tau * tau)));
            }
            trace_denominator(tau, TraceDenominator::Max)
        }
    };
    Ok(2.0 / denom * (-(0.4 * c - 1.0) * a.ln()).exp())
}

/// Bound for an approximate 2-design: `(d_A/d_B)(1 + eps) / denom`.
pub fn two_design_bound(tau: f64, d_a: u64, d_b: u64, eps: f64, mode: BoundMode) -> Result<f64> {
    let (a, b) = check_dims(d_a, d_b)?;
    if !(tau > 0.0) {
        return Err(domain(format!("tau must be positive, got {tau}")));
    }
    if !(eps >= 0.0) {
        return Err(input(format!("eps must be nonnegative, got {eps}")));
    }
    let denom = match mode {
        BoundMode::Entropy => tau.exp_m1(),
        BoundMode::Trace => (tau * tau / 2.0).exp_m1().max(tau),
    };
    Ok(a / b * (1.0 + eps) / denom)
}

/// Upper bound `q^{-A} + q^{-B} + (2q/(q^2+1))^{2(t - offset)}` on the mean purity.
pub fn purity_walk_bound(q: usize, a_sites: usize, b_sites: usize, t: usize, exponent_offset: usize) -> Result<f64> {
    if a_sites % 2 != 0 {
        return Err(domain(format!("subsystem must consist of an even number of sites, got {a_sites}")));
    }
    check_offset(exponent_offset, t)?;
    let qf = q as f64;
    let exponent = 2.0 * (t - exponent_offset) as f64;
    Ok(qf.powi(-(a_sites as i32)) + qf.powi(-(b_sites as i32)) + (exponent * wall_factor(q).ln()).exp())
}

/// `2 k! (9 pi^3 / d)^k + eps (1 + 1/d_A + 1/d_B)^{2k}`.
pub fn centered_moment_bound(k: u64, d: u64, eps: f64, d_a: u64, d_b: u64) -> Result<f64> {
    if k == 0 {
        return Err(input("k must be at least 1"));
    }
    if d_a < 2 || d_b < 2 {
        return Err(domain(format!("requires d_A, d_B >= 2, got {d_a}, {d_b}")));
    }
    if d == 0 || !(eps >= 0.0) {
        return Err(input("requires d >= 1 and eps >= 0"));
    }
    let kf = k as f64;
    let haar = 2f64.ln() + ln_factorial(k) + kf * ((9.0 * PI.powi(3)).ln() - (d as f64).ln());
    let design = 2.0 * kf * (1.0 / d_a as f64 + 1.0 / d_b as f64).ln_1p();
    let total = if eps > 0.0 { log_add_exp(haar, eps.ln() + design) } else { haar };
    Ok(total.exp())
}

fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Number of two-wall histories of `t` layers whose separation first reaches
/// zero at layer `t`, starting `a_sites` apart on an infinite line:
/// `(A / 2t) binom(2t, t - A/2)`.
pub fn walker_reunion_count(a_sites: u64, t: u64) -> Result<u128> {
    if a_sites < 2 || a_sites % 2 != 0 {
        return Err(domain(format!("A must be even and at least 2, got {a_sites}")));
    }
    if t == 0 {
        return Err(input("t must be at least 1"));
    }
    if t < a_sites / 2 {
        return Ok(0);
    }
    let overflow = || Error::Numerical(format!("reunion count overflows u128 at A = {a_sites}, t = {t}"));
    let b = binomial_u128(2 * t, t - a_sites / 2).ok_or_else(overflow)?;
    let num = b.checked_mul(a_sites as u128).ok_or_else(overflow)?;
    let den = 2 * t as u128;
    if num % den != 0 {
        return Err(Error::Numerical("reunion count is not integral".into()));
    }
    Ok(num / den)
}

/// Direct enumeration of all `4^t` wall histories (each wall steps left or
/// right every layer), counting those that first meet at layer `t`.
pub fn count_reunions_by_enumeration(a_sites: u64, t: u32) -> Result<u128> {
    if t > 12 {
        return Err(Error::Resource {
            what: "reunion enumeration".into(),
            required: 1u128 << (2 * t),
            limit: 1u128 << 24,
        });
    }
    let mut count = 0u128;
    for history in 0u64..(1u64 << (2 * t)) {
        let mut sep = a_sites as i64;
        let mut first = None;
        for layer in 0..t {
            let left = if history >> (2 * layer) & 1 == 1 { 1 } else { -1 };
            let right = if history >> (2 * layer + 1) & 1 == 1 { 1 } else { -1 };
            sep += right - left;
            if sep <= 0 {
                first = Some(layer + 1);
                break;
            }
        }
        if first == Some(t) {
            count += 1;
        }
    }
    Ok(count)
}

fn ln_binomial(n: u64, k: u64, ln_fact: &[f64]) -> f64 {
    ln_fact[n as usize] - ln_fact[k as usize] - ln_fact[(n - k) as usize]
}

/// Truncated reunion series `sum_{t'=A/2}^{t_max} c_A(t') (q/(q^2+1))^{2t'}`
/// and its limit `q^{-A}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkSum {
    pub partial_sum: f64,
    pub target: f64,
}

impl WalkSum {
    pub fn gap(&self) -> f64 {
        self.target - self.partial_sum
    }
}

pub fn walk_sum_check(q: usize, a_sites: u64, t_max: u64) -> Result<WalkSum> {
    if a_sites < 2 || a_sites % 2 != 0 {
        return Err(domain(format!("A must be even and at least 2, got {a_sites}")));
    }
    if t_max < a_sites / 2 {
        return Err(input(format!("t_max must be at least A/2 = {}", a_sites / 2)));
    }
    let mut ln_fact = vec![0.0; 2 * t_max as usize + 1];
    for i in 1..ln_fact.len() {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let ln_k = step_weight(q).ln();
    let partial_sum = (a_sites / 2..=t_max)
        .map(|t| {
            let ln_c = (a_sites as f64).ln() - (2.0 * t as f64).ln() + ln_binomial(2 * t, t - a_sites / 2, &ln_fact);
            (ln_c + 2.0 * t as f64 * ln_k).exp()
        })
        .sum();
    Ok(WalkSum { partial_sum, target: (q as f64).powi(-(a_sites as i32)) })
}

/// Exact mean purity after `t_walk` wall steps, from the separation walk on a
/// ring of `A + B` sites with absorption at separation `0` and `A + B`.
///
/// `sum_{s <= t} (c_A(s) + c_B(s)) K^{2s} + g(t) K^{2t}` with `K = q/(q^2+1)`,
/// where `g` counts histories that have not annihilated.
pub fn ring_walk_purity(q: usize, a_sites: usize, b_sites: usize, t_walk: usize) -> Result<f64> {
    if a_sites == 0 || b_sites == 0 || a_sites % 2 != 0 || b_sites % 2 != 0 {
        return Err(domain(format!("A and B must be even and positive, got {a_sites}, {b_sites}")));
    }
    let n = a_sites + b_sites;
    let k2 = step_weight(q).powi(2);
    // Weighted surviving histories by separation (in sites, even values only).
    let mut alive = vec![0.0f64; n + 1];
    alive[a_sites] = 1.0;
    let mut absorbed = 0.0;
    for _ in 0..t_walk {
        let mut next = vec![0.0f64; n + 1];
        for (sep, &w) in alive.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (delta, mult) in [(-2i64, 1.0), (0, 2.0), (2, 1.0)] {
                let s = sep as i64 + delta;
                let weight = w * mult * k2;
                if s <= 0 || s >= n as i64 {
                    absorbed += weight;
                } else {
                    next[s as usize] += weight;
                }
            }
        }
        alive = next;
    }
    Ok(absorbed + alive.iter().sum::<f64>())
}

/// Exact ensemble-mean purity of `region` after `depth` brickwork layers of
/// Haar gates on a ring of `n` sites from any product state.
///
/// Sums over every per-site configuration of the two-copy permutation
/// (identity or swap), propagating from the last layer down. A gate whose
/// two sites disagree maps to either uniform assignment with weight
/// `q/(q^2+1)`; a gate whose sites agree is unchanged. Every configuration has
/// unit overlap with a product state.
pub fn exact_brickwork_purity(n: usize, q: usize, region: &Subregion, depth: usize) -> Result<f64> {
    if n < 2 || n % 2 != 0 || n > 64 {
        return Err(input(format!("n must be even and in [2, 64], got {n}")));
    }
    region.validate_for(n)?;
    let k = step_weight(q);
    let mut start = 0u64;
    for &s in region.sites() {
        start |= 1 << s;
    }
    let mut configs: BTreeMap<u64, f64> = BTreeMap::from([(start, 1.0)]);
    for layer in (0..depth).rev() {
        let first = layer % 2;
        let mut next: BTreeMap<u64, f64> = BTreeMap::new();
        for (&cfg, &w) in &configs {
            let mut branches = vec![(cfg, w)];
            for g in 0..n / 2 {
                let i = (first + 2 * g) % n;
                let j = (i + 1) % n;
                let mask = (1u64 << i) | (1u64 << j);
                if ((cfg >> i) & 1) == ((cfg >> j) & 1) {
                    continue;
                }
                branches = branches
                    .into_iter()
                    .flat_map(|(c, bw)| [(c & !mask, bw * k), (c | mask, bw * k)])
                    .collect();
            }
            for (c, bw) in branches {
                *next.entry(c).or_insert(0.0) += bw;
            }
        }
        configs = next;
    }
    Ok(configs.values().sum())
}

/// Mean purity of a contiguous `A`-site region on a ring of `A + B` sites
/// after `t` layers, with the region's boundaries on gates of the last layer.
pub fn brute_force_walkers(a_sites: usize, b_sites: usize, q: usize, t: usize) -> Result<f64> {
    if a_sites % 2 != 0 || b_sites % 2 != 0 || a_sites == 0 || b_sites == 0 {
        return Err(domain(format!("A and B must be even and positive, got {a_sites}, {b_sites}")));
    }
    if t > 12 {
        return Err(Error::Resource { what: "walker enumeration depth".into(), required: t as u128, limit: 12 });
    }
    let n = a_sites + b_sites;
    // Left boundary bond is (start-1, start); it must carry a gate of layer t-1.
    let parity = t.saturating_sub(1) % 2;
    let start = (parity + 1) % n;
    let region = Subregion::interval(start, a_sites, n)?;
    exact_brickwork_purity(n, q, &region, t)
}
