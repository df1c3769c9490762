//! Haar-random unitaries and states, plus closed-form Haar reference values.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{domain, input, Result};
use crate::matrix::Matrix;
use crate::qstate::C64;
use crate::rng::rng_from_seed;

/// Dimension and seed for a standalone Haar draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaarSampleSpec {
    pub dim: usize,
    pub seed: u64,
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-distributed element of `U(dim)`.
///
/// Columns of a complex Ginibre matrix are orthonormalized left to right.
/// Gram-Schmidt produces the QR factorization whose triangular factor has a
/// positive real diagonal, which is the phase convention that makes `Q`
/// exactly Haar distributed. Each projection is done twice to keep
/// orthogonality at machine precision.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    // Column-major scratch: cols[j] is column j.
    let mut cols: Vec<Vec<C64>> = (0..dim)
        .map(|_| (0..dim).map(|_| gaussian(rng)).collect())
        .collect();
    for j in 0..dim {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        for _ in 0..2 {
            for u in done.iter() {
                let proj: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(u) {
                    *x -= proj * a;
                }
            }
        }
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
    }
    Matrix::from_fn(dim, |i, j| cols[j][i])
}

/// Uniformly random unit vector in `C^dim`.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let mut v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Haar unitary for a seeded spec.
pub fn sample_haar_unitary(spec: HaarSampleSpec) -> Result<Matrix> {
    if spec.dim == 0 {
        return Err(input("Haar dimension must be at least 1"));
    }
    Ok(haar_unitary(spec.dim, &mut rng_from_seed(spec.seed)))
}

/// Haar-random state amplitudes for a seeded spec.
pub fn sample_haar_state(spec: HaarSampleSpec) -> Result<Vec<C64>> {
    if spec.dim == 0 {
        return Err(input("Haar dimension must be at least 1"));
    }
    Ok(haar_state(spec.dim, &mut rng_from_seed(spec.seed)))
}

/// Haar mean purity of a `d_a`-dimensional marginal: `(d_a + d_b) / (d_a d_b + 1)`.
pub fn haar_average_purity(d_a: u64, d_b: u64) -> Result<f64> {
    if d_a == 0 || d_b == 0 {
        return Err(input("subsystem dimensions must be at least 1"));
    }
    let (a, b) = (d_a as f64, d_b as f64);
    Ok((a + b) / (a * b + 1.0))
}

/// Truncated Page series `ln d_a - d_a/(2 d_b) + 1/(2 d_a d_b)`.
///
/// Accurate to `O(d_b^-2)`; only meaningful for `d_b >> d_a`.
pub fn page_average_entropy(d_a: u64, d_b: u64) -> Result<f64> {
    if d_a == 0 || d_a > d_b {
        return Err(input(format!("page average needs 1 <= d_a <= d_b, got d_a={d_a}, d_b={d_b}")));
    }
    let (a, b) = (d_a as f64, d_b as f64);
    Ok(a.ln() - a / (2.0 * b) + 1.0 / (2.0 * a * b))
}

/// Center `ln d_a - d_a/d_b` used by the concentration tail.
pub fn levy_center(d_a: u64, d_b: u64) -> f64 {
    (d_a as f64).ln() - d_a as f64 / d_b as f64
}

/// Upper bound on `Pr(S <= ln d_a - d_a/d_b - tau)` for Haar states.
pub fn levy_entropy_tail(d_a: u64, d_b: u64, tau: f64) -> Result<f64> {
    if d_a < 3 || d_b < d_a {
        return Err(domain(format!("concentration tail needs d_b >= d_a >= 3, got d_a={d_a}, d_b={d_b}")));
    }
    if !(tau > 0.0) {
        return Err(domain(format!("tau must be positive, got {tau}")));
    }
    let d = (d_a * d_b) as f64;
    let log_a = (d_a as f64).ln();
    let pi2 = std::f64::consts::PI.powi(2);
    Ok((-(d - 1.0) * tau * tau / (8.0 * pi2 * log_a * log_a)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn dim_one_is_a_phase() {
        let u = sample_haar_unitary(HaarSampleSpec { dim: 1, seed: 3 }).unwrap();
        assert!((u.get(0, 0).norm() - 1.0).abs() < 1e-15);
        let s = sample_haar_state(HaarSampleSpec { dim: 1, seed: 3 }).unwrap();
        assert!((s[0].norm() - 1.0).abs() < 1e-15);
        assert!(sample_haar_unitary(HaarSampleSpec { dim: 0, seed: 3 }).is_err());
    }

    #[test]
    fn unitarity_and_norm() {
        let mut rng = rng_from_seed(11);
        for dim in [2, 3, 4, 8, 16, 32] {
            for _ in 0..20 {
                assert!(haar_unitary(dim, &mut rng).unitarity_error() < 1e-10);
                let s = haar_state(dim, &mut rng);
                let norm: f64 = s.iter().map(|x| x.norm_sqr()).sum();
                assert!((norm - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn seeded_draws_reproduce() {
        let spec = HaarSampleSpec { dim: 4, seed: 99 };
        assert_eq!(sample_haar_unitary(spec).unwrap(), sample_haar_unitary(spec).unwrap());
    }

    // E|U_00|^2 = 1/d for Haar U(d); checked over 1e5 draws at d = 4.
    #[test]
    fn first_moment_of_unitary_entries() {
        let mut rng = rng_from_seed(2);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| haar_unitary(4, &mut rng).get(0, 0).norm_sqr()).collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - 0.25).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn first_moment_of_state_amplitudes() {
        let mut rng = rng_from_seed(5);
        let xs: Vec<f64> = (0..100_000).map(|_| haar_state(8, &mut rng)[0].norm_sqr()).collect();
        let (mean, se) = mean_se(&xs);
        assert!((mean - 0.125).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    // Left-multiplying by a fixed unitary must not change entry statistics.
    #[test]
    fn left_invariance_statistic() {
        let mut rng = rng_from_seed(8);
        let fixed = haar_unitary(3, &mut rng);
        let n = 60_000;
        let plain: Vec<f64> = (0..n).map(|_| haar_unitary(3, &mut rng).get(1, 2).norm_sqr()).collect();
        let rotated: Vec<f64> =
            (0..n).map(|_| (&fixed * &haar_unitary(3, &mut rng)).get(1, 2).norm_sqr()).collect();
        let (m1, s1) = mean_se(&plain);
        let (m2, s2) = mean_se(&rotated);
        assert!((m1 - m2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt());
        // Fourth moment E|u|^4 = 2/(d(d+1)) = 1/6 at d = 3.
        let fourth: Vec<f64> = rotated.iter().map(|x| x * x).collect();
        let (m4, s4) = mean_se(&fourth);
        assert!((m4 - 1.0 / 6.0).abs() < 3.0 * s4);
    }

    #[test]
    fn rotated_state_statistics_match() {
        let mut rng = rng_from_seed(9);
        let fixed = haar_unitary(4, &mut rng);
        let xs: Vec<f64> = (0..50_000)
            .map(|_| fixed.apply(&haar_state(4, &mut rng))[2].norm_sqr())
            .collect();
        let (m, s) = mean_se(&xs);
        assert!((m - 0.25).abs() < 3.0 * s);
    }

    #[test]
    fn purity_formula() {
        assert!((haar_average_purity(2, 2).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(haar_average_purity(1, 17).unwrap(), 1.0);
        assert!((haar_average_purity(2, 32).unwrap() - 34.0 / 65.0).abs() < 1e-15);
        assert!((34.0f64 / 65.0 - 0.523077).abs() < 1e-6);
        assert!(haar_average_purity(0, 2).is_err());
    }

    #[test]
    fn page_formula() {
        let ln2 = std::f64::consts::LN_2;
        assert_eq!(page_average_entropy(1, 32).unwrap(), 0.0);
        let v = page_average_entropy(2, 32).unwrap();
        assert!((v - (ln2 - 1.0 / 32.0 + 1.0 / 128.0)).abs() < 1e-15);
        assert!((v - 0.669709).abs() < 1e-6);
        assert!((page_average_entropy(2, 2).unwrap() - (ln2 - 0.5 + 0.125)).abs() < 1e-15);
        assert!(page_average_entropy(4, 2).is_err());
    }

    #[test]
    fn levy_tail() {
        let v = levy_entropy_tail(3, 3, 1.0).unwrap();
        let l3 = 3f64.ln();
        let expect = (-8.0 / (8.0 * std::f64::consts::PI.powi(2) * l3 * l3)).exp();
        assert!((v - expect).abs() < 1e-15);
        assert!((v.ln() + 0.08397).abs() < 1e-4);
        assert!((levy_entropy_tail(4, 8, 1e-9).unwrap() - 1.0).abs() < 1e-12);
        let mut last = 1.0;
        for k in 1..50 {
            let t = levy_entropy_tail(3, 9, 0.05 * k as f64).unwrap();
            assert!(t < last);
            last = t;
        }
        assert!(levy_entropy_tail(2, 8, 1.0).is_err());
        assert!(levy_entropy_tail(3, 8, 0.0).is_err());
    }

    fn mean_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, (v / n).sqrt())
    }
}
