//! Pure states on rings of qudits, reduced density matrices, and the
//! entropy / distance kernels every experiment records.
//!
//! Amplitudes are stored big-endian: site 0 is the slowest-varying digit of
//! the basis index. Entropies are in nats.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{input, Error, Result};

pub type C64 = Complex64;

/// Tolerance on the squared norm of a [`StateVector`].
pub const NORM_TOL: f64 = 1e-10;
/// Entrywise Hermiticity and trace tolerance for a [`DensityMatrix`].
pub const DENSITY_TOL: f64 = 1e-10;
/// Eigenvalues below this are a genuine positivity violation.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-9;
/// Eigenvalues at or below this contribute nothing to the entropy.
pub const ZERO_EIGEN_CUTOFF: f64 = 1e-12;

/// `base^exp` with overflow reported as a resource error.
pub fn checked_dim(base: usize, exp: usize) -> Result<usize> {
    u32::try_from(exp)
        .ok()
        .and_then(|e| base.checked_pow(e))
        .ok_or_else(|| Error::Resource {
            what: format!("Hilbert space {base}^{exp}"),
            required: u128::MAX,
            limit: usize::MAX as u128,
        })
}

/// Normalized amplitude vector over `n` qudits of local dimension `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    q: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(n: usize, q: usize, amps: Vec<C64>) -> Result<Self> {
        if n < 1 || q < 2 {
            return Err(input(format!("need n >= 1 and q >= 2, got n={n}, q={q}")));
        }
        let dim = checked_dim(q, n)?;
        if amps.len() != dim {
            return Err(input(format!("expected {dim} amplitudes, got {}", amps.len())));
        }
        let state = Self { n, q, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Numerical(format!("state norm^2 = {norm}, expected 1")));
        }
        Ok(state)
    }

    /// Normalizes `amps` before validating.
    pub fn normalized(n: usize, q: usize, mut amps: Vec<C64>) -> Result<Self> {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(input("cannot normalize a zero or non-finite vector"));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        Self::new(n, q, amps)
    }

    /// Computational basis state `|digits[0] digits[1] ...>`.
    pub fn basis(q: usize, digits: &[usize]) -> Result<Self> {
        let n = digits.len();
        let dim = checked_dim(q, n)?;
        let mut index = 0usize;
        for &d in digits {
            if d >= q {
                return Err(input(format!("digit {d} out of range for q={q}")));
            }
            index = index * q + d;
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Self::new(n, q, amps)
    }

    /// Tensor product of normalized single-site states (site 0 first).
    pub fn product(q: usize, sites: &[Vec<C64>]) -> Result<Self> {
        let n = sites.len();
        if n == 0 {
            return Err(input("product state needs at least one site"));
        }
        let dim = checked_dim(q, n)?;
        let mut amps = Vec::with_capacity(dim);
        amps.push(C64::new(1.0, 0.0));
        for local in sites {
            if local.len() != q {
                return Err(input(format!("site state has {} entries, expected {q}", local.len())));
            }
            let mut next = Vec::with_capacity(amps.len() * q);
            for a in &amps {
                next.extend(local.iter().map(|l| a * l));
            }
            amps = next;
        }
        Self::normalized(n, q, amps)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(input("inner product of states with different dimensions"));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }
}

/// Set of sites forming subsystem `A`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subregion {
    sites: Vec<usize>,
    contiguous: bool,
}

impl Subregion {
    /// Arbitrary region; contiguity (modulo `n`) is detected.
    pub fn new(sites: Vec<usize>, n: usize) -> Result<Self> {
        if sites.is_empty() {
            return Err(input("subregion must contain at least one site"));
        }
        let mut sorted = sites.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(input(format!("subregion sites not distinct: {sites:?}")));
        }
        if let Some(&bad) = sorted.iter().find(|&&s| s >= n) {
            return Err(input(format!("site index {bad} out of range for n={n}")));
        }
        let contiguous = is_cyclic_interval(&sorted, n);
        Ok(Self { sites, contiguous })
    }

    /// Cyclic interval `start, start+1, ..., start+len-1 (mod n)`.
    pub fn interval(start: usize, len: usize, n: usize) -> Result<Self> {
        if start >= n {
            return Err(input(format!("interval start {start} out of range for n={n}")));
        }
        if len == 0 || len > n {
            return Err(input(format!("interval length {len} invalid for n={n}")));
        }
        Self::new((0..len).map(|k| (start + k) % n).collect(), n)
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn is_contiguous(&self) -> bool {
        self.contiguous
    }

    /// Sites not in the region, ascending.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|s| !self.sites.contains(s)).collect()
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        match self.sites.iter().find(|&&s| s >= n) {
            Some(&bad) => Err(input(format!("site index {bad} out of range for n={n}"))),
            None if self.sites.len() > n => Err(input("subregion larger than the chain")),
            None => Ok(()),
        }
    }
}

fn is_cyclic_interval(sorted: &[usize], n: usize) -> bool {
    let len = sorted.len();
    if len == n {
        return true;
    }
    // Exactly one gap between consecutive members going around the ring.
    let gaps = (0..len)
        .filter(|&i| {
            let next = sorted[(i + 1) % len];
            (next + n - sorted[i]) % n != 1
        })
        .count();
    gaps == 1
}

/// Hermitian, positive semidefinite, unit-trace matrix (row-major storage).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    /// Validates all invariants, including positivity.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(input(format!("density matrix of dim {dim} needs {} entries", dim * dim)));
        }
        let rho = Self { dim, entries };
        for i in 0..dim {
            for j in i..dim {
                if (rho.get(i, j) - rho.get(j, i).conj()).norm() > DENSITY_TOL {
                    return Err(Error::Numerical(format!("not Hermitian at ({i},{j})")));
                }
            }
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(Error::Numerical(format!("trace {tr}, expected 1")));
        }
        let min = rho.eigenvalues()?.first().copied().unwrap_or(0.0);
        if min < -NEGATIVE_EIGEN_TOL {
            return Err(Error::Numerical(format!("negative eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(dim: usize, entries: Vec<C64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        Self { dim, entries }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let dim = probs.len();
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for (i, &p) in probs.iter().enumerate() {
            entries[i * dim + i] = C64::new(p, 0.0);
        }
        Self::new(dim, entries)
    }

    /// `1/dim` times the identity.
    pub fn maximally_mixed(dim: usize) -> Self {
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { dim, entries }
    }

    /// Projector onto a (normalized) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Numerical(format!("vector norm^2 = {norm}")));
        }
        let dim = psi.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for a in psi {
            entries.extend(psi.iter().map(|b| a * b.conj()));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.dim + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        hermitian_eigenvalues(self.dim, &self.entries)
    }

    /// Weighted sum `sum_k w_k rho_k`; weights should sum to one.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let dim = parts.first().map(|(_, r)| r.dim).ok_or_else(|| input("empty mixture"))?;
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for (w, rho) in parts {
            if rho.dim != dim {
                return Err(input("mixture of density matrices with different dimensions"));
            }
            for (e, r) in entries.iter_mut().zip(&rho.entries) {
                *e += r * *w;
            }
        }
        Ok(Self { dim, entries })
    }
}

/// Eigenvalues (ascending) of a Hermitian matrix given row-major.
pub fn hermitian_eigenvalues(dim: usize, entries: &[C64]) -> Result<Vec<f64>> {
    match dim {
        0 => Ok(Vec::new()),
        1 => Ok(vec![entries[0].re]),
        2 => {
            let a = entries[0].re;
            let d = entries[3].re;
            let b = entries[1];
            let mean = 0.5 * (a + d);
            let half = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            Ok(vec![mean - half, mean + half])
        }
        _ => {
            let m = Mat::<C64>::from_fn(dim, dim, |i, j| entries[i * dim + j]);
            m.self_adjoint_eigenvalues(Side::Lower)
                .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))
        }
    }
}

/// Reduced state `rho_A = tr_B |psi><psi|`, basis ordered by the region's site list.
pub fn partial_trace(state: &StateVector, region: &Subregion) -> Result<DensityMatrix> {
    let (d_a, rho) = reduced_entries(state.n(), state.q(), state.amps(), region)?;
    Ok(DensityMatrix::from_raw(d_a, rho))
}

/// Row-major `tr_B |v><v|` for an arbitrary (not necessarily normalized) vector.
pub(crate) fn reduced_entries(n: usize, q: usize, amps: &[C64], region: &Subregion) -> Result<(usize, Vec<C64>)> {
    region.validate_for(n)?;
    let stride = |site: usize| q.pow((n - 1 - site) as u32);
    let a_sites = region.sites();
    let b_sites = region.complement(n);
    let offsets = |sites: &[usize]| -> Vec<usize> {
        let mut offs = vec![0usize];
        for &s in sites {
            let st = stride(s);
            offs = offs
                .iter()
                .flat_map(|&o| (0..q).map(move |digit| o + digit * st))
                .collect();
        }
        offs
    };
    let a_offs = offsets(a_sites);
    let b_offs = offsets(&b_sites);
    let d_a = a_offs.len();
    let d_b = b_offs.len();
    if amps.len() != d_a * d_b {
        return Err(input(format!("expected {} amplitudes, got {}", d_a * d_b, amps.len())));
    }

    // M[a][b] laid out row-major, rho = M M^dagger.
    let mut m = Vec::with_capacity(d_a * d_b);
    for &oa in &a_offs {
        m.extend(b_offs.iter().map(|&ob| amps[oa + ob]));
    }
    let mut rho = vec![C64::new(0.0, 0.0); d_a * d_a];
    for i in 0..d_a {
        let ri = &m[i * d_b..(i + 1) * d_b];
        for j in i..d_a {
            let rj = &m[j * d_b..(j + 1) * d_b];
            let mut acc = C64::new(0.0, 0.0);
            for (x, y) in ri.iter().zip(rj) {
                acc += x * y.conj();
            }
            if i == j {
                acc.im = 0.0;
            }
            rho[i * d_a + j] = acc;
            rho[j * d_a + i] = acc.conj();
        }
    }
    Ok((d_a, rho))
}

fn entropy_from_eigenvalues(eigs: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in eigs {
        if l < -NEGATIVE_EIGEN_TOL {
            return Err(Error::Numerical(format!("eigenvalue {l:e} below -{NEGATIVE_EIGEN_TOL:e}")));
        }
        if l > ZERO_EIGEN_CUTOFF {
            s -= l * l.ln();
        }
    }
    Ok(s.max(0.0))
}

/// `-tr(rho ln rho)` in nats.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_from_eigenvalues(&rho.eigenvalues()?)
}

/// `tr(rho^2)` as the squared Frobenius norm.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.entries.iter().map(|e| e.norm_sqr()).sum()
}

/// Unhalved trace norm `||a - b||_1`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(input(format!("dimension mismatch: {} vs {}", a.dim, b.dim)));
    }
    let diff: Vec<C64> = a.entries.iter().zip(&b.entries).map(|(x, y)| x - y).collect();
    Ok(hermitian_eigenvalues(a.dim, &diff)?.iter().map(|l| l.abs()).sum())
}

/// The three per-snapshot observables recorded by every experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    /// Von Neumann entropy of `rho_A` (nats).
    pub entropy: f64,
    /// `||rho_A - 1/d_A||_1`.
    pub dist_mm: f64,
    pub purity: f64,
}

/// Observables of an already reduced state, from one eigendecomposition.
pub fn observables(rho: &DensityMatrix) -> Result<Observables> {
    let eigs = rho.eigenvalues()?;
    let inv = 1.0 / rho.dim as f64;
    Ok(Observables {
        entropy: entropy_from_eigenvalues(&eigs)?,
        dist_mm: eigs.iter().map(|l| (l - inv).abs()).sum(),
        purity: purity(rho),
    })
}

/// Entropy, distance to maximally mixed, and purity of `rho_A` from one partial trace.
pub fn subsystem_entropy_series_point(
    state: &StateVector,
    region: &Subregion,
) -> Result<Observables> {
    observables(&partial_trace(state, region)?)
}

/// Entropy in bits, for reporting.
pub fn nats_to_bits(s: f64) -> f64 {
    s / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell() -> StateVector {
        StateVector::new(2, 2, vec![c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)]).unwrap()
    }

    fn ghz3() -> StateVector {
        let mut amps = vec![c(0.0); 8];
        amps[0] = c(FRAC_1_SQRT_2);
        amps[7] = c(FRAC_1_SQRT_2);
        StateVector::new(3, 2, amps).unwrap()
    }

    #[test]
    fn bell_reduces_to_maximally_mixed() {
        let rho = partial_trace(&bell(), &Subregion::new(vec![0], 2).unwrap()).unwrap();
        assert_eq!(rho.dim(), 2);
        assert!((rho.get(0, 0).re - 0.5).abs() < 1e-15);
        assert!((rho.get(1, 1).re - 0.5).abs() < 1e-15);
        assert!(rho.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn product_state_reduces_to_projector() {
        let a = vec![c(0.6), C64::new(0.0, 0.8)];
        let b = vec![c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2)];
        let psi = StateVector::product(2, &[a.clone(), b]).unwrap();
        let rho = partial_trace(&psi, &Subregion::new(vec![0], 2).unwrap()).unwrap();
        let expect = DensityMatrix::pure(&a).unwrap();
        for (x, y) in rho.entries().iter().zip(expect.entries()) {
            assert!((x - y).norm() < 1e-14);
        }
    }

    #[test]
    fn ghz_two_site_marginal() {
        let rho = partial_trace(&ghz3(), &Subregion::new(vec![0, 1], 3).unwrap()).unwrap();
        let expect = [0.5, 0.0, 0.0, 0.5];
        for i in 0..4 {
            for j in 0..4 {
                let e = if i == j { expect[i] } else { 0.0 };
                assert!((rho.get(i, j) - c(e)).norm() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn region_order_sets_basis_order() {
        // |01>: region [1,0] must see |10>.
        let psi = StateVector::basis(2, &[0, 1]).unwrap();
        let rho = partial_trace(&psi, &Subregion::new(vec![1, 0], 2).unwrap()).unwrap();
        assert!((rho.get(2, 2).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn invalid_site_is_rejected() {
        assert!(matches!(Subregion::new(vec![3], 3), Err(Error::Input(_))));
        assert!(matches!(Subregion::new(vec![0, 0], 3), Err(Error::Input(_))));
        let r = Subregion::new(vec![4], 6).unwrap();
        assert!(matches!(partial_trace(&ghz3(), &r), Err(Error::Input(_))));
    }

    #[test]
    fn contiguity_is_cyclic() {
        assert!(Subregion::new(vec![5, 0, 1], 6).unwrap().is_contiguous());
        assert!(Subregion::interval(4, 3, 6).unwrap().is_contiguous());
        assert!(!Subregion::new(vec![0, 2], 6).unwrap().is_contiguous());
        assert!(Subregion::new(vec![2], 6).unwrap().is_contiguous());
    }

    #[test]
    fn entropy_examples() {
        let half = DensityMatrix::diagonal(&[0.5, 0.5]).unwrap();
        assert!((von_neumann_entropy(&half).unwrap() - LN_2).abs() < 1e-14);
        let pure = DensityMatrix::pure(&[c(0.6), c(0.8)]).unwrap();
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
        let skew = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        // -(3/4) ln(3/4) - (1/4) ln(1/4)
        let expect = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((von_neumann_entropy(&skew).unwrap() - expect).abs() < 1e-14);
        assert!((expect - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn entropy_rejects_negative_eigenvalue() {
        let bad = DensityMatrix::from_raw(2, vec![c(1.1), c(0.0), c(0.0), c(-0.1)]);
        assert!(matches!(von_neumann_entropy(&bad), Err(Error::Numerical(_))));
        let roundoff = DensityMatrix::from_raw(2, vec![c(1.0 + 1e-10), c(0.0), c(0.0), c(-1e-10)]);
        assert!(von_neumann_entropy(&roundoff).unwrap() < 1e-8);
        assert!(matches!(
            DensityMatrix::new(2, vec![c(1.1), c(0.0), c(0.0), c(-0.1)]),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn purity_examples() {
        assert!((purity(&DensityMatrix::diagonal(&[0.5, 0.5]).unwrap()) - 0.5).abs() < 1e-15);
        assert!((purity(&DensityMatrix::pure(&[c(0.6), c(0.8)]).unwrap()) - 1.0).abs() < 1e-15);
        assert!((purity(&DensityMatrix::diagonal(&[0.75, 0.25]).unwrap()) - 0.625).abs() < 1e-15);
    }

    #[test]
    fn trace_distance_examples() {
        let mm = DensityMatrix::maximally_mixed(2);
        let skew = DensityMatrix::diagonal(&[0.75, 0.25]).unwrap();
        let up = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!(trace_distance(&skew, &skew).unwrap().abs() < 1e-15);
        assert!((trace_distance(&up, &mm).unwrap() - 1.0).abs() < 1e-15);
        assert!((trace_distance(&skew, &mm).unwrap() - 0.5).abs() < 1e-15);
        let big = DensityMatrix::maximally_mixed(4);
        assert!(matches!(trace_distance(&mm, &big), Err(Error::Input(_))));
    }

    #[test]
    fn series_point_examples() {
        let r0 = Subregion::new(vec![0], 2).unwrap();
        let o = subsystem_entropy_series_point(&bell(), &r0).unwrap();
        assert!((o.entropy - LN_2).abs() < 1e-14);
        assert!(o.dist_mm.abs() < 1e-14);
        assert!((o.purity - 0.5).abs() < 1e-14);

        let prod = StateVector::basis(2, &[0, 1]).unwrap();
        let o = subsystem_entropy_series_point(&prod, &r0).unwrap();
        assert!(o.entropy.abs() < 1e-14);
        assert!((o.dist_mm - 1.0).abs() < 1e-14);
        assert!((o.purity - 1.0).abs() < 1e-14);

        let o = subsystem_entropy_series_point(&ghz3(), &Subregion::new(vec![0], 3).unwrap()).unwrap();
        assert!((o.entropy - LN_2).abs() < 1e-14);
        assert!(o.dist_mm.abs() < 1e-14);
        assert!((o.purity - 0.5).abs() < 1e-14);
    }

    #[test]
    fn state_vector_invariants() {
        assert!(StateVector::new(2, 2, vec![c(1.0); 3]).is_err());
        assert!(matches!(StateVector::new(2, 2, vec![c(1.0); 4]), Err(Error::Numerical(_))));
        let psi = StateVector::normalized(2, 2, vec![c(1.0); 4]).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-15);
    }
}
