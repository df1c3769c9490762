//! Exact-diagonalization dynamics of the mixed-field Ising chain
//! `H = sum_i J Z_i Z_{i+1} + sum_i (g X_i + h Z_i)`.
//!
//! Basis digit `0` is the `Z = +1` state. `H` is real symmetric, so the
//! eigenvectors are real and time evolution needs only real GEMMs.

use std::ops::Range;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par, Side};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::haar::haar_state;
use crate::qstate::{checked_dim, reduced_entries, DensityMatrix, StateVector, Subregion, C64};

/// Largest chain accepted for dense diagonalization.
pub const MAX_SITES: usize = 14;
/// Energies closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;
/// Number of times evolved per GEMM batch.
pub const TIME_BATCH: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsingConfig {
    pub n: usize,
    pub j: f64,
    pub g: f64,
    pub h: f64,
    pub boundary: Boundary,
}

impl IsingConfig {
    pub const DEFAULT_J: f64 = 1.0;
    pub const DEFAULT_G: f64 = -1.05;
    pub const DEFAULT_H: f64 = 0.5;

    /// Chaotic default couplings on a periodic chain.
    pub fn chaotic(n: usize) -> Self {
        Self { n, j: Self::DEFAULT_J, g: Self::DEFAULT_G, h: Self::DEFAULT_H, boundary: Boundary::Periodic }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(input("n must be at least 1"));
        }
        if self.n > MAX_SITES {
            return Err(Error::Resource {
                what: format!("dense diagonalization of 2^{}", self.n),
                required: 1u128 << self.n,
                limit: 1u128 << MAX_SITES,
            });
        }
        if ![self.j, self.g, self.h].iter().all(|c| c.is_finite()) {
            return Err(input("couplings must be finite"));
        }
        Ok(())
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        let mut bonds: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic && n > 2 {
            bonds.push((n - 1, 0));
        }
        bonds
    }
}

/// Dense `2^n x 2^n` Hamiltonian.
pub fn build_hamiltonian(config: &IsingConfig) -> Result<Mat<f64>> {
    config.validate()?;
    let n = config.n;
    let dim = checked_dim(2, n)?;
    let bit = |site: usize| 1usize << (n - 1 - site);
    let z = |idx: usize, site: usize| if idx & bit(site) == 0 { 1.0 } else { -1.0 };
    let bonds = config.bonds();
    let mut h = Mat::<f64>::zeros(dim, dim);
    for idx in 0..dim {
        let mut diag = 0.0;
        for &(a, b) in &bonds {
            diag += config.j * z(idx, a) * z(idx, b);
        }
        for site in 0..n {
            diag += config.h * z(idx, site);
            h[(idx ^ bit(site), idx)] += config.g;
        }
        h[(idx, idx)] = diag;
    }
    Ok(h)
}

/// Eigen-decomposition of `H` with ascending energies and eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralData {
    n: usize,
    energies: Vec<f64>,
    eigenvectors: Mat<f64>,
}

pub fn diagonalize(config: &IsingConfig) -> Result<SpectralData> {
    let h = build_hamiltonian(config)?;
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let energies: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let eigenvectors = evd.U().to_owned();
    Ok(SpectralData { n: config.n, energies, eigenvectors })
}

impl SpectralData {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn eigenvectors(&self) -> &Mat<f64> {
        &self.eigenvectors
    }

    /// Column `k` as a normalized state.
    pub fn eigenstate(&self, k: usize) -> Result<StateVector> {
        let col = self.eigenvectors.col(k);
        StateVector::new(self.n, 2, col.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    fn check_state(&self, psi0: &StateVector) -> Result<()> {
        if psi0.q() != 2 || psi0.dim() != self.dim() {
            return Err(input(format!(
                "state of dimension {} does not match spectrum of dimension {}",
                psi0.dim(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Energy-basis coefficients `c_i = <v_i|psi0>`.
    pub fn coefficients(&self, psi0: &StateVector) -> Result<Vec<C64>> {
        self.check_state(psi0)?;
        let d = self.dim();
        let re = Mat::<f64>::from_fn(d, 1, |i, _| psi0.amps()[i].re);
        let im = Mat::<f64>::from_fn(d, 1, |i, _| psi0.amps()[i].im);
        let mut out_re = Mat::<f64>::zeros(d, 1);
        let mut out_im = Mat::<f64>::zeros(d, 1);
        matmul(&mut out_re, Accum::Replace, self.eigenvectors.transpose(), &re, 1.0, Par::Seq);
        matmul(&mut out_im, Accum::Replace, self.eigenvectors.transpose(), &im, 1.0, Par::Seq);
        Ok((0..d).map(|i| C64::new(out_re[(i, 0)], out_im[(i, 0)])).collect())
    }

    /// Index ranges of energies within [`DEGENERACY_TOL`] of their neighbour.
    pub fn degenerate_groups(&self) -> Vec<Range<usize>> {
        let mut groups = Vec::new();
        let mut start = 0;
        for i in 1..=self.energies.len() {
            if i == self.energies.len() || self.energies[i] - self.energies[i - 1] >= DEGENERACY_TOL {
                groups.push(start..i);
                start = i;
            }
        }
        groups
    }

    /// `sum_i e^{-i E_i t} c_i v_i` for each time, batched through GEMM.
    pub fn evolve_many(&self, psi0: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
        let coeffs = self.coefficients(psi0)?;
        let mut out = Vec::with_capacity(times.len());
        self.for_each_evolved(&coeffs, times, |_, amps| {
            out.push(StateVector::new(self.n, 2, amps)?);
            Ok(())
        })?;
        Ok(out)
    }

    /// Streams evolved amplitude vectors to `f` in time order without keeping them.
    pub fn for_each_evolved(
        &self,
        coeffs: &[C64],
        times: &[f64],
        mut f: impl FnMut(usize, Vec<C64>) -> Result<()>,
    ) -> Result<()> {
        let d = self.dim();
        if coeffs.len() != d {
            return Err(input("coefficient vector does not match spectrum"));
        }
        for (b, chunk) in times.chunks(TIME_BATCH).enumerate() {
            let m = chunk.len();
            let mut c_re = Mat::<f64>::zeros(d, m);
            let mut c_im = Mat::<f64>::zeros(d, m);
            for (col, &t) in chunk.iter().enumerate() {
                for i in 0..d {
                    let v = coeffs[i] * C64::from_polar(1.0, -self.energies[i] * t);
                    c_re[(i, col)] = v.re;
                    c_im[(i, col)] = v.im;
                }
            }
            let mut p_re = Mat::<f64>::zeros(d, m);
            let mut p_im = Mat::<f64>::zeros(d, m);
            matmul(&mut p_re, Accum::Replace, &self.eigenvectors, &c_re, 1.0, Par::Seq);
            matmul(&mut p_im, Accum::Replace, &self.eigenvectors, &c_im, 1.0, Par::Seq);
            for col in 0..m {
                let amps = (0..d).map(|i| C64::new(p_re[(i, col)], p_im[(i, col)])).collect();
                f(b * TIME_BATCH + col, amps)?;
            }
        }
        Ok(())
    }
}

/// State at time `t`.
pub fn evolve(spec: &SpectralData, psi0: &StateVector, t: f64) -> Result<StateVector> {
    Ok(spec.evolve_many(psi0, &[t])?.remove(0))
}

/// `(sum_i |c_i|^4)^{-1}` over individual eigenvectors.
pub fn effective_dimension(spec: &SpectralData, psi0: &StateVector) -> Result<f64> {
    let c = spec.coefficients(psi0)?;
    Ok(1.0 / c.iter().map(|x| x.norm_sqr().powi(2)).sum::<f64>())
}

/// `(sum_E p_E^2)^{-1}` with `p_E` the weight on each degenerate eigenspace.
pub fn effective_dimension_grouped(spec: &SpectralData, psi0: &StateVector) -> Result<f64> {
    let c = spec.coefficients(psi0)?;
    let ipr: f64 = spec
        .degenerate_groups()
        .into_iter()
        .map(|g| c[g].iter().map(|x| x.norm_sqr()).sum::<f64>().powi(2))
        .sum();
    Ok(1.0 / ipr)
}

/// Infinite-time average of `rho_A(t)`.
///
/// Sums `tr_B |P_E psi0><P_E psi0|` over eigenspaces, which reduces to
/// `sum_i |c_i|^2 tr_B |v_i><v_i|` for a nondegenerate spectrum.
pub fn dephased_average(spec: &SpectralData, psi0: &StateVector, region: &Subregion) -> Result<DensityMatrix> {
    let c = spec.coefficients(psi0)?;
    let d = spec.dim();
    let d_a = 1usize << region.len();
    let mut acc = vec![C64::new(0.0, 0.0); d_a * d_a];
    let mut degenerate = 0usize;
    for group in spec.degenerate_groups() {
        if group.len() > 1 {
            degenerate += 1;
        }
        let weight: f64 = c[group.clone()].iter().map(|x| x.norm_sqr()).sum();
        if weight < 1e-300 {
            continue;
        }
        let mut proj = vec![C64::new(0.0, 0.0); d];
        for k in group {
            let col = spec.eigenvectors.col(k);
            for (p, &v) in proj.iter_mut().zip(col.iter()) {
                *p += c[k] * v;
            }
        }
        let (_, part) = reduced_entries(spec.n, 2, &proj, region)?;
        for (a, p) in acc.iter_mut().zip(part) {
            *a += p;
        }
    }
    if degenerate > 0 {
        log::debug!("dephased average: {degenerate} degenerate eigenspaces (gap < {DEGENERACY_TOL:e})");
    }
    DensityMatrix::new(d_a, acc)
}

/// `((|0> + i|1>)/sqrt 2)^{(x) n}`.
pub fn make_y_plus_state(n: usize) -> Result<StateVector> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let site = vec![C64::new(s, 0.0), C64::new(0.0, s)];
    StateVector::product(2, &vec![site; n])
}

/// Product of independent Haar-random single-qubit states.
pub fn random_product_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<StateVector> {
    let sites: Vec<Vec<C64>> = (0..n).map(|_| haar_state(2, rng)).collect();
    StateVector::product(2, &sites)
}

/// `<psi|H|psi>` from the spectral data.
pub fn energy_expectation(spec: &SpectralData, psi: &StateVector) -> Result<f64> {
    let c = spec.coefficients(psi)?;
    Ok(c.iter().zip(&spec.energies).map(|(x, e)| x.norm_sqr() * e).sum())
}

/// Mean of `min(r, 1/r)` over consecutive level-spacing ratios.
///
/// Spectra that mix symmetry sectors look Poissonian (about 0.386) even for
/// chaotic Hamiltonians.
pub fn mean_spacing_ratio(energies: &[f64]) -> Option<f64> {
    let gaps: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = gaps
        .windows(2)
        .filter(|w| w[0].max(w[1]) > DEGENERACY_TOL)
        .map(|w| w[0].min(w[1]) / w[0].max(w[1]))
        .collect();
    if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }
}
