//! Brickwork random quantum circuits on a periodic ring of qudits.
//!
//! Layer `t` (counting from 0) has parity `t mod 2`. Even layers pair
//! `(0,1), (2,3), ...`; odd layers pair `(1,2), ..., (n-1,0)`. One time step
//! is one layer. Gates are drawn fresh for every layer of every trial, either
//! Haar on `U(q^2)` or, for qubits, block-diagonal in the local charge basis.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::fluxstats::FluctuationSeries;
use crate::haar::haar_unitary;
use crate::matrix::Matrix;
use crate::qstate::{checked_dim, subsystem_entropy_series_point, StateVector, Subregion, C64};
use crate::rng::{mix64, StreamSeeder, TrialRng};

/// Largest state-vector dimension a circuit run will allocate.
pub const MAX_STATE_DIM: usize = 1 << 24;

/// Seed domain used by [`run_brickwork`].
pub const BRICKWORK_DOMAIN: &str = "brickwork";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateEnsemble {
    /// Independent Haar gates on `U(q^2)`.
    Haar,
    /// Gates commuting with `Z_1 + Z_2`; Haar on each charge block (qubits only).
    U1Conserving,
}

/// Product state the circuit starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|0...0>`.
    AllZero,
    /// Half filling with a charge on every second site: `|1010...>`.
    HomogeneousHalfFilling,
    /// Half filling with all charge on the first half: `|11..100..0>`.
    StepFunction,
}

/// One ensemble of brickwork circuits. Boundary conditions are always periodic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitConfig {
    pub n: usize,
    pub q: usize,
    pub depth: usize,
    pub ensemble: GateEnsemble,
    pub initial_state: InitialState,
    pub master_seed: u64,
}

impl CircuitConfig {
    pub fn haar(n: usize, q: usize, depth: usize, master_seed: u64) -> Self {
        Self {
            n,
            q,
            depth,
            ensemble: GateEnsemble::Haar,
            initial_state: InitialState::AllZero,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.n % 2 != 0 {
            return Err(input(format!("n must be even and at least 4, got {}", self.n)));
        }
        if self.q < 2 {
            return Err(input(format!("q must be at least 2, got {}", self.q)));
        }
        let uses_charge = self.initial_state != InitialState::AllZero;
        if (self.ensemble == GateEnsemble::U1Conserving || uses_charge) && self.q != 2 {
            return Err(input(format!("u1_conserving requires q = 2, got q = {}", self.q)));
        }
        let dim = checked_dim(self.q, self.n)?;
        if dim > MAX_STATE_DIM {
            return Err(Error::Resource {
                what: format!("state vector {}^{}", self.q, self.n),
                required: dim as u128,
                limit: MAX_STATE_DIM as u128,
            });
        }
        Ok(())
    }

    /// Stable 64-bit digest of every field.
    pub fn config_hash(&self) -> u64 {
        let ens = match self.ensemble {
            GateEnsemble::Haar => 1,
            GateEnsemble::U1Conserving => 2,
        };
        let init = match self.initial_state {
            InitialState::AllZero => 1,
            InitialState::HomogeneousHalfFilling => 2,
            InitialState::StepFunction => 3,
        };
        [self.n as u64, self.q as u64, self.depth as u64, ens, init, self.master_seed]
            .iter()
            .fold(0x5eed_u64, |h, &x| mix64(h ^ mix64(x)))
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        match self.initial_state {
            InitialState::AllZero => StateVector::basis(self.q, &vec![0; self.n]),
            InitialState::HomogeneousHalfFilling => {
                make_charge_initial_state(self.n, ChargePattern::HomogeneousHalfFilling)
            }
            InitialState::StepFunction => make_charge_initial_state(self.n, ChargePattern::StepFunction),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of_layer(layer: usize) -> Self {
        if layer % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    /// Site pairs acted on by a layer of this parity on a ring of `n` sites.
    pub fn pairs(self, n: usize) -> Vec<(usize, usize)> {
        let start = match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        };
        (0..n / 2).map(|k| {
            let i = start + 2 * k;
            (i % n, (i + 1) % n)
        }).collect()
    }
}

/// `n/2` two-site gates acting on disjoint pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct GateLayer {
    pub parity: Parity,
    pub gates: Vec<Matrix>,
}

impl GateLayer {
    pub fn sample<R: Rng + ?Sized>(
        n: usize,
        q: usize,
        parity: Parity,
        ensemble: GateEnsemble,
        rng: &mut R,
    ) -> Self {
        let gates = (0..n / 2)
            .map(|_| match ensemble {
                GateEnsemble::Haar => haar_unitary(q * q, rng),
                GateEnsemble::U1Conserving => sample_u1_gate(rng),
            })
            .collect();
        Self { parity, gates }
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        let pairs = self.parity.pairs(state.n());
        if pairs.len() != self.gates.len() {
            return Err(input("gate layer does not match chain length"));
        }
        for ((i, j), gate) in pairs.into_iter().zip(&self.gates) {
            apply_two_site_gate(state, gate, i, j)?;
        }
        Ok(())
    }
}

/// Applies a `q^2 x q^2` gate to neighbouring sites `site_i`, `site_j = site_i + 1 (mod n)`.
///
/// The gate's local basis is `|s_i s_j>` with `s_i` the more significant digit.
pub fn apply_two_site_gate(
    state: &mut StateVector,
    gate: &Matrix,
    site_i: usize,
    site_j: usize,
) -> Result<()> {
    let n = state.n();
    let q = state.q();
    if site_i >= n || site_j >= n || site_j != (site_i + 1) % n {
        return Err(input(format!("sites ({site_i}, {site_j}) are not nearest neighbours on a ring of {n}")));
    }
    let qq = q * q;
    if gate.dim() != qq {
        return Err(input(format!("gate dimension {} does not match q^2 = {qq}", gate.dim())));
    }
    let stride_i = q.pow((n - 1 - site_i) as u32);
    let stride_j = q.pow((n - 1 - site_j) as u32);
    let offsets: Vec<usize> = (0..qq).map(|k| (k / q) * stride_i + (k % q) * stride_j).collect();
    let is_base: Box<dyn Fn(usize) -> bool> = if q == 2 {
        let mask = stride_i | stride_j;
        Box::new(move |idx| idx & mask == 0)
    } else {
        Box::new(move |idx| (idx / stride_i) % q == 0 && (idx / stride_j) % q == 0)
    };
    let g = gate.data();
    let amps = state.amps_mut();
    let mut local = vec![C64::new(0.0, 0.0); qq];
    for base in 0..amps.len() {
        if !is_base(base) {
            continue;
        }
        for (l, &off) in local.iter_mut().zip(&offsets) {
            *l = amps[base + off];
        }
        for (row, &off) in offsets.iter().enumerate() {
            let r = &g[row * qq..(row + 1) * qq];
            amps[base + off] = r.iter().zip(&local).map(|(a, b)| a * b).sum();
        }
    }
    Ok(())
}

/// Random two-qubit gate commuting with `Z_1 + Z_2`.
///
/// Block-diagonal on `{|00>}, {|01>, |10>}, {|11>}`: a uniform phase on each
/// one-dimensional block and a Haar `U(2)` on the middle block.
pub fn sample_u1_gate<R: Rng + ?Sized>(rng: &mut R) -> Matrix {
    let tau = std::f64::consts::TAU;
    let p0 = C64::from_polar(1.0, rng.random::<f64>() * tau);
    let mid = haar_unitary(2, rng);
    let p3 = C64::from_polar(1.0, rng.random::<f64>() * tau);
    let mut g = Matrix::zeros(4);
    g.set(0, 0, p0);
    g.set(1, 1, mid.get(0, 0));
    g.set(1, 2, mid.get(0, 1));
    g.set(2, 1, mid.get(1, 0));
    g.set(2, 2, mid.get(1, 1));
    g.set(3, 3, p3);
    g
}

/// Half-filled charge configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargePattern {
    /// `|1010...>`.
    HomogeneousHalfFilling,
    /// `|1...10...0>`.
    StepFunction,
}

/// Computational-basis state with `n/2` charges (`|1>` digits).
pub fn make_charge_initial_state(n: usize, pattern: ChargePattern) -> Result<StateVector> {
    if n == 0 || n % 2 != 0 {
        return Err(input(format!("half filling needs an even number of sites, got n = {n}")));
    }
    let digits: Vec<usize> = match pattern {
        ChargePattern::HomogeneousHalfFilling => (0..n).map(|i| 1 - i % 2).collect(),
        ChargePattern::StepFunction => (0..n).map(|i| usize::from(i < n / 2)).collect(),
    };
    StateVector::basis(2, &digits)
}

/// Total charge of a qubit-chain configuration, counted as `|1>` digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChargeSector {
    pub total_charge: usize,
}

impl ChargeSector {
    pub fn of_basis_index(index: usize) -> Self {
        Self { total_charge: index.count_ones() as usize }
    }

    /// Weight of `state` outside this sector (qubits only).
    pub fn leakage(&self, state: &StateVector) -> f64 {
        state
            .amps()
            .iter()
            .enumerate()
            .filter(|(idx, _)| idx.count_ones() as usize != self.total_charge)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// `<sum_i Z_i>` with `Z|0> = |0>`, for qubit chains.
pub fn total_z(state: &StateVector) -> f64 {
    let n = state.n() as f64;
    state
        .amps()
        .iter()
        .enumerate()
        .map(|(idx, a)| a.norm_sqr() * (n - 2.0 * idx.count_ones() as f64))
        .sum()
}

/// Layer-by-layer evolution of one trial.
pub struct Brickwork {
    n: usize,
    q: usize,
    ensemble: GateEnsemble,
    state: StateVector,
    layers: usize,
    rng: TrialRng,
}

impl Brickwork {
    pub fn new(config: &CircuitConfig, rng: TrialRng) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            n: config.n,
            q: config.q,
            ensemble: config.ensemble,
            state: config.initial_state()?,
            layers: 0,
            rng,
        })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn layers_applied(&self) -> usize {
        self.layers
    }

    /// Samples and applies the next layer.
    pub fn step(&mut self) -> Result<()> {
        let parity = Parity::of_layer(self.layers);
        let layer = GateLayer::sample(self.n, self.q, parity, self.ensemble, &mut self.rng);
        layer.apply(&mut self.state)?;
        self.layers += 1;
        Ok(())
    }
}

/// Evolves one trial to `config.depth`, recording every region at layer 0
/// and after each layer divisible by `record_every`.
pub fn run_brickwork_with_rng(
    config: &CircuitConfig,
    rng: TrialRng,
    trial: u64,
    regions: &[Subregion],
    record_every: usize,
) -> Result<Vec<FluctuationSeries>> {
    if record_every == 0 {
        return Err(input("record_every must be at least 1"));
    }
    for r in regions {
        r.validate_for(config.n)?;
    }
    let hash = config.config_hash();
    let mut out: Vec<FluctuationSeries> =
        regions.iter().map(|_| FluctuationSeries::new(trial, hash)).collect();
    let mut circuit = Brickwork::new(config, rng)?;
    let record = |circuit: &Brickwork, out: &mut Vec<FluctuationSeries>| -> Result<()> {
        let t = circuit.layers_applied() as f64;
        for (series, region) in out.iter_mut().zip(regions) {
            series.push(t, subsystem_entropy_series_point(circuit.state(), region)?);
        }
        Ok(())
    };
    record(&circuit, &mut out)?;
    for t in 1..=config.depth {
        circuit.step()?;
        if t % record_every == 0 {
            record(&circuit, &mut out)?;
        }
    }
    Ok(out)
}

/// [`run_brickwork_with_rng`] with the trial stream derived from `config.master_seed`.
pub fn run_brickwork(
    config: &CircuitConfig,
    trial: u64,
    regions: &[Subregion],
    record_every: usize,
) -> Result<Vec<FluctuationSeries>> {
    let rng = StreamSeeder::new(config.master_seed, BRICKWORK_DOMAIN).stream(trial);
    run_brickwork_with_rng(config, rng, trial, regions, record_every)
}

/// Walk-time offset of a contiguous even-length region after `depth` layers.
///
/// `Some(0)` when the last layer's gates straddle both boundaries of the
/// region, `Some(1)` when they fall between gates (the last layer then acts
/// entirely inside `A` or `B`). `None` for depth 0 or regions the walker
/// picture does not cover.
pub fn boundary_exponent_offset(region: &Subregion, n: usize, depth: usize) -> Option<usize> {
    if depth == 0 || !region.is_contiguous() || region.len() % 2 != 0 || region.len() >= n || n % 2 != 0 {
        return None;
    }
    let sites = region.sites();
    // First site of the cyclic interval: the member whose left neighbour is outside.
    let start = *sites.iter().find(|&&s| !sites.contains(&((s + n - 1) % n)))?;
    let left = (start + n - 1) % n;
    let last_parity = (depth - 1) % 2;
    if left % 2 == last_parity {
        Some(0)
    } else {
        Some(1)
    }
}

/// Number of walker steps taken after `depth` layers (`depth - offset`).
pub fn effective_walk_time(region: &Subregion, n: usize, depth: usize) -> Option<usize> {
    if depth == 0 {
        return Some(0);
    }
    boundary_exponent_offset(region, n, depth).map(|o| depth - o)
}
