//! Simulation and analysis kernels for subsystem entropy fluctuations after
//! thermalization.
//!
//! * [`qstate`]: state vectors, partial traces, entropy and distance kernels.
//! * [`haar`]: Haar sampling and closed-form Haar reference values.
//! * [`rqc`]: brickwork random circuits with Haar or U(1)-conserving gates.
//! * [`hamspin`]: exact-diagonalization dynamics of the mixed-field Ising chain.
//! * [`bounds`]: fluctuation bounds and random-walker combinatorics.
//! * [`fluxstats`]: fluctuation statistics over trials and time.

pub mod bounds;
pub mod error;
pub mod fluxstats;
pub mod haar;
pub mod hamspin;
pub mod matrix;
pub mod qstate;
pub mod rng;
pub mod rqc;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use qstate::{DensityMatrix, Observables, StateVector, Subregion, C64};
