//! Fast, excitation-free transport of a one-dimensional Bose–Einstein
//! condensate in a moving harmonic trap.
//!
//! The crate is organised bottom-up:
//!
//! * [`units`] and [`grid`] hold the physical parameters, the conversion to
//!   oscillator units and the spatial containers.
//! * [`trajectory`] is the time-parametrised path type shared by every
//!   designer.
//! * [`design`] builds the direct, inverse-engineered and compensating-force
//!   protocols and integrates the classical centre-of-mass response.
//! * [`control`] has the closed-form bang-bang minimum-time protocols.
//! * [`groundstate`] relaxes the stationary Gross–Pitaevskii equation.
//! * [`dynamics`] propagates the time-dependent equation with a split-step
//!   Fourier scheme and evaluates fidelities and energies.
//! * [`noise`] samples white trap-position noise and averages the resulting
//!   fidelity.
//!
//! All numerics inside [`groundstate`], [`dynamics`] and [`noise`] use
//! oscillator units: lengths in `a0 = sqrt(hbar / (m omega0))`, times in
//! `1 / omega0`, energies in `hbar omega0`. The trajectory designers are
//! unit-agnostic and accept any consistent set of units.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod design;
pub mod dynamics;
mod error;
pub mod grid;
pub mod groundstate;
pub mod io;
pub mod noise;
pub mod par;
pub mod spectral;
pub mod trajectory;
pub mod units;

pub use error::{Error, Result};
pub use grid::{Grid1D, WaveFunction};
pub use trajectory::{Sample, Trajectory};
pub use units::{TrapConfig, Unit};
