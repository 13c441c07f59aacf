//! Numerical core for merged-element transmon ("mergemon") analysis.
//!
//! The crate is `no_std` (it needs `alloc`) and covers:
//!
//! - [`qubit`]: charge-basis diagonalization, anharmonicity, charge dispersion
//!   and the inverse fit from measured observables.
//! - [`cqed`]: the generalized Jaynes-Cummings system and dispersive shifts.
//! - [`dynamics`]: rotating-frame drive Hamiltonian, Lindblad steady states
//!   and two-tone spectroscopy sweeps.
//! - [`fields`]: an axisymmetric finite-volume electrostatic solver for the
//!   trilayer junction and its participation ratios.
//! - [`loss`]: participation-ratio T1 budgets and geometry sweeps.
//! - [`design`]: junction geometry to circuit parameters.
//!
//! All energies are frequencies in GHz (E/h), times are in ns unless a field
//! name says otherwise, and lengths are in nm.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod consts;
pub mod cqed;
pub mod design;
pub mod dynamics;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod loss;
mod math;
pub mod qubit;

pub use error::{Error, Result};

/// Complex scalar used for all Hamiltonians and density matrices.
pub type C64 = nalgebra::Complex<f64>;
