//! Dynamical phase transitions of the Dicke model.
//!
//! * [`classical`]: mean-field dynamics, phase classification, Lyapunov exponents.
//! * [`potential`]: effective one-dimensional potentials and critical couplings.
//! * [`quantum`]: exact evolution with an adaptive Fock cutoff.
//! * [`analysis`]: time averages, fluctuation measures, relaxation fits.
//! * [`sweep`]: resumable parameter grids.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod classical;
pub mod error;
pub mod io;
pub mod model;
pub mod parallel;
pub mod potential;
pub mod quantum;
pub mod sweep;

pub use error::{Error, Result};
