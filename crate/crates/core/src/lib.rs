//! Numerical laboratory for odd two-soliton collisions in one-dimensional
//! nonlinear Schrödinger equations `i u_t + u_xx + F'(|u|^2) u = 0` with a
//! polynomial `F`.
//!
//! The pieces build on each other: [`nonlinearity`] and [`profile`] give the
//! ground state, [`field`] the periodic spectral grid, [`linop`] the
//! linearization around the ground state, [`evolve`] the split-step flow,
//! [`ansatz`] the approximate two-soliton solutions, [`modulation`] the
//! parameter fits and [`experiments`] the collision runs built from all of it.

pub mod ansatz;
pub mod config;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod field;
pub mod linop;
pub mod modulation;
pub mod nonlinearity;
pub mod output;
pub mod profile;
pub mod stats;

pub use error::{Error, Result};
pub use field::{C64, ComplexField, SolitonParams, SpectralGrid};
pub use nonlinearity::PolynomialNonlinearity;
pub use profile::SolitonProfile;
