//! Quantum-optical description of high harmonic generation.
//!
//! The crate follows the signal chain of a strongly driven atom:
//!
//! * [`dipole`] produces the dipole expectation value `<d(t)>` and, for
//!   finite-basis models, the transition dipoles `d_ij(t)`;
//! * [`field`] turns the dipole into per-mode coherent displacements, applies
//!   the harmonic-mode conditioning that yields optical cat states and builds
//!   the phase-averaged driving state;
//! * [`wigner`] evaluates Wigner functions and homodyne quadrature
//!   distributions;
//! * [`coherence`] computes first/second order correlation functions and the
//!   coherent/incoherent emission spectrum;
//! * [`squeezing`] evaluates the exact interaction commutator and a
//!   quadratic-order Gaussian propagator.
//!
//! Every closed-form path is paired with a truncated Fock space route in
//! [`statespace`] that serves as an independent check.
//!
//! Conventions: `hbar = 1`, atomic units for times and frequencies,
//! dimensionless quadratures `x = sqrt(2) Re(alpha)`, `p = sqrt(2) Im(alpha)`
//! with vacuum variance 1/2.

pub mod coherence;
pub mod dipole;
pub mod error;
pub mod field;
pub mod fock;
pub mod squeezing;
pub mod statespace;
pub mod wigner;

pub use error::{HhgError, Result};
pub use num_complex::Complex64 as C64;
