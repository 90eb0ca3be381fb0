//! Numerical toolkit for non-Hermitian Hamiltonians with real spectra.
//!
//! The crate computes spectra of one-dimensional Hamiltonians on finite-difference
//! grids or in a truncated oscillator basis, builds the metric operator η that makes
//! the eigenstates orthonormal, the map T with T†T = η, and the canonical pair
//! x^c = T⁻¹xT, p^c = T⁻¹pT. Every claim about Hermiticity, commutators and
//! unitarity can then be checked as a matrix residual.
//!
//! Module layout:
//!
//! * [`numerics`]: grids, Hermite functions, quadrature and the dense eigensolver.
//! * [`operators`]: symbolic operators and their matrix representations.
//! * [`hilbert`]: inner products, metrics and unitarizing maps.
//! * [`canonical`]: similarity transforms, canonical pairs and Hermiticity reports.
//! * [`models`]: built-in Hamiltonians and the expression parser.
//! * [`evolution`]: spectral time propagation with norm tracking.

pub mod canonical;
pub mod error;
pub mod evolution;
pub mod hilbert;
pub mod models;
pub mod numerics;
pub mod operators;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = ndarray::Array2<C64>;
/// Dense complex vector.
pub type CVector = ndarray::Array1<C64>;
