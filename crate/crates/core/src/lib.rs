//! Numerical certification of reflection positivity for lattice scalar
//! covariances and Euclidean Dirac propagators, Dirichlet/Neumann covariance
//! monotonicity, and the one-particle Osterwalder–Schrader quotient.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod clifford;
pub mod dirac;
pub mod error;
pub mod geometry;
pub mod gram;
pub mod linalg;
pub mod quadrature;
pub mod quantization;
pub mod scalar_rp;

pub use error::{Error, Result};
pub use gram::GramReport;
pub use linalg::{SolverConfig, C64};
