//! Convex smooth-separable nonnegative matrix factorization.
//!
//! The crate solves the penalized self-dictionary model
//! `min_{X ∈ Ω} ‖M − MX‖_F² + μ‖diag(X)‖₂²` with a fast gradient method,
//! turns the solution into a factorization `M ≈ WH` (row selection,
//! spectral clustering, aggregation, NNLS), and ships the comparison
//! baselines (SPA, SSPA, FGNSR-style), synthetic benchmark generators and
//! the quality metrics used to evaluate them.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod postprocess;
pub mod rng;
pub mod solver;
pub mod synth;

pub use error::{CssnmfError, Result};
pub use matrix::DenseMatrix;
pub use rng::RngStream;
