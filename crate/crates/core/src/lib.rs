//! Gridless super-resolution line spectral estimation.
//!
//! The signal model is a sum of complex sinusoids observed on a random subset
//! of sample times. Recovery treats the dictionary frequencies as learnable
//! parameters and alternates a weighted minimum-norm signal update with a
//! gradient search over the frequencies, under a log-sum sparsity penalty
//! minimized by majorization-minimization.
//!
//! Module map:
//!
//! - [`model`]: ground-truth spectra, synthesis, sampling patterns.
//! - [`dictionary`]: parametric atoms, weighted Gram matrices and their derivatives.
//! - [`solver`]: the reweighted MM solver.
//! - [`baseline`]: fixed-grid reweighted solver and oracle least squares.
//! - [`metrics`]: RSNR, detection, and trial success.
//! - [`harness`]: Monte Carlo experiments and report emission.

pub mod baseline;
pub mod dictionary;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod solver;

pub use num_complex::Complex64;

pub use dictionary::{Dict, FreqGrid};
pub use error::{Error, Result};
pub use metrics::TrialResult;
pub use model::{FullSignal, Instance, LineSpectrum, Measurement, SampleSet};
pub use solver::{IterationRecord, SolveOutcome, SolverConfig, SolverState, Weights};

/// Two pi.
pub const TAU: f64 = std::f64::consts::TAU;
