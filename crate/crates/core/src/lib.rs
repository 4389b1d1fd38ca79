//! Off-grid direction-of-arrival estimation from a second-order Taylor
//! expansion of the array manifold.
//!
//! The crate is organised bottom-up:
//!
//! * [`array_model`] – sensor geometry, steering vectors and their
//!   derivatives, synthetic snapshots.
//! * [`dictionary`] – the uniform frequency grid and the derivative-augmented
//!   dictionaries `[A, A', A''/2]`.
//! * [`conic`] – a dense primal-dual interior-point solver for second-order
//!   cone programs.
//! * [`estimators`] – LASSO, neighbour-grid group LASSO and first/second order
//!   Taylor group LASSO, all lowered onto [`conic`].
//! * [`parallel`] – worker-count control for Monte Carlo loops.
//! * [`rip`] – Monte Carlo probe of the block restricted isometry constant.
//! * [`harness`] – RMSE / PCD sweeps, Cramér–Rao reference and timing probes.

pub mod array_model;
pub mod conic;
pub mod dictionary;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod parallel;
pub mod rip;
pub(crate) mod seeding;

pub use array_model::{ArrayGeometry, SourceScene, Snapshot};
pub use conic::{ConicProgram, SolverResult, SolverSettings, SolverStatus};
pub use dictionary::{DictionarySet, FrequencyGrid};
pub use estimators::{BlockSignal, EstimateResult, EstimateStatus, EstimatorConfig, Method};
pub use error::{Error, Result};


pub use num_complex::Complex64;
