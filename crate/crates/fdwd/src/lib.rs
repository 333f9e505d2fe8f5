//! Large-margin classification of functional observations, optionally with
//! additional scalar covariates.
//!
//! The classifier minimizes an average margin loss over decision rules of
//! the form `f(x, z) = α + ∫ x β + zᵀγ`, where the slope function `β` lives
//! in the second-order Sobolev space on `[0, 1]` and is regularized by its
//! integrated squared curvature. A representer argument reduces the infinite
//! dimensional problem to a finite linear system in the kernel sections at
//! the training curves, and a majorize–minimize iteration with a fixed
//! quadratic majorizer solves it with guaranteed descent. Cross-validation
//! over the loss shape `q` and penalty weight `λ` reuses one eigendecomposition
//! of the kernel Gram matrix across the whole tuning grid.
//!
//! Module map:
//! - [`curves`] — observation grids, sampled curves, quadrature, datasets
//! - [`sobolev`] — reproducing kernel, data matrices, eigendecomposition
//! - [`loss`] — the margin loss family `V_q` and its derivative
//! - [`solver`] — the majorize–minimize training iteration
//! - [`tuning`] — cross-validation with the factored fast inverse
//! - [`model`] — fitted-model type, prediction, serialization
//! - [`datagen`] — synthetic scenarios with ground-truth oracles
//! - [`benchmark`] — replicated tune/fit/test studies
//! - [`io`] — CSV and JSON file handling

pub mod benchmark;
pub mod curves;
pub mod datagen;
pub mod error;
pub mod io;
pub mod loss;
pub mod model;
pub mod sobolev;
pub mod solver;
pub mod tuning;

pub use benchmark::{run_benchmark, BenchmarkConfig, BenchmarkReport};
pub use curves::{Grid, LabeledDataset, SampledCurve};
pub use datagen::{bayes_error, generate, ScenarioSpec};
pub use error::{Error, Result};
pub use loss::LossParam;
pub use model::DwdModel;
pub use solver::{Problem, SolverConfig, SolverState};
pub use sobolev::KernelSystem;
pub use tuning::{cross_validate, CvResult, TuningGrid};
