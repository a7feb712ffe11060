//! Adaptive-optimistic follow-the-regularized-leader (FTRL) solvers.
//!
//! The crate provides the online update loop with per-coordinate adaptive
//! quadratic regularization (`aogd`), the scaled negative-entropy variant on
//! the simplex (`aoeg`), the composite/L1 path with exact soft-threshold
//! steps, randomized coordinate descent with importance sampling, and an
//! epoch-snapshot stochastic solver for regularized empirical risk
//! minimization. Every solver records enough per-round data to evaluate its
//! regret bound after the fact, and the [`oracle`] module holds independent
//! numeric verifiers used to certify the closed-form steps.

pub mod domains;
pub mod erm;
pub mod error;
pub mod ftrl;
pub mod oracle;
pub mod predictors;
pub mod rcd;
pub mod regularizers;
pub mod sampling;
pub mod stream;
pub mod vec_ops;

pub use domains::{Domain, Hyperrectangle, Simplex};
pub use error::{Error, Result};
pub use ftrl::{Algorithm, RegretReport, RoundRecord};
pub use predictors::PredictorKind;
pub use regularizers::{AoegRegState, AogdRegState, CompositeTerm};
pub use stream::LossFamily;
