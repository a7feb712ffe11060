//! Experiment harness around the adaptive-optimistic FTRL solvers: seeded
//! loss-stream generators, baseline optimizers, an (algorithm x seed) grid
//! runner with JSON/CSV reports, and bound-verification suites.

pub mod baselines;
pub mod erm_data;
pub mod experiment;
pub mod report;
pub mod streams;
pub mod verify;
