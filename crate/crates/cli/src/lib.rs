//! Run configurations, convergence studies and artifact output for the
//! `mlvms` solvers.

pub mod commands;
pub mod config;
mod error;
pub mod output;
pub mod study;

pub use config::{RunConfig, SolverKind};
pub use error::CliError;
pub use study::{estimate_optimal_ratio, fit_error_coefficients, ConvergenceRow, FitRow};
