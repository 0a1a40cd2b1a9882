//! Manufactured solutions, error metrics, condition-number probes and
//! convergence studies.

pub mod cases;
pub mod condition;
pub mod convergence;
pub mod metrics;

pub use cases::{builtin_case, builtin_cases, Fun1D, ManufacturedCase, SepField, SepTerm, CASE_NAMES};
pub use condition::{
    condition_number, condition_study, dense_condition_number, ConditionEntry, ConditionReport, OperatorKind,
};
pub use convergence::{evaluate, run_convergence, solve_case, ConvergenceStudy, ErrorReport, Failure, CSV_HEADER};
pub use metrics::{
    divergence_residuals, divergence_residuals_dense, sample_on, weighted_l2_error, weighted_l2_error_on,
    weighted_norm, DivergenceResiduals,
};
