//! Convergence-study harness: manufactured problems, error tables, and the
//! invariant checks exposed through the command line.

pub mod checks;
pub mod problem;
pub mod study;
pub mod table;

pub use checks::{run_checks, CheckOutcome};
pub use problem::ManufacturedProblem;
pub use study::{
    compute_errors, compute_errors_with_exactness, run_convergence_study, MeshFamily, StudyConfig,
};
pub use table::{ConvergenceRow, ConvergenceTable};
