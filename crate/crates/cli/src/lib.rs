//! Command-line front end for the `pconvex` library: problem files, report
//! tables, seeded sweeps and SVG gap plots.

pub mod args;
pub mod error;
pub mod plot;
pub mod problem;
pub mod run;
pub mod sweep;
pub mod table;

pub use error::CliError;
pub use problem::ProblemFile;
pub use run::{execute, run_cli, run_from_env, Report};
