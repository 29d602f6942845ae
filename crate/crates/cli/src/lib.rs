//! Command-line front end: curvature estimation, splitting, training,
//! random-search tuning, evaluation and reporting.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;

pub use app::run;
pub use config::{CPolicy, RunConfig};
pub use error::{CliError, CliResult};
