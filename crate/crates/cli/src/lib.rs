//! Configuration-driven front end for the ergodic transport solvers.

pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, Config};
pub use error::{ConfigError, RunError};
pub use report::Report;
pub use run::{run, Command, RunOptions, RunOutput};
