//! Configuration, pipelines and reports behind the `dioph` command.

pub mod config;
pub mod run;

pub use config::RunConfig;
pub use run::RunReport;
