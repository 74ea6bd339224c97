//! Configuration, reports and the command pipelines behind the `domlab` binary.

mod commands;
pub mod config;
pub mod report;

pub use commands::{execute, resolve_config, run, Command, Invocation, THREADS_ENV};
pub use config::RunConfig;
pub use report::Report;
