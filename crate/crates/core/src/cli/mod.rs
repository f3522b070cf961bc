//! Configuration parsing and file output for the command-line driver.

pub mod commands;
pub mod config;
pub mod output;

pub use config::{load_config, parse_config, BenchSpec, MeshSpec, OutputSpec, RunConfig};
pub use output::{read_snapshot, write_outputs, Snapshot};
pub use commands::{execute_bench, execute_run, BenchKind, BenchOutcome};
