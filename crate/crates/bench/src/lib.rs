//! Experiment harness for the combinatorial pure exploration library:
//! TOML configs, seeded parallel trials, CSV/JSONL output and audits.

pub mod audit;
pub mod config;
pub mod error;
pub mod harness;

pub use config::ExperimentConfig;
pub use error::{BenchError, Result};
