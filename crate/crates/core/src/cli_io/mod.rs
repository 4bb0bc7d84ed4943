//! Command-line plumbing: CSV ingestion, tensor files, synthetic data,
//! statistical self-checks and the benchmark harness.

pub mod bench;
pub mod cli;
pub mod csv;
pub mod generate;
pub mod stats;

use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::symtensor::BlockSymTensor;

pub use self::csv::{ingest_csv, parse_csv, write_csv};
pub use bench::{run_bench, BenchConfig, BenchReport, BenchRow, Engine};
pub use cli::{run, Cli};
pub use generate::{generate, Covariance, Distribution, GeneratorSpec};
pub use stats::{estimator_spread_test, std_bound, SpreadReport, SpreadSpec};

/// Writes a tensor as a JSON block document followed by a newline.
pub fn emit_tensor(t: &BlockSymTensor, path: &Path) -> Result<()> {
    let mut s = t.to_json()?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// Reads and validates a JSON block document.
pub fn load_tensor(path: &Path) -> Result<BlockSymTensor> {
    BlockSymTensor::from_json(&fs::read_to_string(path)?)
}
