//! Experiment runner for `emlab-core`: JSON configs, the built-in
//! experiments, CSV traces and JSON summaries.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod output;

use std::path::Path;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use experiments::{run_experiment, ExperimentOutput};

/// Loads the config for `experiment` (defaults when `config` is `None`),
/// runs it and writes `trace.csv` and `summary.json` into `out_dir`.
pub fn run_to_dir(
    experiment: &str,
    config: Option<&Path>,
    out_dir: &Path,
) -> Result<ExperimentOutput> {
    let cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            ExperimentConfig::from_json(experiment, &text)?
        }
        None => ExperimentConfig::default_for(experiment)?,
    };
    let out = run_experiment(&cfg)?;
    output::write_outputs(out_dir, &out.runs, &out.summary)?;
    Ok(out)
}
