//! Experiment runner for the `condexp` estimators: configuration, CSV tables,
//! the per-experiment runs and curve comparison.

pub mod compare;
pub mod config;
pub mod error;
pub mod run;
pub mod table;

use std::path::Path;

pub use compare::{compare, CompareSpec, Interval, Metric};
pub use config::{Experiment, GridSpec, RunConfig};
pub use error::{CliError, CliResult};
pub use run::{execute, run, RunOutput};
pub use table::Table;

/// Defaults for `experiment`, then the config file, then `overrides` in order.
pub fn resolve_config(
    experiment: Experiment,
    config_file: Option<&Path>,
    overrides: &[(String, String)],
) -> CliResult<RunConfig> {
    let mut config = RunConfig::defaults(experiment);
    if let Some(path) = config_file {
        config.apply_file(path)?;
    }
    for (key, value) in overrides {
        config.set(key, value)?;
    }
    config.validate()?;
    Ok(config)
}
