//! Simulation, imaging and Monte Carlo driver for second-harmonic
//! reflector localization in random media, built on `shg-core`.

pub mod commands;
pub mod error;
pub mod io;
pub mod medium_gen;
pub mod montecarlo;
pub mod scenario;

pub use error::{CliError, ConfigError};
pub use scenario::{parse_config, ScenarioConfig};

/// Reads and parses a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(parse_config(&text)?)
}
