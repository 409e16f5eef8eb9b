//! Scenario files.
//!
//! TOML with one table per component. Everything except the reflector and
//! the illumination frequency has a default:
//!
//! ```toml
//! seed = 0
//! output_dir = "out"
//!
//! [medium]          # sigma_mu = 0.02, l_mu = 0.25, alpha = 0.45,
//!                   # support_box = [-1, -1, 1, 1], grid_n = 64
//! [reflector]       # required: z_r, delta, sigma_r, chi; shape = "disk"
//! [illumination]    # required: omega; u_i = 1, count = 8
//! [sensors]         # radius = "auto" (20 wavelengths), count = "auto" (half-wavelength)
//! [search_grid]     # n_x = n_y = 128, box = medium support
//! [noise]           # sigma = 0
//! [sweep]           # optional: parameter, values, trials
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use shg_core::forward::{NoiseModel, ReflectorSpec, SensorArray, DEFAULT_RADIUS_WAVELENGTHS};
use shg_core::imaging::SearchGrid;
use shg_core::medium::{MediumParams, DEFAULT_ALPHA};
use shg_core::seed::derive_seed;
use shg_core::stats::Scenario;
use shg_core::{Point2, Rect, Sym2};

use crate::error::ConfigError;
use crate::montecarlo::SweepParam;

/// Stream labels under the master seed.
pub const MEDIUM_STREAM: u64 = 0;
pub const NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub medium: MediumSection,
    pub reflector: ReflectorSection,
    pub illumination: IlluminationSection,
    #[serde(default)]
    pub sensors: SensorSection,
    #[serde(default)]
    pub search_grid: SearchGridSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumSection {
    pub sigma_mu: f64,
    pub l_mu: f64,
    pub alpha: f64,
    /// `[x_min, y_min, x_max, y_max]`
    pub support_box: [f64; 4],
    pub grid_n: usize,
}

impl Default for MediumSection {
    fn default() -> Self {
        MediumSection {
            sigma_mu: 0.02,
            l_mu: 0.25,
            alpha: DEFAULT_ALPHA,
            support_box: [-1.0, -1.0, 1.0, 1.0],
            grid_n: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectorSection {
    pub z_r: [f64; 2],
    pub delta: f64,
    pub sigma_r: f64,
    /// Symmetric 2×2 matrix, `[[χ11, χ12], [χ21, χ22]]`.
    #[serde(default)]
    pub chi: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_shape")]
    pub shape: String,
}

fn default_shape() -> String {
    "disk".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IlluminationSection {
    pub omega: f64,
    #[serde(default = "one")]
    pub u_i: f64,
    #[serde(default = "eight")]
    pub count: usize,
}

fn one() -> f64 {
    1.0
}

fn eight() -> usize {
    8
}

/// Either the literal string `"auto"` or an explicit value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AutoOr<T> {
    Value(T),
    Auto(Auto),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Auto {
    Auto,
}

impl<T> Default for AutoOr<T> {
    fn default() -> Self {
        AutoOr::Auto(Auto::Auto)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorSection {
    pub radius: AutoOr<f64>,
    pub count: AutoOr<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchGridSection {
    pub n_x: usize,
    pub n_y: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r#box: Option<[f64; 4]>,
}

impl Default for SearchGridSection {
    fn default() -> Self {
        SearchGridSection {
            n_x: 128,
            n_y: 128,
            r#box: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

/// Trials per sweep value when not configured.
pub const DEFAULT_TRIALS: usize = 120;

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// File contents with every `"auto"` resolved.
    pub file: ConfigFile,
    pub scenario: Scenario,
}

impl ScenarioConfig {
    pub fn seed(&self) -> u64 {
        self.file.seed
    }

    pub fn output_dir(&self) -> &std::path::Path {
        &self.file.output_dir
    }

    pub fn sweep(&self) -> Option<&SweepSection> {
        self.file.sweep.as_ref()
    }

    /// Replaces the master seed and the seeds derived from it.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.file.seed = seed;
        self.scenario.medium.seed = derive_seed(seed, &[MEDIUM_STREAM]);
        self.scenario.noise.seed = derive_seed(seed, &[NOISE_STREAM]);
        self
    }

    pub fn with_output_dir(mut self, dir: PathBuf) -> Self {
        self.file.output_dir = dir;
        self
    }

    /// Resolved configuration as TOML text.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("configuration is always serializable")
    }
}

/// Line (1-based) of the dotted `key` in `text`, if present.
pub fn key_line(text: &str, key: &str) -> Option<usize> {
    let root = toml::de::DeTable::parse(text).ok()?;
    let mut table = root.get_ref();
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        let (k, v) = table.get_key_value(part)?;
        if parts.peek().is_none() {
            return Some(text[..k.span().start].matches('\n').count() + 1);
        }
        match v.get_ref() {
            toml::de::DeValue::Table(t) => table = t,
            _ => return None,
        }
    }
    None
}

fn located(text: &str, key: &str, message: impl Into<String>) -> ConfigError {
    let line = key_line(text, key).or_else(|| key.split_once('.').and_then(|(s, _)| key_line(text, s)));
    ConfigError {
        key: Some(key.to_string()),
        line,
        message: message.into(),
    }
}

/// Dotted key named at the start of a core validation message, if any.
fn key_in(message: &str) -> Option<&str> {
    let first = message.split_whitespace().next()?;
    if first.contains('.') && first.chars().all(|c| c.is_ascii_alphanumeric() || c == '.' || c == '_') {
        return Some(first);
    }
    [
        ("sensor", "sensors.radius"),
        ("search grid", "search_grid.box"),
        ("reflector lies", "reflector.z_r"),
    ]
    .into_iter()
    .find(|(prefix, _)| message.starts_with(prefix))
    .map(|(_, key)| key)
}

fn from_core(text: &str, fallback: &str, err: shg_core::Error) -> ConfigError {
    let (key, message) = match &err {
        shg_core::Error::Domain {
            function,
            value,
            requirement,
        } if function.contains('.') => (function.to_string(), format!("{value} violates {requirement}")),
        shg_core::Error::Configuration(m) => (key_in(m).unwrap_or(fallback).to_string(), m.clone()),
        shg_core::Error::Resolution { .. } => ("medium.grid_n".to_string(), err.to_string()),
        _ => (fallback.to_string(), err.to_string()),
    };
    located(text, &key, message)
}

fn rect(b: [f64; 4]) -> Rect {
    Rect::new(b[0], b[1], b[2], b[3])
}

fn chi_matrix(text: &str, chi: &Option<Vec<Vec<f64>>>) -> Result<Sym2, ConfigError> {
    let rows = match chi {
        Some(rows) if !rows.is_empty() => rows,
        _ => return Err(located(text, "reflector.chi", "chi required for second-harmonic runs")),
    };
    if rows.len() != 2 || rows.iter().any(|r| r.len() != 2) {
        return Err(located(
            text,
            "reflector.chi",
            "chi must be a 2x2 matrix [[c11, c12], [c21, c22]]",
        ));
    }
    let off = rows[0][1];
    if (off - rows[1][0]).abs() > 1e-12 * off.abs().max(1.0) {
        return Err(located(text, "reflector.chi", "chi must be symmetric"));
    }
    Ok(Sym2::new(rows[0][0], off, rows[1][1]))
}

/// Parses and validates a scenario file.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut file: ConfigFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
        ConfigError {
            key: None,
            line,
            message: e.message().to_string(),
        }
    })?;

    let chi = chi_matrix(text, &file.reflector.chi)?;
    if file.reflector.shape != "disk" {
        return Err(located(
            text,
            "reflector.shape",
            format!(
                "unsupported shape {:?} (only \"disk\" has a closed-form polarization tensor)",
                file.reflector.shape
            ),
        ));
    }
    let omega = file.illumination.omega;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(located(
            text,
            "illumination.omega",
            format!("omega must be > 0 (got {omega})"),
        ));
    }
    if file.illumination.count == 0 {
        return Err(located(text, "illumination.count", "count must be >= 1"));
    }
    if !(file.noise.sigma >= 0.0 && file.noise.sigma.is_finite()) {
        return Err(located(
            text,
            "noise.sigma",
            format!("sigma must be >= 0 (got {})", file.noise.sigma),
        ));
    }
    if let Some(s) = &file.sweep {
        if s.values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(located(text, "sweep.values", "values must be finite and >= 0"));
        }
        if s.trials < 2 {
            return Err(located(text, "sweep.trials", "trials must be >= 2"));
        }
    }

    let support = rect(file.medium.support_box);
    let medium = MediumParams {
        sigma_mu: file.medium.sigma_mu,
        l_mu: file.medium.l_mu,
        alpha: file.medium.alpha,
        support_box: support,
        grid_n: file.medium.grid_n,
        seed: derive_seed(file.seed, &[MEDIUM_STREAM]),
    };
    medium.validate().map_err(|e| from_core(text, "medium", e))?;

    let reflector = ReflectorSpec::unit_disk(
        Point2::new(file.reflector.z_r[0], file.reflector.z_r[1]),
        file.reflector.delta,
        file.reflector.sigma_r,
        chi,
    );
    reflector.validate().map_err(|e| from_core(text, "reflector", e))?;

    let radius = match file.sensors.radius {
        AutoOr::Value(r) => r,
        AutoOr::Auto(_) => DEFAULT_RADIUS_WAVELENGTHS * 2.0 * PI / omega,
    };
    let sensors = match file.sensors.count {
        AutoOr::Value(n) => SensorArray::new(support.center(), radius, n),
        AutoOr::Auto(_) => SensorArray::half_wavelength(support.center(), radius, omega),
    }
    .map_err(|e| from_core(text, "sensors", e))?;
    file.sensors = SensorSection {
        radius: AutoOr::Value(radius),
        count: AutoOr::Value(sensors.count()),
    };

    let grid_box = file.search_grid.r#box.map(rect).unwrap_or(support);
    let search_grid = SearchGrid::new(grid_box, file.search_grid.n_x, file.search_grid.n_y)
        .map_err(|e| from_core(text, "search_grid", e))?;

    let scenario = Scenario {
        medium,
        reflector,
        omega,
        u_i: file.illumination.u_i,
        n_illuminations: file.illumination.count,
        sensors,
        search_grid,
        noise: NoiseModel {
            sigma: file.noise.sigma,
            seed: derive_seed(file.seed, &[NOISE_STREAM]),
        },
    };
    scenario.validate().map_err(|e| from_core(text, "reflector.z_r", e))?;
    Ok(ScenarioConfig { file, scenario })
}
