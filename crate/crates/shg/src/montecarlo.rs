//! Monte Carlo experiments over medium and measurement noise.
//!
//! Every trial draws its randomness from `derive_seed(master, &[value, trial])`
//! and results are reduced in trial order, so reports do not depend on the
//! thread count.

use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use shg_core::forward::{add_measurement_noise, BoundaryData, ForwardModel, Illumination, NoiseModel};
use shg_core::imaging::{localize, BackprojectionBatch, FunctionalTag, ImageGrid, SearchGrid};
use shg_core::medium::MediumRealization;
use shg_core::seed::derive_seed;
use shg_core::stats::Scenario;
use shg_core::{Complex, Error, Point2, Result};

use crate::medium_gen;
use crate::scenario::{MEDIUM_STREAM, NOISE_STREAM};

/// Search points imaged per parallel task.
const POINT_CHUNK: usize = 256;
/// Noise trials held in memory at once.
const NOISE_CHUNK: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Standard deviation `σ_μ` of the medium.
    MediumNoise,
    /// Reflector volume `δ²|B|`.
    Volume,
    /// Measurement noise level relative to the norm of the noiseless data;
    /// the medium is switched off.
    MeasurementNoise,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::MediumNoise => "medium_noise",
            SweepParam::Volume => "volume",
            SweepParam::MeasurementNoise => "measurement_noise",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "medium_noise" => Ok(SweepParam::MediumNoise),
            "volume" => Ok(SweepParam::Volume),
            "measurement_noise" => Ok(SweepParam::MeasurementNoise),
            _ => Err(format!(
                "unknown sweep parameter {s:?} (expected medium_noise, volume or measurement_noise)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub trials: usize,
    pub base: Scenario,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Configuration("sweep needs at least one value".into()));
        }
        if self.values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Configuration("sweep values must be finite and >= 0".into()));
        }
        if self.trials < 2 {
            return Err(Error::Configuration("sweep needs at least 2 trials per value".into()));
        }
        self.base.validate()
    }

    /// Base scenario with the swept parameter set to `value`.
    pub fn scenario_at(&self, value: f64) -> Scenario {
        let mut s = self.base.clone();
        match self.param {
            SweepParam::MediumNoise => s.medium.sigma_mu = value,
            SweepParam::Volume => s.reflector.delta = (value / s.reflector.shape_area).sqrt(),
            SweepParam::MeasurementNoise => {
                s.medium.sigma_mu = 0.0;
                s.noise.sigma = value;
            }
        }
        s
    }

    fn noise_level(&self, s: &Scenario) -> NoiseLevel {
        match self.param {
            SweepParam::MeasurementNoise => NoiseLevel::RelativeToNorm(s.noise.sigma),
            _ => NoiseLevel::Absolute(s.noise.sigma),
        }
    }
}

/// How the measurement noise standard deviation is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseLevel {
    Absolute(f64),
    /// Fraction of the Euclidean norm of a noiseless sample vector, averaged
    /// in quadrature over the illuminations, at each frequency.
    RelativeToNorm(f64),
}

/// Synthetic data of one experiment.
#[derive(Debug, Clone)]
pub struct Trial {
    pub medium: MediumRealization,
    pub fundamental: Vec<BoundaryData>,
    pub harmonic: Vec<BoundaryData>,
}

/// `base` with medium and noise seeds derived from `trial_seed`.
pub fn trial_scenario(base: &Scenario, trial_seed: u64) -> Scenario {
    let mut s = base.clone();
    s.medium.seed = derive_seed(trial_seed, &[MEDIUM_STREAM]);
    s.noise.seed = derive_seed(trial_seed, &[NOISE_STREAM]);
    s
}

fn norm_all(data: &[BoundaryData]) -> f64 {
    let sum: f64 = data.iter().flat_map(|d| &d.samples).map(|v| v.norm_sqr()).sum();
    if data.is_empty() {
        0.0
    } else {
        (sum / data.len() as f64).sqrt()
    }
}

fn add_noise(data: &mut [BoundaryData], sigma: f64, seed: u64, stream: u64, s: &Scenario) {
    if sigma == 0.0 {
        return;
    }
    // The array is laid out for the fundamental wavelength at both frequencies.
    let wavelength = s.wavelength();
    for (j, d) in data.iter_mut().enumerate() {
        let noise = NoiseModel {
            sigma,
            seed: derive_seed(seed, &[stream, j as u64]),
        };
        *d = add_measurement_noise(d, &noise, &s.sensors, wavelength);
    }
}

/// Medium draw, forward data and measurement noise for scenario `s`, using
/// `s.medium.seed` and `s.noise.seed`.
pub fn synthesize(model: &ForwardModel, s: &Scenario, ills: &[Illumination], noise: NoiseLevel) -> Result<Trial> {
    let medium = medium_gen::generate(&s.medium)?;
    let (mut fundamental, mut harmonic) = model.simulate(&medium, &s.reflector, ills)?;
    let (sf, sh) = match noise {
        NoiseLevel::Absolute(sigma) => (sigma, sigma),
        NoiseLevel::RelativeToNorm(r) => (r * norm_all(&fundamental), r * norm_all(&harmonic)),
    };
    add_noise(&mut fundamental, sf, s.noise.seed, 0, s);
    add_noise(&mut harmonic, sh, s.noise.seed, 1, s);
    Ok(Trial {
        medium,
        fundamental,
        harmonic,
    })
}

pub fn forward_model(s: &Scenario) -> Result<ForwardModel> {
    ForwardModel::new(&s.medium, s.omega, s.reflector.z_r, &s.sensors)
}

pub fn warn_if_not_small(s: &Scenario) {
    let kd = s.reflector.delta * s.omega;
    if kd > 0.5 {
        warn!("delta * omega = {kd:.3} is not small; the small-volume expansion may be inaccurate");
    }
}

/// Images every experiment over `grid`; search points are split across threads.
pub fn image_all(batch: &BackprojectionBatch, grid: &SearchGrid) -> Vec<ImageGrid> {
    let ne = batch.experiments();
    let points: Vec<Point2> = (0..grid.len()).map(|k| grid.point_at(k)).collect();
    let mut values = vec![Complex::new(0.0, 0.0); points.len() * ne];
    values
        .par_chunks_mut(POINT_CHUNK * ne.max(1))
        .zip(points.par_chunks(POINT_CHUNK))
        .for_each(|(out, pts)| batch.evaluate_points(pts, out));
    batch.split_images(grid, &values)
}

fn batch_for(tag: FunctionalTag, s: &Scenario, trials: &[Trial]) -> Result<BackprojectionBatch> {
    let mut batch = BackprojectionBatch::new(tag, s.omega, &s.sensors)?;
    for t in trials {
        let data = match tag {
            FunctionalTag::I => &t.fundamental,
            FunctionalTag::J => &t.harmonic,
        };
        batch.push_experiment(data, &s.sensors)?;
    }
    Ok(batch)
}

/// Localization outcome of one image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Localization {
    pub estimate: Point2,
    pub peak: f64,
    pub error: f64,
}

pub fn localize_all(images: &[ImageGrid], z_r: Point2) -> Vec<Option<Localization>> {
    images
        .iter()
        .map(|img| {
            localize(img).ok().map(|(p, m)| Localization {
                estimate: p,
                peak: m,
                error: p.distance(z_r),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueReport {
    pub parameter_value: f64,
    pub trials_used: usize,
    pub failures_i: usize,
    pub failures_j: usize,
    pub error_std_i: f64,
    pub error_std_j: f64,
    pub error_std_i_cells: f64,
    pub error_std_j_cells: f64,
    pub mean_error_i: f64,
    pub mean_error_j: f64,
    pub mean_peak_i: f64,
    pub mean_peak_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub parameter: SweepParam,
    pub values: Vec<f64>,
    pub trials_per_value: usize,
    pub master_seed: u64,
    /// Search-grid spacing used to express errors in cells.
    pub grid_cell: f64,
    pub per_value: Vec<ValueReport>,
}

/// Sample mean and standard deviation (`n − 1` normalization).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

struct Summary {
    failures: usize,
    mean_error: f64,
    error_std: f64,
    mean_peak: f64,
}

fn summarize(locs: &[Option<Localization>]) -> Summary {
    let ok: Vec<&Localization> = locs.iter().flatten().collect();
    let errors: Vec<f64> = ok.iter().map(|l| l.error).collect();
    let peaks: Vec<f64> = ok.iter().map(|l| l.peak).collect();
    let (mean_error, error_std) = mean_std(&errors);
    Summary {
        failures: locs.len() - ok.len(),
        mean_error,
        error_std,
        mean_peak: mean_std(&peaks).0,
    }
}

/// Runs the sweep; localization failures are counted, not fatal.
pub fn run_sweep(spec: &SweepSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let base = &spec.base;
    let ills = base.illuminations()?;
    let model = forward_model(base)?;
    let grid = base.search_grid;
    let cell = grid.dx().max(grid.dy());
    let mut per_value = Vec::with_capacity(spec.values.len());
    for (vi, &value) in spec.values.iter().enumerate() {
        let s = spec.scenario_at(value);
        warn_if_not_small(&s);
        let level = spec.noise_level(&s);
        let trials: Vec<Trial> = (0..spec.trials)
            .into_par_iter()
            .map(|t| {
                let ts = trial_scenario(&s, derive_seed(spec.master_seed, &[vi as u64, t as u64]));
                synthesize(&model, &ts, &ills, level)
            })
            .collect::<Result<_>>()?;
        let z_r = s.reflector.z_r;
        let loc_i = localize_all(&image_all(&batch_for(FunctionalTag::I, &s, &trials)?, &grid), z_r);
        let loc_j = localize_all(&image_all(&batch_for(FunctionalTag::J, &s, &trials)?, &grid), z_r);
        let (a, b) = (summarize(&loc_i), summarize(&loc_j));
        info!(
            "{} = {value:e}: error std I = {:.4e}, J = {:.4e}",
            spec.param, a.error_std, b.error_std
        );
        per_value.push(ValueReport {
            parameter_value: value,
            trials_used: spec.trials,
            failures_i: a.failures,
            failures_j: b.failures,
            error_std_i: a.error_std,
            error_std_j: b.error_std,
            error_std_i_cells: a.error_std / cell,
            error_std_j_cells: b.error_std / cell,
            mean_error_i: a.mean_error,
            mean_error_j: b.mean_error,
            mean_peak_i: a.mean_peak,
            mean_peak_j: b.mean_peak,
        });
    }
    Ok(ExperimentReport {
        parameter: spec.param,
        values: spec.values.clone(),
        trials_per_value: spec.trials,
        master_seed: spec.master_seed,
        grid_cell: cell,
        per_value,
    })
}

/// Monte Carlo moments of `I(z_r)` and `J(z_r)` at the true reflector position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakStatistics {
    pub mean_i: Complex,
    pub var_i: f64,
    pub mean_j: Complex,
    pub var_j: f64,
    pub trials: usize,
}

fn complex_moments(xs: &[Complex]) -> (Complex, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<Complex>() / n;
    let var = xs.iter().map(|x| (x - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Medium draws come in antithetic pairs `(μ, −μ)`: trial `2k` uses the
/// `k`-th draw and trial `2k + 1` its negative. Both estimators stay
/// unbiased; the part of the data linear in `μ` cancels within each pair.
pub fn estimate_peak_statistics(s: &Scenario, n_trials: usize, master_seed: u64) -> Result<PeakStatistics> {
    if n_trials < 30 {
        return Err(Error::Configuration(format!(
            "peak statistics need >= 30 trials (got {n_trials})"
        )));
    }
    s.validate()?;
    let ills = s.illuminations()?;
    let model = forward_model(s)?;
    let pairs = n_trials.div_ceil(2);
    let trials: Vec<Trial> = (0..pairs)
        .into_par_iter()
        .map(|k| -> Result<Vec<Trial>> {
            let ts = trial_scenario(s, derive_seed(master_seed, &[k as u64]));
            let medium = medium_gen::generate(&ts.medium)?;
            let mut out = Vec::with_capacity(2);
            for m in [medium.clone(), medium.scaled(-1.0)] {
                let (fundamental, harmonic) = model.simulate(&m, &ts.reflector, &ills)?;
                out.push(Trial {
                    medium: m,
                    fundamental,
                    harmonic,
                });
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .take(n_trials)
        .collect();
    let z = s.reflector.z_r;
    let mut vi = vec![Complex::new(0.0, 0.0); trials.len()];
    let mut vj = vi.clone();
    batch_for(FunctionalTag::I, s, &trials)?.evaluate_point(z, &mut vi);
    batch_for(FunctionalTag::J, s, &trials)?.evaluate_point(z, &mut vj);
    let (mean_i, var_i) = complex_moments(&vi);
    let (mean_j, var_j) = complex_moments(&vj);
    Ok(PeakStatistics {
        mean_i,
        var_i,
        mean_j,
        var_j,
        trials: trials.len(),
    })
}

/// Empirical `Var I(z_r)` under measurement noise of standard deviation
/// `sigma` alone (`μ ≡ 0`), with `n_illuminations` uniformly spread angles.
pub fn measurement_noise_variance(
    s: &Scenario,
    sigma: f64,
    n_illuminations: usize,
    trials: usize,
    master_seed: u64,
) -> Result<f64> {
    if trials < 2 {
        return Err(Error::Configuration("need at least 2 trials".into()));
    }
    let mut s = s.clone();
    s.medium.sigma_mu = 0.0;
    s.n_illuminations = n_illuminations;
    let ills = s.illuminations()?;
    let model = forward_model(&s)?;
    let clean = medium_gen::generate(&s.medium)?;
    let (fundamental, _) = model.simulate(&clean, &s.reflector, &ills)?;
    let starts: Vec<usize> = (0..trials).step_by(NOISE_CHUNK).collect();
    let chunks: Vec<Vec<Complex>> = starts
        .into_par_iter()
        .map(|start| -> Result<Vec<Complex>> {
            let end = (start + NOISE_CHUNK).min(trials);
            let mut batch = BackprojectionBatch::new(FunctionalTag::I, s.omega, &s.sensors)?;
            for t in start..end {
                let mut data = fundamental.clone();
                add_noise(&mut data, sigma, derive_seed(master_seed, &[t as u64]), 0, &s);
                batch.push_experiment(&data, &s.sensors)?;
            }
            let mut values = vec![Complex::new(0.0, 0.0); end - start];
            batch.evaluate_point(s.reflector.z_r, &mut values);
            Ok(values)
        })
        .collect::<Result<_>>()?;
    Ok(complex_moments(&chunks.concat()).1)
}
