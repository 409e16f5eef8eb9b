//! Subcommand implementations, independent of argument parsing.

use std::path::{Path, PathBuf};

use log::info;
use serde_json::{json, Value};
use shg_core::forward::{BoundaryData, FrequencyTag, SensorArray};
use shg_core::imaging::{kernel_Q, kernel_R, BackprojectionBatch, FunctionalTag, ImageGrid};
use shg_core::medium::{MediumParams, MediumRealization};
use shg_core::specfun::{bessel_j0, bessel_j1, bessel_y0, bessel_y1};
use shg_core::stats::{predict, Predictors, Snr};
use shg_core::{Point2, Rect};

use crate::error::CliError;
use crate::io::{self, Header};
use crate::medium_gen;
use crate::montecarlo::{self, localize_all, Localization, NoiseLevel, SweepParam, SweepSpec};
use crate::scenario::ScenarioConfig;

/// Tolerance on sensor positions read back from data files.
const POSITION_TOLERANCE: f64 = 1e-9;

fn header(cfg: &ScenarioConfig, command: &str) -> Header {
    let s = &cfg.scenario;
    Header::new(&format!("shg {command}"))
        .text("")
        .text(&cfg.to_toml())
        .meta("seed", cfg.seed())
        .meta("medium_seed", s.medium.seed)
        .meta("noise_seed", s.noise.seed)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn data_file_name(tag: FrequencyTag, j: usize) -> String {
    format!("{}_j{j:03}.csv", tag.as_str())
}

fn snr_json(s: Snr) -> Value {
    match s {
        Snr::Finite(v) => json!(v),
        Snr::Unbounded => json!("unbounded"),
    }
}

pub fn predictors_json(p: &Predictors) -> Value {
    json!({
        "expect_I_peak": p.expect_I_peak,
        "expect_J_peak": p.expect_J_peak,
        "speckle_variance_I": p.speckle_variance_I,
        "snr_I_medium": snr_json(p.snr_I_medium),
        "snr_J_medium_lower_bound": snr_json(p.snr_J_medium_lower_bound),
        "snr_I_meas": snr_json(p.snr_I_meas),
        "snr_J_meas": snr_json(p.snr_J_meas),
        "c_bound": p.c_bound,
    })
}

/// Draws the medium, synthesizes both data sets and writes them to the output directory.
pub fn simulate(cfg: &ScenarioConfig) -> Result<Vec<PathBuf>, CliError> {
    let s = &cfg.scenario;
    montecarlo::warn_if_not_small(s);
    let ills = s.illuminations()?;
    let model = montecarlo::forward_model(s)?;
    let trial = montecarlo::synthesize(&model, s, &ills, NoiseLevel::Absolute(s.noise.sigma))?;

    let dir = cfg.output_dir();
    ensure_dir(dir)?;
    let h = header(cfg, "simulate");
    let mut written = Vec::new();
    let path = dir.join("medium.csv");
    io::write_medium_csv(&path, &h, &trial.medium)?;
    written.push(path);
    for data in [&trial.fundamental, &trial.harmonic] {
        for (j, d) in data.iter().enumerate() {
            let path = dir.join(data_file_name(d.frequency_tag, j));
            io::write_boundary_csv(&path, &h, d, &s.sensors)?;
            written.push(path);
        }
    }
    let path = dir.join("predictors.json");
    io::write_json(
        &path,
        &json!({ "seed": cfg.seed(), "predictors": predictors_json(&predict(s)) }),
    )?;
    written.push(path);
    info!("wrote {} files to {}", written.len(), dir.display());
    Ok(written)
}

fn load_datasets(
    dir: &Path,
    tag: FrequencyTag,
    sensors: &SensorArray,
    omega: f64,
) -> Result<Vec<BoundaryData>, CliError> {
    let mut out = Vec::new();
    for path in io::list_csv(dir, &format!("{}_", tag.as_str()))? {
        let file = io::read_boundary_csv(&path)?;
        if file.data.frequency_tag != tag {
            return Err(CliError::format(&path, format!("expected {} data", tag.as_str())));
        }
        if file.positions.len() != sensors.count() {
            return Err(CliError::format(
                &path,
                format!(
                    "{} sensors in file, {} in configuration",
                    file.positions.len(),
                    sensors.count()
                ),
            ));
        }
        let scale = sensors.radius.max(1.0);
        if let Some(k) = file
            .positions
            .iter()
            .zip(&sensors.positions)
            .position(|(a, b)| a.distance(*b) > POSITION_TOLERANCE * scale)
        {
            return Err(CliError::format(
                &path,
                format!("sensor {k} position differs from the configured array"),
            ));
        }
        let w = file.data.illumination.omega;
        if (w - omega).abs() > 1e-12 * omega {
            return Err(CliError::format(
                &path,
                format!("omega {w} differs from configured {omega}"),
            ));
        }
        out.push(file.data);
    }
    Ok(out)
}

fn localization_json(tag: FunctionalTag, image: &ImageGrid, loc: Option<Localization>) -> Value {
    let cell = image.grid.dx().max(image.grid.dy());
    match loc {
        Some(l) => json!({
            "functional": tag.as_str(),
            "z_est": [l.estimate.x, l.estimate.y],
            "peak_abs": l.peak,
            "error": l.error,
            "error_cells": l.error / cell,
        }),
        None => json!({ "functional": tag.as_str(), "z_est": null }),
    }
}

/// Images the data in `data_dir` with both functionals.
pub fn image(cfg: &ScenarioConfig, data_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let s = &cfg.scenario;
    let dir = cfg.output_dir();
    let h = header(cfg, "image").meta("data_dir", data_dir.display());
    let mut written = Vec::new();
    let mut summary = Vec::new();
    for (tag, freq) in [
        (FunctionalTag::I, FrequencyTag::Fundamental),
        (FunctionalTag::J, FrequencyTag::SecondHarmonic),
    ] {
        let data = load_datasets(data_dir, freq, &s.sensors, s.omega)?;
        if data.is_empty() {
            info!("no {} data in {}", freq.as_str(), data_dir.display());
            continue;
        }
        let mut batch = BackprojectionBatch::new(tag, s.omega, &s.sensors)?;
        batch.push_experiment(&data, &s.sensors)?;
        let image = montecarlo::image_all(&batch, &s.search_grid).remove(0);
        let loc = localize_all(std::slice::from_ref(&image), s.reflector.z_r)[0];
        ensure_dir(dir)?;
        let csv = dir.join(format!("image_{}.csv", tag.as_str()));
        io::write_image_csv(&csv, &h, &image)?;
        let pgm = dir.join(format!("image_{}.pgm", tag.as_str()));
        io::write_pgm(&pgm, &h, &image)?;
        written.extend([csv, pgm]);
        if let Some(l) = loc {
            println!(
                "{}: z_est = ({:.6}, {:.6}), |peak| = {:.6e}, distance to z_r = {:.6e}",
                tag.as_str(),
                l.estimate.x,
                l.estimate.y,
                l.peak,
                l.error
            );
        }
        summary.push(localization_json(tag, &image, loc));
    }
    if summary.is_empty() {
        return Err(CliError::format(data_dir, "no boundary data files found"));
    }
    let path = dir.join("localization.json");
    io::write_json(
        &path,
        &json!({ "z_r": [s.reflector.z_r.x, s.reflector.z_r.y], "images": summary }),
    )?;
    written.push(path);
    Ok(written)
}

/// Sweep parameters after command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepOverrides {
    pub param: Option<SweepParam>,
    pub values: Option<Vec<f64>>,
    pub trials: Option<usize>,
}

pub fn sweep_spec(cfg: &ScenarioConfig, o: &SweepOverrides) -> Result<SweepSpec, CliError> {
    let file = cfg.sweep();
    let param = o
        .param
        .or(file.map(|f| f.parameter))
        .ok_or_else(|| CliError::Usage("no sweep parameter: pass --sweep-param or add a [sweep] table".into()))?;
    let values = o.values.clone().or(file.map(|f| f.values.clone())).unwrap_or_default();
    if values.is_empty() {
        return Err(CliError::Usage(
            "no sweep values: pass --sweep-values or set sweep.values".into(),
        ));
    }
    let trials = o
        .trials
        .or(file.map(|f| f.trials))
        .unwrap_or(crate::scenario::DEFAULT_TRIALS);
    let spec = SweepSpec {
        param,
        values,
        trials,
        base: cfg.scenario.clone(),
        master_seed: cfg.seed(),
    };
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

pub fn sweep(cfg: &ScenarioConfig, o: &SweepOverrides) -> Result<Vec<PathBuf>, CliError> {
    let spec = sweep_spec(cfg, o)?;
    let report = montecarlo::run_sweep(&spec)?;
    let dir = cfg.output_dir();
    ensure_dir(dir)?;
    let h = header(cfg, "sweep");
    let csv = dir.join(format!("sweep_{}.csv", spec.param));
    io::write_report_csv(&csv, &h, &report)?;
    let js = dir.join(format!("sweep_{}.json", spec.param));
    let value = json!({
        "report": serde_json::to_value(&report).map_err(|e| CliError::format(&js, e.to_string()))?,
        "predictors": predictors_json(&predict(&cfg.scenario)),
    });
    io::write_json(&js, &value)?;
    for v in &report.per_value {
        println!(
            "{} = {:.6e}: error std I = {:.4e} ({:.2} cells), J = {:.4e} ({:.2} cells)",
            spec.param, v.parameter_value, v.error_std_i, v.error_std_i_cells, v.error_std_j, v.error_std_j_cells
        );
    }
    Ok(vec![csv, js])
}

/// One self-test outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn wronskian_check() -> Result<Check, CliError> {
    let mut worst = 0.0f64;
    for &x in &[0.1, 1.0, 5.0, 11.9, 12.1, 40.0, 250.0] {
        let w = bessel_j1(x)? * bessel_y0(x)? - bessel_j0(x)? * bessel_y1(x)?;
        let target = 2.0 / (std::f64::consts::PI * x);
        worst = worst.max((w / target - 1.0).abs());
    }
    Ok(check(
        "bessel wronskian",
        worst < 1e-10,
        format!("max relative error {worst:.2e}"),
    ))
}

fn zero_check() -> Result<Check, CliError> {
    let j0 = bessel_j0(2.404_825_557_695_773)?.abs();
    let j1 = bessel_j1(3.831_705_970_207_512)?.abs();
    let worst = j0.max(j1);
    Ok(check("bessel zeros", worst < 1e-12, format!("max |value| {worst:.2e}")))
}

fn kernel_checks() -> Result<Vec<Check>, CliError> {
    let omega = 8.0;
    let sensors = SensorArray::half_wavelength(Point2::ORIGIN, 20.0 * 2.0 * std::f64::consts::PI / omega, omega)?;
    let z = Point2::new(0.1, -0.2);
    let r = kernel_R(omega, z, z, &sensors);
    let target = omega / 8.0;
    let err_r = [
        (r[0][0].re / target - 1.0).abs(),
        (r[1][1].re / target - 1.0).abs(),
        r[0][1].norm() / target,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let q = kernel_Q(omega, z, z, &sensors);
    let err_q = (q.re * 8.0 * omega - 1.0).abs();
    Ok(vec![
        check(
            "kernel R(z,z) = (omega/8) I",
            err_r < 0.03,
            format!("relative error {err_r:.2e}"),
        ),
        check(
            "kernel Q(z,z) = 1/(8 omega)",
            err_q < 0.03,
            format!("relative error {err_q:.2e}"),
        ),
    ])
}

fn quadrature_check() -> Result<Check, CliError> {
    let omega = 4.0;
    let sensors = SensorArray::new(Point2::ORIGIN, 6.0, 16)?;
    let ill = shg_core::forward::Illumination::new(omega, 0.3, 1.0)?;
    let field = |n: usize| -> Result<Vec<shg_core::Complex>, CliError> {
        let params = MediumParams {
            sigma_mu: 0.0,
            l_mu: 0.5,
            alpha: shg_core::medium::DEFAULT_ALPHA,
            support_box: Rect::centered_square(1.0),
            grid_n: n,
            seed: 0,
        };
        let h = params.cell_size();
        let values = (0..n * n)
            .map(|k| {
                let x = params.support_box.min.x + ((k % n) as f64 + 0.5) * h;
                let y = params.support_box.min.y + ((k / n) as f64 + 0.5) * h;
                0.05 * (2.0 * x).sin() * (1.5 * y).cos()
            })
            .collect();
        let medium = MediumRealization::from_values(params, values)?;
        Ok(shg_core::forward::born_background_field(&medium, &ill, &sensors)?.samples)
    };
    let (a, b, c) = (field(16)?, field(32)?, field(64)?);
    let diff = |u: &[shg_core::Complex], v: &[shg_core::Complex]| {
        u.iter().zip(v).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
    };
    let ratio = diff(&a, &b) / diff(&b, &c);
    Ok(check(
        "midpoint quadrature order",
        (3.0..=5.0).contains(&ratio),
        format!("error ratio {ratio:.3}"),
    ))
}

fn medium_check() -> Result<Check, CliError> {
    let params = MediumParams {
        sigma_mu: 0.1,
        l_mu: 0.25,
        alpha: shg_core::medium::DEFAULT_ALPHA,
        support_box: Rect::centered_square(1.0),
        grid_n: 32,
        seed: 7,
    };
    let a = medium_gen::generate(&params)?;
    let b = medium_gen::generate(&params)?;
    let bounded = a.max_abs() < std::f64::consts::FRAC_PI_2;
    Ok(check(
        "medium reproducible and bounded",
        a == b && bounded,
        format!("max |mu| {:.3e}", a.max_abs()),
    ))
}

/// Runs the built-in numerical checks.
pub fn selftest() -> Result<Vec<Check>, CliError> {
    let mut out = vec![wronskian_check()?, zero_check()?];
    out.extend(kernel_checks()?);
    out.push(quadrature_check()?);
    out.push(medium_check()?);
    Ok(out)
}
