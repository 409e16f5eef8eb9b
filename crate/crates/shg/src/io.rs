//! CSV, PGM and JSON output, and reading boundary data back.
//!
//! Every file starts with `#` comment lines holding the resolved scenario and
//! seeds. Lines of the form `# @key = value` carry machine-readable metadata.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use shg_core::forward::{BoundaryData, FrequencyTag, Illumination, SensorArray};
use shg_core::imaging::ImageGrid;
use shg_core::medium::MediumRealization;
use shg_core::{Complex, Point2};

use crate::error::CliError;
use crate::montecarlo::ExperimentReport;

/// Comment block prepended to every output file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    lines: Vec<String>,
}

impl Header {
    pub fn new(title: &str) -> Self {
        Header {
            lines: vec![title.to_string()],
        }
    }

    pub fn text(mut self, block: &str) -> Self {
        self.lines.extend(block.lines().map(str::to_string));
        self
    }

    pub fn meta(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.lines.push(format!("@{key} = {value}"));
        self
    }

    fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        for l in &self.lines {
            if l.is_empty() {
                writeln!(w, "#")?;
            } else {
                writeln!(w, "# {l}")?;
            }
        }
        Ok(())
    }
}

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_csv(
    path: &Path,
    header: &Header,
    columns: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut out = create(path)?;
    header.write(&mut out).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    let map = |e: csv::Error| CliError::format(path, e.to_string());
    w.write_record(columns).map_err(map)?;
    for row in rows {
        w.write_record(&row).map_err(map)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_boundary_csv(
    path: &Path,
    header: &Header,
    data: &BoundaryData,
    sensors: &SensorArray,
) -> Result<(), CliError> {
    let il = &data.illumination;
    let header = header
        .clone()
        .meta("frequency_tag", data.frequency_tag.as_str())
        .meta("omega", fmt_f64(il.omega))
        .meta("theta_x", fmt_f64(il.theta[0]))
        .meta("theta_y", fmt_f64(il.theta[1]))
        .meta("u_i", fmt_f64(il.u_i));
    let rows = data
        .samples
        .iter()
        .zip(&sensors.positions)
        .enumerate()
        .map(|(s, (v, p))| vec![s.to_string(), fmt_f64(p.x), fmt_f64(p.y), fmt_f64(v.re), fmt_f64(v.im)]);
    write_csv(path, &header, &["sensor_index", "pos_x", "pos_y", "re", "im"], rows)
}

/// Boundary data file contents.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFile {
    pub data: BoundaryData,
    pub positions: Vec<Point2>,
}

fn metadata(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut meta = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.trim().strip_prefix('@').and_then(|kv| kv.split_once(" = ")) {
            meta.push((k.to_string(), v.to_string()));
        }
    }
    Ok(meta)
}

fn meta_value<'a>(path: &Path, meta: &'a [(String, String)], key: &str) -> Result<&'a str, CliError> {
    meta.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| CliError::format(path, format!("missing metadata line '# @{key} = ...'")))
}

fn parse_f64(path: &Path, what: &str, s: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::format(path, format!("{what}: cannot parse {s:?} as a number")))
}

pub fn read_boundary_csv(path: &Path) -> Result<BoundaryFile, CliError> {
    let meta = metadata(path)?;
    let tag_text = meta_value(path, &meta, "frequency_tag")?;
    let tag = FrequencyTag::parse(tag_text)
        .ok_or_else(|| CliError::format(path, format!("unknown frequency tag {tag_text:?}")))?;
    let omega = parse_f64(path, "omega", meta_value(path, &meta, "omega")?)?;
    let theta = [
        parse_f64(path, "theta_x", meta_value(path, &meta, "theta_x")?)?,
        parse_f64(path, "theta_y", meta_value(path, &meta, "theta_y")?)?,
    ];
    let u_i = parse_f64(path, "u_i", meta_value(path, &meta, "u_i")?)?;
    let illumination =
        Illumination::from_direction(omega, theta, u_i).map_err(|e| CliError::format(path, e.to_string()))?;

    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(f);
    let expected = ["sensor_index", "pos_x", "pos_y", "re", "im"];
    let headers = r.headers().map_err(|e| CliError::format(path, e.to_string()))?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(CliError::format(
            path,
            format!(
                "expected columns {expected:?}, found {:?}",
                headers.iter().collect::<Vec<_>>()
            ),
        ));
    }
    let mut samples = Vec::new();
    let mut positions = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(|e| CliError::format(path, e.to_string()))?;
        let index: usize = record[0]
            .parse()
            .map_err(|_| CliError::format(path, format!("row {row}: bad sensor index {:?}", &record[0])))?;
        if index != row {
            return Err(CliError::format(
                path,
                format!("row {row}: sensor index {index} out of order"),
            ));
        }
        positions.push(Point2::new(
            parse_f64(path, "pos_x", &record[1])?,
            parse_f64(path, "pos_y", &record[2])?,
        ));
        samples.push(Complex::new(
            parse_f64(path, "re", &record[3])?,
            parse_f64(path, "im", &record[4])?,
        ));
    }
    Ok(BoundaryFile {
        data: BoundaryData {
            illumination,
            frequency_tag: tag,
            samples,
        },
        positions,
    })
}

pub fn write_medium_csv(path: &Path, header: &Header, medium: &MediumRealization) -> Result<(), CliError> {
    let n = medium.grid_n();
    let p = &medium.params;
    let header = header
        .clone()
        .meta("grid_n", n)
        .meta("cell_size", fmt_f64(medium.cell_size()))
        .meta("sigma_mu", fmt_f64(p.sigma_mu))
        .meta("l_mu", fmt_f64(p.l_mu))
        .meta("seed", p.seed);
    let rows = (0..n * n).map(|k| {
        let (ix, iy) = (k % n, k / n);
        let c = medium.cell_center(ix, iy);
        vec![
            ix.to_string(),
            iy.to_string(),
            fmt_f64(c.x),
            fmt_f64(c.y),
            fmt_f64(medium.value(ix, iy)),
        ]
    });
    write_csv(path, &header, &["ix", "iy", "x", "y", "mu"], rows)
}

pub fn write_image_csv(path: &Path, header: &Header, image: &ImageGrid) -> Result<(), CliError> {
    let g = image.grid;
    let header = header
        .clone()
        .meta("functional", image.functional_tag.as_str())
        .meta("n_x", g.n_x)
        .meta("n_y", g.n_y);
    let rows = (0..g.len()).map(|k| {
        let (ix, iy) = (k % g.n_x, k / g.n_x);
        let p = g.point(ix, iy);
        let v = image.values[k];
        vec![
            ix.to_string(),
            iy.to_string(),
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(v.re),
            fmt_f64(v.im),
            fmt_f64(v.norm()),
        ]
    });
    write_csv(path, &header, &["ix", "iy", "x", "y", "re", "im", "abs"], rows)
}

/// 8-bit binary PGM of `|image|` scaled to its maximum; the top row is the largest `y`.
pub fn write_pgm(path: &Path, header: &Header, image: &ImageGrid) -> Result<(), CliError> {
    let g = image.grid;
    let max = image.max_abs();
    let mut out = create(path)?;
    let io = |e| CliError::io(path, e);
    writeln!(out, "P5").map_err(io)?;
    header.write(&mut out).map_err(io)?;
    writeln!(out, "{} {}\n255", g.n_x, g.n_y).map_err(io)?;
    let mut pixels = Vec::with_capacity(g.len());
    for iy in (0..g.n_y).rev() {
        for ix in 0..g.n_x {
            let v = if max > 0.0 {
                image.value(ix, iy).norm() / max
            } else {
                0.0
            };
            pixels.push((v * 255.0).round().clamp(0.0, 255.0) as u8);
        }
    }
    out.write_all(&pixels).map_err(io)?;
    out.flush().map_err(io)
}

pub fn write_report_csv(path: &Path, header: &Header, report: &ExperimentReport) -> Result<(), CliError> {
    let header = header
        .clone()
        .meta("parameter", report.parameter)
        .meta("trials_per_value", report.trials_per_value)
        .meta("master_seed", report.master_seed)
        .meta("grid_cell", fmt_f64(report.grid_cell));
    let rows = report.per_value.iter().map(|v| {
        vec![
            fmt_f64(v.parameter_value),
            v.trials_used.to_string(),
            v.failures_i.to_string(),
            v.failures_j.to_string(),
            fmt_f64(v.error_std_i),
            fmt_f64(v.error_std_j),
            fmt_f64(v.error_std_i_cells),
            fmt_f64(v.error_std_j_cells),
            fmt_f64(v.mean_error_i),
            fmt_f64(v.mean_error_j),
            fmt_f64(v.mean_peak_i),
            fmt_f64(v.mean_peak_j),
        ]
    });
    write_csv(
        path,
        &header,
        &[
            "parameter_value",
            "trials_used",
            "failures_i",
            "failures_j",
            "error_std_i",
            "error_std_j",
            "error_std_i_cells",
            "error_std_j_cells",
            "mean_error_i",
            "mean_error_j",
            "mean_peak_i",
            "mean_peak_j",
        ],
        rows,
    )
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::format(path, e.to_string()))?;
    writeln!(out).map_err(|e| CliError::io(path, e))?;
    out.flush().map_err(|e| CliError::io(path, e))
}

/// Sorted paths in `dir` whose file names start with `prefix` and end in `.csv`.
pub fn list_csv(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with(prefix) && name.ends_with(".csv") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
