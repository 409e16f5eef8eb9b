//! Backpropagation imaging functionals, their point-spread kernels and peak
//! localization.
//!
//! The angular integrals over illumination directions are replaced by
//! `(2π/n) Σ_j` over the `n` illuminations supplied with the data, and the
//! sensor integrals by the arc-length weights of the array.

#![allow(non_snake_case)]

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::forward::{BoundaryData, FrequencyTag, SensorArray};
use crate::geometry::{cis, CMat2, Complex, Point2, Rect, Sym2, ZERO};
use crate::green;

pub const MIN_SEARCH_POINTS: usize = 8;
pub const MIN_THETA_POINTS: usize = 16;

/// Regular lattice over `bbox`, edges included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    pub bbox: Rect,
    pub n_x: usize,
    pub n_y: usize,
}

impl SearchGrid {
    pub fn new(bbox: Rect, n_x: usize, n_y: usize) -> Result<Self> {
        if !bbox.is_valid() {
            return Err(Error::config("search grid box must have positive extent"));
        }
        if n_x < MIN_SEARCH_POINTS || n_y < MIN_SEARCH_POINTS {
            return Err(Error::config(alloc::format!(
                "search grid needs at least {MIN_SEARCH_POINTS} points per axis (got {n_x} x {n_y})"
            )));
        }
        Ok(SearchGrid { bbox, n_x, n_y })
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        self.bbox.width() / (self.n_x - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        self.bbox.height() / (self.n_y - 1) as f64
    }

    pub fn point(&self, ix: usize, iy: usize) -> Point2 {
        Point2::new(
            self.bbox.min.x + ix as f64 * self.dx(),
            self.bbox.min.y + iy as f64 * self.dy(),
        )
    }

    /// Lattice point `k` in row-major order (`k = iy * n_x + ix`).
    pub fn point_at(&self, k: usize) -> Point2 {
        self.point(k % self.n_x, k / self.n_x)
    }

    pub fn check_within(&self, region: &Rect) -> Result<()> {
        if region.contains_rect(&self.bbox) {
            Ok(())
        } else {
            Err(Error::config("search grid must lie inside the medium support box"))
        }
    }

    /// Distance expressed in lattice cells (the larger spacing).
    pub fn in_cells(&self, distance: f64) -> f64 {
        distance / libm::fmax(self.dx(), self.dy())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionalTag {
    I,
    J,
}

impl FunctionalTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FunctionalTag::I => "I",
            FunctionalTag::J => "J",
        }
    }

    fn frequency_tag(self) -> FrequencyTag {
        match self {
            FunctionalTag::I => FrequencyTag::Fundamental,
            FunctionalTag::J => FrequencyTag::SecondHarmonic,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    pub grid: SearchGrid,
    /// Row-major, `values[iy * n_x + ix]`.
    pub values: Vec<Complex>,
    pub functional_tag: FunctionalTag,
}

impl ImageGrid {
    pub fn value(&self, ix: usize, iy: usize) -> Complex {
        self.values[iy * self.grid.n_x + ix]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| libm::fmax(m, v.norm()))
    }
}

/// One backpropagated data row: a single illumination of one experiment.
#[derive(Debug, Clone)]
struct Row {
    experiment: usize,
    theta: [f64; 2],
    factor: f64,
}

/// Images many independent experiments over the same sensors at once.
///
/// Green's function columns are computed once per search point and shared
/// by every experiment. Results per experiment are identical to evaluating
/// [`functional_I`] or [`functional_J`] on that experiment alone.
#[derive(Debug, Clone)]
pub struct BackprojectionBatch {
    tag: FunctionalTag,
    omega: f64,
    positions: Vec<Point2>,
    rows: Vec<Row>,
    /// `w_s · sample`, row-major by data row.
    data: Vec<Complex>,
    experiments: usize,
}

impl BackprojectionBatch {
    /// `omega` is the illumination frequency for both functionals.
    pub fn new(tag: FunctionalTag, omega: f64, sensors: &SensorArray) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain {
                function: "BackprojectionBatch",
                value: omega,
                requirement: "omega > 0",
            });
        }
        Ok(BackprojectionBatch {
            tag,
            omega,
            positions: sensors.positions.clone(),
            rows: Vec::new(),
            data: Vec::new(),
            experiments: 0,
        })
    }

    pub fn tag(&self) -> FunctionalTag {
        self.tag
    }

    pub fn experiments(&self) -> usize {
        self.experiments
    }

    /// Adds one experiment (all its illuminations) and returns its index.
    pub fn push_experiment(&mut self, datasets: &[BoundaryData], sensors: &SensorArray) -> Result<usize> {
        if datasets.is_empty() {
            return Err(Error::config("an experiment needs at least one dataset"));
        }
        if sensors.positions != self.positions {
            return Err(Error::config("datasets must share the batch sensor array"));
        }
        let want = self.tag.frequency_tag();
        for d in datasets {
            if d.frequency_tag != want {
                return Err(Error::config(alloc::format!(
                    "functional {} needs {} data, got {}",
                    self.tag.as_str(),
                    want.as_str(),
                    d.frequency_tag.as_str()
                )));
            }
            if d.illumination.omega != self.omega {
                return Err(Error::config("datasets mix illumination frequencies"));
            }
            if d.samples.len() != self.positions.len() {
                return Err(Error::config(alloc::format!(
                    "dataset has {} samples for {} sensors",
                    d.samples.len(),
                    self.positions.len()
                )));
            }
        }
        let e = self.experiments;
        let factor = 2.0 * PI / datasets.len() as f64;
        for d in datasets {
            self.rows.push(Row {
                experiment: e,
                theta: d.illumination.theta,
                factor,
            });
            self.data
                .extend(d.samples.iter().zip(&sensors.weights).map(|(v, w)| v * *w));
        }
        self.experiments += 1;
        Ok(e)
    }

    /// Image values of every experiment at `z`, written to `out`
    /// (`out.len() == experiments()`).
    pub fn evaluate_point(&self, z: Point2, out: &mut [Complex]) {
        assert_eq!(out.len(), self.experiments);
        out.iter_mut().for_each(|v| *v = ZERO);
        let ns = self.positions.len();
        match self.tag {
            FunctionalTag::I => {
                let column: Vec<[Complex; 2]> = self
                    .positions
                    .iter()
                    .map(|&x| {
                        let g = green::value_gradient_unchecked(self.omega, z, x).1;
                        [g[0].conj(), g[1].conj()]
                    })
                    .collect();
                let inv = Complex::new(0.0, -1.0 / self.omega); // 1/(iω)
                for (k, row) in self.rows.iter().enumerate() {
                    let d = &self.data[k * ns..(k + 1) * ns];
                    let (mut ax, mut ay) = (ZERO, ZERO);
                    for (g, v) in column.iter().zip(d) {
                        ax += g[0] * v;
                        ay += g[1] * v;
                    }
                    let phase = cis(-self.omega * (row.theta[0] * z.x + row.theta[1] * z.y));
                    out[row.experiment] += phase * inv * (ax * row.theta[0] + ay * row.theta[1]) * row.factor;
                }
            }
            FunctionalTag::J => {
                let omega2 = 2.0 * self.omega;
                let column: Vec<Complex> = self
                    .positions
                    .iter()
                    .map(|&x| green::value_unchecked(omega2, x, z).conj())
                    .collect();
                for (k, row) in self.rows.iter().enumerate() {
                    let d = &self.data[k * ns..(k + 1) * ns];
                    let mut acc = ZERO;
                    for (g, v) in column.iter().zip(d) {
                        acc += g * v;
                    }
                    let phase = cis(-omega2 * (row.theta[0] * z.x + row.theta[1] * z.y));
                    out[row.experiment] += phase * acc * row.factor;
                }
            }
        }
    }

    /// Values at the given points, point-major: `out[p * experiments() + e]`.
    pub fn evaluate_points(&self, points: &[Point2], out: &mut [Complex]) {
        let ne = self.experiments;
        assert_eq!(out.len(), points.len() * ne);
        for (p, chunk) in points.iter().zip(out.chunks_mut(ne.max(1))) {
            self.evaluate_point(*p, chunk);
        }
    }

    /// Assembles per-experiment images from point-major values over `grid`.
    pub fn split_images(&self, grid: &SearchGrid, values: &[Complex]) -> Vec<ImageGrid> {
        let ne = self.experiments;
        assert_eq!(values.len(), grid.len() * ne);
        (0..ne)
            .map(|e| ImageGrid {
                grid: *grid,
                values: (0..grid.len()).map(|p| values[p * ne + e]).collect(),
                functional_tag: self.tag,
            })
            .collect()
    }

    /// Sequential evaluation over the whole grid, one image per experiment.
    pub fn images(&self, grid: &SearchGrid) -> Vec<ImageGrid> {
        let points: Vec<Point2> = (0..grid.len()).map(|k| grid.point_at(k)).collect();
        let mut values = vec![ZERO; points.len() * self.experiments];
        self.evaluate_points(&points, &mut values);
        self.split_images(grid, &values)
    }
}

fn single_image(
    tag: FunctionalTag,
    datasets: &[BoundaryData],
    sensors: &SensorArray,
    grid: &SearchGrid,
) -> Result<ImageGrid> {
    let first = datasets.first().ok_or_else(|| Error::config("no datasets to image"))?;
    let mut batch = BackprojectionBatch::new(tag, first.illumination.omega, sensors)?;
    batch.push_experiment(datasets, sensors)?;
    Ok(batch.images(grid).remove(0))
}

/// `I(z) = (2π/n) Σ_j Σ_s w_s (1/iω) e^{−iωθ_j·z} θ_jᵀ conj(∇_z G(x_s, z)) u_j(x_s)`.
pub fn functional_I(datasets: &[BoundaryData], sensors: &SensorArray, grid: &SearchGrid) -> Result<ImageGrid> {
    single_image(FunctionalTag::I, datasets, sensors, grid)
}

/// `J(z) = (2π/n) Σ_j Σ_s w_s v_j(x_s) conj(G₂(x_s, z)) e^{−2iωθ_j·z}`,
/// `G₂` at frequency `2ω`.
pub fn functional_J(datasets: &[BoundaryData], sensors: &SensorArray, grid: &SearchGrid) -> Result<ImageGrid> {
    single_image(FunctionalTag::J, datasets, sensors, grid)
}

/// `R(z₁, z₂) = Σ_s w_s conj(∇G(x_s, z₁)) ∇G(x_s, z₂)ᵀ`.
pub fn kernel_R(omega: f64, z1: Point2, z2: Point2, sensors: &SensorArray) -> CMat2 {
    let mut r = [[ZERO; 2]; 2];
    for (&x, &w) in sensors.positions.iter().zip(&sensors.weights) {
        let a = green::value_gradient_unchecked(omega, z1, x).1;
        let b = green::value_gradient_unchecked(omega, z2, x).1;
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] += a[i].conj() * b[j] * w;
            }
        }
    }
    r
}

/// `Q₂(x, z) = Σ_s w_s G₂(y_s, x) conj(G₂(y_s, z))` at frequency `2ω`.
pub fn kernel_Q(omega: f64, x: Point2, z: Point2, sensors: &SensorArray) -> Complex {
    let omega2 = 2.0 * omega;
    sensors
        .positions
        .iter()
        .zip(&sensors.weights)
        .fold(ZERO, |acc, (&y, &w)| {
            acc + green::value_unchecked(omega2, y, x) * green::value_unchecked(omega2, y, z).conj() * w
        })
}

/// `Q̃₂(x, y) = ∫ θᵀχθ e^{2iωθ·(x−y)} dθ` by the `n_theta`-point trapezoidal rule.
pub fn kernel_Q_tilde(omega: f64, chi: &Sym2, x: Point2, y: Point2, n_theta: usize) -> Result<Complex> {
    if n_theta < MIN_THETA_POINTS {
        return Err(Error::config(alloc::format!(
            "n_theta must be >= {MIN_THETA_POINTS} (got {n_theta})"
        )));
    }
    let d = x - y;
    let step = 2.0 * PI / n_theta as f64;
    let sum = (0..n_theta).fold(ZERO, |acc, j| {
        let (s, c) = libm::sincos(j as f64 * step);
        acc + cis(2.0 * omega * (c * d.x + s * d.y)) * chi.quadratic_form([c, s])
    });
    Ok(sum * step)
}

/// `R̃(z^S, z_r, y) = Σ_s w_s conj(∇G(x_s, z^S)) (∇∇G(x_s, y) ∇G(y, z_r))ᵀ`,
/// derivatives taken in the interior points.
pub fn kernel_R_tilde(omega: f64, z_s: Point2, z_r: Point2, y: Point2, sensors: &SensorArray) -> Result<CMat2> {
    let g = green::green0(omega, y, z_r)?.gradient;
    let mut out = [[ZERO; 2]; 2];
    for (&x, &w) in sensors.positions.iter().zip(&sensors.weights) {
        let a = green::value_gradient_unchecked(omega, z_s, x).1;
        let h = green::full_unchecked(omega, y, x).hessian;
        let hg = [h[0][0] * g[0] + h[0][1] * g[1], h[1][0] * g[0] + h[1][1] * g[1]];
        for i in 0..2 {
            for k in 0..2 {
                out[i][k] += a[i].conj() * hg[k] * w;
            }
        }
    }
    Ok(out)
}

/// Lattice point with the largest modulus and that modulus. Ties go to the
/// smallest `(iy, ix)`.
pub fn localize(image: &ImageGrid) -> Result<(Point2, f64)> {
    let (k, m) = argmax(image).ok_or(Error::NoPeak)?;
    Ok((image.grid.point_at(k), m))
}

fn argmax(image: &ImageGrid) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in image.values.iter().enumerate() {
        let m = v.norm();
        if m > best.map_or(0.0, |b| b.1) {
            best = Some((k, m));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Full width at half maximum of `|image|` along the lattice line through
/// the peak, with linear interpolation of the half-maximum crossings.
/// `None` if the modulus does not fall below half the peak on both sides.
pub fn peak_width(image: &ImageGrid, axis: Axis) -> Option<f64> {
    let (k, peak) = argmax(image)?;
    let (ix, iy) = (k % image.grid.n_x, k / image.grid.n_x);
    let (line, centre, step): (Vec<f64>, usize, f64) = match axis {
        Axis::X => (
            (0..image.grid.n_x).map(|i| image.value(i, iy).norm()).collect(),
            ix,
            image.grid.dx(),
        ),
        Axis::Y => (
            (0..image.grid.n_y).map(|j| image.value(ix, j).norm()).collect(),
            iy,
            image.grid.dy(),
        ),
    };
    let half = 0.5 * peak;
    let mut right = None;
    for i in centre..line.len() - 1 {
        if line[i + 1] < half {
            right = Some(i as f64 + (line[i] - half) / (line[i] - line[i + 1]));
            break;
        }
    }
    let mut left = None;
    for i in (1..=centre).rev() {
        if line[i - 1] < half {
            left = Some(i as f64 - (line[i] - half) / (line[i] - line[i - 1]));
            break;
        }
    }
    Some((right? - left?) * step)
}
