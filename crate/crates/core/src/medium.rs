//! Random-medium parameters and sampled realizations.
//!
//! A realization stores one value per cell of a `grid_n × grid_n` partition
//! of the (square) support box, attached to the cell centre. Volume integrals
//! over the medium use the midpoint rule on these cells.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};

/// Minimum number of cells per correlation length.
pub const MIN_CELLS_PER_CORRELATION_LENGTH: f64 = 4.0;
pub const MIN_GRID_N: usize = 16;
pub const DEFAULT_ALPHA: f64 = 0.45;

#[derive(Debug, Clone, PartialEq)]
pub struct MediumParams {
    pub sigma_mu: f64,
    pub l_mu: f64,
    /// Hölder exponent; only used by the second-harmonic SNR bound.
    pub alpha: f64,
    pub support_box: Rect,
    pub grid_n: usize,
    pub seed: u64,
}

impl MediumParams {
    pub fn cell_size(&self) -> f64 {
        self.support_box.width() / self.grid_n as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_mu >= 0.0 && self.sigma_mu.is_finite()) {
            return Err(Error::config(alloc::format!(
                "medium.sigma_mu must be >= 0 (got {})",
                self.sigma_mu
            )));
        }
        if !(self.l_mu > 0.0 && self.l_mu.is_finite()) {
            return Err(Error::config(alloc::format!(
                "medium.l_mu must be > 0 (got {})",
                self.l_mu
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::config(alloc::format!(
                "medium.alpha must lie in (0, 1/2) (got {})",
                self.alpha
            )));
        }
        if !self.support_box.is_valid() {
            return Err(Error::config("medium.support_box must have positive extent"));
        }
        let (w, h) = (self.support_box.width(), self.support_box.height());
        if libm::fabs(w - h) > 1e-12 * libm::fmax(w, h) {
            return Err(Error::config("medium.support_box must be square"));
        }
        if self.grid_n < MIN_GRID_N {
            return Err(Error::config(alloc::format!(
                "medium.grid_n must be >= {MIN_GRID_N} (got {})",
                self.grid_n
            )));
        }
        let cells_per_length = self.l_mu / self.cell_size();
        if cells_per_length < MIN_CELLS_PER_CORRELATION_LENGTH {
            return Err(Error::Resolution { cells_per_length });
        }
        Ok(())
    }
}

/// Sampled perturbation `μ`, row-major with `values[iy * n + ix]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MediumRealization {
    pub params: MediumParams,
    values: Vec<f64>,
    cell_size: f64,
}

impl MediumRealization {
    /// Homogeneous background (`μ ≡ 0`) on the grid of `params`.
    pub fn zero(params: MediumParams) -> Result<Self> {
        params.validate()?;
        let n = params.grid_n;
        Ok(MediumRealization {
            cell_size: params.cell_size(),
            values: vec![0.0; n * n],
            params,
        })
    }

    /// Wraps precomputed cell values; each must satisfy `|μ| < π/2`.
    pub fn from_values(params: MediumParams, values: Vec<f64>) -> Result<Self> {
        params.validate()?;
        let n = params.grid_n;
        if values.len() != n * n {
            return Err(Error::config(alloc::format!(
                "expected {} medium values, got {}",
                n * n,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(libm::fabs(**v) < FRAC_PI_2)) {
            return Err(Error::config(alloc::format!(
                "medium value {v} is outside (-pi/2, pi/2)"
            )));
        }
        Ok(MediumRealization {
            cell_size: params.cell_size(),
            values,
            params,
        })
    }

    /// Same grid with every value multiplied by `factor`. Keeping the result
    /// inside `(-π/2, π/2)` is up to the caller.
    pub fn scaled(&self, factor: f64) -> Self {
        MediumRealization {
            params: self.params.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            cell_size: self.cell_size,
        }
    }

    pub fn grid_n(&self) -> usize {
        self.params.grid_n
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    pub fn support_box(&self) -> Rect {
        self.params.support_box
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.params.grid_n + ix]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| libm::fmax(m, libm::fabs(*v)))
    }

    /// Centre of cell `(ix, iy)`.
    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        cell_center(&self.params, ix, iy)
    }

    /// Flat index of the cell containing `p`, if `p` lies in the support box.
    pub fn cell_index_of(&self, p: Point2) -> Option<usize> {
        cell_index_of(&self.params, p)
    }

    /// Bilinear interpolation between cell centres; constant extrapolation
    /// in the half-cell margin along the box edges; zero outside the box.
    pub fn sample_at(&self, p: Point2) -> f64 {
        let b = self.params.support_box;
        if !b.contains(p) {
            return 0.0;
        }
        let n = self.params.grid_n;
        let h = self.cell_size;
        let (ix, tx) = lattice_coordinate((p.x - b.min.x) / h - 0.5, n);
        let (iy, ty) = lattice_coordinate((p.y - b.min.y) / h - 0.5, n);
        let v00 = self.value(ix, iy);
        let v10 = self.value(ix + 1, iy);
        let v01 = self.value(ix, iy + 1);
        let v11 = self.value(ix + 1, iy + 1);
        if tx == 0.0 && ty == 0.0 {
            return v00;
        }
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }
}

/// Lower lattice index and fractional offset for a continuous coordinate,
/// clamped to the node range `[0, n − 1]`; coordinates within `1e-9` of a
/// node snap onto it.
fn lattice_coordinate(f: f64, n: usize) -> (usize, f64) {
    let top = (n - 1) as f64;
    let f = libm::fmin(libm::fmax(f, 0.0), top);
    let r = libm::round(f);
    let f = if libm::fabs(f - r) < 1e-9 { r } else { f };
    let i = libm::floor(f) as usize;
    let i = if i >= n - 1 { n - 2 } else { i };
    (i, f - i as f64)
}

pub(crate) fn cell_center(params: &MediumParams, ix: usize, iy: usize) -> Point2 {
    let h = params.cell_size();
    let b = params.support_box;
    Point2::new(b.min.x + (ix as f64 + 0.5) * h, b.min.y + (iy as f64 + 0.5) * h)
}

pub(crate) fn cell_index_of(params: &MediumParams, p: Point2) -> Option<usize> {
    let b = params.support_box;
    if !b.contains(p) {
        return None;
    }
    let n = params.grid_n;
    let h = params.cell_size();
    let ix = libm::floor((p.x - b.min.x) / h) as usize;
    let iy = libm::floor((p.y - b.min.y) / h) as usize;
    Some(iy.min(n - 1) * n + ix.min(n - 1))
}

/// All cell centres in storage order.
pub(crate) fn cell_centers(params: &MediumParams) -> Vec<Point2> {
    let n = params.grid_n;
    let mut out = Vec::with_capacity(n * n);
    for iy in 0..n {
        for ix in 0..n {
            out.push(cell_center(params, ix, iy));
        }
    }
    out
}
