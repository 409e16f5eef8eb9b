//! Closed-form predictors for the expected peak values and signal-to-noise
//! ratios of both functionals, and the speckle covariance kernel.

#![allow(non_snake_case)]

use core::f64::consts::{E, PI, SQRT_2};

use crate::error::{Error, Result};
use crate::forward::{Illumination, NoiseModel, ReflectorSpec, SensorArray};
use crate::geometry::{cis, Complex, Point2, ZERO};
use crate::green;
use crate::imaging::{kernel_R, SearchGrid, MIN_THETA_POINTS};
use crate::medium::MediumParams;

/// Fully resolved physical scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub medium: MediumParams,
    pub reflector: ReflectorSpec,
    pub omega: f64,
    pub u_i: f64,
    pub n_illuminations: usize,
    pub sensors: SensorArray,
    pub search_grid: SearchGrid,
    pub noise: NoiseModel,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.medium.validate()?;
        self.reflector.validate()?;
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::Domain {
                function: "illumination.omega",
                value: self.omega,
                requirement: "omega > 0",
            });
        }
        if self.n_illuminations == 0 {
            return Err(Error::config("illumination.count must be >= 1"));
        }
        if !(self.noise.sigma >= 0.0 && self.noise.sigma.is_finite()) {
            return Err(Error::config("noise.sigma must be >= 0"));
        }
        if !self.medium.support_box.contains(self.reflector.z_r) {
            return Err(Error::config("reflector lies outside the medium support"));
        }
        self.sensors.check_encloses(&self.medium.support_box)?;
        self.search_grid.check_within(&self.medium.support_box)
    }

    pub fn illuminations(&self) -> Result<alloc::vec::Vec<Illumination>> {
        Illumination::uniform(self.omega, self.n_illuminations, self.u_i)
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Diagonal of the medium support box.
    pub fn diameter(&self) -> f64 {
        self.medium.support_box.diameter()
    }
}

/// A signal-to-noise ratio, infinite when the corresponding noise vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Snr {
    Finite(f64),
    Unbounded,
}

impl Snr {
    fn ratio(signal: f64, noise: f64) -> Snr {
        if noise == 0.0 {
            Snr::Unbounded
        } else {
            Snr::Finite(libm::fabs(signal / noise))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Snr::Finite(v) => v,
            Snr::Unbounded => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Predictors {
    pub expect_I_peak: f64,
    pub expect_J_peak: f64,
    /// Leading-order `E|A_I(z_r)|²` of the primary speckle term of `I`.
    pub speckle_variance_I: f64,
    pub snr_I_medium: Snr,
    pub snr_J_medium_lower_bound: Snr,
    pub snr_I_meas: Snr,
    pub snr_J_meas: Snr,
    pub c_bound: f64,
}

/// `2^{18.5} π³ e / (3/2)²`.
pub fn c_bound() -> f64 {
    libm::pow(2.0, 18.5) * PI * PI * PI * E / 2.25
}

/// `∫ θᵀχθ dθ = π (χ₁₁ + χ₂₂)`.
fn chi_angular_integral(s: &Scenario) -> f64 {
    PI * s.reflector.chi.trace()
}

pub fn predict(s: &Scenario) -> Predictors {
    let r = &s.reflector;
    let omega = s.omega;
    let d2 = r.delta * r.delta;
    let contrast = (r.sigma_r - 1.0) / (r.sigma_r + 1.0);
    let area = r.shape_area;
    let diam = s.diameter();
    let sigma_mu = s.medium.sigma_mu;
    let l_mu = s.medium.l_mu;
    let alpha = s.medium.alpha;
    let n = s.n_illuminations as f64;
    let u = s.u_i;
    let chi_int = chi_angular_integral(s);
    let chi_max = r.chi.max_abs_entry();

    let expect_I_peak = -0.5 * PI * area * contrast * omega * d2 * u;
    let expect_J_peak = area / 8.0 * d2 * omega * u * u * chi_int;
    let speckle_variance_I = PI * omega / 8.0 * u * u * sigma_mu * sigma_mu * l_mu * l_mu * diam;

    // The SNR expressions are written for the unit disk; |B|/π rescales them.
    let shape = area / PI;
    let snr_I_medium = Snr::ratio(
        shape * SQRT_2 * libm::pow(PI, 1.5) * contrast * omega * d2 * u,
        sigma_mu * l_mu * libm::sqrt(omega * diam),
    );

    let c = c_bound();
    let snr_J_medium_lower_bound = if sigma_mu == 0.0 {
        Snr::Unbounded
    } else if chi_max == 0.0 {
        Snr::Finite(0.0)
    } else {
        Snr::ratio(
            libm::pow(l_mu, alpha) * chi_int,
            libm::sqrt(c)
                * sigma_mu
                * libm::fmin(libm::pow(omega, -alpha), 1.0)
                * chi_max
                * libm::sqrt(libm::pow(omega * diam, 3.0 + 2.0 * alpha) + 1.0),
        )
    };

    let sigma = s.noise.sigma;
    let snr_I_meas = Snr::ratio(shape * libm::sqrt(PI * n) * d2 * omega * omega * contrast * u, sigma);
    let sigma_nu = sigma * sigma * s.wavelength() / 2.0;
    let snr_J_meas = Snr::ratio(
        shape * d2 * omega * omega * u * u * libm::sqrt(n) * libm::fmax(r.chi.xx, r.chi.yy),
        PI * sigma_nu,
    );

    Predictors {
        expect_I_peak,
        expect_J_peak,
        speckle_variance_I,
        snr_I_medium,
        snr_J_medium_lower_bound,
        snr_I_meas,
        snr_J_meas,
        c_bound: c,
    }
}

/// Variance of `I(z)` produced by white sensor noise of variance `σ²` alone,
/// for `n` uniformly spaced illuminations: the exact finite sum
/// `(2π/n)² ω⁻² σ² Σ_j Σ_s w_s² |θ_j·∇G(x_s, z)|²`.
pub fn measurement_variance_I(omega: f64, z: Point2, sigma: f64, n: usize, sensors: &SensorArray) -> f64 {
    let mut sum = 0.0;
    for j in 0..n {
        let (st, ct) = libm::sincos(2.0 * PI * j as f64 / n as f64);
        for (&x, &w) in sensors.positions.iter().zip(&sensors.weights) {
            let g = green::value_gradient_unchecked(omega, z, x).1;
            sum += w * w * (g[0] * ct + g[1] * st).norm_sqr();
        }
    }
    let f = 2.0 * PI / n as f64;
    f * f * sigma * sigma * sum / (omega * omega)
}

/// Large-aperture limit of [`measurement_variance_I`]: `π² σ² w / (2ωn)`
/// with `w` the sensor arc-length weight.
pub fn measurement_variance_I_limit(omega: f64, sigma: f64, n: usize, sensors: &SensorArray) -> f64 {
    PI * PI * sigma * sigma * sensors.spacing() / (2.0 * omega * n as f64)
}

/// `P(z^S, y, z^S′) = ∫ e^{iωθ·(z^S − z^S′)} θᵀ R(z^S, y) conj(R(z^S′, y)) θ dθ`
/// with the `n_theta`-point trapezoidal rule.
pub fn speckle_covariance_P(
    omega: f64,
    z_s: Point2,
    y: Point2,
    z_s2: Point2,
    sensors: &SensorArray,
    n_theta: usize,
) -> Result<Complex> {
    if n_theta < MIN_THETA_POINTS {
        return Err(Error::config(alloc::format!(
            "n_theta must be >= {MIN_THETA_POINTS} (got {n_theta})"
        )));
    }
    let r1 = kernel_R(omega, z_s, y, sensors);
    let r2 = kernel_R(omega, z_s2, y, sensors);
    let mut m = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            m[i][j] = r1[i][0] * r2[0][j].conj() + r1[i][1] * r2[1][j].conj();
        }
    }
    let d = z_s - z_s2;
    let step = 2.0 * PI / n_theta as f64;
    let sum = (0..n_theta).fold(ZERO, |acc, j| {
        let (s, c) = libm::sincos(j as f64 * step);
        let q = m[0][0] * (c * c) + (m[0][1] + m[1][0]) * (c * s) + m[1][1] * (s * s);
        acc + cis(omega * (c * d.x + s * d.y)) * q
    });
    Ok(sum * step)
}
