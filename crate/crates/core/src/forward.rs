//! Synthetic boundary data at the fundamental frequency and at the second
//! harmonic, from the small-volume expansions linearized in the medium
//! perturbation.
//!
//! The free functions evaluate everything directly and are the reference
//! implementation. [`ForwardModel`] tabulates the geometry-only Green's
//! function values once for a fixed frequency, reflector position, sensor
//! array and medium grid, and then synthesizes data for many media and
//! illuminations cheaply; it must agree with the free functions to rounding.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use log::warn;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{cdot, cis, cmat_vec, CMat2, CVec2, Complex, Point2, Rect, Sym2, I, ZERO};
use crate::green::{self, GreenEval};
use crate::medium::{self, MediumParams, MediumRealization};

/// Sensor radius used when none is given, in wavelengths.
pub const DEFAULT_RADIUS_WAVELENGTHS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectorSpec {
    pub z_r: Point2,
    pub delta: f64,
    pub sigma_r: f64,
    /// Second-order susceptibility, symmetric.
    pub chi: Sym2,
    /// Area of the reference shape `B`.
    pub shape_area: f64,
}

impl ReflectorSpec {
    /// Reflector whose reference shape is the unit disk.
    pub fn unit_disk(z_r: Point2, delta: f64, sigma_r: f64, chi: Sym2) -> Self {
        ReflectorSpec {
            z_r,
            delta,
            sigma_r,
            chi,
            shape_area: PI,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.z_r.is_finite() {
            return Err(Error::config("reflector.z_r must be finite"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config(alloc::format!(
                "reflector.delta must be >= 0 (got {})",
                self.delta
            )));
        }
        if !(self.sigma_r > 0.0 && self.sigma_r.is_finite()) {
            return Err(Error::Domain {
                function: "reflector.sigma_r",
                value: self.sigma_r,
                requirement: "sigma_r > 0",
            });
        }
        if !self.chi.is_finite() {
            return Err(Error::config("reflector.chi must be finite"));
        }
        if !(self.shape_area > 0.0 && self.shape_area.is_finite()) {
            return Err(Error::config("reflector.shape_area must be > 0"));
        }
        Ok(())
    }

    /// Polarization tensor of the disk of area `shape_area`.
    pub fn polarization(&self) -> Result<PolarizationTensor> {
        disk_polarization(self.sigma_r, self.shape_area)
    }
}

/// Plane wave `U_I e^{iωθ·x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Illumination {
    pub omega: f64,
    pub theta: [f64; 2],
    pub u_i: f64,
}

impl Illumination {
    /// Direction `(cos angle, sin angle)`.
    pub fn new(omega: f64, angle: f64, u_i: f64) -> Result<Self> {
        let (s, c) = libm::sincos(angle);
        Self::from_direction(omega, [c, s], u_i)
    }

    pub fn from_direction(omega: f64, theta: [f64; 2], u_i: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain {
                function: "Illumination",
                value: omega,
                requirement: "omega > 0",
            });
        }
        let norm = libm::hypot(theta[0], theta[1]);
        if !(libm::fabs(norm - 1.0) <= 1e-12) {
            return Err(Error::config(alloc::format!(
                "illumination direction must be a unit vector (|theta| = {norm})"
            )));
        }
        if !u_i.is_finite() {
            return Err(Error::config("illumination.u_i must be finite"));
        }
        Ok(Illumination { omega, theta, u_i })
    }

    /// `n` directions `θ_j = 2πj/n`, `j = 0..n`.
    pub fn uniform(omega: f64, n: usize, u_i: f64) -> Result<Vec<Self>> {
        if n == 0 {
            return Err(Error::config("at least one illumination is required"));
        }
        (0..n)
            .map(|j| Self::new(omega, 2.0 * PI * j as f64 / n as f64, u_i))
            .collect()
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.omega
    }

    #[inline]
    pub(crate) fn phase(&self, p: Point2) -> f64 {
        self.omega * (self.theta[0] * p.x + self.theta[1] * p.y)
    }

    /// `U₀(p)`.
    pub fn field(&self, p: Point2) -> Complex {
        cis(self.phase(p)) * self.u_i
    }

    /// `∇U₀(p) = iωθ U₀(p)`.
    pub fn field_gradient(&self, p: Point2) -> CVec2 {
        let a = I * self.omega * self.field(p);
        [a * self.theta[0], a * self.theta[1]]
    }
}

/// Sensors equally spaced on a circle, with arc-length quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorArray {
    pub center: Point2,
    pub radius: f64,
    pub positions: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl SensorArray {
    pub fn new(center: Point2, radius: f64, count: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::config(alloc::format!(
                "sensor radius must be > 0 (got {radius})"
            )));
        }
        if count == 0 {
            return Err(Error::config("sensor count must be positive"));
        }
        let positions = (0..count)
            .map(|s| {
                let (sn, cs) = libm::sincos(2.0 * PI * s as f64 / count as f64);
                Point2::new(center.x + radius * cs, center.y + radius * sn)
            })
            .collect();
        let w = 2.0 * PI * radius / count as f64;
        Ok(SensorArray {
            center,
            radius,
            positions,
            weights: vec![w; count],
        })
    }

    /// `⌈2πR / (λ/2)⌉` sensors, i.e. spacing at most half a wavelength.
    pub fn half_wavelength(center: Point2, radius: f64, omega: f64) -> Result<Self> {
        Self::new(center, radius, half_wavelength_count(radius, omega))
    }

    /// Half-wavelength array of radius 20λ centred on `support`.
    pub fn around(support: &Rect, omega: f64) -> Result<Self> {
        let radius = DEFAULT_RADIUS_WAVELENGTHS * 2.0 * PI / omega;
        let array = Self::half_wavelength(support.center(), radius, omega)?;
        array.check_encloses(support)?;
        Ok(array)
    }

    pub fn count(&self) -> usize {
        self.positions.len()
    }

    /// Arc length between neighbouring sensors.
    pub fn spacing(&self) -> f64 {
        2.0 * PI * self.radius / self.count() as f64
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn encloses(&self, region: &Rect) -> bool {
        region.max_distance_from(self.center) < self.radius
    }

    pub fn check_encloses(&self, region: &Rect) -> Result<()> {
        if self.encloses(region) {
            Ok(())
        } else {
            Err(Error::config(alloc::format!(
                "sensor circle of radius {} does not enclose the medium support",
                self.radius
            )))
        }
    }
}

pub fn half_wavelength_count(radius: f64, omega: f64) -> usize {
    // 2πR / (π/ω)
    libm::ceil(2.0 * radius * omega - 1e-9) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrequencyTag {
    Fundamental,
    SecondHarmonic,
}

impl FrequencyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            FrequencyTag::Fundamental => "fundamental",
            FrequencyTag::SecondHarmonic => "second_harmonic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fundamental" => Some(FrequencyTag::Fundamental),
            "second_harmonic" => Some(FrequencyTag::SecondHarmonic),
            _ => None,
        }
    }
}

/// Field samples at every sensor for one illumination.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub illumination: Illumination,
    pub frequency_tag: FrequencyTag,
    pub samples: Vec<Complex>,
}

impl BoundaryData {
    pub fn zeros(illumination: Illumination, frequency_tag: FrequencyTag, count: usize) -> Self {
        BoundaryData {
            illumination,
            frequency_tag,
            samples: vec![ZERO; count],
        }
    }

    /// Frequency at which the samples oscillate.
    pub fn frequency(&self) -> f64 {
        match self.frequency_tag {
            FrequencyTag::Fundamental => self.illumination.omega,
            FrequencyTag::SecondHarmonic => 2.0 * self.illumination.omega,
        }
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        let s: f64 = self.samples.iter().map(|c| c.norm_sqr()).sum();
        libm::sqrt(s / self.samples.len() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationTensor {
    pub m: Sym2,
}

/// `M = 2(σ_r − 1)/(σ_r + 1) |B| I₂` for a disk `B`; `|B| = π` here.
///
/// Only disks have a closed form; `disk = false` is a configuration error.
pub fn polarization_tensor(sigma_r: f64, disk: bool) -> Result<PolarizationTensor> {
    if !disk {
        return Err(Error::config(
            "the polarization tensor is only available in closed form for disks",
        ));
    }
    disk_polarization(sigma_r, PI)
}

fn disk_polarization(sigma_r: f64, area: f64) -> Result<PolarizationTensor> {
    if !(sigma_r > 0.0 && sigma_r.is_finite()) {
        return Err(Error::Domain {
            function: "polarization_tensor",
            value: sigma_r,
            requirement: "sigma_r > 0",
        });
    }
    let c = 2.0 * (sigma_r - 1.0) / (sigma_r + 1.0) * area;
    Ok(PolarizationTensor {
        m: Sym2::IDENTITY.scaled(c),
    })
}

/// Additive white sensor noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

fn check_setup(medium: &MediumRealization, sensors: &SensorArray) -> Result<()> {
    sensors.check_encloses(&medium.support_box())
}

fn check_reflector(medium: &MediumRealization, reflector: &ReflectorSpec, ill: &Illumination) -> Result<()> {
    reflector.validate()?;
    if !medium.support_box().contains(reflector.z_r) {
        return Err(Error::config("reflector lies outside the medium support"));
    }
    if reflector.delta * ill.omega > 0.5 {
        warn!(
            "delta * omega = {:.3} is not small; the small-volume expansion may be inaccurate",
            reflector.delta * ill.omega
        );
    }
    Ok(())
}

/// `∇_y G(a, y)`, the gradient in the interior (integration) variable.
#[inline]
fn grad_interior(omega: f64, y: Point2, a: Point2) -> CVec2 {
    green::value_gradient_unchecked(omega, y, a).1
}

/// Born approximation of the field scattered by the medium alone:
/// `u^μ(x) = −∫ μ(y) ∇U₀(y)·∇_y G(x, y) dy`.
pub fn born_background_field(
    medium: &MediumRealization,
    ill: &Illumination,
    sensors: &SensorArray,
) -> Result<BoundaryData> {
    check_setup(medium, sensors)?;
    let centers = medium::cell_centers(&medium.params);
    let h2 = medium.cell_area();
    let samples = sensors
        .positions
        .iter()
        .map(|&x| {
            let mut acc = ZERO;
            for (c, &mu) in medium.values().iter().enumerate() {
                if mu != 0.0 {
                    let y = centers[c];
                    acc += cdot(ill.field_gradient(y), grad_interior(ill.omega, y, x)) * mu;
                }
            }
            -acc * h2
        })
        .collect();
    Ok(BoundaryData {
        illumination: *ill,
        frequency_tag: FrequencyTag::Fundamental,
        samples,
    })
}

/// First-order Born correction of the Green's function:
///
/// `G^μ(x, z) = G(x, z) − ∫ μ(y) ∇_y G(y, z)·∇_y G(x, y) dy`,
///
/// with the gradient taken in `x`. Cells containing `x` or `z` are left out
/// of the quadrature; the Hessian is not populated.
pub fn born_green(medium: &MediumRealization, omega: f64, x: Point2, z: Point2) -> Result<GreenEval> {
    let g0 = green::green0(omega, x, z)?;
    let separation = x.distance(z);
    if separation < medium.cell_size() {
        return Err(Error::Singular { separation });
    }
    let skip_x = medium.cell_index_of(x);
    let skip_z = medium.cell_index_of(z);
    let centers = medium::cell_centers(&medium.params);
    let h2 = medium.cell_area();
    let mut value = ZERO;
    let mut gradient = [ZERO; 2];
    for (c, &mu) in medium.values().iter().enumerate() {
        if mu == 0.0 || Some(c) == skip_x || Some(c) == skip_z {
            continue;
        }
        let y = centers[c];
        let a = grad_interior(omega, y, z);
        let gx = green::full_unchecked(omega, y, x);
        value += cdot(a, gx.gradient) * mu;
        let t = cmat_vec(&gx.hessian, a);
        gradient[0] += t[0] * mu;
        gradient[1] += t[1] * mu;
    }
    Ok(GreenEval {
        value: g0.value - value * h2,
        gradient: [g0.gradient[0] + gradient[0] * h2, g0.gradient[1] + gradient[1] * h2],
        hessian: [[ZERO; 2]; 2],
    })
}

/// Total fundamental-frequency data: the Born background field plus the
/// dipole response `−δ² M∇U₀(z_r)·∇_{z_r}G^μ(x, z_r)` of the reflector.
pub fn fundamental_data(
    medium: &MediumRealization,
    reflector: &ReflectorSpec,
    ill: &Illumination,
    sensors: &SensorArray,
) -> Result<BoundaryData> {
    check_reflector(medium, reflector, ill)?;
    let mut data = born_background_field(medium, ill, sensors)?;
    let m = reflector.polarization()?.m;
    let dipole = m.apply(ill.field_gradient(reflector.z_r));
    let d2 = reflector.delta * reflector.delta;
    if d2 == 0.0 {
        return Ok(data);
    }
    for (sample, &x) in data.samples.iter_mut().zip(&sensors.positions) {
        let g = born_green(medium, ill.omega, reflector.z_r, x)?;
        *sample -= cdot(dipole, g.gradient) * d2;
    }
    Ok(data)
}

/// Deterministic second-harmonic source `−ω²U_I² e^{2iωθ·z_r} Σ χ_kl θ_k θ_l`.
pub fn source_det(reflector: &ReflectorSpec, ill: &Illumination) -> Complex {
    let w2 = ill.omega * ill.omega;
    -cis(2.0 * ill.phase(reflector.z_r)) * (w2 * ill.u_i * ill.u_i * reflector.chi.quadratic_form(ill.theta))
}

/// First-order (in `μ`) correction to the second-harmonic source,
/// `−2ω²U_I² e^{iωθ·z_r} θᵀχT` where
/// `T = ∫ (μ(y)e^{iωθ·y} − μ(z_r)e^{iωθ·z_r}) ∇_y∇_y G(y, z_r) θ dy`,
/// with the cell containing `z_r` left out.
pub fn source_rand(medium: &MediumRealization, reflector: &ReflectorSpec, ill: &Illumination) -> Complex {
    let z = reflector.z_r;
    let omega = ill.omega;
    let f_r = cis(ill.phase(z)) * medium.sample_at(z);
    let skip = medium.cell_index_of(z);
    let centers = medium::cell_centers(&medium.params);
    let mut t = [ZERO; 2];
    for (c, &mu) in medium.values().iter().enumerate() {
        if Some(c) == skip {
            continue;
        }
        let y = centers[c];
        let df = cis(ill.phase(y)) * mu - f_r;
        if df == ZERO {
            continue;
        }
        let h = green::full_unchecked(omega, y, z).hessian;
        let ht = theta_hessian(&h, ill.theta);
        t[0] += ht[0] * df;
        t[1] += ht[1] * df;
    }
    let h2 = medium.cell_area();
    assemble_source_rand(reflector, ill, [t[0] * h2, t[1] * h2])
}

#[inline]
fn theta_hessian(h: &CMat2, theta: [f64; 2]) -> CVec2 {
    [
        h[0][0] * theta[0] + h[1][0] * theta[1],
        h[0][1] * theta[0] + h[1][1] * theta[1],
    ]
}

fn assemble_source_rand(reflector: &ReflectorSpec, ill: &Illumination, t: CVec2) -> Complex {
    let chi_theta = [
        reflector.chi.xx * ill.theta[0] + reflector.chi.xy * ill.theta[1],
        reflector.chi.xy * ill.theta[0] + reflector.chi.yy * ill.theta[1],
    ];
    let contracted = t[0] * chi_theta[0] + t[1] * chi_theta[1];
    let w2 = ill.omega * ill.omega;
    -cis(ill.phase(reflector.z_r)) * contracted * (2.0 * w2 * ill.u_i * ill.u_i)
}

/// Second-harmonic data
/// `v(x) = −δ²|B| [S_det (G₂(x, z_r) − 4ω² ∫ μ G₂(x, y) G₂(y, z_r) dy) + S_rand G₂(x, z_r)]`
/// with `G₂` the Green's function at `2ω`.
pub fn second_harmonic_data(
    medium: &MediumRealization,
    reflector: &ReflectorSpec,
    ill: &Illumination,
    sensors: &SensorArray,
) -> Result<BoundaryData> {
    check_setup(medium, sensors)?;
    check_reflector(medium, reflector, ill)?;
    let omega2 = 2.0 * ill.omega;
    let z = reflector.z_r;
    let s_det = source_det(reflector, ill);
    let s_rand = source_rand(medium, reflector, ill);
    let scale = -reflector.delta * reflector.delta * reflector.shape_area;
    let skip = medium.cell_index_of(z);
    let centers = medium::cell_centers(&medium.params);
    let h2 = medium.cell_area();
    let samples = sensors
        .positions
        .iter()
        .map(|&x| {
            let g_xz = green::value_unchecked(omega2, x, z);
            let mut corr = ZERO;
            for (c, &mu) in medium.values().iter().enumerate() {
                if mu == 0.0 || Some(c) == skip {
                    continue;
                }
                let y = centers[c];
                corr += green::value_unchecked(omega2, x, y) * green::value_unchecked(omega2, y, z) * mu;
            }
            let born = g_xz - corr * (omega2 * omega2 * h2);
            (s_det * born + s_rand * g_xz) * scale
        })
        .collect();
    Ok(BoundaryData {
        illumination: *ill,
        frequency_tag: FrequencyTag::SecondHarmonic,
        samples,
    })
}

/// Adds circular complex Gaussian noise of variance `σ²` to every sample.
///
/// Sensor `s` draws from ChaCha8 stream `s` under `noise.seed`, so the result
/// does not depend on evaluation order. Warns when the sensor spacing is far
/// from half the given wavelength.
pub fn add_measurement_noise(
    data: &BoundaryData,
    noise: &NoiseModel,
    sensors: &SensorArray,
    wavelength: f64,
) -> BoundaryData {
    let mut out = data.clone();
    if noise.sigma == 0.0 {
        return out;
    }
    let ratio = sensors.spacing() / (0.5 * wavelength);
    if !(0.5..=1.5).contains(&ratio) {
        warn!("sensor spacing is {ratio:.2} half-wavelengths; the white-noise model assumes about one");
    }
    let sd = noise.sigma * core::f64::consts::FRAC_1_SQRT_2;
    for (s, sample) in out.samples.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        rng.set_stream(s as u64);
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *sample += Complex::new(re * sd, im * sd);
    }
    out
}

/// Per-medium quantities shared by every illumination.
#[derive(Debug, Clone)]
pub struct MediumTerms {
    /// `∇_{z_r}G^μ(z_r, x_s) − ∇_{z_r}G(z_r, x_s)` per sensor.
    born_gradient: Vec<CVec2>,
    /// `∫ μ G₂(x_s, y) G₂(y, z_r) dy` per sensor.
    harmonic_integral: Vec<Complex>,
}

/// Tabulated Green's function values for a fixed frequency, reflector
/// position, medium grid and sensor array.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    omega: f64,
    z_r: Point2,
    grid: MediumParams,
    sensors: SensorArray,
    centers: Vec<Point2>,
    skip: Option<usize>,
    /// `∇_y G(x_s, y_c)`, sensor-major.
    grad_sensor_cell: Vec<CVec2>,
    /// `∇_{z_r} G(z_r, x_s)`.
    grad_reflector_sensor: Vec<CVec2>,
    /// `∇_y∇_y G(y_c, z_r)`, zero on the skipped cell.
    hess_cell_reflector: Vec<CMat2>,
    /// `G₂(x_s, y_c)`, sensor-major.
    g2_sensor_cell: Vec<Complex>,
    /// `G₂(y_c, z_r)`, zero on the skipped cell.
    g2_cell_reflector: Vec<Complex>,
    /// `G₂(x_s, z_r)`.
    g2_sensor_reflector: Vec<Complex>,
}

impl ForwardModel {
    pub fn new(grid: &MediumParams, omega: f64, z_r: Point2, sensors: &SensorArray) -> Result<Self> {
        grid.validate()?;
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain {
                function: "ForwardModel",
                value: omega,
                requirement: "omega > 0",
            });
        }
        sensors.check_encloses(&grid.support_box)?;
        if !grid.support_box.contains(z_r) {
            return Err(Error::config("reflector lies outside the medium support"));
        }
        let centers = medium::cell_centers(grid);
        let skip = medium::cell_index_of(grid, z_r);
        let nc = centers.len();
        let omega2 = 2.0 * omega;

        let mut grad_sensor_cell = Vec::with_capacity(sensors.count() * nc);
        let mut g2_sensor_cell = Vec::with_capacity(sensors.count() * nc);
        for &x in &sensors.positions {
            for &y in &centers {
                grad_sensor_cell.push(grad_interior(omega, y, x));
                g2_sensor_cell.push(green::value_unchecked(omega2, x, y));
            }
        }
        let grad_reflector_sensor = sensors
            .positions
            .iter()
            .map(|&x| grad_interior(omega, z_r, x))
            .collect();
        let g2_sensor_reflector = sensors
            .positions
            .iter()
            .map(|&x| green::value_unchecked(omega2, x, z_r))
            .collect();
        let mut hess_cell_reflector = Vec::with_capacity(nc);
        let mut g2_cell_reflector = Vec::with_capacity(nc);
        for (c, &y) in centers.iter().enumerate() {
            if Some(c) == skip {
                hess_cell_reflector.push([[ZERO; 2]; 2]);
                g2_cell_reflector.push(ZERO);
            } else {
                hess_cell_reflector.push(green::full_unchecked(omega, y, z_r).hessian);
                g2_cell_reflector.push(green::value_unchecked(omega2, y, z_r));
            }
        }
        Ok(ForwardModel {
            omega,
            z_r,
            grid: grid.clone(),
            sensors: sensors.clone(),
            centers,
            skip,
            grad_sensor_cell,
            grad_reflector_sensor,
            hess_cell_reflector,
            g2_sensor_cell,
            g2_cell_reflector,
            g2_sensor_reflector,
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn sensors(&self) -> &SensorArray {
        &self.sensors
    }

    fn check_medium(&self, medium: &MediumRealization) -> Result<()> {
        let p = &medium.params;
        if p.grid_n != self.grid.grid_n || p.support_box != self.grid.support_box {
            return Err(Error::config("medium grid differs from the tabulated grid"));
        }
        Ok(())
    }

    fn check_inputs(&self, reflector: &ReflectorSpec, ill: &Illumination) -> Result<()> {
        reflector.validate()?;
        if reflector.z_r != self.z_r || ill.omega != self.omega {
            return Err(Error::config(
                "reflector position or frequency differs from the tabulated values",
            ));
        }
        Ok(())
    }

    /// Illumination-independent medium integrals.
    pub fn medium_terms(&self, medium: &MediumRealization) -> Result<MediumTerms> {
        self.check_medium(medium)?;
        let nc = self.centers.len();
        let ns = self.sensors.count();
        let h2 = medium.cell_area();
        let mut born_gradient = vec![[ZERO; 2]; ns];
        let mut harmonic_integral = vec![ZERO; ns];
        if medium.is_zero() {
            return Ok(MediumTerms {
                born_gradient,
                harmonic_integral,
            });
        }
        let mu = medium.values();
        for s in 0..ns {
            let grads = &self.grad_sensor_cell[s * nc..(s + 1) * nc];
            let g2 = &self.g2_sensor_cell[s * nc..(s + 1) * nc];
            let mut bg = [ZERO; 2];
            let mut hi = ZERO;
            for c in 0..nc {
                let m = mu[c];
                if m == 0.0 || Some(c) == self.skip {
                    continue;
                }
                let t = cmat_vec(&self.hess_cell_reflector[c], grads[c]);
                bg[0] += t[0] * m;
                bg[1] += t[1] * m;
                hi += g2[c] * self.g2_cell_reflector[c] * m;
            }
            born_gradient[s] = [bg[0] * h2, bg[1] * h2];
            harmonic_integral[s] = hi * h2;
        }
        Ok(MediumTerms {
            born_gradient,
            harmonic_integral,
        })
    }

    /// Same as [`born_background_field`].
    pub fn born_background(&self, medium: &MediumRealization, ill: &Illumination) -> Result<BoundaryData> {
        self.check_medium(medium)?;
        let nc = self.centers.len();
        let ns = self.sensors.count();
        let mut data = BoundaryData::zeros(*ill, FrequencyTag::Fundamental, ns);
        if medium.is_zero() {
            return Ok(data);
        }
        // μ_c ∇U₀(y_c) = μ_c iωU_I e^{iωθ·y_c} θ
        let weights: Vec<Complex> = self
            .centers
            .iter()
            .zip(medium.values())
            .map(|(&y, &m)| if m == 0.0 { ZERO } else { ill.field(y) * m })
            .collect();
        let pre = -I * ill.omega * medium.cell_area();
        let (tx, ty) = (ill.theta[0], ill.theta[1]);
        for (s, out) in data.samples.iter_mut().enumerate() {
            let grads = &self.grad_sensor_cell[s * nc..(s + 1) * nc];
            let mut acc = ZERO;
            for c in 0..nc {
                let w = weights[c];
                if w != ZERO {
                    acc += w * (grads[c][0] * tx + grads[c][1] * ty);
                }
            }
            *out = acc * pre;
        }
        Ok(data)
    }

    /// Same as [`fundamental_data`].
    pub fn fundamental(
        &self,
        medium: &MediumRealization,
        terms: &MediumTerms,
        reflector: &ReflectorSpec,
        ill: &Illumination,
    ) -> Result<BoundaryData> {
        self.check_inputs(reflector, ill)?;
        let mut data = self.born_background(medium, ill)?;
        let d2 = reflector.delta * reflector.delta;
        if d2 == 0.0 {
            return Ok(data);
        }
        let dipole = reflector.polarization()?.m.apply(ill.field_gradient(self.z_r));
        for (s, sample) in data.samples.iter_mut().enumerate() {
            let g0 = self.grad_reflector_sensor[s];
            let b = terms.born_gradient[s];
            *sample -= cdot(dipole, [g0[0] + b[0], g0[1] + b[1]]) * d2;
        }
        Ok(data)
    }

    /// Same as [`source_rand`].
    pub fn source_rand(
        &self,
        medium: &MediumRealization,
        reflector: &ReflectorSpec,
        ill: &Illumination,
    ) -> Result<Complex> {
        self.check_medium(medium)?;
        if medium.is_zero() {
            return Ok(ZERO);
        }
        let f_r = cis(ill.phase(self.z_r)) * medium.sample_at(self.z_r);
        let mut t = [ZERO; 2];
        for (c, (&y, &m)) in self.centers.iter().zip(medium.values()).enumerate() {
            if Some(c) == self.skip {
                continue;
            }
            let df = cis(ill.phase(y)) * m - f_r;
            let ht = theta_hessian(&self.hess_cell_reflector[c], ill.theta);
            t[0] += ht[0] * df;
            t[1] += ht[1] * df;
        }
        let h2 = medium.cell_area();
        Ok(assemble_source_rand(reflector, ill, [t[0] * h2, t[1] * h2]))
    }

    /// Same as [`second_harmonic_data`].
    pub fn second_harmonic(
        &self,
        medium: &MediumRealization,
        terms: &MediumTerms,
        reflector: &ReflectorSpec,
        ill: &Illumination,
    ) -> Result<BoundaryData> {
        self.check_inputs(reflector, ill)?;
        let s_det = source_det(reflector, ill);
        let s_rand = self.source_rand(medium, reflector, ill)?;
        let omega2 = 2.0 * self.omega;
        let scale = -reflector.delta * reflector.delta * reflector.shape_area;
        let samples = self
            .g2_sensor_reflector
            .iter()
            .zip(&terms.harmonic_integral)
            .map(|(&g, &corr)| (s_det * (g - corr * (omega2 * omega2)) + s_rand * g) * scale)
            .collect();
        Ok(BoundaryData {
            illumination: *ill,
            frequency_tag: FrequencyTag::SecondHarmonic,
            samples,
        })
    }

    /// Fundamental and second-harmonic data for every illumination.
    pub fn simulate(
        &self,
        medium: &MediumRealization,
        reflector: &ReflectorSpec,
        illuminations: &[Illumination],
    ) -> Result<(Vec<BoundaryData>, Vec<BoundaryData>)> {
        let terms = self.medium_terms(medium)?;
        let mut fundamental = Vec::with_capacity(illuminations.len());
        let mut harmonic = Vec::with_capacity(illuminations.len());
        for ill in illuminations {
            fundamental.push(self.fundamental(medium, &terms, reflector, ill)?);
            harmonic.push(self.second_harmonic(medium, &terms, reflector, ill)?);
        }
        Ok((fundamental, harmonic))
    }
}
