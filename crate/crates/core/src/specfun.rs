//! Bessel functions of the first and second kind of orders 0 and 1 for real
//! non-negative arguments, and the outgoing Hankel functions built from them.
//!
//! Below [`CROSSOVER`] the ascending power series are summed directly; at and
//! above it the Hankel asymptotic expansion `√(2/πx)(P cos χ − Q sin χ)` is
//! truncated at its smallest term. At `x = 12` the smallest asymptotic term is
//! about `e^{-24}`, and the series loses roughly four digits to cancellation,
//! so both sides agree to better than `1e-11`.

use crate::error::{Error, Result};
use crate::geometry::Complex;
use core::f64::consts::{FRAC_PI_4, PI};

/// Argument at which evaluation switches from power series to asymptotics.
pub const CROSSOVER: f64 = 12.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MAX_TERMS: usize = 80;

/// Bessel function of the first kind, order 0.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check_nonnegative("bessel_j0", x)?;
    Ok(j0(x))
}

/// Bessel function of the first kind, order 1.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check_nonnegative("bessel_j1", x)?;
    Ok(j1(x))
}

/// Bessel function of the second kind, order 0.
pub fn bessel_y0(x: f64) -> Result<f64> {
    check_positive("bessel_y0", x)?;
    Ok(bessel_pair(0, x).1)
}

/// Bessel function of the second kind, order 1.
pub fn bessel_y1(x: f64) -> Result<f64> {
    check_positive("bessel_y1", x)?;
    Ok(bessel_pair(1, x).1)
}

/// `(H₀⁽¹⁾(x), H₁⁽¹⁾(x))` for `x > 0`.
pub fn hankel01(x: f64) -> Result<(Complex, Complex)> {
    check_positive("hankel01", x)?;
    Ok(hankel01_unchecked(x))
}

/// `(J_n(x), Y_n(x))` from the ascending series, `n ∈ {0, 1}`, `x > 0`.
///
/// Exposed so callers can cross-check the two evaluation branches.
pub fn bessel_series(order: u32, x: f64) -> (f64, f64) {
    match order {
        0 => (j0_series(x), y0_series(x, j0_series(x))),
        _ => (j1_series(x), y1_series(x, j1_series(x))),
    }
}

/// `(J_n(x), Y_n(x))` from the Hankel asymptotic expansion, `n ∈ {0, 1}`.
pub fn bessel_asymptotic(order: u32, x: f64) -> (f64, f64) {
    let (p, q) = asymptotic_pq(order, x);
    let chi = if order == 0 { x - FRAC_PI_4 } else { x - 3.0 * FRAC_PI_4 };
    let (s, c) = libm::sincos(chi);
    let amp = libm::sqrt(2.0 / (PI * x));
    (amp * (p * c - q * s), amp * (p * s + q * c))
}

fn check_nonnegative(function: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: x,
            requirement: "x >= 0",
        })
    }
}

fn check_positive(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: x,
            requirement: "x > 0",
        })
    }
}

#[inline]
pub(crate) fn j0(x: f64) -> f64 {
    if x < CROSSOVER {
        j0_series(x)
    } else {
        bessel_asymptotic(0, x).0
    }
}

#[inline]
pub(crate) fn j1(x: f64) -> f64 {
    if x < CROSSOVER {
        j1_series(x)
    } else {
        bessel_asymptotic(1, x).0
    }
}

fn bessel_pair(order: u32, x: f64) -> (f64, f64) {
    if x < CROSSOVER {
        bessel_series(order, x)
    } else {
        bessel_asymptotic(order, x)
    }
}

/// Hankel functions of orders 0 and 1 sharing one phase evaluation.
#[inline]
pub(crate) fn hankel01_unchecked(x: f64) -> (Complex, Complex) {
    if x < CROSSOVER {
        let j0 = j0_series(x);
        let j1 = j1_series(x);
        let y0 = y0_series(x, j0);
        let y1 = y1_series(x, j1);
        (Complex::new(j0, y0), Complex::new(j1, y1))
    } else {
        // χ₁ = χ₀ − π/2, so a single sin/cos pair serves both orders.
        let (p0, q0) = asymptotic_pq(0, x);
        let (p1, q1) = asymptotic_pq(1, x);
        let (s, c) = libm::sincos(x - FRAC_PI_4);
        let amp = libm::sqrt(2.0 / (PI * x));
        let h0 = Complex::new(p0 * c - q0 * s, p0 * s + q0 * c) * amp;
        // cos χ₁ = sin χ₀, sin χ₁ = −cos χ₀
        let h1 = Complex::new(p1 * s + q1 * c, -p1 * c + q1 * s) * amp;
        (h0, h1)
    }
}

/// `H₀⁽¹⁾(x)` alone.
#[inline]
pub(crate) fn hankel0_unchecked(x: f64) -> Complex {
    if x < CROSSOVER {
        let j0 = j0_series(x);
        Complex::new(j0, y0_series(x, j0))
    } else {
        let (p, q) = asymptotic_pq(0, x);
        let (s, c) = libm::sincos(x - FRAC_PI_4);
        Complex::new(p * c - q * s, p * s + q * c) * libm::sqrt(2.0 / (PI * x))
    }
}

fn j0_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= -q / (kf * kf);
        sum += term;
        if libm::fabs(term) < 1e-17 * libm::fabs(sum) + 1e-300 {
            break;
        }
    }
    sum
}

fn j1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= -q / (kf * (kf + 1.0));
        sum += term;
        if libm::fabs(term) < 1e-17 * libm::fabs(sum) + 1e-300 {
            break;
        }
    }
    sum
}

/// `Y₀ = (2/π)[ln(x/2) + γ] J₀ + (2/π) Σ_{k≥1} (−1)^{k+1} H_k (x²/4)^k / (k!)²`.
fn y0_series(x: f64, j0: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut base = 1.0; // (x²/4)^k / (k!)² with alternating sign folded in below
    let mut harmonic = 0.0;
    let mut sum = 0.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        base *= -q / (kf * kf);
        harmonic += 1.0 / kf;
        let term = -base * harmonic;
        sum += term;
        if libm::fabs(term) < 1e-17 * libm::fabs(sum) + 1e-300 {
            break;
        }
    }
    2.0 / PI * ((libm::log(0.5 * x) + EULER_GAMMA) * j0 + sum)
}

/// `Y₁ = −2/(πx) + (2/π) ln(x/2) J₁ − (1/π) Σ_{k≥0} (−1)^k [ψ(k+1) + ψ(k+2)] (x/2)^{2k+1} / (k!(k+1)!)`.
fn y1_series(x: f64, j1: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut base = 0.5 * x;
    // ψ(1) + ψ(2) = −2γ + 1
    let mut harmonic_k = 0.0;
    let mut sum = base * (1.0 - 2.0 * EULER_GAMMA);
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        base *= -q / (kf * (kf + 1.0));
        harmonic_k += 1.0 / kf;
        let psi_sum = 2.0 * harmonic_k + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA;
        let term = base * psi_sum;
        sum += term;
        if libm::fabs(term) < 1e-17 * libm::fabs(sum) + 1e-300 {
            break;
        }
    }
    -2.0 / (PI * x) + 2.0 / PI * libm::log(0.5 * x) * j1 - sum / PI
}

/// Amplitude polynomials `P_n(x)`, `Q_n(x)` of the Hankel expansion, summed
/// until the terms stop decreasing.
fn asymptotic_pq(order: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * (order * order) as f64;
    let inv8x = 1.0 / (8.0 * x);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0; // a_k(ν) / x^k including the 1/(k! 8^k) factor
    let mut prev = f64::INFINITY;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a *= (mu - odd * odd) * inv8x / kf;
        let size = libm::fabs(a);
        if size >= prev || size < 1e-17 {
            break;
        }
        prev = size;
        // k = 1, 2, 3, 4, ... contributes +Q, −P, −Q, +P, ...
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    (p, q)
}

/// Phase-amplitude envelope `√(2/(πx))`, the scale against which Bessel
/// values near their zeros are judged.
pub fn envelope(x: f64) -> f64 {
    libm::sqrt(2.0 / (PI * x))
}
