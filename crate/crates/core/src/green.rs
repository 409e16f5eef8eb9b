//! Outgoing free-space Green's function of `Δ + ω²` in the plane and its
//! first two derivatives with respect to the first argument.

use crate::error::{Error, Result};
use crate::geometry::{CMat2, CVec2, Complex, Point2, I, ZERO};
use crate::specfun::{hankel01_unchecked, hankel0_unchecked};

/// Separations below `SINGULAR_TOLERANCE / ω` are rejected.
pub const SINGULAR_TOLERANCE: f64 = 1e-12;

/// `G(x, z)` together with `∇ₓG` and `∇ₓ∇ₓG`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEval {
    pub value: Complex,
    pub gradient: CVec2,
    /// Symmetric, stored in full.
    pub hessian: CMat2,
}

/// `G(x, z) = (i/4) H₀⁽¹⁾(ω|x − z|)` with exact derivatives in `x`.
pub fn green0(omega: f64, x: Point2, z: Point2) -> Result<GreenEval> {
    let (d, r) = checked_separation(omega, x, z)?;
    Ok(eval_full(omega, d, r))
}

pub(crate) fn checked_separation(omega: f64, x: Point2, z: Point2) -> Result<(Point2, f64)> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::Domain {
            function: "green0",
            value: omega,
            requirement: "omega > 0",
        });
    }
    let d = x - z;
    let r = d.norm();
    if !(r >= SINGULAR_TOLERANCE / omega) {
        return Err(Error::Singular { separation: r });
    }
    Ok((d, r))
}

fn eval_full(omega: f64, d: Point2, r: f64) -> GreenEval {
    let t = omega * r;
    let (h0, h1) = hankel01_unchecked(t);
    let q = I * 0.25;
    let (ux, uy) = (d.x / r, d.y / r);

    let value = q * h0;
    let radial = -q * h1 * omega; // dG/dr
    let gradient = [radial * ux, radial * uy];

    // ∂ᵢ∂ⱼ f(r) = f''(r) x̂ᵢx̂ⱼ + (f'(r)/r)(δᵢⱼ − x̂ᵢx̂ⱼ), with H₀'' = H₁/t − H₀.
    let second = q * (h1 / t - h0) * (omega * omega);
    let tangential = radial / r;
    let hxx = second * (ux * ux) + tangential * (1.0 - ux * ux);
    let hxy = (second - tangential) * (ux * uy);
    let hyy = second * (uy * uy) + tangential * (1.0 - uy * uy);
    GreenEval {
        value,
        gradient,
        hessian: [[hxx, hxy], [hxy, hyy]],
    }
}

/// Value only; caller guarantees `ω > 0` and `x ≠ z`.
#[inline]
pub(crate) fn value_unchecked(omega: f64, x: Point2, z: Point2) -> Complex {
    I * 0.25 * hankel0_unchecked(omega * x.distance(z))
}

/// Value and `∇ₓG`; caller guarantees `ω > 0` and `x ≠ z`.
#[inline]
pub(crate) fn value_gradient_unchecked(omega: f64, x: Point2, z: Point2) -> (Complex, CVec2) {
    let d = x - z;
    let r = d.norm();
    let (h0, h1) = hankel01_unchecked(omega * r);
    let q = I * 0.25;
    let radial = -q * h1 * (omega / r);
    (q * h0, [radial * d.x, radial * d.y])
}

/// Full evaluation without checks.
#[inline]
pub(crate) fn full_unchecked(omega: f64, x: Point2, z: Point2) -> GreenEval {
    let d = x - z;
    eval_full(omega, d, d.norm())
}

impl GreenEval {
    pub const ZERO: GreenEval = GreenEval {
        value: ZERO,
        gradient: [ZERO; 2],
        hessian: [[ZERO; 2]; 2],
    };

    pub fn is_finite(&self) -> bool {
        let fin = |c: Complex| c.re.is_finite() && c.im.is_finite();
        fin(self.value) && self.gradient.iter().copied().all(fin) && self.hessian.iter().flatten().copied().all(fin)
    }
}
