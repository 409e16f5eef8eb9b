//! Small fixed-size geometric and complex linear-algebra types.

use core::ops::{Add, Mul, Neg, Sub};

pub type Complex = num_complex::Complex64;

/// Complex 2-vector (field gradients).
pub type CVec2 = [Complex; 2];

/// Complex 2×2 matrix, row-major.
pub type CMat2 = [[Complex; 2]; 2];

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const I: Complex = Complex::new(0.0, 1.0);

/// `e^{iφ}`.
#[inline]
pub fn cis(phase: f64) -> Complex {
    let (s, c) = libm::sincos(phase);
    Complex::new(c, s)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }

    #[inline]
    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Rect {
            min: Point2::new(x_min, y_min),
            max: Point2::new(x_max, y_max),
        }
    }

    /// The square `[-half, half]²`.
    pub const fn centered_square(half: f64) -> Self {
        Rect::new(-half, -half, half, half)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> Point2 {
        (self.min + self.max) * 0.5
    }

    pub fn diameter(&self) -> f64 {
        self.min.distance(self.max)
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        self.contains(other.min) && self.contains(other.max)
    }

    /// Largest distance from `p` to any point of the rectangle.
    pub fn max_distance_from(&self, p: Point2) -> f64 {
        let dx = libm::fmax(libm::fabs(p.x - self.min.x), libm::fabs(p.x - self.max.x));
        let dy = libm::fmax(libm::fabs(p.y - self.min.y), libm::fabs(p.y - self.max.y));
        libm::hypot(dx, dy)
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.width() > 0.0 && self.height() > 0.0
    }
}

/// Real symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };
    pub const IDENTITY: Sym2 = Sym2 {
        xx: 1.0,
        xy: 0.0,
        yy: 1.0,
    };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub fn scaled(self, s: f64) -> Sym2 {
        Sym2::new(self.xx * s, self.xy * s, self.yy * s)
    }

    /// `θᵀ A θ`.
    #[inline]
    pub fn quadratic_form(&self, t: [f64; 2]) -> f64 {
        self.xx * t[0] * t[0] + 2.0 * self.xy * t[0] * t[1] + self.yy * t[1] * t[1]
    }

    pub fn apply(&self, v: CVec2) -> CVec2 {
        [v[0] * self.xx + v[1] * self.xy, v[0] * self.xy + v[1] * self.yy]
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn determinant(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn max_abs_entry(&self) -> f64 {
        libm::fmax(
            libm::fmax(libm::fabs(self.xx), libm::fabs(self.xy)),
            libm::fabs(self.yy),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

#[inline]
pub(crate) fn cdot(a: CVec2, b: CVec2) -> Complex {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn cmat_vec(m: &CMat2, v: CVec2) -> CVec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// `θᵀ A θ` for a complex matrix and real direction.
#[inline]
pub fn cmat_quadratic(m: &CMat2, t: [f64; 2]) -> Complex {
    m[0][0] * (t[0] * t[0]) + (m[0][1] + m[1][0]) * (t[0] * t[1]) + m[1][1] * (t[1] * t[1])
}
