//! Forward model and imaging functionals for locating a small nonlinear
//! reflector in a weakly random medium from fundamental-frequency and
//! second-harmonic boundary data.
//!
//! Everything here is deterministic numerics and builds without `std`
//! (an allocator is required). Random-medium generation, Monte Carlo
//! drivers, file formats and the command line live in the `shg` crate.
//!
//! Conventions used throughout:
//!
//! * unit background wave speed, so the wavelength at frequency `ω` is `2π/ω`;
//! * `G(x, z) = (i/4) H₀⁽¹⁾(ω|x − z|)`, outgoing;
//! * the dipole gradient `∇G(x, z_r)` appearing in the fundamental-frequency
//!   data and in the imaging functional `I` is taken with respect to the
//!   interior point (`z_r` or the search point), never the sensor.

#![cfg_attr(not(test), no_std)]
// `!(x >= bound)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod forward;
pub mod geometry;
pub mod green;
pub mod imaging;
pub mod medium;
pub mod seed;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::{CMat2, CVec2, Complex, Point2, Rect, Sym2};
pub use green::{green0, GreenEval};
