//! Sampling of the random medium.
//!
//! The underlying field `z` is a zero-mean stationary Gaussian process with
//! covariance `σ² exp(−s²/(2l²))`, sampled exactly on the cell centres by
//! circulant embedding on a doubled periodic grid. The medium is `μ = arctan z`.

use std::f64::consts::PI;

use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use shg_core::medium::{MediumParams, MediumRealization};
use shg_core::Result;

/// Eigenvalues below `-NEGATIVE_TOLERANCE * max` make the embedding unusable.
const NEGATIVE_TOLERANCE: f64 = 1e-8;
/// Plane waves in the spectral fallback.
const SPECTRAL_MODES: usize = 4096;

pub fn covariance(sigma: f64, l: f64, s: f64) -> f64 {
    sigma * sigma * (-0.5 * s * s / (l * l)).exp()
}

/// Draws one realization; bit-identical for identical `params`.
pub fn generate(params: &MediumParams) -> Result<MediumRealization> {
    params.validate()?;
    if params.sigma_mu == 0.0 {
        return MediumRealization::zero(params.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let z = match circulant_embedding(params, &mut rng) {
        Some(z) => z,
        None => {
            warn!("circulant embedding is not positive semi-definite; using spectral sampling");
            spectral(params, &mut rng)
        }
    };
    MediumRealization::from_values(params.clone(), z.into_iter().map(f64::atan).collect())
}

fn fft2(data: &mut [Complex64], m: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(m)
    } else {
        planner.plan_fft_forward(m)
    };
    for row in data.chunks_mut(m) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); m];
    for ix in 0..m {
        for iy in 0..m {
            column[iy] = data[iy * m + ix];
        }
        fft.process(&mut column);
        for iy in 0..m {
            data[iy * m + ix] = column[iy];
        }
    }
}

fn circulant_embedding(params: &MediumParams, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let n = params.grid_n;
    let m = 2 * n;
    let h = params.cell_size();
    let mut c = vec![Complex64::new(0.0, 0.0); m * m];
    for iy in 0..m {
        let dy = iy.min(m - iy) as f64 * h;
        for ix in 0..m {
            let dx = ix.min(m - ix) as f64 * h;
            c[iy * m + ix] = Complex64::new(covariance(params.sigma_mu, params.l_mu, dx.hypot(dy)), 0.0);
        }
    }
    fft2(&mut c, m, false);
    let max = c.iter().map(|v| v.re).fold(f64::MIN, f64::max);
    let min = c.iter().map(|v| v.re).fold(f64::MAX, f64::min);
    if min < -NEGATIVE_TOLERANCE * max {
        debug!("embedding eigenvalue range [{min:e}, {max:e}]");
        return None;
    }
    let scale = 1.0 / (m * m) as f64;
    let mut w: Vec<Complex64> = c
        .iter()
        .map(|lambda| {
            let a = (lambda.re.max(0.0) * scale).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex64::new(re * a, im * a)
        })
        .collect();
    fft2(&mut w, m, false);
    let mut z = Vec::with_capacity(n * n);
    for iy in 0..n {
        z.extend(w[iy * m..iy * m + n].iter().map(|v| v.re));
    }
    Some(z)
}

/// Randomized spectral sum: wave vectors drawn from the normalized spectral
/// density `N(0, I/l²)`, uniform phases.
fn spectral(params: &MediumParams, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = params.grid_n;
    let modes: Vec<(f64, f64, f64)> = (0..SPECTRAL_MODES)
        .map(|_| {
            let kx: f64 = StandardNormal.sample(rng);
            let ky: f64 = StandardNormal.sample(rng);
            let phase = 2.0 * PI * rand::Rng::random::<f64>(rng);
            (kx / params.l_mu, ky / params.l_mu, phase)
        })
        .collect();
    let amp = params.sigma_mu * (2.0 / SPECTRAL_MODES as f64).sqrt();
    let h = params.cell_size();
    let b = params.support_box;
    let mut z = Vec::with_capacity(n * n);
    for iy in 0..n {
        let y = b.min.y + (iy as f64 + 0.5) * h;
        for ix in 0..n {
            let x = b.min.x + (ix as f64 + 0.5) * h;
            z.push(amp * modes.iter().map(|(kx, ky, p)| (kx * x + ky * y + p).cos()).sum::<f64>());
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;
    use shg_core::medium::DEFAULT_ALPHA;
    use shg_core::Rect;

    fn params(seed: u64) -> MediumParams {
        MediumParams {
            sigma_mu: 0.02,
            l_mu: 0.25,
            alpha: DEFAULT_ALPHA,
            support_box: Rect::centered_square(1.0),
            grid_n: 64,
            seed,
        }
    }

    #[test]
    fn spectral_fallback_has_target_variance() {
        let p = params(3);
        let mut acc = 0.0;
        let mut count = 0.0;
        for s in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            for v in spectral(&p, &mut rng) {
                acc += v * v;
                count += 1.0;
            }
        }
        let var = acc / count;
        assert!((var / (p.sigma_mu * p.sigma_mu) - 1.0).abs() < 0.15, "{var}");
    }

    #[test]
    fn reference_embedding_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(circulant_embedding(&params(0), &mut rng).is_some());
    }
}
