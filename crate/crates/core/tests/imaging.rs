#![allow(non_snake_case)]

use std::f64::consts::PI;

use proptest::prelude::*;
use shg_core::forward::{
    fundamental_data, second_harmonic_data, BoundaryData, FrequencyTag, Illumination, ReflectorSpec, SensorArray,
};
use shg_core::imaging::{
    functional_I, functional_J, kernel_Q, kernel_Q_tilde, kernel_R, kernel_R_tilde, localize, peak_width, Axis,
    BackprojectionBatch, FunctionalTag, SearchGrid,
};
use shg_core::medium::{MediumParams, MediumRealization, DEFAULT_ALPHA};
use shg_core::specfun::bessel_j0;
use shg_core::{green0, CMat2, Complex, Point2, Rect, Sym2};

const OMEGA: f64 = 8.0;
const ZERO: Complex = Complex::new(0.0, 0.0);

fn support() -> Rect {
    Rect::centered_square(1.0)
}

fn sensors() -> SensorArray {
    SensorArray::around(&support(), OMEGA).unwrap()
}

fn z_r() -> Point2 {
    Point2::new(-0.2, 0.5)
}

fn lambda() -> f64 {
    2.0 * PI / OMEGA
}

fn max_entry(m: &CMat2) -> f64 {
    m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

fn illuminations(n: usize) -> Vec<Illumination> {
    Illumination::uniform(OMEGA, n, 1.0).unwrap()
}

/// Dipole field `∇_z G(x, z_r)·a` recorded on the sensors for each illumination.
fn dipole_data(a: [Complex; 2], ills: &[Illumination], s: &SensorArray) -> Vec<BoundaryData> {
    ills.iter()
        .map(|il| BoundaryData {
            illumination: *il,
            frequency_tag: FrequencyTag::Fundamental,
            samples: s
                .positions
                .iter()
                .map(|&x| {
                    let g = green0(OMEGA, z_r(), x).unwrap().gradient;
                    g[0] * a[0] + g[1] * a[1]
                })
                .collect(),
        })
        .collect()
}

fn monopole_data(ills: &[Illumination], s: &SensorArray) -> Vec<BoundaryData> {
    ills.iter()
        .map(|il| BoundaryData {
            illumination: *il,
            frequency_tag: FrequencyTag::SecondHarmonic,
            samples: s
                .positions
                .iter()
                .map(|&x| green0(2.0 * OMEGA, x, z_r()).unwrap().value)
                .collect(),
        })
        .collect()
}

fn evaluate(tag: FunctionalTag, data: &[BoundaryData], s: &SensorArray, z: Point2) -> Complex {
    let mut b = BackprojectionBatch::new(tag, OMEGA, s).unwrap();
    b.push_experiment(data, s).unwrap();
    let mut out = [ZERO];
    b.evaluate_point(z, &mut out);
    out[0]
}

#[test]
fn r_on_diagonal_is_isotropic() {
    let s = sensors();
    for z in [Point2::ORIGIN, z_r(), Point2::new(0.9, -0.9)] {
        let r = kernel_R(OMEGA, z, z, &s);
        let scale = OMEGA / 8.0;
        assert!((r[0][0] - scale).norm() / scale < 0.03, "{:?}", r);
        assert!((r[1][1] - scale).norm() / scale < 0.03);
        assert!(r[0][1].norm() / scale < 0.03);
        assert!(r[1][0].norm() / scale < 0.03);
    }
}

#[test]
fn r_is_hermitian() {
    let s = sensors();
    let (a, b) = (Point2::new(0.3, -0.1), Point2::new(-0.6, 0.8));
    let r = kernel_R(OMEGA, a, b, &s);
    let t = kernel_R(OMEGA, b, a, &s);
    for i in 0..2 {
        for j in 0..2 {
            assert!((r[i][j] - t[j][i].conj()).norm() < 1e-14 * max_entry(&r));
        }
    }
}

#[test]
fn r_envelope_decays_like_inverse_sqrt() {
    let s = sensors();
    let dir = Point2::new(0.6, 0.8);
    let samples: Vec<(f64, f64)> = (0..=1600)
        .map(|k| {
            let r = lambda() * (2.0 + 8.0 * k as f64 / 1600.0);
            let m = kernel_R(OMEGA, Point2::ORIGIN, dir * r, &s);
            (r, m.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        })
        .collect();
    let peaks: Vec<(f64, f64)> = samples
        .windows(3)
        .filter(|w| w[1].1 > w[0].1 && w[1].1 >= w[2].1)
        .map(|w| (w[1].0.ln(), w[1].1.ln()))
        .collect();
    assert!(peaks.len() >= 8);
    let n = peaks.len() as f64;
    let mx = peaks.iter().map(|p| p.0).sum::<f64>() / n;
    let my = peaks.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = peaks.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = peaks.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    assert!((slope + 0.5).abs() < 0.1, "slope {slope}");
}

#[test]
fn scalar_kernel_matches_bessel_oracle() {
    // kernel_Q at half the frequency is Σ w G(x, y) conj(G(x, z)) at ω
    let s = sensors();
    let y = Point2::new(0.1, 0.2);
    for k in 0..=80 {
        let d = 4.0 * lambda() * k as f64 / 80.0;
        let z = y + Point2::new(d * 0.8, -d * 0.6);
        let q = kernel_Q(OMEGA / 2.0, y, z, &s);
        let expected = bessel_j0(OMEGA * d).unwrap() / (4.0 * OMEGA);
        assert!((q - expected).norm() * 4.0 * OMEGA < 0.03, "d = {d}: {q} vs {expected}");
    }
}

#[test]
fn q_on_diagonal() {
    let s = sensors();
    let q = kernel_Q(OMEGA, z_r(), z_r(), &s);
    assert!((q - 1.0 / (8.0 * OMEGA)).norm() * 8.0 * OMEGA < 0.03, "{q}");
}

#[test]
fn q_conjugate_symmetry() {
    let s = sensors();
    let (a, b) = (Point2::new(0.3, -0.1), Point2::new(-0.6, 0.8));
    let q1 = kernel_Q(OMEGA, a, b, &s);
    let q2 = kernel_Q(OMEGA, b, a, &s);
    assert!((q1 - q2.conj()).norm() < 1e-14 * q1.norm().max(1e-3));
}

#[test]
fn q_nearly_vanishes_at_first_root() {
    let s = sensors();
    let d = 2.404825557695773 / (2.0 * OMEGA);
    let q = kernel_Q(OMEGA, Point2::ORIGIN, Point2::new(d, 0.0), &s);
    assert!(q.norm() < 0.05 / (8.0 * OMEGA), "{q}");
}

#[test]
fn q_tilde_cases() {
    let p = Point2::new(0.2, 0.3);
    let full = kernel_Q_tilde(OMEGA, &Sym2::IDENTITY, p, p, 64).unwrap();
    assert!((full - 2.0 * PI).norm() < 1e-12);
    let chi = Sym2::new(1.7, -0.4, 0.6);
    let general = kernel_Q_tilde(OMEGA, &chi, p, p, 64).unwrap();
    assert!((general - PI * (chi.xx + chi.yy)).norm() < 1e-12);
    let u = Point2::new(0.6, 0.8);
    let rank_one = Sym2::new(u.x * u.x, u.x * u.y, u.y * u.y);
    assert!((kernel_Q_tilde(OMEGA, &rank_one, p, p, 64).unwrap() - PI).norm() < 1e-12);
    let q = kernel_Q_tilde(OMEGA, &Sym2::IDENTITY, p, Point2::ORIGIN, 64).unwrap();
    let expected = 2.0 * PI * bessel_j0(2.0 * OMEGA * p.norm()).unwrap();
    assert!((q - expected).norm() < 1e-10);
    assert!(kernel_Q_tilde(OMEGA, &chi, p, p, 8).is_err());
}

/// `Σ_s w conj(∂_i G(x_s, a)) ∂_k∂_l G(x_s, y)` summed directly.
fn triple_tensor(a: Point2, y: Point2, s: &SensorArray) -> [[[Complex; 2]; 2]; 2] {
    let mut t = [[[ZERO; 2]; 2]; 2];
    for (&x, &w) in s.positions.iter().zip(&s.weights) {
        let ga = green0(OMEGA, a, x).unwrap().gradient;
        let h = green0(OMEGA, y, x).unwrap().hessian;
        for i in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    t[i][k][l] += ga[i].conj() * h[k][l] * w;
                }
            }
        }
    }
    t
}

/// `(1/(4ω)) ∂_i∂_k∂_l J₀(ω|d|)` by central differences of the exact Hessian of `J₀/4`.
fn triple_oracle(d: Point2) -> [[[f64; 2]; 2]; 2] {
    let step = 1e-5;
    let im_hess = |p: Point2| {
        let h = green0(OMEGA, p, Point2::ORIGIN).unwrap().hessian;
        [[h[0][0].im, h[0][1].im], [h[1][0].im, h[1][1].im]]
    };
    let mut t = [[[0.0; 2]; 2]; 2];
    for (i, e) in [Point2::new(step, 0.0), Point2::new(0.0, step)].into_iter().enumerate() {
        let (p, m) = (im_hess(d + e), im_hess(d - e));
        for k in 0..2 {
            for l in 0..2 {
                t[i][k][l] = 4.0 * (p[k][l] - m[k][l]) / (2.0 * step) / (4.0 * OMEGA);
            }
        }
    }
    t
}

#[test]
fn r_tilde_matches_third_derivative_oracle() {
    let s = sensors();
    let zs = z_r();
    for y in [Point2::new(0.25, 0.1), Point2::new(-0.5, -0.3), Point2::new(0.6, 0.9)] {
        let g = green0(OMEGA, y, z_r() + Point2::new(0.05, -0.4)).unwrap().gradient;
        let rt = kernel_R_tilde(OMEGA, zs, z_r() + Point2::new(0.05, -0.4), y, &s).unwrap();
        let o = triple_oracle(zs - y);
        let mut expected = [[ZERO; 2]; 2];
        for i in 0..2 {
            for k in 0..2 {
                expected[i][k] = g[0] * o[i][k][0] + g[1] * o[i][k][1];
            }
        }
        let scale = max_entry(&expected);
        for i in 0..2 {
            for k in 0..2 {
                let err = (rt[i][k] - expected[i][k]).norm() / scale;
                assert!(err < 0.03, "y = {y:?}, ({i},{k}): {err}");
            }
        }
    }
}

#[test]
fn r_tilde_is_linear_in_source_gradient() {
    let s = sensors();
    let (zs, zr, y) = (z_r(), Point2::new(0.3, 0.2), Point2::new(-0.4, -0.1));
    let g = green0(OMEGA, y, zr).unwrap().gradient;
    let t = triple_tensor(zs, y, &s);
    let rt = kernel_R_tilde(OMEGA, zs, zr, y, &s).unwrap();
    let scale = max_entry(&rt);
    for i in 0..2 {
        for k in 0..2 {
            let once = t[i][k][0] * g[0] + t[i][k][1] * g[1];
            let twice = t[i][k][0] * (g[0] * 2.0) + t[i][k][1] * (g[1] * 2.0);
            assert!((once - rt[i][k]).norm() < 1e-12 * scale);
            assert!((twice - rt[i][k] * 2.0).norm() < 1e-12 * scale);
        }
    }
}

#[test]
fn r_tilde_rejects_coincident_points() {
    assert!(kernel_R_tilde(OMEGA, z_r(), z_r(), z_r(), &sensors()).is_err());
}

#[test]
fn r_tilde_respects_envelope() {
    let s = sensors();
    let zs = Point2::new(0.1, -0.2);
    let zr = z_r();
    let bound_const = 4.0 * OMEGA * OMEGA * (2.0 / PI).sqrt();
    let mut checked = 0;
    for ix in 0..15 {
        for iy in 0..15 {
            let y = Point2::new(-0.95 + ix as f64 * 0.135, -0.95 + iy as f64 * 0.135);
            let (tr, ts) = (OMEGA * y.distance(zr), OMEGA * y.distance(zs));
            if tr < 1.0 || ts < 1.0 {
                continue;
            }
            let rt = kernel_R_tilde(OMEGA, zs, zr, y, &s).unwrap();
            let bound = bound_const * tr.min(ts.powf(-0.5)) * (1.0 / tr).max(tr.powf(-0.5));
            assert!(max_entry(&rt) <= bound, "y = {y:?}");
            checked += 1;
        }
    }
    assert!(checked > 150);
}

#[test]
fn functional_I_of_dipole_matches_kernel() {
    let s = sensors();
    let ills = illuminations(8);
    let a = [Complex::new(0.3, -0.2), Complex::new(-0.1, 0.7)];
    let data = dipole_data(a, &ills, &s);
    let got = evaluate(FunctionalTag::I, &data, &s, z_r());
    let r = kernel_R(OMEGA, z_r(), z_r(), &s);
    let mut exact = ZERO;
    let mut limit = ZERO;
    for il in &ills {
        let t = il.theta;
        let phase = Complex::new(0.0, -OMEGA * (t[0] * z_r().x + t[1] * z_r().y)).exp() / Complex::new(0.0, OMEGA);
        let ra = [r[0][0] * a[0] + r[0][1] * a[1], r[1][0] * a[0] + r[1][1] * a[1]];
        exact += phase * (t[0] * ra[0] + t[1] * ra[1]);
        limit += phase * (t[0] * a[0] + t[1] * a[1]) * (OMEGA / 8.0);
    }
    exact *= 2.0 * PI / 8.0;
    limit *= 2.0 * PI / 8.0;
    assert!((got - exact).norm() < 1e-12 * exact.norm());
    assert!((got - limit).norm() < 0.02 * limit.norm(), "{got} vs {limit}");
}

#[test]
fn functional_J_of_monopole_matches_kernel() {
    let s = sensors();
    let ills = illuminations(8);
    let data = monopole_data(&ills, &s);
    let got = evaluate(FunctionalTag::J, &data, &s, z_r());
    let mut exact = ZERO;
    for il in &ills {
        let t = il.theta;
        exact += Complex::new(0.0, -2.0 * OMEGA * (t[0] * z_r().x + t[1] * z_r().y)).exp();
    }
    exact *= kernel_Q(OMEGA, z_r(), z_r(), &s) * (2.0 * PI / 8.0);
    assert!((got - exact).norm() < 1e-12 * exact.norm());
    let phases: Complex = ills
        .iter()
        .map(|il| Complex::new(0.0, -2.0 * OMEGA * (il.theta[0] * z_r().x + il.theta[1] * z_r().y)).exp())
        .sum();
    let limit = phases * (2.0 * PI / 8.0 / (8.0 * OMEGA));
    assert!((got - limit).norm() < 0.02 * limit.norm(), "{got} vs {limit}");
}

#[test]
fn zero_data_gives_zero_image() {
    let s = sensors();
    let ills = illuminations(4);
    let data = dipole_data([ZERO, ZERO], &ills, &s);
    let grid = SearchGrid::new(support(), 16, 16).unwrap();
    let img = functional_I(&data, &s, &grid).unwrap();
    assert!(img.values.iter().all(|v| *v == ZERO));
    assert!(localize(&img).is_err());
}

#[test]
fn image_inherits_data_phase() {
    let s = sensors();
    let ills = illuminations(4);
    let grid = SearchGrid::new(support(), 12, 12).unwrap();
    let base = monopole_data(&ills, &s);
    let rot = Complex::new(0.0, 0.9).exp();
    let turned: Vec<BoundaryData> = base
        .iter()
        .map(|d| BoundaryData {
            samples: d.samples.iter().map(|v| v * rot).collect(),
            ..d.clone()
        })
        .collect();
    let a = functional_J(&base, &s, &grid).unwrap();
    let b = functional_J(&turned, &s, &grid).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x * rot - y).norm() < 1e-12 * a.max_abs());
    }
}

fn reference_medium() -> MediumRealization {
    MediumRealization::zero(MediumParams {
        sigma_mu: 0.0,
        l_mu: 0.25,
        alpha: DEFAULT_ALPHA,
        support_box: support(),
        grid_n: 64,
        seed: 0,
    })
    .unwrap()
}

fn reference_reflector() -> ReflectorSpec {
    ReflectorSpec::unit_disk(z_r(), 0.004 / PI, 2.0, Sym2::IDENTITY)
}

#[test]
fn noiseless_images_localize_reflector() {
    let s = sensors();
    let ills = illuminations(8);
    let m = reference_medium();
    let r = reference_reflector();
    let grid = SearchGrid::new(support(), 128, 128).unwrap();
    let u: Vec<_> = ills
        .iter()
        .map(|il| fundamental_data(&m, &r, il, &s).unwrap())
        .collect();
    let v: Vec<_> = ills
        .iter()
        .map(|il| second_harmonic_data(&m, &r, il, &s).unwrap())
        .collect();
    for img in [
        functional_I(&u, &s, &grid).unwrap(),
        functional_J(&v, &s, &grid).unwrap(),
    ] {
        let (p, _) = localize(&img).unwrap();
        assert!(
            (p.x - z_r().x).abs() <= grid.dx() && (p.y - z_r().y).abs() <= grid.dy(),
            "{p:?}"
        );
    }
}

#[test]
fn peak_is_isotropic_with_eight_illuminations() {
    let s = sensors();
    let ills = illuminations(8);
    let m = reference_medium();
    let r = reference_reflector();
    let zoom = Rect::new(z_r().x - 0.4, z_r().y - 0.4, z_r().x + 0.4, z_r().y + 0.4);
    let grid = SearchGrid::new(zoom, 81, 81).unwrap();
    let u: Vec<_> = ills
        .iter()
        .map(|il| fundamental_data(&m, &r, il, &s).unwrap())
        .collect();
    let v: Vec<_> = ills
        .iter()
        .map(|il| second_harmonic_data(&m, &r, il, &s).unwrap())
        .collect();
    for img in [
        functional_I(&u, &s, &grid).unwrap(),
        functional_J(&v, &s, &grid).unwrap(),
    ] {
        let wx = peak_width(&img, Axis::X).unwrap();
        let wy = peak_width(&img, Axis::Y).unwrap();
        assert!((0.8..=1.25).contains(&(wx / wy)), "{wx} / {wy}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn images_are_linear_in_data(a in -2.0f64..2.0, b in -2.0f64..2.0, px in -0.9f64..0.9, py in -0.9f64..0.9) {
        let s = SensorArray::new(Point2::ORIGIN, 4.0, 96).unwrap();
        let ills = illuminations(4);
        let z = Point2::new(px, py);
        let d1 = monopole_data(&ills, &s);
        let d2 = dipole_data([Complex::new(1.0, 0.0), Complex::new(0.0, 1.0)], &ills, &s);
        let d2: Vec<BoundaryData> = d2.into_iter().map(|d| BoundaryData { frequency_tag: FrequencyTag::SecondHarmonic, ..d }).collect();
        let mix: Vec<BoundaryData> = d1.iter().zip(&d2).map(|(x, y)| BoundaryData {
            samples: x.samples.iter().zip(&y.samples).map(|(p, q)| p * a + q * b).collect(),
            ..x.clone()
        }).collect();
        let j1 = evaluate(FunctionalTag::J, &d1, &s, z);
        let j2 = evaluate(FunctionalTag::J, &d2, &s, z);
        let jm = evaluate(FunctionalTag::J, &mix, &s, z);
        prop_assert!((j1 * a + j2 * b - jm).norm() <= 1e-12 * (j1.norm() + j2.norm() + 1e-12));
    }

    #[test]
    fn r_hermitian_everywhere(ax in -1.0f64..1.0, ay in -1.0f64..1.0, bx in -1.0f64..1.0, by in -1.0f64..1.0) {
        let s = SensorArray::new(Point2::ORIGIN, 4.0, 96).unwrap();
        let (p, q) = (Point2::new(ax, ay), Point2::new(bx, by));
        let r = kernel_R(OMEGA, p, q, &s);
        let t = kernel_R(OMEGA, q, p, &s);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((r[i][j] - t[j][i].conj()).norm() <= 1e-13 * max_entry(&r));
            }
        }
    }
}
