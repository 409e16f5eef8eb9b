use std::f64::consts::PI;

use proptest::prelude::*;
use shg_core::forward::{NoiseModel, ReflectorSpec, SensorArray};
use shg_core::imaging::SearchGrid;
use shg_core::medium::{MediumParams, DEFAULT_ALPHA};
use shg_core::stats::{
    c_bound, measurement_variance_I, measurement_variance_I_limit, predict, speckle_covariance_P, Scenario, Snr,
};
use shg_core::{Point2, Rect, Sym2};

const OMEGA: f64 = 8.0;

fn scenario() -> Scenario {
    let support = Rect::centered_square(1.0);
    Scenario {
        medium: MediumParams {
            sigma_mu: 0.02,
            l_mu: 0.25,
            alpha: DEFAULT_ALPHA,
            support_box: support,
            grid_n: 64,
            seed: 1,
        },
        reflector: ReflectorSpec::unit_disk(Point2::new(-0.2, 0.5), 0.004 / PI, 2.0, Sym2::IDENTITY),
        omega: OMEGA,
        u_i: 1.0,
        n_illuminations: 8,
        sensors: SensorArray::around(&support, OMEGA).unwrap(),
        search_grid: SearchGrid::new(support, 128, 128).unwrap(),
        noise: NoiseModel { sigma: 0.0, seed: 0 },
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

#[test]
fn reference_peak_predictions() {
    let s = scenario();
    let p = predict(&s);
    let d2 = s.reflector.delta.powi(2);
    assert!(close(p.expect_I_peak, -4.0 * PI * PI / 3.0 * d2, 1e-12));
    assert!(close(p.expect_J_peak, 2.0 * PI * PI * d2, 1e-12));
    assert!(close(
        c_bound(),
        2f64.powf(18.5) * PI.powi(3) * std::f64::consts::E / 2.25,
        1e-14
    ));
}

#[test]
fn expectations_scale_with_inputs() {
    let base = predict(&scenario());
    let mut s = scenario();
    s.reflector.delta *= 2.0;
    s.reflector.chi = Sym2::new(2.0, 0.5, 3.0);
    let p = predict(&s);
    assert!(close(p.expect_I_peak, 4.0 * base.expect_I_peak, 1e-12));
    assert!(close(p.expect_J_peak, 4.0 * 2.5 * base.expect_J_peak, 1e-12));
}

#[test]
fn second_harmonic_bound_is_invariant() {
    let base = predict(&scenario()).snr_J_medium_lower_bound.value();
    let mut s = scenario();
    s.reflector.delta *= 2.0;
    s.reflector.sigma_r = 9.0;
    s.reflector.chi = Sym2::IDENTITY.scaled(3.5);
    let p = predict(&s).snr_J_medium_lower_bound.value();
    assert!(close(base, p, 1e-12));
}

#[test]
fn snr_serialisable_states() {
    let mut s = scenario();
    s.medium.sigma_mu = 0.0;
    s.noise.sigma = 0.0;
    let p = predict(&s);
    assert_eq!(p.snr_I_medium, Snr::Unbounded);
    assert_eq!(p.snr_I_meas, Snr::Unbounded);
    assert_eq!(p.snr_I_meas.value(), f64::INFINITY);
    s.noise.sigma = 1e-3;
    assert!(matches!(predict(&s).snr_I_meas, Snr::Finite(v) if v > 0.0));
}

#[test]
fn measurement_variance_matches_limit() {
    let s = scenario();
    for n in [4, 8, 16] {
        let exact = measurement_variance_I(OMEGA, s.reflector.z_r, 0.1, n, &s.sensors);
        let limit = measurement_variance_I_limit(OMEGA, 0.1, n, &s.sensors);
        assert!(close(exact, limit, 0.05), "n = {n}: {exact} vs {limit}");
    }
    let v8 = measurement_variance_I(OMEGA, s.reflector.z_r, 0.1, 8, &s.sensors);
    let v16 = measurement_variance_I(OMEGA, s.reflector.z_r, 0.1, 16, &s.sensors);
    assert!(close(v8 / v16, 2.0, 0.02));
}

#[test]
fn speckle_covariance_far_field() {
    let s = scenario();
    let zr = s.reflector.z_r;
    let r = 6.0 * 2.0 * PI / OMEGA;
    let y = zr + Point2::new(0.6 * r, -0.8 * r);
    let p = speckle_covariance_P(OMEGA, zr, y, zr, &s.sensors, 128).unwrap();
    let expected = OMEGA * (OMEGA * r - PI / 4.0).cos().powi(2) / (8.0 * r);
    assert!(p.im.abs() < 1e-12 * p.re.abs());
    assert!(close(p.re, expected, 0.10), "{p} vs {expected}");
}

#[test]
fn speckle_covariance_angle_convergence() {
    let s = scenario();
    let (a, b, y) = (Point2::new(-0.2, 0.5), Point2::new(0.1, 0.3), Point2::new(0.6, -0.4));
    let p64 = speckle_covariance_P(OMEGA, a, y, b, &s.sensors, 64).unwrap();
    let p128 = speckle_covariance_P(OMEGA, a, y, b, &s.sensors, 128).unwrap();
    assert!((p64 - p128).norm() < 1e-3 * p128.norm());
}

#[test]
fn speckle_covariance_is_nearly_hermitian() {
    let s = scenario();
    let y = Point2::new(0.6, -0.4);
    for (a, b) in [
        (Point2::new(-0.2, 0.5), Point2::new(0.1, 0.3)),
        (Point2::new(0.0, 0.0), Point2::new(-0.5, -0.5)),
    ] {
        let p = speckle_covariance_P(OMEGA, a, y, b, &s.sensors, 64).unwrap();
        let q = speckle_covariance_P(OMEGA, b, y, a, &s.sensors, 64).unwrap();
        let scale = speckle_covariance_P(OMEGA, a, y, a, &s.sensors, 64).unwrap().norm();
        assert!((p - q.conj()).norm() < 0.05 * scale, "{p} vs {q}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn medium_snr_monotone(d in 0.5f64..2.0, sig in 0.5f64..2.0, l in 0.5f64..2.0) {
        let base = predict(&scenario()).snr_I_medium.value();
        let mut s = scenario();
        s.reflector.delta *= d;
        let bigger_delta = predict(&s).snr_I_medium.value();
        prop_assert!(close(bigger_delta, base * d * d, 1e-12));
        let mut s = scenario();
        s.medium.sigma_mu *= sig;
        s.medium.l_mu *= l;
        let rough = predict(&s).snr_I_medium.value();
        prop_assert!(close(rough, base / (sig * l), 1e-12));
    }

    #[test]
    fn meas_snr_grows_with_illuminations(n in 1usize..64, sigma in 1e-4f64..1.0) {
        let mut s = scenario();
        s.noise.sigma = sigma;
        s.n_illuminations = n;
        let a = predict(&s);
        s.n_illuminations = 4 * n;
        let b = predict(&s);
        prop_assert!(close(b.snr_I_meas.value(), 2.0 * a.snr_I_meas.value(), 1e-12));
        prop_assert!(close(b.snr_J_meas.value(), 2.0 * a.snr_J_meas.value(), 1e-12));
    }
}
