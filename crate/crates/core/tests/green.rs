use proptest::prelude::*;
use shg_core::specfun::bessel_j0;
use shg_core::{green0, Complex, Point2};

fn rel(a: Complex, b: Complex, scale: f64) -> f64 {
    (a - b).norm() / scale
}

fn point(r: f64, angle: f64) -> Point2 {
    Point2::new(r * angle.cos(), r * angle.sin())
}

#[test]
fn imaginary_part_vanishes_at_j0_root() {
    let g = green0(1.0, point(2.404825557695773, 0.4), Point2::ORIGIN).unwrap();
    assert!(g.value.im.abs() < 1e-9);
}

#[test]
fn reciprocity_is_exact() {
    let x = Point2::new(12.0, -3.5);
    let z = Point2::new(-0.2, 0.5);
    assert_eq!(green0(8.0, x, z).unwrap().value, green0(8.0, z, x).unwrap().value);
}

#[test]
fn gradient_matches_finite_difference_at_reference_point() {
    let omega = 8.0;
    let z = Point2::new(-0.2, 0.5);
    let x = z + point(0.7, 2.2);
    let g = green0(omega, x, z).unwrap();
    let h = 1e-6;
    for (k, e) in [Point2::new(h, 0.0), Point2::new(0.0, h)].into_iter().enumerate() {
        let fd = (green0(omega, x + e, z).unwrap().value - green0(omega, x - e, z).unwrap().value) / (2.0 * h);
        assert!(rel(fd, g.gradient[k], g.gradient[k].norm()) < 1e-6);
    }
}

#[test]
fn far_field_decay() {
    let mut worst: f64 = 0.0;
    for k in 1..2000 {
        let r = 0.05 * k as f64;
        let g = green0(3.0, point(r, 0.3), Point2::ORIGIN).unwrap();
        worst = worst.max(g.value.norm() * (3.0 * r).sqrt());
    }
    // (1/4)|H0(t)|√t → 1/(2√(2π)) ≈ 0.2
    assert!(worst < 0.25);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn helmholtz_residual(omega in 0.2f64..30.0, t in 0.1f64..100.0, a in 0.0f64..6.3, zx in -2.0f64..2.0, zy in -2.0f64..2.0) {
        let z = Point2::new(zx, zy);
        let x = z + point(t / omega, a);
        let g = green0(omega, x, z).unwrap();
        let trace = g.hessian[0][0] + g.hessian[1][1];
        prop_assert!((trace + g.value * (omega * omega)).norm() / g.value.norm() < 1e-8);
    }

    #[test]
    fn hessian_is_symmetric(omega in 0.2f64..30.0, t in 0.1f64..100.0, a in 0.0f64..6.3) {
        let g = green0(omega, point(t / omega, a), Point2::ORIGIN).unwrap();
        let scale = g.hessian.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        prop_assert!((g.hessian[0][1] - g.hessian[1][0]).norm() <= 1e-12 * scale);
    }

    #[test]
    fn swap_symmetries(omega in 0.2f64..30.0, x0 in -5.0f64..5.0, x1 in -5.0f64..5.0, z0 in -5.0f64..5.0, z1 in -5.0f64..5.0) {
        let (x, z) = (Point2::new(x0, x1), Point2::new(z0, z1));
        prop_assume!(x.distance(z) * omega > 1e-3);
        let a = green0(omega, x, z).unwrap();
        let b = green0(omega, z, x).unwrap();
        prop_assert_eq!(a.value, b.value);
        prop_assert_eq!(a.gradient[0], -b.gradient[0]);
        prop_assert_eq!(a.gradient[1], -b.gradient[1]);
    }

    #[test]
    fn imaginary_part_is_quarter_j0(omega in 0.2f64..30.0, t in 0.01f64..400.0) {
        let g = green0(omega, point(t / omega, 1.0), Point2::ORIGIN).unwrap();
        prop_assert!((g.value.im - 0.25 * bessel_j0(t).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn derivatives_match_finite_differences(omega in 0.5f64..20.0, t in 0.2f64..80.0, a in 0.0f64..6.3) {
        let z = Point2::new(0.1, -0.3);
        let r = t / omega;
        let x = z + point(r, a);
        let g = green0(omega, x, z).unwrap();
        let h = 1e-5 * r;
        let grad_scale = g.gradient[0].norm().max(g.gradient[1].norm());
        let hess_scale = g.hessian.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        for (k, e) in [Point2::new(h, 0.0), Point2::new(0.0, h)].into_iter().enumerate() {
            let p = green0(omega, x + e, z).unwrap();
            let m = green0(omega, x - e, z).unwrap();
            let dv = (p.value - m.value) / (2.0 * h);
            prop_assert!(rel(dv, g.gradient[k], grad_scale) < 1e-5);
            for l in 0..2 {
                let dg = (p.gradient[l] - m.gradient[l]) / (2.0 * h);
                prop_assert!(rel(dg, g.hessian[l][k], hess_scale) < 1e-5);
            }
        }
    }
}
