//! Invariants of the geometry, closed-form oracles and report plumbing,
//! checked on generated inputs.

use std::f64::consts::PI;

use nalgebra::DVector;
use proptest::prelude::*;

use torsion_lab::bodyfile::{parse_test_function, BodySpec};
use torsion_lab::ellipsoid::{
    boundary_quantities, ellipsoid_t, hessian_identity_residuals, Ellipsoid,
};
use torsion_lab::geometry::{
    diameter, minkowski_combine, random_body, scale, translate, volume, ConvexBody2D,
};
use torsion_lab::quadrature::{sphere_monomial, S2Quadrature};
use torsion_lab::verify::{verify_bm_volume, Tolerances, Verdict};

const N: usize = 128;

fn body() -> impl Strategy<Value = ConvexBody2D> {
    (0u64..10_000).prop_map(|seed| random_body(seed, 6, 0.6, N).unwrap())
}

fn unit3() -> impl Strategy<Value = DVector<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_filter("away from zero", |(x, y, z)| x * x + y * y + z * z > 0.01)
        .prop_map(|(x, y, z)| DVector::from_vec(vec![x, y, z]).normalize())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn support_functions_add_under_minkowski_sums(a in body(), b in body(), s in 0.0f64..2.0, t in 0.1f64..2.0) {
        let c = minkowski_combine(&a, &b, s, t).unwrap();
        for m in (0..N).step_by(7) {
            prop_assert!((c.h()[m] - (s * a.h()[m] + t * b.h()[m])).abs() < 1e-12);
            prop_assert!((c.w()[m] - (s * a.w()[m] + t * b.w()[m])).abs() < 1e-11);
        }
    }

    #[test]
    fn boundary_points_are_tangency_points(a in body()) {
        // F(theta) . n(theta) = h(theta) and every other boundary point lies
        // behind the supporting line
        let f = a.boundary();
        for m in (0..N).step_by(5) {
            let n = ConvexBody2D::normal(a.theta()[m]);
            prop_assert!((f[m][0] * n[0] + f[m][1] * n[1] - a.h()[m]).abs() < 1e-12);
            for p in f.iter().step_by(3) {
                prop_assert!(p[0] * n[0] + p[1] * n[1] <= a.h()[m] + 1e-12);
            }
        }
    }

    #[test]
    fn gauss_map_of_boundary_points(a in body()) {
        // the tangent F' = w t is orthogonal to the normal
        for m in (0..N).step_by(9) {
            let theta = a.theta()[m];
            let eps = 1e-6;
            let (p, q) = (a.point(theta + eps), a.point(theta - eps));
            let n = ConvexBody2D::normal(theta);
            let d = [(p[0] - q[0]) / (2.0 * eps), (p[1] - q[1]) / (2.0 * eps)];
            prop_assert!((d[0] * n[0] + d[1] * n[1]).abs() < 1e-7);
            prop_assert!((d[0].hypot(d[1]) - a.w()[m]).abs() < 1e-6);
        }
    }

    #[test]
    fn translation_and_scaling(a in body(), v in prop::array::uniform2(-2.0f64..2.0), s in 0.2f64..5.0) {
        let moved = translate(&a, v).unwrap();
        for m in 0..N {
            prop_assert!((moved.w()[m] - a.w()[m]).abs() < 1e-12);
        }
        prop_assert!((volume(&moved) - volume(&a)).abs() < 1e-12 * volume(&a));
        prop_assert!((diameter(&moved) - diameter(&a)).abs() < 1e-12 * diameter(&a));
        let scaled = scale(&a, s).unwrap();
        prop_assert!((volume(&scaled) - s * s * volume(&a)).abs() < 1e-12 * s * s * volume(&a));
        prop_assert!((diameter(&scaled) - s * diameter(&a)).abs() < 1e-12 * s * diameter(&a));
    }

    #[test]
    fn brunn_minkowski_for_area(a in body(), b in body()) {
        let r = verify_bm_volume(&a, &b, 11, &Tolerances::default()).unwrap();
        prop_assert_ne!(r.verdict, Verdict::Violated);
    }

    #[test]
    fn verdicts_are_scale_covariant(gap in -1.0f64..1.0, tol in 1e-6f64..0.5, eq in 1e-6f64..0.5, s in 1e-3f64..1e3) {
        prop_assert_eq!(Verdict::classify(gap, tol, eq), Verdict::classify(gap * s, tol * s, eq * s));
    }

    #[test]
    fn ellipsoid_rigidity_is_homogeneous(axes in prop::collection::vec(0.2f64..3.0, 2..=3), s in 0.1f64..10.0) {
        let e = Ellipsoid::new(&axes).unwrap();
        let n = axes.len() as i32;
        let scaled = ellipsoid_t(&e.scaled(s).unwrap());
        prop_assert!((scaled - s.powi(n + 2) * ellipsoid_t(&e)).abs() < 1e-12 * scaled);
    }

    #[test]
    fn ellipsoid_boundary_geometry(a in 0.3f64..3.0, b in 0.3f64..3.0, c in 0.3f64..3.0, xi in unit3()) {
        let e = Ellipsoid::new(&[a, b, c]).unwrap();
        let q = boundary_quantities(&e, &xi);
        // Gauss map inversion and support identity
        let n = DVector::from_iterator(3, q.point.iter().zip([a, b, c]).map(|(x, s)| x / (s * s))).normalize();
        prop_assert!((n - &xi).amax() < 1e-10);
        prop_assert!((q.point.dot(&xi) - q.support).abs() < 1e-12);
        // difference map close to the closed form, both positive definite
        let scale = q.weingarten_exact.amax();
        prop_assert!((&q.weingarten - &q.weingarten_exact).amax() < 1e-6 * scale.max(1.0));
        prop_assert!(q.weingarten.determinant() > 0.0 && q.weingarten.trace() > 0.0);
        prop_assert!(hessian_identity_residuals(&e, &xi).max() < 1e-8);
    }

    #[test]
    fn body_specs_round_trip(seed in 0u64..1000, half in 32usize..300) {
        let spec = BodySpec::random(seed, 2 * half);
        let again = BodySpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        prop_assert_eq!(&spec, &again);
        let odd = format!(r#"{{"kind": "disk", "nodes": {}}}"#, 2 * half + 1);
        let rejected = BodySpec::from_json(&odd).is_err();
        prop_assert!(rejected);
    }

    #[test]
    fn trig_language_evaluates_its_terms(k in 1usize..8, a in -1.0f64..1.0, b in -1.0f64..1.0, x in 0.0f64..6.3) {
        let f = parse_test_function(&format!("trig:k={k},a={a};k={k},b={b}")).unwrap();
        let kx = k as f64 * x;
        prop_assert!((f.eval(x) - (a * kx.cos() + b * kx.sin())).abs() < 1e-12);
    }
}

#[test]
fn sphere_rule_integrates_random_polynomials() {
    let q = S2Quadrature::default();
    let coeffs = [
        (3, 5, 2, 0.7),
        (8, 0, 4, -1.3),
        (2, 2, 2, 2.0),
        (10, 6, 6, 0.25),
    ];
    let approx = q.integrate(|p| {
        coeffs
            .iter()
            .map(|&(a, b, c, w)| w * p[0].powi(a) * p[1].powi(b) * p[2].powi(c))
            .sum()
    });
    let exact: f64 = coeffs
        .iter()
        .map(|&(a, b, c, w)| w * sphere_monomial(a as usize, b as usize, c as usize))
        .sum();
    assert!((approx - exact).abs() < 1e-12);
    assert!((sphere_monomial(0, 0, 0) - 4.0 * PI).abs() < 1e-14);
}
