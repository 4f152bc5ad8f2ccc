//! Acceptance suite: one pass/fail line per criterion, nonzero exit status
//! when any criterion fails. Runs at grid spacing 1/128 with 256 nodes.

use std::f64::consts::PI;
use std::time::Instant;

use torsion_lab::ellipsoid::{
    ellipsoid_t, homothety_path_3d, max_identity_residual, quadrature_rigidity, verify_theorem,
    verify_theorem_3d, Ellipsoid, OracleTolerances,
};
use torsion_lab::geometry::{
    diameter, random_body, random_test_function, scale, translate, ConvexBody2D, TestFunction,
};
use torsion_lab::quadrature::S2Quadrature;
use torsion_lab::torsion::{compute_bundle_with, BundleOptions, TorsionBundle};
use torsion_lab::variation::{
    finite_difference, hessian_boundary_identities, second_variation_of, selfadjointness_check,
    stations, FdSteps,
};
use torsion_lab::verify::{
    concavity_check, verify_bm_torsion, verify_bm_volume, verify_poincare, PoincareForm,
    Tolerances, Verdict,
};
use torsion_lab::TrigSupport;

const DELTA: f64 = 1.0 / 128.0;
const NODES: usize = 256;
const K: usize = 6;
const ALPHA: f64 = 0.6;

type Outcome = Result<(bool, String), String>;

struct Lab {
    options: BundleOptions,
    tol: Tolerances,
    bodies: Vec<ConvexBody2D>,
    bundles: Vec<TorsionBundle>,
}

impl Lab {
    fn new() -> Self {
        let options = BundleOptions::default();
        let bodies: Vec<ConvexBody2D> = (0..20)
            .map(|i| random_body(1000 + i, K, ALPHA, NODES).expect("random corpus"))
            .collect();
        let bundles = bodies
            .iter()
            .map(|b| compute_bundle_with(b, DELTA, &options).expect("random corpus solves"))
            .collect();
        Self {
            options,
            tol: Tolerances::default(),
            bodies,
            bundles,
        }
    }

    fn bundle(&self, body: &ConvexBody2D) -> Result<TorsionBundle, String> {
        compute_bundle_with(body, DELTA, &self.options).map_err(|e| e.to_string())
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn err(e: torsion_lab::Error) -> String {
    e.to_string()
}

fn disk() -> ConvexBody2D {
    ConvexBody2D::disk(1.0, NODES).unwrap()
}

fn c1_disk(lab: &Lab) -> Outcome {
    let exact = PI / 2.0;
    let ladder = [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0];
    let mut errors = vec![];
    let mut fine = [0.0; 3];
    for d in ladder {
        let b = compute_bundle_with(&disk(), d, &lab.options).map_err(err)?;
        errors.push([(b.t_energy - exact).abs(), (b.t_mass - exact).abs()]);
        fine = [b.t_energy, b.t_mass, b.t_boundary];
    }
    let worst = fine.iter().map(|&t| rel(t, exact)).fold(0.0, f64::max);
    // the boundary route is exact on the disk, so orders come from the
    // two volume routes
    let orders: Vec<f64> = (0..2)
        .flat_map(|r| (0..2).map(move |k| (r, k)))
        .map(|(r, k)| (errors[k][r] / errors[k + 1][r]).log2())
        .collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((
        worst <= 2e-3 && min_order >= 1.8,
        format!("max rel error {worst:.2e} (<= 2e-3), min order {min_order:.3} (>= 1.8), orders {orders:.3?}"),
    ))
}

fn c2_ellipse(lab: &Lab) -> Outcome {
    let body = ConvexBody2D::ellipse_default(2.0, 1.0, NODES).map_err(err)?;
    let b = lab.bundle(&body)?;
    let exact = 8.0 * PI / 5.0;
    let worst = [b.t_energy, b.t_mass, b.t_boundary]
        .iter()
        .map(|&t| rel(t, exact))
        .fold(0.0, f64::max);
    let centre = b.solution().value_at([0.0, 0.0]).map_err(err)?;
    let g0 = b.gradmag().values()[0];
    let ok = worst <= 5e-3 && (centre - 0.8).abs() <= 1e-3 && rel(g0, 0.8) <= 0.02;
    Ok((
        ok,
        format!("T rel error {worst:.2e} (<= 5e-3), U(0,0) = {centre:.6} (0.8 +- 1e-3), |grad U|(2,0) = {g0:.5} (0.8 +- 2%)"),
    ))
}

fn c3_homogeneity(lab: &Lab) -> Outcome {
    let (mut worst_scale, mut worst_shift) = (0.0_f64, 0.0_f64);
    for (body, bundle) in lab.bodies.iter().zip(&lab.bundles).take(10) {
        let t = bundle.rigidity();
        let doubled = lab.bundle(&scale(body, 2.0).map_err(err)?)?.rigidity();
        let shifted = lab
            .bundle(&translate(body, [0.37, -0.21]).map_err(err)?)?
            .rigidity();
        worst_scale = worst_scale.max(rel(doubled, 16.0 * t));
        worst_shift = worst_shift.max(rel(shifted, t));
    }
    Ok((
        worst_scale <= 5e-3 && worst_shift <= 5e-3,
        format!("T(2K)/16T rel {worst_scale:.2e}, T(K+v)/T rel {worst_shift:.2e} (each <= 5e-3, 10 bodies)"),
    ))
}

fn c4_gradient_bound(lab: &Lab) -> Outcome {
    let worst = lab
        .bodies
        .iter()
        .zip(&lab.bundles)
        .map(|(body, b)| b.gradmag().max() / diameter(body))
        .fold(0.0, f64::max);
    Ok((
        worst <= 1.01,
        format!("max boundary |grad U| / diam = {worst:.4} (<= 1.01, 20 bodies)"),
    ))
}

fn c5_first_variation(lab: &Lab) -> Outcome {
    let mut worst = 0.0_f64;
    for i in 0..10 {
        let phi = random_test_function(2000 + i as u64, 4, 0.3);
        let formula = lab.bundles[i].first_variation(&phi);
        let fd = finite_difference(
            &lab.bodies[i],
            &phi,
            DELTA,
            FdSteps::default().first,
            &lab.options,
        )
        .map_err(err)?;
        worst = worst.max(rel(formula, fd.first));
    }
    let mut translation = 0.0_f64;
    for b in &lab.bundles[..10] {
        let v = b.first_variation(&TestFunction::translation([0.6, 0.8]).unwrap());
        translation = translation.max(v.abs() / b.measure_mass());
    }
    let d = lab.bundle(&disk())?;
    let dilation = d.first_variation(&TestFunction::Dilation);
    let ok = worst <= 0.01 && translation <= 1e-3 && rel(dilation, 2.0 * PI) <= 0.01;
    Ok((
        ok,
        format!(
            "formula vs FD max rel {worst:.2e} (<= 1e-2); translation |f'|/mass {translation:.2e} (<= 1e-3); disk dilation {dilation:.5} vs 2pi"
        ),
    ))
}

fn c6_second_variation(lab: &Lab) -> Outcome {
    let d = lab.bundle(&disk())?;
    let s = second_variation_of(&d, &TestFunction::Dilation, &lab.options).map_err(err)?;
    let six_pi = 6.0 * PI;
    let terms_ok = rel(s.term_curv, -2.0 * PI) <= 0.02
        && s.term_udot.abs() <= 0.02 * six_pi
        && s.term_grad.abs() <= 0.02 * six_pi
        && rel(s.term_four, 8.0 * PI) <= 0.02;
    let translation = second_variation_of(
        &d,
        &TestFunction::translation([1.0, 0.0]).unwrap(),
        &lab.options,
    )
    .map_err(err)?
    .total;
    let mut worst = 0.0_f64;
    for i in 0..10 {
        let phi = random_test_function(3000 + i as u64, 4, 0.3);
        let formula = second_variation_of(&lab.bundles[i], &phi, &lab.options)
            .map_err(err)?
            .total;
        let fd = finite_difference(
            &lab.bodies[i],
            &phi,
            DELTA,
            FdSteps::default().second,
            &lab.options,
        )
        .map_err(err)?;
        worst = worst.max(rel(formula, fd.second));
    }
    let ok = rel(s.total, six_pi) <= 0.02
        && terms_ok
        && translation.abs() <= 0.02 * six_pi
        && worst <= 0.05;
    Ok((
        ok,
        format!(
            "disk dilation {:.5} vs 6pi, terms ({:.4}, {:.2e}, {:.2e}, {:.4}) ok={terms_ok}; disk translation {translation:.2e}; random formula vs FD max rel {worst:.2e} (<= 5e-2)",
            s.total, s.term_curv, s.term_udot, s.term_grad, s.term_four
        ),
    ))
}

fn c7_adjointness(lab: &Lab) -> Outcome {
    let mut worst = 0.0_f64;
    for i in 0..10 {
        let p1 = random_test_function(4000 + i as u64, 4, 0.3);
        let p2 = random_test_function(5000 + i as u64, 4, 0.3);
        let a = selfadjointness_check(&lab.bundles[i], &p1, &p2, &lab.options).map_err(err)?;
        worst = worst.max(a.gap);
    }
    let d = lab.bundle(&disk())?;
    let p1 = TestFunction::trig(TrigSupport::new(0.0, vec![0.0, 1.0], vec![]).unwrap());
    let p2 = TestFunction::trig(TrigSupport::new(0.0, vec![], vec![0.0, 0.0, 1.0]).unwrap());
    let a = selfadjointness_check(&d, &p1, &p2, &lab.options).map_err(err)?;
    let zero = a.a12.abs().max(a.a21.abs()) / a.scale;
    Ok((
        worst <= 0.01 && zero <= 1e-3,
        format!(
            "random max gap {worst:.2e} (<= 1e-2); disk cos2/sin3 pairing {zero:.2e} (<= 1e-3)"
        ),
    ))
}

fn c8_hessian(lab: &Lab) -> Outcome {
    let quad = S2Quadrature::default();
    let exact = [
        &[2.0, 1.0][..],
        &[1.0, 1.0],
        &[3.0, 0.5],
        &[1.0, 1.0, 1.0],
        &[1.5, 1.0, 0.75],
        &[2.0, 1.0, 0.5],
    ]
    .iter()
    .map(|axes| max_identity_residual(&Ellipsoid::new(axes).unwrap(), &quad))
    .fold(0.0, f64::max);
    let mut solved = 0.0_f64;
    for b in &lab.bundles[..10] {
        let r = hessian_boundary_identities(b, &stations(16)).map_err(err)?;
        solved = solved.max(r.iter().map(|x| x.max_scaled()).fold(0.0, f64::max));
    }
    Ok((
        exact <= 1e-8 && solved <= 5e-2,
        format!("closed form max {exact:.2e} (<= 1e-8, all quadrature nodes); solved max scaled {solved:.2e} (<= 5e-2, 10 bodies x 16 stations)"),
    ))
}

fn c9_brunn_minkowski(lab: &Lab) -> Outcome {
    let mut worst_torsion = f64::INFINITY;
    let mut worst_volume = f64::INFINITY;
    for i in 0..20u64 {
        let a = random_body(6000 + 2 * i, K, ALPHA, NODES).map_err(err)?;
        let b = random_body(6001 + 2 * i, K, ALPHA, NODES).map_err(err)?;
        let r = verify_bm_torsion(&a, &b, 11, DELTA, &lab.options, &lab.tol).map_err(err)?;
        let v = verify_bm_volume(&a, &b, 11, &lab.tol).map_err(err)?;
        if r.verdict == Verdict::Violated || v.verdict == Verdict::Violated {
            return Ok((
                false,
                format!(
                    "pair {i}: torsion gap {:.2e}, volume gap {:.2e}",
                    r.gap, v.gap
                ),
            ));
        }
        worst_torsion = worst_torsion.min(r.gap / r.diagnostics["scale"].as_f64().unwrap());
        worst_volume = worst_volume.min(v.gap / v.diagnostics["scale"].as_f64().unwrap());
    }
    let mut worst_concavity = f64::NEG_INFINITY;
    for i in 0..3 {
        let phi = random_test_function(7000 + i as u64, 4, 0.3);
        let r = concavity_check(
            &lab.bodies[i],
            &phi,
            11,
            0.05,
            DELTA,
            &lab.options,
            &lab.tol,
        )
        .map_err(err)?;
        if r.verdict == Verdict::Violated {
            return Ok((
                false,
                format!("concavity path {i}: max second difference {:.2e}", r.lhs),
            ));
        }
        worst_concavity = worst_concavity.max(r.lhs / r.diagnostics["scale"].as_f64().unwrap());
    }
    let a = &lab.bodies[0];
    let b = translate(&scale(a, 1.6).map_err(err)?, [0.2, 0.1]).map_err(err)?;
    let ht = verify_bm_torsion(a, &b, 11, DELTA, &lab.options, &lab.tol).map_err(err)?;
    let hv = verify_bm_volume(a, &b, 11, &lab.tol).map_err(err)?;
    let dev_t = ht.diagnostics["chord_deviation"].as_f64().unwrap();
    let dev_v = hv.diagnostics["chord_deviation"].as_f64().unwrap();
    Ok((
        dev_t <= 5e-3 && dev_v <= 1e-10,
        format!(
            "20 pairs x 11: min torsion gap/scale {worst_torsion:.2e}, min volume gap/scale {worst_volume:.2e}; 3 concavity paths max second diff/scale {worst_concavity:.2e} (<= 1e-4); homothety chord deviation torsion {dev_t:.2e} (<= 5e-3), volume {dev_v:.2e} (<= 1e-10)"
        ),
    ))
}

fn c10_poincare(lab: &Lab) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut forms = 0.0_f64;
    for i in 0..10 {
        for j in 0..5u64 {
            let psi = random_test_function(8000 + 10 * i as u64 + j, 5, 0.5);
            let r = verify_poincare(
                &lab.bundles[i],
                &psi,
                PoincareForm::Boundary,
                &lab.options,
                &lab.tol,
            )
            .map_err(err)?;
            worst = worst.min(r.gap / (r.lhs.abs() + r.rhs.abs()));
            forms = forms.max(r.diagnostics["forms_relative_gap"].as_f64().unwrap());
        }
    }
    let x = TestFunction::translation([1.0, 0.0]).unwrap();
    let d = verify_poincare(
        &lab.bundle(&disk())?,
        &x,
        PoincareForm::Boundary,
        &lab.options,
        &lab.tol,
    )
    .map_err(err)?;
    let disk_ok = rel(d.lhs, PI) <= 0.02 && rel(d.rhs, PI) <= 0.02;
    let ellipse = ConvexBody2D::ellipse_default(2.0, 1.0, NODES).map_err(err)?;
    let e = verify_poincare(
        &lab.bundle(&ellipse)?,
        &x,
        PoincareForm::Boundary,
        &lab.options,
        &lab.tol,
    )
    .map_err(err)?;
    let e_gap = e.gap / (e.lhs.abs() + e.rhs.abs());
    let power2 = e.diagnostics["power2_gap"].as_f64().unwrap();
    let ok = worst >= -0.01 && disk_ok && forms <= 1e-6 && e_gap.abs() <= 0.02;
    Ok((
        ok,
        format!(
            "50 random psi min gap/scale {worst:.3e} (>= -1e-2); disk lhs {:.5} rhs {:.5} vs pi; forms max rel {forms:.1e} (<= 1e-6); ellipse gap/scale {e_gap:.2e} (<= 2e-2), power-2 gap {power2:.4} (diagnostic)",
            d.lhs, d.rhs
        ),
    ))
}

fn c11_centroid(lab: &Lab) -> Outcome {
    let worst = lab
        .bundles
        .iter()
        .map(|b| {
            let [x, y] = b.measure_centroid();
            x.hypot(y) / b.measure_mass()
        })
        .fold(0.0, f64::max);
    Ok((
        worst <= 1e-3,
        format!("max |centroid| / mass {worst:.2e} (<= 1e-3, 20 bodies)"),
    ))
}

fn c12_ellipsoid() -> Outcome {
    let quad = S2Quadrature::default();
    let ball = Ellipsoid::new(&[1.0, 1.0, 1.0]).map_err(err)?;
    let (mass, energy) = quadrature_rigidity(&ball, 8, &quad);
    let exact = 16.0 * PI / 45.0;
    let t_ok = rel(ellipsoid_t(&ball), exact) <= 1e-12
        && rel(mass, exact) <= 1e-3
        && rel(energy, exact) <= 1e-3;
    let tol = OracleTolerances::default();
    let b = verify_theorem_3d(&ball, &[0.0, 0.0, 1.0], &quad, &tol).map_err(err)?;
    let ball_gap = (b.rhs - b.lhs).abs();
    let e = Ellipsoid::new(&[1.5, 1.0, 0.75]).map_err(err)?;
    let r = verify_theorem_3d(&e, &[1.0, 0.0, 0.0], &quad, &tol).map_err(err)?;
    let e_gap = (r.rhs - r.lhs).abs() / r.rhs.abs();
    let planar = verify_theorem(
        &Ellipsoid::new(&[2.0, 1.0]).map_err(err)?,
        &[1.0, 0.0],
        &quad,
        &tol,
    )
    .map_err(err)?;
    let h = homothety_path_3d(&ball, 2.0, 11, 1e-10).map_err(err)?;
    let h2 = homothety_path_3d(&e, 3.0, 11, 1e-10).map_err(err)?;
    let ok = t_ok
        && ball_gap <= 1e-6
        && b.verdict == Verdict::Equality
        && e_gap <= 0.01
        && planar.verdict == Verdict::Equality
        && h.lhs <= 1e-10
        && h2.lhs <= 1e-10;
    Ok((
        ok,
        format!(
            "T(ball) quadrature rel {:.1e}; ball |lhs - rhs| {ball_gap:.1e} (<= 1e-6); ellipsoid rel gap {e_gap:.1e} (<= 1e-2); homothety deviation {:.1e}, {:.1e} (<= 1e-10)",
            rel(mass, exact),
            h.lhs,
            h2.lhs
        ),
    ))
}

fn main() {
    let start = Instant::now();
    let lab = Lab::new();
    println!(
        "random corpus: 20 bodies solved in {:.1} s",
        start.elapsed().as_secs_f64()
    );
    let criteria: Vec<(&str, Box<dyn Fn(&Lab) -> Outcome>)> = vec![
        ("torsion oracle, disk", Box::new(c1_disk)),
        ("torsion oracle, ellipse", Box::new(c2_ellipse)),
        (
            "homogeneity and translation invariance",
            Box::new(c3_homogeneity),
        ),
        ("gradient bound", Box::new(c4_gradient_bound)),
        ("first variation", Box::new(c5_first_variation)),
        ("second variation", Box::new(c6_second_variation)),
        ("self-adjointness", Box::new(c7_adjointness)),
        ("Hessian identities", Box::new(c8_hessian)),
        (
            "Brunn-Minkowski and concavity",
            Box::new(c9_brunn_minkowski),
        ),
        ("Poincare-type inequality", Box::new(c10_poincare)),
        ("torsional measure centroid", Box::new(c11_centroid)),
        ("3D ellipsoid oracle", Box::new(|_: &Lab| c12_ellipsoid())),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match check(&lab) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1} s]",
            k + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "{} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
