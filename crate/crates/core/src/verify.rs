//! End-to-end checks of the Brunn-Minkowski inequalities, concavity of
//! `T^{1/4}` along perturbation paths, and the Poincare-type inequality on
//! the boundary in its arc-length and normal-angle forms.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{minkowski_combine, volume, ConvexBody2D, TestFunction};
use crate::torsion::{compute_bundle_with, BundleOptions, TorsionBundle};
use crate::variation::{sample_path_with, VariationFields};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Equality,
    Violated,
}

impl Verdict {
    /// `violation` and `equality` are absolute thresholds on `gap`.
    pub fn classify(gap: f64, violation: f64, equality: f64) -> Self {
        if !(gap >= -violation) {
            Verdict::Violated
        } else if gap.abs() <= equality {
            Verdict::Equality
        } else {
            Verdict::Holds
        }
    }
}

/// One check: both sides of an inequality `lhs <= rhs`, with `gap = rhs - lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub inputs: Value,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    /// Absolute violation threshold: the check fails when `gap < -tol`.
    pub tol: f64,
    pub verdict: Verdict,
    pub diagnostics: BTreeMap<String, Value>,
    pub timing_ms: f64,
}

impl VerificationReport {
    pub fn new(
        check: &str,
        inputs: Value,
        lhs: f64,
        rhs: f64,
        tol: f64,
        equality_tol: f64,
    ) -> Self {
        let gap = rhs - lhs;
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("equality_tol".into(), json!(equality_tol));
        Self {
            check: check.into(),
            inputs,
            lhs,
            rhs,
            gap,
            tol,
            verdict: Verdict::classify(gap, tol, equality_tol),
            diagnostics,
            timing_ms: 0.0,
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.diagnostics.insert(
            key.into(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
        self
    }

    /// Agreement check between two estimates of one quantity: equality when
    /// `|rhs - lhs| <= tol`, violated otherwise.
    pub fn agreement(check: &str, inputs: Value, lhs: f64, rhs: f64, tol: f64) -> Self {
        let mut report = Self::new(check, inputs, lhs, rhs, tol, tol);
        report.verdict = if (rhs - lhs).abs() <= tol {
            Verdict::Equality
        } else {
            Verdict::Violated
        };
        report
    }

    /// A residual that must stay below `tol`, recorded as `lhs` against a
    /// zero `rhs`.
    pub fn residual(check: &str, inputs: Value, residual: f64, tol: f64) -> Self {
        Self::agreement(check, inputs, residual, 0.0, tol)
    }

    fn timed(mut self, start: Instant) -> Self {
        self.timing_ms = start.elapsed().as_secs_f64() * 1e3;
        self
    }
}

/// Absolute tolerances, relative to a scale chosen by each check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub bm_volume: f64,
    pub bm_volume_equality: f64,
    pub bm_torsion: f64,
    pub bm_torsion_equality: f64,
    pub concavity: f64,
    pub poincare: f64,
    pub poincare_equality: f64,
    pub constraint: f64,
    pub forms_agreement: f64,
    /// Relative agreement of variation formulas with finite differences.
    pub variation_first: f64,
    pub variation_second: f64,
    pub adjoint: f64,
    /// Scaled residual of the boundary Hessian identities on solved fields.
    pub hessian: f64,
    /// Residual of the same identities in closed form.
    pub hessian_exact: f64,
    pub oracle_violation: f64,
    pub oracle_equality: f64,
    /// Closed-form against quadrature values (rigidity, surface area).
    pub oracle_quadrature: f64,
    /// Frame dependence of frame-invariant quantities.
    pub frame_invariance: f64,
    pub homothety: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            bm_volume: 1e-10,
            bm_volume_equality: 1e-10,
            bm_torsion: 1e-4,
            bm_torsion_equality: 5e-3,
            concavity: 1e-4,
            poincare: 1e-2,
            poincare_equality: 2e-2,
            constraint: 1e-8,
            forms_agreement: 1e-6,
            variation_first: 1e-2,
            variation_second: 5e-2,
            adjoint: 1e-2,
            hessian: 5e-2,
            hessian_exact: 1e-8,
            oracle_violation: 1e-2,
            oracle_equality: 1e-6,
            oracle_quadrature: 1e-3,
            frame_invariance: 1e-8,
            homothety: 1e-10,
        }
    }
}

/// `t_j = j / (m - 1)`.
pub fn uniform_samples(m: usize) -> Vec<f64> {
    (0..m).map(|j| j as f64 / (m - 1) as f64).collect()
}

/// Result of testing concavity of `t -> g((1-t) A + t B)` against its chord.
struct ChordTest {
    /// Smallest `g(t) - chord(t)` over interior samples.
    min_gap: f64,
    at: usize,
    /// Largest `|g(t) - chord(t)|`.
    max_deviation: f64,
    /// Largest discrete second difference.
    max_second_difference: f64,
}

fn chord_test(values: &[f64], t: &[f64]) -> ChordTest {
    let m = values.len();
    let (g0, g1) = (values[0], values[m - 1]);
    let mut out = ChordTest {
        min_gap: f64::INFINITY,
        at: 0,
        max_deviation: 0.0,
        max_second_difference: f64::NEG_INFINITY,
    };
    for j in 1..m - 1 {
        let d = values[j] - ((1.0 - t[j]) * g0 + t[j] * g1);
        if d < out.min_gap {
            out.min_gap = d;
            out.at = j;
        }
        out.max_deviation = out.max_deviation.max(d.abs());
        out.max_second_difference = out
            .max_second_difference
            .max(values[j + 1] - 2.0 * values[j] + values[j - 1]);
    }
    out
}

fn chord_report(
    check: &str,
    inputs: Value,
    values: &[f64],
    t: &[f64],
    scale: f64,
    tol: f64,
    eq_tol: f64,
) -> VerificationReport {
    let test = chord_test(values, t);
    let j = test.at;
    let chord = (1.0 - t[j]) * values[0] + t[j] * values[values.len() - 1];
    VerificationReport::new(check, inputs, chord, values[j], tol * scale, eq_tol * scale)
        .with("scale", scale)
        .with("t_min_gap", t[j])
        .with("chord_deviation", test.max_deviation / scale)
        .with("max_second_difference", test.max_second_difference)
        .with("samples", values)
}

/// `V((1-t) A + t B)^{1/2} >= (1-t) V(A)^{1/2} + t V(B)^{1/2}` at `m` samples.
pub fn verify_bm_volume(
    a: &ConvexBody2D,
    b: &ConvexBody2D,
    m: usize,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let t = check_samples(m)?;
    let values = t
        .iter()
        .map(|&s| Ok(volume(&minkowski_combine(a, b, 1.0 - s, s)?).sqrt()))
        .collect::<Result<Vec<_>>>()?;
    let scale = values[0].max(values[m - 1]);
    let inputs = json!({ "m": m, "nodes": a.nodes() });
    Ok(chord_report(
        "bm_volume",
        inputs,
        &values,
        &t,
        scale,
        tol.bm_volume,
        tol.bm_volume_equality,
    )
    .timed(start))
}

/// `T((1-t) A + t B)^{1/4}` against its chord at `m` samples.
pub fn verify_bm_torsion(
    a: &ConvexBody2D,
    b: &ConvexBody2D,
    m: usize,
    delta: f64,
    options: &BundleOptions,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let t = check_samples(m)?;
    let values = t
        .iter()
        .map(|&s| {
            let body = minkowski_combine(a, b, 1.0 - s, s)?;
            Ok(compute_bundle_with(&body, delta, options)?
                .rigidity()
                .powf(0.25))
        })
        .collect::<Result<Vec<_>>>()?;
    let scale = values[0];
    let inputs = json!({ "m": m, "delta": delta, "nodes": a.nodes() });
    // discretization error makes every path look nearly linear at the
    // equality tolerance, so it only applies to homothetic pairs
    let homothetic = equality_diagnostics(a, b).homothetic;
    let eq_tol = if homothetic {
        tol.bm_torsion_equality
    } else {
        0.0
    };
    Ok(chord_report(
        "bm_torsion",
        inputs,
        &values,
        &t,
        scale,
        tol.bm_torsion,
        eq_tol,
    )
    .with("homothetic", homothetic)
    .timed(start))
}

fn check_samples(m: usize) -> Result<Vec<f64>> {
    if m < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 samples, got {m}"
        )));
    }
    Ok(uniform_samples(m))
}

/// Discrete concavity of `f(t)^{1/4}`, `f(t) = T(h + t phi)`, on `m` samples
/// of `[-t_max, t_max]`: the largest second difference must not exceed
/// `tol * f(0)^{1/4}`.
pub fn concavity_check(
    body: &ConvexBody2D,
    phi: &TestFunction,
    m: usize,
    t_max: f64,
    delta: f64,
    options: &BundleOptions,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let start = Instant::now();
    if m < 3 || !(t_max > 0.0) {
        return Err(Error::InvalidArgument(
            "concavity check needs m >= 3 and t_max > 0".into(),
        ));
    }
    let t: Vec<f64> = (0..m)
        .map(|j| -t_max + 2.0 * t_max * j as f64 / (m - 1) as f64)
        .collect();
    let path = sample_path_with(body, phi, &t, delta, options)?;
    let roots: Vec<f64> = path.values().iter().map(|f| f.powf(0.25)).collect();
    let scale = roots[m / 2];
    let worst = (1..m - 1)
        .map(|j| roots[j + 1] - 2.0 * roots[j] + roots[j - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    let inputs = json!({ "m": m, "t_max": t_max, "delta": delta, "phi": phi });
    Ok(VerificationReport::new(
        "concavity",
        inputs,
        worst,
        0.0,
        tol.concavity * scale,
        tol.concavity * scale,
    )
    .with("scale", scale)
    .with("t", &t)
    .with("root_values", &roots)
    .timed(start))
}

/// Both sides of the Poincare-type inequality and their ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareSides {
    /// `-\int kappa psi^2 |grad U|^2 ds`
    pub curvature: f64,
    /// `-2 \int psi (grad U' . nu) |grad U| ds`
    pub udot: f64,
    /// `4 \int psi^2 |grad U| ds`
    pub four: f64,
    pub lhs: f64,
    /// `\int kappa^{-1} psi_s^2 |grad U|^2 ds`
    pub rhs: f64,
    /// The `U'` term with `|grad U|^2` in place of `|grad U|`.
    pub udot_power2: f64,
    pub lhs_power2: f64,
}

/// Arc-length form: `ds = w d theta`, `kappa = 1 / w`, `psi_s = psi' / w`.
pub fn boundary_form(bundle: &TorsionBundle, fields: &VariationFields) -> PoincareSides {
    let body = bundle.body();
    let g = bundle.gradmag().values();
    let w = body.w();
    let (p, dp, un) = (
        fields.phi.values(),
        fields.phi_prime.values(),
        fields.udot_normal.values(),
    );
    let ds = |f: &dyn Fn(usize) -> f64| -> f64 {
        (0..w.len()).map(|m| f(m) * w[m]).sum::<f64>() * 2.0 * std::f64::consts::PI / w.len() as f64
    };
    let kappa = |m: usize| 1.0 / w[m];
    let curvature = -ds(&|m| kappa(m) * p[m] * p[m] * g[m] * g[m]);
    let udot = -2.0 * ds(&|m| p[m] * un[m] * g[m]);
    let four = 4.0 * ds(&|m| p[m] * p[m] * g[m]);
    let rhs = ds(&|m| {
        let ps = dp[m] / w[m];
        ps * ps * g[m] * g[m] / kappa(m)
    });
    let udot_power2 = -2.0 * ds(&|m| p[m] * un[m] * g[m] * g[m]);
    PoincareSides {
        curvature,
        udot,
        four,
        lhs: curvature + udot + four,
        rhs,
        udot_power2,
        lhs_power2: curvature + udot_power2 + four,
    }
}

/// Normal-angle form: every integral against `d theta` with the cofactor
/// of the 1x1 reverse Weingarten map equal to one.
pub fn spherical_form(bundle: &TorsionBundle, fields: &VariationFields) -> PoincareSides {
    let body = bundle.body();
    let n = body.nodes();
    let g = bundle.gradmag().values();
    let w = body.w();
    let (p, dp, un) = (
        fields.phi.values(),
        fields.phi_prime.values(),
        fields.udot_normal.values(),
    );
    let dtheta = |f: &dyn Fn(usize) -> f64| -> f64 {
        (0..n).map(f).sum::<f64>() * 2.0 * std::f64::consts::PI / n as f64
    };
    let curvature = -dtheta(&|m| g[m] * g[m] * p[m] * p[m]);
    let udot = -2.0 * dtheta(&|m| p[m] * w[m] * g[m] * un[m]);
    let four = 4.0 * dtheta(&|m| p[m] * p[m] * w[m] * g[m]);
    let rhs = dtheta(&|m| g[m] * g[m] * dp[m] * dp[m]);
    let udot_power2 = -2.0 * dtheta(&|m| p[m] * w[m] * g[m] * g[m] * un[m]);
    PoincareSides {
        curvature,
        udot,
        four,
        lhs: curvature + udot + four,
        rhs,
        udot_power2,
        lhs_power2: curvature + udot_power2 + four,
    }
}

/// Which form supplies `lhs` and `rhs` of a Poincare report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PoincareForm {
    Boundary,
    Spherical,
}

/// Projects `psi` to torsional-mean zero, builds `U'` and evaluates both
/// forms of the inequality.
pub fn verify_poincare(
    bundle: &TorsionBundle,
    psi: &TestFunction,
    form: PoincareForm,
    options: &BundleOptions,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let n = bundle.body().nodes();
    let projected = bundle.mean_zero_direction(psi);
    let [phi, phi_prime, _] = projected.sample_derivs(n);
    let residual = bundle.constraint_residual(&phi);
    if residual > tol.constraint {
        return Err(Error::ConstraintNotMet { residual });
    }
    let fields = VariationFields::from_samples(bundle, phi, phi_prime, options)?;
    let boundary = boundary_form(bundle, &fields);
    let spherical = spherical_form(bundle, &fields);
    let forms_scale = boundary.lhs.abs() + boundary.rhs.abs();
    let forms_gap = if forms_scale > 0.0 {
        ((boundary.lhs - spherical.lhs).abs()).max((boundary.rhs - spherical.rhs).abs())
            / forms_scale
    } else {
        0.0
    };
    let sides = match form {
        PoincareForm::Boundary => boundary,
        PoincareForm::Spherical => spherical,
    };
    let scale = sides.lhs.abs() + sides.rhs.abs();
    let check = match form {
        PoincareForm::Boundary => "poincare_boundary",
        PoincareForm::Spherical => "poincare_spherical",
    };
    let inputs = json!({ "psi": psi, "delta": bundle.delta(), "nodes": n });
    Ok(VerificationReport::new(
        check,
        inputs,
        sides.lhs,
        sides.rhs,
        tol.poincare * scale,
        tol.poincare_equality * scale,
    )
    .with("terms", sides)
    .with("power2_lhs", sides.lhs_power2)
    .with("power2_gap", sides.rhs - sides.lhs_power2)
    .with("constraint_residual", residual)
    .with("forms_relative_gap", forms_gap)
    .with("forms_agree", forms_gap <= tol.forms_agreement)
    .timed(start))
}

pub fn verify_poincare_boundary(
    bundle: &TorsionBundle,
    psi: &TestFunction,
    options: &BundleOptions,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    verify_poincare(bundle, psi, PoincareForm::Boundary, options, tol)
}

pub fn verify_poincare_spherical(
    bundle: &TorsionBundle,
    phi: &TestFunction,
    options: &BundleOptions,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    verify_poincare(bundle, phi, PoincareForm::Spherical, options, tol)
}

/// Whether two bodies are homothetic, read off their support coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomothetyDiagnostics {
    pub homothetic: bool,
    /// Ratio of mean widths `c0_B / c0_A`.
    pub beta: f64,
    /// Translation `v` with `h_B = beta h_A + xi . v` when homothetic.
    pub translation: [f64; 2],
    /// Largest coefficient of degree >= 2 in `h_B - beta h_A`, relative to `c0_B`.
    pub residual: f64,
}

/// Relative size of surviving coefficients below which two bodies are
/// reported homothetic.
pub const HOMOTHETY_TOL: f64 = 1e-9;

pub fn equality_diagnostics(a: &ConvexBody2D, b: &ConvexBody2D) -> HomothetyDiagnostics {
    let (sa, sb) = (a.support(), b.support());
    let beta = sb.c0() / sa.c0();
    let diff = sb.combine(1.0, sa, -beta);
    let (v1, v2) = diff.coeff(1);
    let centered = diff.centered();
    let residual = (2..=centered.degree())
        .map(|k| {
            let (c, s) = centered.coeff(k);
            c.abs().max(s.abs())
        })
        .fold(centered.c0().abs(), f64::max)
        / sb.c0();
    HomothetyDiagnostics {
        homothetic: residual <= HOMOTHETY_TOL,
        beta,
        translation: [v1, v2],
        residual,
    }
}
