//! Variations of `f(t) = T(h + t phi)`: path sampling, the four-term second
//! variation, self-adjointness of its boundary operator, finite-difference
//! cross-checks and the boundary Hessian identities of the torsion function.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::geometry::{validate_body, ConvexBody2D, TestFunction, EPS_W};
use crate::poisson::{solve_dirichlet, FieldSolution};
use crate::torsion::{compute_bundle_with, BundleOptions, TorsionBundle};

/// Finite-difference steps relative to the mean width `c0` of the base body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdSteps {
    pub first: f64,
    pub second: f64,
}

impl Default for FdSteps {
    fn default() -> Self {
        Self {
            first: 1e-3,
            second: 5e-3,
        }
    }
}

/// Checks that `h + t phi` stays strictly convex and returns the perturbed
/// body. The curvature radius `w + t (phi'' + phi)` is examined on a grid
/// four times finer than the body's.
pub fn perturbed_body(body: &ConvexBody2D, phi: &TestFunction, t: f64) -> Result<ConvexBody2D> {
    let support = body.support().combine(1.0, &phi.to_trig(), t);
    let (w_min, _) = support.min_curvature_radius(4 * body.nodes());
    if !(w_min > EPS_W * body.support().c0()) {
        return Err(Error::LeavesConvexCone { t, w_min });
    }
    validate_body(support, body.nodes()).map_err(|_| Error::LeavesConvexCone { t, w_min })
}

/// `T(h + t phi)` sampled along a list of parameters.
#[derive(Debug, Clone)]
pub struct VariationPath {
    pub base: ConvexBody2D,
    pub direction: TestFunction,
    pub t: Vec<f64>,
    pub bundles: Vec<TorsionBundle>,
}

impl VariationPath {
    /// Rigidity along the path (see [`TorsionBundle::rigidity`]).
    pub fn values(&self) -> Vec<f64> {
        self.bundles.iter().map(TorsionBundle::rigidity).collect()
    }
}

pub fn sample_path(
    body: &ConvexBody2D,
    phi: &TestFunction,
    t_list: &[f64],
    delta: f64,
) -> Result<VariationPath> {
    sample_path_with(body, phi, t_list, delta, &BundleOptions::default())
}

pub fn sample_path_with(
    body: &ConvexBody2D,
    phi: &TestFunction,
    t_list: &[f64],
    delta: f64,
    options: &BundleOptions,
) -> Result<VariationPath> {
    let mut t = t_list.to_vec();
    t.sort_by(f64::total_cmp);
    let bodies = t
        .iter()
        .map(|&s| perturbed_body(body, phi, s))
        .collect::<Result<Vec<_>>>()?;
    let bundles = bodies
        .iter()
        .map(|b| compute_bundle_with(b, delta, options))
        .collect::<Result<Vec<_>>>()?;
    Ok(VariationPath {
        base: body.clone(),
        direction: phi.clone(),
        t,
        bundles,
    })
}

/// Solves `Laplace(V) = 0` with `V = data` on the boundary, reusing the
/// bundle's grid.
pub fn harmonic_extension(
    bundle: &TorsionBundle,
    data: &BoundaryField,
    options: &BundleOptions,
) -> Result<FieldSolution> {
    let grid = Arc::clone(bundle.solution().grid());
    solve_dirichlet(&grid, 0.0, data, &options.solver)
}

/// The shape derivative `U'` of the torsion function in direction `phi`:
/// harmonic, with boundary values `|grad U| phi`.
pub fn shape_derivative(
    bundle: &TorsionBundle,
    phi: &BoundaryField,
    options: &BundleOptions,
) -> Result<FieldSolution> {
    harmonic_extension(
        bundle,
        &bundle.gradmag().zip_with(phi, |g, p| g * p),
        options,
    )
}

/// The four terms of `f''(0)` (after integrating the gradient term by parts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondVariationBreakdown {
    /// `-\int |grad U|^2 phi^2 d theta`
    pub term_curv: f64,
    /// `-2 \int phi w |grad U| (grad U' . nu) d theta`
    pub term_udot: f64,
    /// `4 \int phi^2 w |grad U| d theta`
    pub term_four: f64,
    /// `-\int |grad U|^2 phi'^2 d theta`
    pub term_grad: f64,
    pub total: f64,
    /// The `U'` term with `|grad U|` squared instead of to the first power.
    pub term_udot_power2: f64,
    pub total_power2: f64,
}

/// Sampled ingredients shared by the second variation and the Poincare-type
/// inequality.
#[derive(Debug, Clone)]
pub struct VariationFields {
    pub phi: BoundaryField,
    pub phi_prime: BoundaryField,
    /// `grad U' . nu` on the boundary.
    pub udot_normal: BoundaryField,
}

impl VariationFields {
    pub fn compute(
        bundle: &TorsionBundle,
        phi: &TestFunction,
        options: &BundleOptions,
    ) -> Result<Self> {
        let n = bundle.body().nodes();
        let [phi, phi_prime, _] = phi.sample_derivs(n);
        Self::from_samples(bundle, phi, phi_prime, options)
    }

    pub fn from_samples(
        bundle: &TorsionBundle,
        phi: BoundaryField,
        phi_prime: BoundaryField,
        options: &BundleOptions,
    ) -> Result<Self> {
        let udot = shape_derivative(bundle, &phi, options)?;
        let udot_normal = udot.normal_gradient_field(bundle.body())?;
        Ok(Self {
            phi,
            phi_prime,
            udot_normal,
        })
    }
}

fn quad(n: usize, f: impl Fn(usize) -> f64) -> f64 {
    (0..n).map(f).sum::<f64>() * 2.0 * PI / n as f64
}

/// Assembles the breakdown from precomputed fields.
pub fn assemble_second_variation(
    bundle: &TorsionBundle,
    fields: &VariationFields,
) -> SecondVariationBreakdown {
    let body = bundle.body();
    let n = body.nodes();
    let g = bundle.gradmag().values();
    let w = body.w();
    let (p, dp, un) = (
        fields.phi.values(),
        fields.phi_prime.values(),
        fields.udot_normal.values(),
    );
    let term_curv = -quad(n, |m| g[m] * g[m] * p[m] * p[m]);
    let term_udot = -2.0 * quad(n, |m| p[m] * w[m] * g[m] * un[m]);
    let term_four = 4.0 * quad(n, |m| p[m] * p[m] * w[m] * g[m]);
    let term_grad = -quad(n, |m| g[m] * g[m] * dp[m] * dp[m]);
    let term_udot_power2 = -2.0 * quad(n, |m| p[m] * w[m] * g[m] * g[m] * un[m]);
    SecondVariationBreakdown {
        term_curv,
        term_udot,
        term_four,
        term_grad,
        total: term_curv + term_udot + term_four + term_grad,
        term_udot_power2,
        total_power2: term_curv + term_udot_power2 + term_four + term_grad,
    }
}

pub fn second_variation(
    body: &ConvexBody2D,
    phi: &TestFunction,
    delta: f64,
) -> Result<SecondVariationBreakdown> {
    let options = BundleOptions::default();
    let bundle = compute_bundle_with(body, delta, &options)?;
    second_variation_of(&bundle, phi, &options)
}

pub fn second_variation_of(
    bundle: &TorsionBundle,
    phi: &TestFunction,
    options: &BundleOptions,
) -> Result<SecondVariationBreakdown> {
    let fields = VariationFields::compute(bundle, phi, options)?;
    Ok(assemble_second_variation(bundle, &fields))
}

/// Central-difference derivatives of `T(h + t phi)` at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdDerivatives {
    pub step: f64,
    pub f_minus: f64,
    pub f_zero: f64,
    pub f_plus: f64,
    pub first: f64,
    pub second: f64,
}

/// Evaluates `T` at `t = -step, 0, step` with
/// `step = rel_step * c0`.
pub fn finite_difference(
    body: &ConvexBody2D,
    phi: &TestFunction,
    delta: f64,
    rel_step: f64,
    options: &BundleOptions,
) -> Result<FdDerivatives> {
    let step = rel_step * body.support().c0();
    let path = sample_path_with(body, phi, &[-step, 0.0, step], delta, options)?;
    let f = path.values();
    Ok(FdDerivatives {
        step,
        f_minus: f[0],
        f_zero: f[1],
        f_plus: f[2],
        first: (f[2] - f[0]) / (2.0 * step),
        second: (f[2] - 2.0 * f[1] + f[0]) / (step * step),
    })
}

/// Both pairings of the `U'` boundary operator and their relative asymmetry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Adjointness {
    /// `\int |grad U| phi_1 (grad U'_2 . nu) w d theta`
    pub a12: f64,
    /// Same with the roles of the two functions swapped.
    pub a21: f64,
    /// `|a12 - a21| / max(|a12|, |a21|, scale)`
    pub gap: f64,
    /// `(\int |grad U|^2 phi_1^2 w)^{1/2} (\int |grad U|^2 phi_2^2 w)^{1/2}`
    pub scale: f64,
}

pub fn selfadjointness_check(
    bundle: &TorsionBundle,
    phi1: &TestFunction,
    phi2: &TestFunction,
    options: &BundleOptions,
) -> Result<Adjointness> {
    let n = bundle.body().nodes();
    let (p1, p2) = (phi1.sample(n), phi2.sample(n));
    if p1 == p2 {
        let d = shape_derivative(bundle, &p1, options)?.normal_gradient_field(bundle.body())?;
        let a = pairing(bundle, &p1, &d);
        return Ok(Adjointness {
            a12: a,
            a21: a,
            gap: 0.0,
            scale: weighted_norm(bundle, &p1).powi(2),
        });
    }
    let d1 = shape_derivative(bundle, &p1, options)?.normal_gradient_field(bundle.body())?;
    let d2 = shape_derivative(bundle, &p2, options)?.normal_gradient_field(bundle.body())?;
    let a12 = pairing(bundle, &p1, &d2);
    let a21 = pairing(bundle, &p2, &d1);
    let scale = weighted_norm(bundle, &p1) * weighted_norm(bundle, &p2);
    let denom = a12.abs().max(a21.abs()).max(scale);
    Ok(Adjointness {
        a12,
        a21,
        gap: if denom > 0.0 {
            (a12 - a21).abs() / denom
        } else {
            0.0
        },
        scale,
    })
}

fn pairing(bundle: &TorsionBundle, phi: &BoundaryField, normal: &BoundaryField) -> f64 {
    let (g, w) = (bundle.gradmag().values(), bundle.body().w());
    let (p, d) = (phi.values(), normal.values());
    quad(p.len(), |m| g[m] * p[m] * d[m] * w[m])
}

fn weighted_norm(bundle: &TorsionBundle, phi: &BoundaryField) -> f64 {
    let (g, w, p) = (bundle.gradmag().values(), bundle.body().w(), phi.values());
    quad(p.len(), |m| g[m] * g[m] * p[m] * p[m] * w[m]).sqrt()
}

/// Residuals of the three boundary Hessian identities at one normal angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianResiduals {
    pub theta: f64,
    /// `(Hess U t) . t + kappa |grad U|`
    pub r1: f64,
    /// `(Hess U nu) . nu - kappa |grad U| + 2`
    pub r2: f64,
    /// `(Hess U t) . nu + kappa d|grad U|/d theta`
    pub r3: f64,
    /// Magnitude of the terms involved, `2 + kappa (|grad U| + |d|grad U|/d theta|)`.
    pub scale: f64,
}

impl HessianResiduals {
    pub fn max_scaled(&self) -> f64 {
        self.r1.abs().max(self.r2.abs()).max(self.r3.abs()) / self.scale
    }
}

/// Richardson weights extrapolating samples at distances 3, 4, 5 (in units of
/// the grid spacing) to distance 0 with a quadratic.
pub const RICHARDSON: [(f64, f64); 3] = [(3.0, 10.0), (4.0, -15.0), (5.0, 6.0)];

/// Boundary Hessian of the discrete torsion function at `F(theta)`,
/// extrapolated from interior points along the inward normal.
pub fn boundary_hessian(bundle: &TorsionBundle, theta: f64) -> Result<[[f64; 2]; 2]> {
    let body = bundle.body();
    let p = body.point(theta);
    let nu = ConvexBody2D::normal(theta);
    let delta = bundle.delta();
    let mut out = [[0.0; 2]; 2];
    for (k, weight) in RICHARDSON {
        let x = [p[0] - k * delta * nu[0], p[1] - k * delta * nu[1]];
        let h = bundle.solution().interior_hessian(body, x)?;
        for a in 0..2 {
            for b in 0..2 {
                out[a][b] += weight * h[a][b];
            }
        }
    }
    Ok(out)
}

/// Residuals of the identities at the given normal angles. The tangential
/// derivative of `|grad U|` comes from spectral differentiation of the
/// sampled field.
pub fn hessian_boundary_identities(
    bundle: &TorsionBundle,
    thetas: &[f64],
) -> Result<Vec<HessianResiduals>> {
    let gradmag = bundle.gradmag();
    let slope = gradmag.derivative();
    let w = BoundaryField::new(bundle.body().w().to_vec())?;
    thetas
        .iter()
        .map(|&theta| {
            let hess = boundary_hessian(bundle, theta)?;
            let kappa = 1.0 / w.interpolate(theta);
            Ok(identity_residuals(
                theta,
                hess,
                kappa,
                gradmag.interpolate(theta),
                slope.interpolate(theta),
            ))
        })
        .collect()
}

/// Evaluates the three identities from a Hessian and boundary data.
pub fn identity_residuals(
    theta: f64,
    hess: [[f64; 2]; 2],
    kappa: f64,
    gradmag: f64,
    slope: f64,
) -> HessianResiduals {
    let t = ConvexBody2D::tangent(theta);
    let nu = ConvexBody2D::normal(theta);
    let form = |u: [f64; 2], v: [f64; 2]| {
        (0..2)
            .map(|a| (0..2).map(|b| u[a] * hess[a][b] * v[b]).sum::<f64>())
            .sum::<f64>()
    };
    HessianResiduals {
        theta,
        r1: form(t, t) + kappa * gradmag,
        r2: form(nu, nu) - kappa * gradmag + 2.0,
        r3: form(t, nu) + kappa * slope,
        scale: 2.0 + kappa * (gradmag + slope.abs()),
    }
}

/// `count` equally spaced normal angles.
pub fn stations(count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| 2.0 * PI * k as f64 / count as f64)
        .collect()
}
