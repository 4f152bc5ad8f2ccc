//! Closed-form torsion functions of ellipses and ellipsoids, their boundary
//! geometry parameterized by the unit normal, and the resulting exact checks
//! in dimensions two and three.
//!
//! On `E = {sum x_i^2 / a_i^2 <= 1}` the torsion function is
//! `U = C (1 - sum x_i^2 / a_i^2)` with `C = 1 / sum a_i^{-2}`, so its Hessian
//! is the constant `diag(-2C / a_i^2)`. For a translation direction `xi_0`
//! the shape derivative is `U' = -grad U . xi_0`, again in closed form.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, S2Quadrature};
use crate::verify::VerificationReport;

/// Step (radians) of the central differences defining the reverse
/// Weingarten map in [`boundary_quantities`].
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ellipsoid {
    axes: Vec<f64>,
}

impl Ellipsoid {
    pub fn new(axes: &[f64]) -> Result<Self> {
        if !(2..=3).contains(&axes.len()) {
            return Err(Error::InvalidArgument(format!(
                "ellipsoids are supported in dimension 2 or 3, got {}",
                axes.len()
            )));
        }
        if !axes.iter().all(|&a| a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "semi-axes must be positive, got {axes:?}"
            )));
        }
        Ok(Self {
            axes: axes.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[f64] {
        &self.axes
    }

    /// `C = 1 / sum a_i^{-2}`.
    pub fn c(&self) -> f64 {
        1.0 / self.axes.iter().map(|a| 1.0 / (a * a)).sum::<f64>()
    }

    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(&self.axes.iter().map(|a| a * s).collect::<Vec<_>>())
    }

    pub fn torsion_function(&self, x: &[f64]) -> f64 {
        self.c()
            * (1.0
                - x.iter()
                    .zip(&self.axes)
                    .map(|(x, a)| x * x / (a * a))
                    .sum::<f64>())
    }

    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let c = self.c();
        DVector::from_iterator(
            self.dim(),
            x.iter()
                .zip(&self.axes)
                .map(|(x, a)| -2.0 * c * x / (a * a)),
        )
    }

    /// The constant Hessian `diag(-2C / a_i^2)`.
    pub fn hessian(&self) -> DMatrix<f64> {
        let c = self.c();
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.axes.iter().map(|a| -2.0 * c / (a * a)),
        ))
    }

    /// Support function `h(xi) = (sum a_i^2 xi_i^2)^{1/2}`.
    pub fn support(&self, xi: &DVector<f64>) -> f64 {
        xi.iter()
            .zip(&self.axes)
            .map(|(x, a)| a * a * x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// Boundary point with outward normal `xi`: `F_i = a_i^2 xi_i / h`.
    pub fn boundary_point(&self, xi: &DVector<f64>) -> DVector<f64> {
        let h = self.support(xi);
        DVector::from_iterator(
            self.dim(),
            xi.iter().zip(&self.axes).map(|(x, a)| a * a * x / h),
        )
    }

    fn a2(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.axes.iter().map(|a| a * a),
        ))
    }

    fn product(&self) -> f64 {
        self.axes.iter().product()
    }
}

/// Torsional rigidity in closed form: `pi a^3 b^3 / (a^2 + b^2)` in the plane,
/// `(16 pi / 15) a_1 a_2 a_3 C` in space.
pub fn ellipsoid_t(e: &Ellipsoid) -> f64 {
    match e.dim() {
        2 => PI * e.product().powi(3) / (e.axes[0].powi(2) + e.axes[1].powi(2)),
        _ => 16.0 * PI / 15.0 * e.product() * e.c(),
    }
}

/// `2 \int U` and `\int |grad U|^2` by quadrature on the unit ball, mapped to
/// the ellipsoid by `x = A y`.
pub fn quadrature_rigidity(e: &Ellipsoid, radial: usize, sphere: &S2Quadrature) -> (f64, f64) {
    let (r, wr) = gauss_legendre(radial);
    let jac = e.product();
    let (mut mass, mut energy) = (0.0, 0.0);
    for (ri, wi) in r.iter().zip(&wr) {
        let rho = 0.5 * (ri + 1.0);
        let w = 0.5 * wi;
        let shell = |f: &dyn Fn(&[f64]) -> f64| -> f64 {
            match e.dim() {
                2 => {
                    let m = 4 * sphere.azimuthal;
                    (0..m)
                        .map(|k| {
                            let (s, c) = (2.0 * PI * k as f64 / m as f64).sin_cos();
                            f(&[rho * c * e.axes[0], rho * s * e.axes[1]])
                        })
                        .sum::<f64>()
                        * 2.0
                        * PI
                        / m as f64
                        * rho
                }
                _ => {
                    sphere.integrate(|p| {
                        f(&[
                            rho * p[0] * e.axes[0],
                            rho * p[1] * e.axes[1],
                            rho * p[2] * e.axes[2],
                        ])
                    }) * rho
                        * rho
                }
            }
        };
        mass += w * shell(&|x| e.torsion_function(x));
        energy += w * shell(&|x| e.gradient(x).norm_squared());
    }
    (2.0 * mass * jac, energy * jac)
}

/// Orthonormal basis of the tangent space at `xi`, built from a reference
/// axis; the axis is swapped when it is nearly parallel to `xi`.
pub fn tangent_frame(xi: &DVector<f64>, reference: &DVector<f64>) -> Vec<DVector<f64>> {
    if xi.len() == 2 {
        return vec![DVector::from_vec(vec![-xi[1], xi[0]])];
    }
    let mut r = reference.normalize();
    if (r.dot(xi)).abs() > 0.9 {
        // rotate the reference a quarter turn about an axis orthogonal to it
        let alt = if r[0].abs() < 0.9 {
            DVector::from_vec(vec![1.0, 0.0, 0.0])
        } else {
            DVector::from_vec(vec![0.0, 1.0, 0.0])
        };
        r = (&alt - &r * r.dot(&alt)).normalize();
    }
    let e1 = (&r - xi * xi.dot(&r)).normalize();
    let e2 = DVector::from_vec(vec![
        xi[1] * e1[2] - xi[2] * e1[1],
        xi[2] * e1[0] - xi[0] * e1[2],
        xi[0] * e1[1] - xi[1] * e1[0],
    ]);
    vec![e1, e2]
}

fn default_reference(n: usize) -> DVector<f64> {
    let mut r = DVector::zeros(n);
    r[n - 1] = 1.0;
    r
}

/// Everything the boundary form of the inequality needs at the boundary
/// point with outward normal `xi`.
#[derive(Debug, Clone)]
pub struct BoundaryQuantities {
    pub xi: DVector<f64>,
    pub point: DVector<f64>,
    pub support: f64,
    pub gradmag: f64,
    pub normal: DVector<f64>,
    pub frame: Vec<DVector<f64>>,
    /// Reverse Weingarten map `h_ij + h delta_ij` by central differences.
    pub weingarten: DMatrix<f64>,
    /// The same map in closed form.
    pub weingarten_exact: DMatrix<f64>,
    /// Second fundamental form `W^{-1}` in the same frame.
    pub second_fundamental: DMatrix<f64>,
    /// `det W`, the density of surface measure against `d sigma`.
    pub jacobian: f64,
}

pub fn boundary_quantities(e: &Ellipsoid, xi: &DVector<f64>) -> BoundaryQuantities {
    boundary_quantities_in_frame(e, xi, &default_reference(e.dim()))
}

pub fn boundary_quantities_in_frame(
    e: &Ellipsoid,
    xi: &DVector<f64>,
    reference: &DVector<f64>,
) -> BoundaryQuantities {
    let xi = xi.normalize();
    let frame = tangent_frame(&xi, reference);
    let h = e.support(&xi);
    let weingarten = fd_weingarten(e, &xi, &frame, FD_STEP);
    let weingarten_exact = exact_weingarten(e, &xi, &frame);
    let second_fundamental = weingarten
        .clone()
        .try_inverse()
        .expect("reverse Weingarten map of an ellipsoid is positive definite");
    BoundaryQuantities {
        point: e.boundary_point(&xi),
        support: h,
        gradmag: 2.0 * e.c() / h,
        normal: xi.clone(),
        jacobian: weingarten.determinant(),
        xi,
        frame,
        weingarten,
        weingarten_exact,
        second_fundamental,
    }
}

/// `W = E^T D^2 h E` with `D^2 h = A^2 / h - (A^2 xi)(A^2 xi)^T / h^3` for
/// the one-homogeneous extension of `h`.
pub fn exact_weingarten(e: &Ellipsoid, xi: &DVector<f64>, frame: &[DVector<f64>]) -> DMatrix<f64> {
    let h = e.support(xi);
    let a2 = e.a2();
    let v = &a2 * xi;
    let hess = a2 / h - &v * v.transpose() / (h * h * h);
    let k = frame.len();
    DMatrix::from_fn(k, k, |i, j| frame[i].dot(&(&hess * &frame[j])))
}

/// Central second differences of `h` along geodesics in the frame
/// directions. Differences `h(eta) - h(xi)` are formed without cancellation
/// from the quadratic form `h^2`, so the step can be small.
pub fn fd_weingarten(
    e: &Ellipsoid,
    xi: &DVector<f64>,
    frame: &[DVector<f64>],
    step: f64,
) -> DMatrix<f64> {
    let h0 = e.support(xi);
    let a2 = e.a2();
    let xa = &a2 * xi;
    // h(exp_xi(v)) - h(xi) for a tangent vector v
    let dh = |v: &DVector<f64>| -> f64 {
        let r = v.norm();
        if r == 0.0 {
            return 0.0;
        }
        let (s, c) = r.sin_cos();
        let sr = s / r;
        let d2 = -s * s * h0 * h0 + 2.0 * c * sr * xa.dot(v) + sr * sr * v.dot(&(&a2 * v));
        d2 / ((h0 * h0 + d2).sqrt() + h0)
    };
    let k = frame.len();
    let mut w = DMatrix::zeros(k, k);
    for i in 0..k {
        let ei = &frame[i] * step;
        w[(i, i)] = (dh(&ei) + dh(&-&ei)) / (step * step) + h0;
        for j in 0..i {
            let ej = &frame[j] * step;
            let v = (dh(&(&ei + &ej)) - dh(&(&ei - &ej)) - dh(&(&ej - &ei)) + dh(&(-&ei - &ej)))
                / (4.0 * step * step);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    w
}

/// Cofactor matrix of `W`; the constant 1 for a 1x1 map.
pub fn cofactor(w: &DMatrix<f64>) -> DMatrix<f64> {
    if w.nrows() == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    DMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => w[(1, 1)],
        (1, 1) => w[(0, 0)],
        _ => -w[(i, j)],
    })
}

/// Largest residuals of the three boundary Hessian identities at `xi`,
/// assembled from the constant Hessian, the closed-form `W` and `|grad U|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TensorResiduals {
    /// `max |(Hess U e_i) . e_j + kappa |grad U| c_ij|`
    pub tangential: f64,
    /// `|(Hess U xi) . xi - kappa |grad U| tr c + 2|`
    pub normal: f64,
    /// `max |(Hess U e_i) . xi + kappa sum_j |grad U|_j c_ij|`
    pub mixed: f64,
}

impl TensorResiduals {
    pub fn max(&self) -> f64 {
        self.tangential.max(self.normal).max(self.mixed)
    }
}

pub fn hessian_identity_residuals(e: &Ellipsoid, xi: &DVector<f64>) -> TensorResiduals {
    let xi = xi.normalize();
    let frame = tangent_frame(&xi, &default_reference(e.dim()));
    let w = exact_weingarten(e, &xi, &frame);
    let c = cofactor(&w);
    let kappa = 1.0 / w.determinant();
    let h = e.support(&xi);
    let g = 2.0 * e.c() / h;
    let f = e.boundary_point(&xi);
    // derivative of |grad U| = 2C / h along e_j: -2C / h^2 (e_j . grad h)
    let dg: Vec<f64> = frame
        .iter()
        .map(|ej| -2.0 * e.c() / (h * h) * ej.dot(&f))
        .collect();
    let hess = e.hessian();
    let k = frame.len();
    let mut out = TensorResiduals {
        tangential: 0.0,
        normal: (xi.dot(&(&hess * &xi)) - kappa * g * c.trace() + 2.0).abs(),
        mixed: 0.0,
    };
    for i in 0..k {
        for j in 0..k {
            let r = frame[i].dot(&(&hess * &frame[j])) + kappa * g * c[(i, j)];
            out.tangential = out.tangential.max(r.abs());
        }
        let r =
            frame[i].dot(&(&hess * &xi)) + kappa * (0..k).map(|j| dg[j] * c[(i, j)]).sum::<f64>();
        out.mixed = out.mixed.max(r.abs());
    }
    out
}

/// Integrand values of the boundary-form inequality at one normal, already
/// multiplied by the surface density `det W`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct TheoremTerms {
    pub curvature: f64,
    pub udot: f64,
    pub four: f64,
    pub rhs: f64,
    /// `psi |grad U|^2`, whose integral must vanish.
    pub constraint: f64,
    pub constraint_abs: f64,
}

impl std::ops::AddAssign<(f64, TheoremTerms)> for TheoremTerms {
    fn add_assign(&mut self, (w, t): (f64, TheoremTerms)) {
        self.curvature += w * t.curvature;
        self.udot += w * t.udot;
        self.four += w * t.four;
        self.rhs += w * t.rhs;
        self.constraint += w * t.constraint;
        self.constraint_abs += w * t.constraint_abs;
    }
}

/// Terms at one normal for `psi = nu . xi_0`, whose shape derivative is
/// `U' = -grad U . xi_0` with gradient `-Hess U xi_0`.
pub fn theorem_terms(e: &Ellipsoid, q: &BoundaryQuantities, xi0: &DVector<f64>) -> TheoremTerms {
    let psi = q.xi.dot(xi0);
    let g = q.gradmag;
    let udot_normal = -(e.hessian() * xi0).dot(&q.normal);
    // surface gradient of psi pulled back to the sphere: components e_i . xi_0
    let dphi = DVector::from_iterator(q.frame.len(), q.frame.iter().map(|ei| ei.dot(xi0)));
    let quad_form = dphi.dot(&(&q.second_fundamental * &dphi));
    let j = q.jacobian;
    TheoremTerms {
        curvature: -q.second_fundamental.trace() * psi * psi * g * g * j,
        udot: -2.0 * psi * udot_normal * g * j,
        four: 4.0 * psi * psi * g * j,
        rhs: quad_form * g * g * j,
        constraint: psi * g * g * j,
        constraint_abs: psi.abs() * g * g * j,
    }
}

/// Tolerances of the closed-form three-dimensional check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleTolerances {
    /// Relative to `|lhs| + |rhs|`.
    pub violation: f64,
    pub equality: f64,
    /// Relative residual of the mean-zero hypothesis.
    pub constraint: f64,
}

impl Default for OracleTolerances {
    fn default() -> Self {
        Self {
            violation: 1e-2,
            equality: 1e-6,
            constraint: 1e-8,
        }
    }
}

/// Normals and weights of the rule used on `S^{n-1}`: the sphere rule in
/// space, `4 Q` equispaced angles on the circle.
pub fn normal_nodes(dim: usize, quad: &S2Quadrature) -> Vec<(DVector<f64>, f64)> {
    match dim {
        2 => {
            let m = 4 * quad.azimuthal;
            (0..m)
                .map(|k| {
                    let (s, c) = (2.0 * PI * k as f64 / m as f64).sin_cos();
                    (DVector::from_vec(vec![c, s]), 2.0 * PI / m as f64)
                })
                .collect()
        }
        _ => quad
            .points()
            .iter()
            .zip(quad.weights())
            .map(|(p, &w)| (DVector::from_column_slice(p), w))
            .collect(),
    }
}

/// Largest residual of the boundary Hessian identities over all nodes of
/// the normal rule.
pub fn max_identity_residual(e: &Ellipsoid, quad: &S2Quadrature) -> f64 {
    normal_nodes(e.dim(), quad)
        .iter()
        .map(|(xi, _)| hessian_identity_residuals(e, xi).max())
        .fold(0.0, f64::max)
}

/// Both sides of the boundary Poincare-type inequality on an ellipsoid for
/// `psi = nu . xi_0`, integrated over the normals with `quad`.
pub fn verify_theorem_3d(
    e: &Ellipsoid,
    xi0: &[f64],
    quad: &S2Quadrature,
    tol: &OracleTolerances,
) -> Result<VerificationReport> {
    if e.dim() != 3 {
        return Err(Error::InvalidArgument(
            "the spatial check needs a 3D ellipsoid".into(),
        ));
    }
    verify_theorem(e, xi0, quad, tol)
}

/// Same check in dimension 2 or 3; in the plane the normals are integrated
/// with the equispaced circle rule of [`normal_nodes`].
pub fn verify_theorem(
    e: &Ellipsoid,
    xi0: &[f64],
    quad: &S2Quadrature,
    tol: &OracleTolerances,
) -> Result<VerificationReport> {
    let start = Instant::now();
    if xi0.len() != e.dim() {
        return Err(Error::InvalidArgument(format!(
            "direction has {} components for a {}-dimensional ellipsoid",
            xi0.len(),
            e.dim()
        )));
    }
    if e.dim() == 3 {
        quad.check(24)?;
    }
    let xi0 = DVector::from_column_slice(xi0);
    if (xi0.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "direction must be a unit vector, |xi_0| = {}",
            xi0.norm()
        )));
    }
    let mut sum = TheoremTerms::default();
    let mut fd_error = 0.0_f64;
    for (xi, w) in normal_nodes(e.dim(), quad) {
        let q = boundary_quantities(e, &xi);
        fd_error = fd_error.max((&q.weingarten - &q.weingarten_exact).amax());
        sum += (w, theorem_terms(e, &q, &xi0));
    }
    let constraint = if sum.constraint_abs > 0.0 {
        sum.constraint.abs() / sum.constraint_abs
    } else {
        0.0
    };
    if constraint > tol.constraint {
        return Err(Error::ConstraintNotMet {
            residual: constraint,
        });
    }
    let lhs = sum.curvature + sum.udot + sum.four;
    let rhs = sum.rhs;
    let scale = lhs.abs() + rhs.abs();
    let inputs = json!({
        "axes": e.axes(),
        "direction": xi0.as_slice(),
        "polar": quad.polar,
        "azimuthal": quad.azimuthal,
    });
    let check = if e.dim() == 3 {
        "theorem_3d"
    } else {
        "theorem_2d"
    };
    let mut report = VerificationReport::new(
        check,
        inputs,
        lhs,
        rhs,
        tol.violation * scale,
        tol.equality * scale,
    )
    .with("terms", sum)
    .with("constraint_residual", constraint)
    .with("relative_gap", (rhs - lhs) / scale)
    .with("weingarten_fd_error", fd_error);
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// `T^{1/(n+2)}` along `s(t) E`, `s(t) = 1 - t + t a`, against its chord.
/// The deviation, relative to the larger endpoint value, must stay below `tol`.
pub fn homothety_path_3d(e: &Ellipsoid, a: f64, m: usize, tol: f64) -> Result<VerificationReport> {
    let start = Instant::now();
    if !(a > 0.0) || m < 3 {
        return Err(Error::InvalidArgument(format!(
            "need a > 0 and m >= 3, got a = {a}, m = {m}"
        )));
    }
    let power = 1.0 / (e.dim() as f64 + 2.0);
    let t: Vec<f64> = (0..m).map(|j| j as f64 / (m - 1) as f64).collect();
    let values = t
        .iter()
        .map(|&s| Ok(ellipsoid_t(&e.scaled(1.0 - s + s * a)?).powf(power)))
        .collect::<Result<Vec<f64>>>()?;
    let (v0, v1) = (values[0], values[m - 1]);
    let deviation = t
        .iter()
        .zip(&values)
        .map(|(s, v)| (v - ((1.0 - s) * v0 + s * v1)).abs())
        .fold(0.0, f64::max);
    let scale = v0.max(v1);
    let inputs = json!({ "axes": e.axes(), "a": a, "m": m });
    let mut report = VerificationReport::residual("homothety_path", inputs, deviation / scale, tol)
        .with("values", &values)
        .with("endpoints", [v0, v1]);
    report.timing_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// Surface area (perimeter in the plane) as `\int det W d sigma`.
pub fn surface_area_gauss(e: &Ellipsoid, quad: &S2Quadrature) -> f64 {
    normal_nodes(e.dim(), quad)
        .iter()
        .map(|(xi, w)| {
            w * exact_weingarten(e, xi, &tangent_frame(xi, &default_reference(e.dim())))
                .determinant()
        })
        .sum()
}

/// Surface area from the standard angular parameterization
/// `x = (a_1 sin u cos v, a_2 sin u sin v, a_3 cos u)`, independent of the
/// Gauss map.
pub fn surface_area_parametric(e: &Ellipsoid, resolution: usize) -> f64 {
    let a = e.axes();
    match e.dim() {
        2 => {
            let m = 4 * resolution;
            (0..m)
                .map(|k| {
                    let (s, c) = (2.0 * PI * k as f64 / m as f64).sin_cos();
                    (a[0] * s).hypot(a[1] * c)
                })
                .sum::<f64>()
                * 2.0
                * PI
                / m as f64
        }
        _ => {
            let (z, wz) = gauss_legendre(resolution);
            let nv = 2 * resolution;
            let mut total = 0.0;
            for (zi, wi) in z.iter().zip(&wz) {
                // u in [0, pi] mapped from [-1, 1]
                let u = 0.5 * PI * (zi + 1.0);
                let (su, cu) = u.sin_cos();
                for k in 0..nv {
                    let (sv, cv) = (2.0 * PI * k as f64 / nv as f64).sin_cos();
                    let xu = [a[0] * cu * cv, a[1] * cu * sv, -a[2] * su];
                    let xv = [-a[0] * su * sv, a[1] * su * cv, 0.0];
                    let cross = [
                        xu[1] * xv[2] - xu[2] * xv[1],
                        xu[2] * xv[0] - xu[0] * xv[2],
                        xu[0] * xv[1] - xu[1] * xv[0],
                    ];
                    let norm =
                        (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
                    total += wi * 0.5 * PI * norm * 2.0 * PI / nv as f64;
                }
            }
            total
        }
    }
}

/// Largest change of `tr II` and of `grad phi . II grad phi` (for
/// `phi = xi . xi_0`) when the frame is rebuilt from a random reference
/// axis, over `count` random normals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameInvariance {
    /// With the closed-form map: tests the frame construction itself.
    pub exact: f64,
    /// With the difference map; limited by its `O(step^2)` truncation error,
    /// which depends on the frame directions.
    pub finite_difference: f64,
}

pub fn frame_invariance(e: &Ellipsoid, count: usize, seed: u64) -> FrameInvariance {
    let n = e.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random_unit = |rng: &mut ChaCha8Rng| loop {
        let v = DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-1.0..=1.0)));
        let norm = v.norm();
        if norm > 0.1 && norm <= 1.0 {
            return v / norm;
        }
    };
    let invariants = |w: &DMatrix<f64>, frame: &[DVector<f64>], xi0: &DVector<f64>| {
        let ii = w.clone().try_inverse().expect("positive definite");
        let dphi = DVector::from_iterator(frame.len(), frame.iter().map(|ei| ei.dot(xi0)));
        (ii.trace(), dphi.dot(&(&ii * &dphi)))
    };
    let diff = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs().max((a.1 - b.1).abs());
    let mut out = FrameInvariance {
        exact: 0.0,
        finite_difference: 0.0,
    };
    for _ in 0..count {
        let xi = random_unit(&mut rng);
        let xi0 = random_unit(&mut rng);
        let other = random_unit(&mut rng);
        let a = boundary_quantities(e, &xi);
        let b = boundary_quantities_in_frame(e, &xi, &other);
        out.exact = out.exact.max(diff(
            invariants(&a.weingarten_exact, &a.frame, &xi0),
            invariants(&b.weingarten_exact, &b.frame, &xi0),
        ));
        out.finite_difference = out.finite_difference.max(diff(
            invariants(&a.weingarten, &a.frame, &xi0),
            invariants(&b.weingarten, &b.frame, &xi0),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::Verdict;

    fn unit(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v).normalize()
    }

    #[test]
    fn closed_form_rigidities() {
        let disk = Ellipsoid::new(&[1.0, 1.0]).unwrap();
        assert!((ellipsoid_t(&disk) - PI / 2.0).abs() < 1e-14);
        let ball = Ellipsoid::new(&[1.0, 1.0, 1.0]).unwrap();
        assert!((ellipsoid_t(&ball) - 16.0 * PI / 45.0).abs() < 1e-14);
        let e = Ellipsoid::new(&[2.0, 1.0]).unwrap();
        assert!((ellipsoid_t(&e) - 8.0 * PI / 5.0).abs() < 1e-13);
    }

    #[test]
    fn ball_boundary_quantities() {
        let ball = Ellipsoid::new(&[1.0, 1.0, 1.0]).unwrap();
        let q = boundary_quantities(&ball, &unit(&[0.3, -0.5, 0.8]));
        assert!((&q.weingarten - DMatrix::identity(2, 2)).amax() < 1e-8);
        assert!((q.gradmag - 2.0 / 3.0).abs() < 1e-15);
        assert!((&q.point - &q.xi).amax() < 1e-15);
    }

    #[test]
    fn ellipse_vertex() {
        let e = Ellipsoid::new(&[2.0, 1.0]).unwrap();
        let q = boundary_quantities(&e, &unit(&[1.0, 0.0]));
        assert!((q.support - 2.0).abs() < 1e-15);
        assert!((q.weingarten[(0, 0)] - 0.5).abs() < 1e-8);
        assert!((q.gradmag - 0.8).abs() < 1e-15);
    }

    #[test]
    fn gauss_map_is_inverted() {
        let e = Ellipsoid::new(&[1.5, 1.0, 0.75]).unwrap();
        let xi = unit(&[0.2, 0.7, -0.4]);
        let f = e.boundary_point(&xi);
        let n =
            DVector::from_iterator(3, f.iter().zip(e.axes()).map(|(x, a)| x / (a * a))).normalize();
        assert!((n - xi).amax() < 1e-10);
    }

    #[test]
    fn frame_near_the_reference_axis() {
        let xi = unit(&[1e-9, 0.0, 1.0]);
        let frame = tangent_frame(&xi, &default_reference(3));
        for e in &frame {
            assert!(e.dot(&xi).abs() < 1e-12);
            assert!((e.norm() - 1.0).abs() < 1e-12);
        }
        assert!(frame[0].dot(&frame[1]).abs() < 1e-12);
    }

    #[test]
    fn tensor_identities_hold() {
        let e3 = Ellipsoid::new(&[1.5, 1.0, 0.75]).unwrap();
        let e2 = Ellipsoid::new(&[2.0, 0.7]).unwrap();
        for v in [
            [0.3, -0.5, 0.8],
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [-0.2, 0.9, 0.1],
        ] {
            assert!(hessian_identity_residuals(&e3, &unit(&v)).max() < 1e-12);
            assert!(hessian_identity_residuals(&e2, &unit(&v[..2])).max() < 1e-12);
        }
    }

    #[test]
    fn quadrature_reproduces_rigidity() {
        let q = S2Quadrature::default();
        for axes in [&[1.0, 1.0, 1.0][..], &[1.5, 1.0, 0.75], &[2.0, 0.5]] {
            let e = Ellipsoid::new(axes).unwrap();
            let (mass, energy) = quadrature_rigidity(&e, 8, &q);
            let t = ellipsoid_t(&e);
            assert!((mass - t).abs() < 1e-12 * t, "{axes:?}: {mass} vs {t}");
            assert!((energy - t).abs() < 1e-12 * t, "{axes:?}: {energy} vs {t}");
        }
    }

    #[test]
    fn ball_is_an_equality_case() {
        let ball = Ellipsoid::new(&[1.0, 1.0, 1.0]).unwrap();
        let r = verify_theorem_3d(
            &ball,
            &[0.0, 0.0, 1.0],
            &S2Quadrature::default(),
            &OracleTolerances::default(),
        )
        .unwrap();
        assert!((r.lhs - 32.0 * PI / 27.0).abs() < 1e-6);
        assert!((r.rhs - 32.0 * PI / 27.0).abs() < 1e-6);
        assert_eq!(r.verdict, Verdict::Equality);
    }

    #[test]
    fn ellipsoid_translations_are_equality_cases() {
        let e = Ellipsoid::new(&[1.5, 1.0, 0.75]).unwrap();
        let q = S2Quadrature::default();
        for d in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            let r = verify_theorem_3d(&e, &d, &q, &OracleTolerances::default()).unwrap();
            assert!(
                (r.rhs - r.lhs).abs() <= 0.01 * r.rhs,
                "{d:?}: {} vs {}",
                r.lhs,
                r.rhs
            );
        }
    }

    #[test]
    fn ellipse_translations_in_closed_form() {
        let e = Ellipsoid::new(&[2.0, 1.0]).unwrap();
        let q = S2Quadrature::default();
        for d in [[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]] {
            let r = verify_theorem(&e, &d, &q, &OracleTolerances::default()).unwrap();
            assert_eq!(
                r.verdict,
                Verdict::Equality,
                "{d:?}: {} vs {}",
                r.lhs,
                r.rhs
            );
        }
        assert!(max_identity_residual(&e, &q) < 1e-12);
    }

    #[test]
    fn coarse_sphere_rule_is_rejected() {
        let ball = Ellipsoid::new(&[1.0, 1.0, 1.0]).unwrap();
        let q = S2Quadrature::new(6, 12).unwrap();
        let r = verify_theorem_3d(&ball, &[0.0, 0.0, 1.0], &q, &OracleTolerances::default());
        assert!(matches!(r, Err(Error::QuadratureUnderResolved(_))));
    }

    #[test]
    fn homothety_path_is_linear() {
        let e = Ellipsoid::new(&[1.5, 1.0, 0.75]).unwrap();
        let r = homothety_path_3d(&e, 2.3, 11, 1e-10).unwrap();
        assert_eq!(r.verdict, Verdict::Equality);
        assert!(r.lhs <= 1e-10);
    }

    #[test]
    fn surface_area_two_ways() {
        let q = S2Quadrature::default();
        let ball = Ellipsoid::new(&[1.0, 1.0, 1.0]).unwrap();
        assert!((surface_area_gauss(&ball, &q) - 4.0 * PI).abs() < 1e-10);
        assert!((surface_area_parametric(&ball, 64) - 4.0 * PI).abs() < 1e-10);
        for axes in [&[1.5, 1.0, 0.75][..], &[2.0, 0.7]] {
            let e = Ellipsoid::new(axes).unwrap();
            let (a, b) = (surface_area_gauss(&e, &q), surface_area_parametric(&e, 128));
            assert!((a - b).abs() < 1e-6 * b, "{axes:?}: {a} vs {b}");
        }
    }

    #[test]
    fn frame_choice_does_not_matter() {
        let e = Ellipsoid::new(&[1.5, 1.0, 0.75]).unwrap();
        for seed in 0..5 {
            let d = frame_invariance(&e, 100, seed);
            assert!(d.exact <= 1e-8, "{d:?}");
            assert!(d.finite_difference <= 1e-7, "{d:?}");
        }
    }
}
