//! Torsional rigidity by three independent routes, the torsional measure on
//! the circle of normals, and the first variation along support-function
//! perturbations.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::geometry::{ConvexBody2D, TestFunction};
use crate::poisson::{build_grid, solve_dirichlet, FieldSolution, SolverOptions};
use crate::trig::TrigSupport;

/// Default relative tolerance for agreement of the three rigidity routes.
pub const CROSS_CHECK_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BundleOptions {
    pub solver: SolverOptions,
    pub cross_check_tol: f64,
}

impl Default for BundleOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            cross_check_tol: CROSS_CHECK_TOL,
        }
    }
}

/// The torsion function of a body together with everything derived from it.
#[derive(Debug, Clone)]
pub struct TorsionBundle {
    body: ConvexBody2D,
    solution: FieldSolution,
    gradmag: BoundaryField,
    delta: f64,
    /// Dirichlet energy of the discrete solution.
    pub t_energy: f64,
    /// Twice the integral of the solution.
    pub t_mass: f64,
    /// `1/4 \int h |grad U|^2 w d theta`.
    pub t_boundary: f64,
}

/// Flat summary of a bundle, as emitted in reports.
#[derive(Debug, Clone, Serialize)]
pub struct BundleSummary {
    pub t_energy: f64,
    pub t_mass: f64,
    pub t_boundary: f64,
    pub delta: f64,
    pub nodes: usize,
    pub unknowns: usize,
    pub residual: f64,
    pub iterations: usize,
    pub gradmag_min: f64,
    pub gradmag_max: f64,
}

pub fn compute_bundle(body: &ConvexBody2D, delta: f64) -> Result<TorsionBundle> {
    compute_bundle_with(body, delta, &BundleOptions::default())
}

/// Solves the torsion problem on `body` with grid spacing `delta` and
/// evaluates the rigidity by the energy, mass and boundary routes.
pub fn compute_bundle_with(
    body: &ConvexBody2D,
    delta: f64,
    options: &BundleOptions,
) -> Result<TorsionBundle> {
    let grid = Arc::new(build_grid(body, delta)?);
    let solution = solve_dirichlet(
        &grid,
        -2.0,
        &BoundaryField::zeros(body.nodes()),
        &options.solver,
    )?;
    let gradmag = solution.normal_gradient_field(body)?.map(|_, v| -v);
    if let Some(m) = gradmag.values().iter().position(|&g| !(g > 0.0)) {
        return Err(Error::GridTooCoarse(format!(
            "boundary gradient not positive at theta = {:.4}",
            gradmag.theta(m)
        )));
    }
    let t_energy = solution.dirichlet_energy();
    let t_mass = 2.0 * solution.integrate();
    let t_boundary = boundary_rigidity(body, &gradmag);

    let reference = t_energy.abs().max(t_mass.abs()).max(t_boundary.abs());
    let spread = t_energy.max(t_mass).max(t_boundary) - t_energy.min(t_mass).min(t_boundary);
    if !(spread <= options.cross_check_tol * reference) {
        return Err(Error::CrossCheckFailed {
            energy: t_energy,
            mass: t_mass,
            boundary: t_boundary,
        });
    }
    Ok(TorsionBundle {
        body: body.clone(),
        solution,
        gradmag,
        delta,
        t_energy,
        t_mass,
        t_boundary,
    })
}

/// `T = 1/(n+2) \int h |grad U|^2 det(h_ij + h delta_ij) d xi` with `n = 2`.
pub fn boundary_rigidity(body: &ConvexBody2D, gradmag: &BoundaryField) -> f64 {
    let values: Vec<f64> = body
        .h()
        .iter()
        .zip(body.w())
        .zip(gradmag.values())
        .map(|((h, w), g)| h * g * g * w)
        .collect();
    BoundaryField::new(values)
        .expect("body has enough nodes")
        .integrate()
        / 4.0
}

impl TorsionBundle {
    pub fn body(&self) -> &ConvexBody2D {
        &self.body
    }

    pub fn solution(&self) -> &FieldSolution {
        &self.solution
    }

    /// `|grad U|` at the boundary nodes.
    pub fn gradmag(&self) -> &BoundaryField {
        &self.gradmag
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Density of the torsional measure against `d theta`: `|grad U|^2 w`.
    pub fn torsional_measure_density(&self) -> BoundaryField {
        self.gradmag.zip_with(
            &BoundaryField::new(self.body.w().to_vec()).expect("nodes >= 64"),
            |g, w| g * g * w,
        )
    }

    /// Total mass of the torsional measure, `\int_{boundary} |grad U|^2`.
    pub fn measure_mass(&self) -> f64 {
        self.torsional_measure_density().integrate()
    }

    /// `\int xi d mu_tor`, which vanishes by translation invariance.
    pub fn measure_centroid(&self) -> [f64; 2] {
        let density = self.torsional_measure_density();
        [
            density.map(|t, v| v * t.cos()).integrate(),
            density.map(|t, v| v * t.sin()).integrate(),
        ]
    }

    /// Derivative of `T(h + t phi)` at `t = 0`: `\int phi |grad U|^2 w d theta`.
    pub fn first_variation(&self, phi: &TestFunction) -> f64 {
        let phi = phi.sample(self.body.nodes());
        self.torsional_measure_density()
            .zip_with(&phi, |d, p| d * p)
            .integrate()
    }

    /// Removes the torsional-measure mean of `psi`, so that
    /// `\int psi d mu_tor = 0`.
    pub fn project_mean_zero(&self, psi: &TestFunction) -> BoundaryField {
        let psi = psi.sample(self.body.nodes());
        let density = self.torsional_measure_density();
        let mean = density.zip_with(&psi, |d, p| d * p).integrate() / density.integrate();
        psi.map(|_, p| p - mean)
    }

    /// Same projection, kept in closed form: only the constant term of the
    /// series changes.
    pub fn mean_zero_direction(&self, psi: &TestFunction) -> TestFunction {
        let series = psi.to_trig();
        let density = self.torsional_measure_density();
        let sampled = BoundaryField::new(series.sample(self.body.nodes())).expect("nodes >= 64");
        let mean = density.zip_with(&sampled, |d, p| d * p).integrate() / density.integrate();
        TestFunction::trig(series.combine(1.0, &TrigSupport::constant(mean), -1.0))
    }

    /// `\int psi d mu_tor` relative to `\int |psi| d mu_tor`.
    pub fn constraint_residual(&self, psi: &BoundaryField) -> f64 {
        let density = self.torsional_measure_density();
        let signed = density.zip_with(psi, |d, p| d * p).integrate();
        let scale = density.zip_with(psi, |d, p| d * p.abs()).integrate();
        if scale == 0.0 {
            0.0
        } else {
            signed.abs() / scale
        }
    }

    /// `\int |grad U|^2 / (\int U)^2`, which equals `4 / T` for the torsion
    /// function.
    pub fn rayleigh_quotient(&self) -> f64 {
        let mass = self.t_mass / 2.0;
        self.t_energy / (mass * mass)
    }

    /// The rigidity value used downstream. The boundary route is taken: at a
    /// fixed grid it depends on the body far more smoothly than the volume
    /// routes, whose node sets jump as the boundary moves.
    pub fn rigidity(&self) -> f64 {
        self.t_boundary
    }

    pub fn summary(&self) -> BundleSummary {
        BundleSummary {
            t_energy: self.t_energy,
            t_mass: self.t_mass,
            t_boundary: self.t_boundary,
            delta: self.delta,
            nodes: self.body.nodes(),
            unknowns: self.solution.grid().len(),
            residual: self.solution.residual_norm(),
            iterations: self.solution.iterations(),
            gradmag_min: self.gradmag.min(),
            gradmag_max: self.gradmag.max(),
        }
    }
}
