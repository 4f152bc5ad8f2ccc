//! Embedded-boundary Dirichlet solver for `Laplace(U) = f` (constant `f`) on
//! the interior of a [`ConvexBody2D`].
//!
//! The five-point Laplacian is used at regular nodes. Where a stencil arm
//! crosses the boundary it is shortened to the crossing and the Dirichlet
//! value is imposed there (Shortley-Weller), which keeps the scheme second
//! order and exact on quadratic solutions. The resulting system is not
//! symmetric and is solved with ILU(0)-preconditioned BiCGSTAB.

mod grid;
pub mod sparse;

use std::sync::Arc;

pub use grid::{
    build_grid, Arm, ArmCut, CartesianGrid, NodeKind, MAX_ASPECT, MIN_CELLS_ACROSS, SNAP,
};

use crate::error::{Error, Result};
use crate::field::BoundaryField;
use crate::geometry::ConvexBody2D;
use sparse::{bicgstab, CsrMatrix, SolveStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Required relative residual in the discrete 2-norm, for the system
    /// with every row scaled to unit diagonal.
    pub tolerance: f64,
    /// Residual the iteration aims for. It is tighter than `tolerance` so that
    /// solution values (not just residuals) are accurate to about 1e-9; when
    /// round-off prevents reaching it, `tolerance` still has to be met.
    pub target: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            target: 1e-12,
            max_iterations: 20_000,
        }
    }
}

/// Discrete solution of a Dirichlet problem on an embedded grid.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    grid: Arc<CartesianGrid>,
    values: Vec<f64>,
    rhs: f64,
    boundary: BoundaryField,
    cut_values: Vec<[f64; 4]>,
    stats: SolveStats,
}

/// Solves `Laplace(U) = f` in the body with `U = g` on the boundary, where
/// `g` is sampled at the body's normal-angle nodes.
pub fn solve_dirichlet(
    grid: &Arc<CartesianGrid>,
    f: f64,
    g: &BoundaryField,
    options: &SolverOptions,
) -> Result<FieldSolution> {
    let n = grid.len();
    let mut rows = Vec::with_capacity(n);
    let mut b = vec![0.0; n];
    let mut cut_values = vec![[f64::NAN; 4]; n];
    let delta = grid.spacing();
    for (u, &(i, j)) in grid.interior().iter().enumerate() {
        let cuts = grid.cuts(u);
        let mut row = Vec::with_capacity(5);
        let mut diag = 0.0;
        let mut rhs = f * delta * delta;
        for (plus, minus) in [(Arm::East, Arm::West), (Arm::North, Arm::South)] {
            let arm_len = |arm: Arm| cuts[arm as usize].map_or(1.0, |c| c.fraction);
            let (ap, am) = (arm_len(plus), arm_len(minus));
            for (arm, a) in [(plus, ap), (minus, am)] {
                let coef = 2.0 / (a * (ap + am));
                diag -= coef;
                match cuts[arm as usize] {
                    Some(cut) => {
                        let gv = g.interpolate(cut.theta);
                        cut_values[u][arm as usize] = gv;
                        rhs -= coef * gv;
                    }
                    None => {
                        let (di, dj) = arm.offset();
                        let v = grid
                            .unknown(i + di, j + dj)
                            .expect("uncut arm ends at an interior node");
                        row.push((v, coef));
                    }
                }
            }
        }
        // Rows are equilibrated to unit diagonal: arms cut very close to a
        // node carry coefficients up to 1/SNAP, and unscaled they would
        // dominate the residual norm.
        let scale = -1.0 / diag;
        row.iter_mut().for_each(|e| e.1 *= scale);
        row.push((u, -1.0));
        rows.push(row);
        b[u] = rhs * scale;
    }
    let matrix = CsrMatrix::from_rows(rows);
    let (values, stats) = bicgstab(
        &matrix,
        &b,
        options.target,
        options.tolerance,
        options.max_iterations,
    )?;
    Ok(FieldSolution {
        grid: Arc::clone(grid),
        values,
        rhs: f,
        boundary: g.clone(),
        cut_values,
        stats,
    })
}

/// Lagrange weights of nodes 0..=3 at position `t`.
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0,
        t * (t - 2.0) * (t - 3.0) / 2.0,
        -t * (t - 1.0) * (t - 3.0) / 2.0,
        t * (t - 1.0) * (t - 2.0) / 6.0,
    ]
}

// Step of the interior difference stencils relative to the spacing; the
// widest stencil then reaches 1.5 spacings from its centre, which leaves
// room for an interior interpolation block at depth 3 spacings.
const DIFF_STEP: f64 = 0.5;

// block start offsets relative to floor(s) - 1, most centred first
const BLOCK_OFFSETS: [(i64, i64); 9] = [
    (0, 0),
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (1, -1),
    (-1, 1),
    (-1, -1),
];

impl FieldSolution {
    pub fn grid(&self) -> &Arc<CartesianGrid> {
        &self.grid
    }

    /// Values at interior nodes in unknown order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rhs(&self) -> f64 {
        self.rhs
    }

    pub fn boundary_data(&self) -> &BoundaryField {
        &self.boundary
    }

    pub fn residual_norm(&self) -> f64 {
        self.stats.relative_residual
    }

    pub fn iterations(&self) -> usize {
        self.stats.iterations
    }

    pub fn node_value(&self, i: i64, j: i64) -> Option<f64> {
        self.grid.unknown(i, j).map(|u| self.values[u])
    }

    /// Bicubic Lagrange interpolation from a 4x4 block of interior nodes
    /// containing `p`; the most centred admissible block is used.
    pub fn value_at(&self, p: [f64; 2]) -> Result<f64> {
        let delta = self.grid.spacing();
        let (sx, sy) = (p[0] / delta, p[1] / delta);
        let (bx, by) = (sx.floor() as i64 - 1, sy.floor() as i64 - 1);
        'blocks: for (ox, oy) in BLOCK_OFFSETS {
            let (i0, j0) = (bx + ox, by + oy);
            let mut vals = [[0.0; 4]; 4];
            for (b, row) in vals.iter_mut().enumerate() {
                for (a, v) in row.iter_mut().enumerate() {
                    match self.node_value(i0 + a as i64, j0 + b as i64) {
                        Some(x) => *v = x,
                        None => continue 'blocks,
                    }
                }
            }
            let wx = lagrange4(sx - i0 as f64);
            let wy = lagrange4(sy - j0 as f64);
            let mut acc = 0.0;
            for (b, row) in vals.iter().enumerate() {
                let line: f64 = row.iter().zip(&wx).map(|(v, w)| v * w).sum();
                acc += wy[b] * line;
            }
            return Ok(acc);
        }
        Err(Error::TooCloseToBoundary { x: p[0], y: p[1] })
    }

    /// Outward normal derivative at `F(theta)` from the one-sided
    /// second-order stencil through `F - 2 delta nu` and `F - 4 delta nu`.
    pub fn boundary_normal_gradient(&self, body: &ConvexBody2D, theta: f64) -> Result<f64> {
        let p = body.point(theta);
        let nu = ConvexBody2D::normal(theta);
        let d = 2.0 * self.grid.spacing();
        let at = |s: f64| [p[0] - s * nu[0], p[1] - s * nu[1]];
        let g = self.boundary.interpolate(theta);
        let near = self.value_at(at(d)).map_err(|_| coarse(theta))?;
        let far = self.value_at(at(2.0 * d)).map_err(|_| coarse(theta))?;
        Ok(-(-3.0 * g + 4.0 * near - far) / (2.0 * d))
    }

    /// Outward normal derivative at every node of the body.
    pub fn normal_gradient_field(&self, body: &ConvexBody2D) -> Result<BoundaryField> {
        let values = body
            .theta()
            .iter()
            .map(|&t| self.boundary_normal_gradient(body, t))
            .collect::<Result<Vec<_>>>()?;
        BoundaryField::new(values)
    }

    fn check_depth(&self, body: &ConvexBody2D, x: [f64; 2]) -> Result<()> {
        if body.depth(x) < 3.0 * self.grid.spacing() * (1.0 - 1e-6) {
            return Err(Error::TooCloseToBoundary { x: x[0], y: x[1] });
        }
        Ok(())
    }

    /// Fourth-order central-difference gradient of the interpolated field,
    /// with half the grid spacing as step.
    pub fn interior_gradient(&self, body: &ConvexBody2D, x: [f64; 2]) -> Result<[f64; 2]> {
        self.check_depth(body, x)?;
        let h = DIFF_STEP * self.grid.spacing();
        let mut out = [0.0; 2];
        for (axis, o) in out.iter_mut().enumerate() {
            let at = |k: f64| {
                let mut q = x;
                q[axis] += k * h;
                self.value_at(q)
            };
            *o = (at(-2.0)? - 8.0 * at(-1.0)? + 8.0 * at(1.0)? - at(2.0)?) / (12.0 * h);
        }
        Ok(out)
    }

    /// Fourth-order central-difference Hessian with half-spacing step; the
    /// off-diagonal entry is the mean of the tensor-product and the
    /// rotated-axis estimates.
    pub fn interior_hessian(&self, body: &ConvexBody2D, x: [f64; 2]) -> Result<[[f64; 2]; 2]> {
        self.check_depth(body, x)?;
        let h = DIFF_STEP * self.grid.spacing();
        let at = |dx: f64, dy: f64| self.value_at([x[0] + dx * h, x[1] + dy * h]);
        let second = |e: [f64; 2], step: f64| -> Result<f64> {
            let f = |k: f64| at(k * e[0], k * e[1]);
            Ok(
                (-f(2.0)? + 16.0 * f(1.0)? - 30.0 * f(0.0)? + 16.0 * f(-1.0)? - f(-2.0)?)
                    / (12.0 * step * step),
            )
        };
        let uxx = second([1.0, 0.0], h)?;
        let uyy = second([0.0, 1.0], h)?;
        const D: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];
        let mut tensor = 0.0;
        for (kx, wx) in D {
            for (ky, wy) in D {
                tensor += wx * wy * at(kx, ky)?;
            }
        }
        tensor /= 144.0 * h * h;
        let diag_step = h * std::f64::consts::SQRT_2;
        let u_pp = second([1.0, 1.0], diag_step)?;
        let u_mm = second([1.0, -1.0], diag_step)?;
        let rotated = 0.5 * (u_pp - u_mm);
        let uxy = 0.5 * (tensor + rotated);
        Ok([[uxx, uxy], [uxy, uyy]])
    }

    /// Integral of the field over the body: trapezoid rule along each grid
    /// column (with the cut ends carrying the boundary data), then the column
    /// integrals weighted by the spacing.
    pub fn integrate(&self) -> f64 {
        let delta = self.grid.spacing();
        let (i_min, j_min, nx, ny) = self.grid.extent();
        let mut total = 0.0;
        for a in 0..nx as i64 {
            let i = i_min + a;
            let Some((lo, hi)) = self.grid.column(i) else {
                continue;
            };
            let mut pts = vec![(lo.coord, self.boundary.interpolate(lo.theta))];
            for b in 0..ny as i64 {
                if let Some(v) = self.node_value(i, j_min + b) {
                    pts.push(((j_min + b) as f64 * delta, v));
                }
            }
            pts.push((hi.coord, self.boundary.interpolate(hi.theta)));
            total += pts
                .windows(2)
                .map(|s| 0.5 * (s[1].0 - s[0].0) * (s[0].1 + s[1].1))
                .sum::<f64>();
        }
        total * delta
    }

    /// Dirichlet energy `\int |grad U|^2` from squared differences along grid
    /// rows (x-derivative) and columns (y-derivative), cut segments included.
    pub fn dirichlet_energy(&self) -> f64 {
        let delta = self.grid.spacing();
        let (i_min, j_min, nx, ny) = self.grid.extent();
        let segment_sum = |pts: &[(f64, f64)]| -> f64 {
            pts.windows(2)
                .map(|s| {
                    let len = s[1].0 - s[0].0;
                    if len > 0.0 {
                        (s[1].1 - s[0].1).powi(2) / len
                    } else {
                        0.0
                    }
                })
                .sum()
        };
        let mut total = 0.0;
        for a in 0..nx as i64 {
            let i = i_min + a;
            let Some((lo, hi)) = self.grid.column(i) else {
                continue;
            };
            let mut pts = vec![(lo.coord, self.boundary.interpolate(lo.theta))];
            for b in 0..ny as i64 {
                if let Some(v) = self.node_value(i, j_min + b) {
                    pts.push(((j_min + b) as f64 * delta, v));
                }
            }
            pts.push((hi.coord, self.boundary.interpolate(hi.theta)));
            total += segment_sum(&pts);
        }
        for b in 0..ny as i64 {
            let j = j_min + b;
            let Some((lo, hi)) = self.grid.row(j) else {
                continue;
            };
            let mut pts = vec![(lo.coord, self.boundary.interpolate(lo.theta))];
            for a in 0..nx as i64 {
                if let Some(v) = self.node_value(i_min + a, j) {
                    pts.push(((i_min + a) as f64 * delta, v));
                }
            }
            pts.push((hi.coord, self.boundary.interpolate(hi.theta)));
            total += segment_sum(&pts);
        }
        total * delta
    }

    /// Applies the discrete operator to the stored values and returns the
    /// largest residual over interior nodes, each row scaled to unit
    /// diagonal (so the defect is in the units of the solution).
    pub fn max_operator_defect(&self) -> f64 {
        let delta = self.grid.spacing();
        let mut worst = 0.0_f64;
        for (u, &(i, j)) in self.grid.interior().iter().enumerate() {
            let cuts = self.grid.cuts(u);
            let center = self.values[u];
            let (mut lap, mut diag) = (0.0, 0.0);
            for (plus, minus) in [(Arm::East, Arm::West), (Arm::North, Arm::South)] {
                let side = |arm: Arm| -> (f64, f64) {
                    match cuts[arm as usize] {
                        Some(c) => (c.fraction, self.cut_values[u][arm as usize]),
                        None => {
                            let (di, dj) = arm.offset();
                            (1.0, self.node_value(i + di, j + dj).unwrap())
                        }
                    }
                };
                let ((ap, vp), (am, vm)) = (side(plus), side(minus));
                lap += 2.0 / (ap + am) * ((vp - center) / ap - (center - vm) / am);
                diag += 2.0 / (ap * am);
            }
            worst = worst.max((lap - self.rhs * delta * delta).abs() / diag);
        }
        worst
    }
}

fn coarse(theta: f64) -> Error {
    Error::GridTooCoarse(format!(
        "normal-derivative stencil at theta = {theta:.4} leaves the interpolation domain"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{random_body, ConvexBody2D};

    fn torsion(body: &ConvexBody2D, delta: f64) -> FieldSolution {
        let grid = Arc::new(build_grid(body, delta).unwrap());
        solve_dirichlet(
            &grid,
            -2.0,
            &BoundaryField::zeros(body.nodes()),
            &SolverOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn disk_torsion_function_is_reproduced() {
        let disk = ConvexBody2D::disk(1.0, 256).unwrap();
        let sol = torsion(&disk, 1.0 / 128.0);
        assert!(sol.residual_norm() <= 1e-10);
        assert!(sol.max_operator_defect() < 1e-9);
        assert!((sol.node_value(0, 0).unwrap() - 0.5).abs() < 1e-4);
        for m in (0..256).step_by(7) {
            let g = -sol
                .boundary_normal_gradient(&disk, disk.theta()[m])
                .unwrap();
            assert!((g - 1.0).abs() < 1e-2);
        }
        let grad = sol.interior_gradient(&disk, [0.3, 0.2]).unwrap();
        assert!((grad[0] + 0.3).abs() < 1e-3 && (grad[1] + 0.2).abs() < 1e-3);
    }

    #[test]
    fn ellipse_torsion_function_is_reproduced() {
        let e = ConvexBody2D::ellipse_default(2.0, 1.0, 256).unwrap();
        let sol = torsion(&e, 1.0 / 128.0);
        assert!((sol.node_value(0, 0).unwrap() - 0.8).abs() < 1e-3);
        let g = -sol.boundary_normal_gradient(&e, 0.0).unwrap();
        assert!((g - 0.8).abs() < 2e-2);
        for p in [[0.0, 0.0], [1.2, 0.3], [-0.5, -0.5]] {
            let hess = sol.interior_hessian(&e, p).unwrap();
            assert!((hess[0][0] + 0.4).abs() < 1e-2);
            assert!((hess[1][1] + 1.6).abs() < 1e-2);
            assert!(hess[0][1].abs() < 1e-2);
        }
    }

    #[test]
    fn constants_are_harmonic() {
        let body = random_body(2, 5, 0.5, 256).unwrap();
        let grid = Arc::new(build_grid(&body, 1.0 / 64.0).unwrap());
        let sol = solve_dirichlet(
            &grid,
            0.0,
            &BoundaryField::constant(256, 1.0),
            &SolverOptions::default(),
        )
        .unwrap();
        assert!(sol.values().iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn linear_data_is_reproduced_with_near_boundary_nodes() {
        // some arms of this grid are cut very close to their node
        let e = ConvexBody2D::ellipse_default(2.0, 1.0, 256).unwrap();
        let grid = Arc::new(build_grid(&e, 1.0 / 64.0).unwrap());
        let data = BoundaryField::new(e.boundary().iter().map(|p| 0.4 * p[0]).collect()).unwrap();
        let sol = solve_dirichlet(&grid, 0.0, &data, &SolverOptions::default()).unwrap();
        for &(i, j) in grid.interior() {
            let x = grid.position(i, j)[0];
            assert!((sol.node_value(i, j).unwrap() - 0.4 * x).abs() < 1e-5);
        }
        for theta in [0.0, 0.5, 1.0, 2.5] {
            let dn = sol.boundary_normal_gradient(&e, theta).unwrap();
            assert!((dn - 0.4 * f64::cos(theta)).abs() < 1e-4);
        }
    }

    #[test]
    fn torsion_function_is_positive_and_satisfies_the_scheme() {
        let body = random_body(8, 6, 0.6, 256).unwrap();
        let sol = torsion(&body, 1.0 / 64.0);
        assert!(sol.values().iter().all(|&v| v > 0.0));
        assert!(sol.max_operator_defect() < 1e-9);
    }

    #[test]
    fn near_boundary_points_are_rejected() {
        let disk = ConvexBody2D::disk(1.0, 256).unwrap();
        let sol = torsion(&disk, 1.0 / 64.0);
        assert!(matches!(
            sol.interior_gradient(&disk, [0.99, 0.0]),
            Err(Error::TooCloseToBoundary { .. })
        ));
    }
}
