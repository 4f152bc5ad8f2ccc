//! Planar convex bodies described by their support functions.
//!
//! A body is a [`TrigSupport`] `h` together with cached samples of `h`, `h'`,
//! `h''`, the radius of curvature `w = h'' + h` and the boundary points
//! `F(theta) = h (cos, sin) + h' (-sin, cos)` on a uniform periodic grid. The
//! outward normal at `F(theta)` is `(cos theta, sin theta)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{theta_at, BoundaryField};
use crate::trig::TrigSupport;

/// Relative convexity threshold: a body is rejected when `min w <= EPS_W * c0`.
pub const EPS_W: f64 = 1e-8;

/// Smallest accepted number of boundary nodes.
pub const MIN_NODES: usize = 64;

/// Floor on the radius of curvature of generated random bodies.
pub const RANDOM_MIN_W: f64 = 0.05;

const RANDOM_RETRIES: usize = 200;
const BISECTION_STEPS: usize = 80;

/// A validated `C^2_+` planar convex body.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexBody2D {
    support: TrigSupport,
    theta: Vec<f64>,
    h: Vec<f64>,
    hp: Vec<f64>,
    hpp: Vec<f64>,
    w: Vec<f64>,
    boundary: Vec<[f64; 2]>,
}

/// Where a grid line meets the boundary: the coordinate along the line and
/// the normal angle of the boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub coord: f64,
    pub theta: f64,
}

/// Checks positivity of the radius of curvature on `nodes` samples and caches
/// the boundary parameterization.
pub fn validate_body(support: TrigSupport, nodes: usize) -> Result<ConvexBody2D> {
    if nodes < MIN_NODES || nodes % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "node count must be even and at least {MIN_NODES}, got {nodes}"
        )));
    }
    let c0 = support.c0();
    if c0 <= 0.0 {
        return Err(Error::DegenerateSupport { c0 });
    }
    let eps_w = EPS_W * c0;
    let mut body = ConvexBody2D {
        support,
        theta: Vec::with_capacity(nodes),
        h: Vec::with_capacity(nodes),
        hp: Vec::with_capacity(nodes),
        hpp: Vec::with_capacity(nodes),
        w: Vec::with_capacity(nodes),
        boundary: Vec::with_capacity(nodes),
    };
    for m in 0..nodes {
        let theta = theta_at(m, nodes);
        let [h, hp, hpp] = body.support.eval_derivs(theta);
        let w = hpp + h;
        if w <= eps_w {
            return Err(Error::NotConvex { theta, w });
        }
        body.theta.push(theta);
        body.h.push(h);
        body.hp.push(hp);
        body.hpp.push(hpp);
        body.w.push(w);
        body.boundary.push(point_from(theta, h, hp));
    }
    Ok(body)
}

fn point_from(theta: f64, h: f64, hp: f64) -> [f64; 2] {
    let (s, c) = theta.sin_cos();
    [h * c - hp * s, h * s + hp * c]
}

impl ConvexBody2D {
    pub fn disk(radius: f64, nodes: usize) -> Result<Self> {
        validate_body(TrigSupport::constant(radius), nodes)
    }

    /// Ellipse with semi-axes `a` (along x) and `b`, projected onto `degree`
    /// trigonometric terms from `4 * nodes` samples.
    pub fn ellipse(a: f64, b: f64, degree: usize, nodes: usize) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ellipse semi-axes must be positive, got ({a}, {b})"
            )));
        }
        let support = TrigSupport::project(
            |t| (a * a * t.cos().powi(2) + b * b * t.sin().powi(2)).sqrt(),
            degree,
            4 * nodes,
        )?;
        validate_body(support, nodes)
    }

    /// Default projection degree for ellipses on an `nodes` grid.
    pub fn ellipse_default(a: f64, b: f64, nodes: usize) -> Result<Self> {
        Self::ellipse(a, b, (nodes / 2 - 1).min(96), nodes)
    }

    pub fn support(&self) -> &TrigSupport {
        &self.support
    }

    pub fn nodes(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn hp(&self) -> &[f64] {
        &self.hp
    }

    pub fn hpp(&self) -> &[f64] {
        &self.hpp
    }

    /// Radius of curvature `h'' + h` (reverse Weingarten map in 2D).
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn boundary(&self) -> &[[f64; 2]] {
        &self.boundary
    }

    pub fn min_w(&self) -> f64 {
        self.w.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Curvature `1 / w` at each node.
    pub fn curvature(&self) -> BoundaryField {
        BoundaryField::new(self.w.iter().map(|w| 1.0 / w).collect()).expect("nodes >= 64")
    }

    /// Boundary point with outward normal angle `theta`.
    pub fn point(&self, theta: f64) -> [f64; 2] {
        let [h, hp, _] = self.support.eval_derivs(theta);
        point_from(theta, h, hp)
    }

    pub fn normal(theta: f64) -> [f64; 2] {
        let (s, c) = theta.sin_cos();
        [c, s]
    }

    pub fn tangent(theta: f64) -> [f64; 2] {
        let (s, c) = theta.sin_cos();
        [-s, c]
    }

    pub fn x_range(&self) -> (f64, f64) {
        (-self.support.eval(PI), self.support.eval(0.0))
    }

    pub fn y_range(&self) -> (f64, f64) {
        (-self.support.eval(1.5 * PI), self.support.eval(0.5 * PI))
    }

    /// Vertical line `x = const`: lower and upper boundary crossings.
    pub fn column_crossings(&self, x: f64) -> Option<(Crossing, Crossing)> {
        let (x_min, x_max) = self.x_range();
        if x <= x_min || x >= x_max {
            return None;
        }
        // F_x decreases on [0, pi] and increases on [pi, 2 pi]
        let fx = |t: f64| self.point(t)[0];
        let upper = bisect(&fx, 0.0, PI, x, false);
        let lower = bisect(&fx, PI, 2.0 * PI, x, true);
        Some((
            Crossing {
                coord: self.point(lower)[1],
                theta: lower,
            },
            Crossing {
                coord: self.point(upper)[1],
                theta: upper,
            },
        ))
    }

    /// Horizontal line `y = const`: left and right boundary crossings.
    pub fn row_crossings(&self, y: f64) -> Option<(Crossing, Crossing)> {
        let (y_min, y_max) = self.y_range();
        if y <= y_min || y >= y_max {
            return None;
        }
        // F_y increases on [-pi/2, pi/2] and decreases on [pi/2, 3 pi/2]
        let fy = |t: f64| self.point(t)[1];
        let right = bisect(&fy, -0.5 * PI, 0.5 * PI, y, true);
        let left = bisect(&fy, 0.5 * PI, 1.5 * PI, y, false);
        Some((
            Crossing {
                coord: self.point(left)[0],
                theta: left.rem_euclid(2.0 * PI),
            },
            Crossing {
                coord: self.point(right)[0],
                theta: right.rem_euclid(2.0 * PI),
            },
        ))
    }

    /// Strict interior test.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        match self.column_crossings(p[0]) {
            Some((lo, hi)) => lo.coord < p[1] && p[1] < hi.coord,
            None => false,
        }
    }

    /// Distance from an interior point to the boundary, `min (h - p . xi)`
    /// over the node grid (negative outside).
    pub fn depth(&self, p: [f64; 2]) -> f64 {
        self.theta
            .iter()
            .zip(&self.h)
            .map(|(t, h)| h - p[0] * t.cos() - p[1] * t.sin())
            .fold(f64::INFINITY, f64::min)
    }

    /// Width `h(theta) + h(theta + pi)` minimised over the node grid.
    pub fn min_width(&self) -> f64 {
        let n = self.nodes();
        (0..n / 2)
            .map(|m| self.h[m] + self.h[m + n / 2])
            .fold(f64::INFINITY, f64::min)
    }

    /// Diameter divided by minimal width.
    pub fn aspect_ratio(&self) -> f64 {
        diameter(self) / self.min_width()
    }
}

/// Monotone bisection for `f(t) = target` on `[a, b]`.
fn bisect<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, target: f64, increasing: bool) -> f64 {
    let (mut lo, mut hi) = (a, b);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let above = f(mid) > target;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Body with support `s h_A + t h_B`.
pub fn minkowski_combine(
    a: &ConvexBody2D,
    b: &ConvexBody2D,
    s: f64,
    t: f64,
) -> Result<ConvexBody2D> {
    if !(s >= 0.0 && t >= 0.0 && s + t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Minkowski weights must be nonnegative with positive sum, got ({s}, {t})"
        )));
    }
    let support = a.support().combine(s, b.support(), t);
    let body = validate_body(support, a.nodes().max(b.nodes()));
    assert!(
        !matches!(body, Err(Error::NotConvex { .. })),
        "nonnegative combination of convex bodies lost convexity"
    );
    body
}

/// Area `1/2 \oint h w d theta` by the trapezoid rule.
pub fn volume(body: &ConvexBody2D) -> f64 {
    let n = body.nodes() as f64;
    0.5 * body
        .h()
        .iter()
        .zip(body.w())
        .map(|(h, w)| h * w)
        .sum::<f64>()
        * 2.0
        * PI
        / n
}

/// Largest distance between boundary nodes.
pub fn diameter(body: &ConvexBody2D) -> f64 {
    let pts = body.boundary();
    let mut best = 0.0_f64;
    for (i, p) in pts.iter().enumerate() {
        for q in &pts[i + 1..] {
            best = best.max(((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        }
    }
    best
}

pub fn translate(body: &ConvexBody2D, v: [f64; 2]) -> Result<ConvexBody2D> {
    validate_body(body.support().translated(v), body.nodes())
}

pub fn scale(body: &ConvexBody2D, a: f64) -> Result<ConvexBody2D> {
    if !(a > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scale factor must be positive, got {a}"
        )));
    }
    validate_body(body.support().scaled(a), body.nodes())
}

/// Seeded random smooth body `1 + sum_{k=2..K}` with coefficients uniform in
/// `[-alpha / (K k^2), alpha / (K k^2)]`, redrawn until `min w >= 0.05`.
pub fn random_body(seed: u64, degree: usize, amplitude: f64, nodes: usize) -> Result<ConvexBody2D> {
    if degree < 2 {
        return Err(Error::InvalidArgument(format!(
            "random body degree must be at least 2, got {degree}"
        )));
    }
    if !(0.0..1.0).contains(&amplitude) {
        return Err(Error::InvalidArgument(format!(
            "random body amplitude must lie in [0, 1), got {amplitude}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_RETRIES {
        let mut cos = vec![0.0; degree];
        let mut sin = vec![0.0; degree];
        for k in 2..=degree {
            let bound = amplitude / (degree as f64 * (k * k) as f64);
            if bound > 0.0 {
                cos[k - 1] = rng.random_range(-bound..=bound);
                sin[k - 1] = rng.random_range(-bound..=bound);
            }
        }
        let support = TrigSupport::new(1.0, cos, sin)?;
        if support.min_curvature_radius(4 * nodes).0 >= RANDOM_MIN_W {
            return validate_body(support, nodes);
        }
    }
    Err(Error::GenerationFailed {
        attempts: RANDOM_RETRIES,
    })
}

/// Perturbation direction for support functions, or equivalently a function
/// on the boundary composed with the Gauss map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestFunction {
    /// `xi . v` for a unit vector `v`.
    Translation {
        direction: [f64; 2],
    },
    /// The constant function 1.
    Dilation,
    Trig {
        series: TrigSupport,
    },
    Tabulated {
        field: BoundaryField,
    },
}

impl TestFunction {
    pub fn translation(direction: [f64; 2]) -> Result<Self> {
        let norm = direction[0].hypot(direction[1]);
        if !(norm > 0.0) {
            return Err(Error::InvalidArgument("zero translation direction".into()));
        }
        Ok(TestFunction::Translation {
            direction: [direction[0] / norm, direction[1] / norm],
        })
    }

    pub fn trig(series: TrigSupport) -> Self {
        TestFunction::Trig { series }
    }

    /// The function as a trigonometric series (tabulated fields are
    /// interpolated spectrally).
    pub fn to_trig(&self) -> TrigSupport {
        match self {
            TestFunction::Translation { direction } => TrigSupport::linear(*direction),
            TestFunction::Dilation => TrigSupport::constant(1.0),
            TestFunction::Trig { series } => series.clone(),
            TestFunction::Tabulated { field } => field.to_trig(),
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            TestFunction::Translation { direction } => {
                let (s, c) = theta.sin_cos();
                direction[0] * c + direction[1] * s
            }
            TestFunction::Dilation => 1.0,
            TestFunction::Trig { series } => series.eval(theta),
            TestFunction::Tabulated { field } => field.interpolate(theta),
        }
    }

    /// `[phi, phi', phi'']` sampled on an `n`-node grid.
    pub fn sample_derivs(&self, n: usize) -> [BoundaryField; 3] {
        let series = self.to_trig();
        let mut out = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for m in 0..n {
            let d = series.eval_derivs(theta_at(m, n));
            for (o, v) in out.iter_mut().zip(d) {
                o[m] = v;
            }
        }
        let [a, b, c] = out;
        [
            BoundaryField::new(a).expect("n >= 4"),
            BoundaryField::new(b).expect("n >= 4"),
            BoundaryField::new(c).expect("n >= 4"),
        ]
    }

    pub fn sample(&self, n: usize) -> BoundaryField {
        match self {
            TestFunction::Tabulated { field } if field.len() == n => field.clone(),
            _ => BoundaryField::from_fn(n, |t| self.eval(t)),
        }
    }
}

/// Seeded trigonometric test function of degree `<= degree` with coefficients
/// decaying like `1 / k`, used for random verification corpora.
pub fn random_test_function(seed: u64, degree: usize, amplitude: f64) -> TestFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let c0 = amplitude * rng.random_range(-1.0..=1.0);
    let mut cos = vec![0.0; degree];
    let mut sin = vec![0.0; degree];
    for k in 1..=degree {
        let bound = amplitude / k as f64;
        cos[k - 1] = rng.random_range(-bound..=bound);
        sin[k - 1] = rng.random_range(-bound..=bound);
    }
    TestFunction::trig(TrigSupport::new(c0, cos, sin).expect("finite coefficients"))
}
