//! Gauss-Legendre rules and a product quadrature on the unit sphere S^2.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-type initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule on S^2: Gauss-Legendre in `z = cos(polar angle)` times the
/// uniform rule in azimuth.
#[derive(Debug, Clone)]
pub struct S2Quadrature {
    pub polar: usize,
    pub azimuthal: usize,
    points: Vec<[f64; 3]>,
    weights: Vec<f64>,
}

impl S2Quadrature {
    pub fn new(polar: usize, azimuthal: usize) -> Result<Self> {
        if polar < 2 || azimuthal < 3 {
            return Err(Error::InvalidArgument(format!(
                "sphere quadrature needs at least 2 x 3 nodes, got {polar} x {azimuthal}"
            )));
        }
        let (z, wz) = gauss_legendre(polar);
        let mut points = Vec::with_capacity(polar * azimuthal);
        let mut weights = Vec::with_capacity(polar * azimuthal);
        let dphi = 2.0 * PI / azimuthal as f64;
        for (zi, wi) in z.iter().zip(&wz) {
            let r = (1.0 - zi * zi).sqrt();
            for k in 0..azimuthal {
                let (s, c) = (k as f64 * dphi).sin_cos();
                points.push([r * c, r * s, *zi]);
                weights.push(wi * dphi);
            }
        }
        Ok(Self {
            polar,
            azimuthal,
            points,
            weights,
        })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn([f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, w)| w * f(p))
            .sum()
    }

    /// Largest polynomial degree the rule is designed to integrate exactly.
    pub fn design_degree(&self) -> usize {
        (2 * self.polar - 1).min(self.azimuthal - 1)
    }

    /// Largest error over all monomials `x^a y^b z^c` with `a + b + c <= degree`.
    pub fn exactness_error(&self, degree: usize) -> f64 {
        let mut worst = 0.0_f64;
        for a in 0..=degree {
            for b in 0..=degree - a {
                for c in 0..=degree - a - b {
                    let exact = sphere_monomial(a, b, c);
                    let approx = self.integrate(|p| {
                        p[0].powi(a as i32) * p[1].powi(b as i32) * p[2].powi(c as i32)
                    });
                    worst = worst.max((approx - exact).abs());
                }
            }
        }
        worst
    }

    /// Fails unless all monomials up to `degree` are integrated to 1e-12.
    pub fn check(&self, degree: usize) -> Result<()> {
        if degree > self.design_degree() {
            return Err(Error::QuadratureUnderResolved(format!(
                "degree {degree} exceeds the design degree {} of a {} x {} rule",
                self.design_degree(),
                self.polar,
                self.azimuthal
            )));
        }
        let err = self.exactness_error(degree);
        if err > 1e-12 {
            return Err(Error::QuadratureUnderResolved(format!(
                "monomials up to degree {degree} integrated with error {err:.3e}"
            )));
        }
        Ok(())
    }
}

impl Default for S2Quadrature {
    fn default() -> Self {
        Self::new(64, 128).expect("valid default sizes")
    }
}

/// `Gamma(m / 2)` for a positive odd integer `m`.
fn gamma_half_odd(m: usize) -> f64 {
    debug_assert!(m % 2 == 1);
    let mut g = PI.sqrt();
    let mut x = 0.5;
    while x < m as f64 / 2.0 - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

/// Exact `\int_{S^2} x^a y^b z^c d sigma`.
pub fn sphere_monomial(a: usize, b: usize, c: usize) -> f64 {
    if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
        return 0.0;
    }
    2.0 * gamma_half_odd(a + 1) * gamma_half_odd(b + 1) * gamma_half_odd(c + 1)
        / gamma_half_odd(a + b + c + 3)
}
