//! Trigonometric polynomials on the unit circle.
//!
//! A support function is stored as `c0 + sum_k (a_k cos k theta + b_k sin k theta)`
//! and differentiated term by term, so `h'`, `h''` and the radius of curvature
//! `h'' + h` carry no discretization error of their own.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest degree accepted for a stored trigonometric polynomial.
pub const MAX_DEGREE: usize = 512;

/// Finite Fourier series on S^1: mean term plus cosine and sine coefficients
/// for `k = 1..=K` (index `k - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigSupport {
    c0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigSupport {
    /// Builds a series; the shorter coefficient list is zero-padded.
    pub fn new(c0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        let degree = cos.len().max(sin.len());
        if degree > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} exceeds maximum {MAX_DEGREE}"
            )));
        }
        if !c0.is_finite() || cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        let mut cos = cos;
        let mut sin = sin;
        cos.resize(degree, 0.0);
        sin.resize(degree, 0.0);
        Ok(Self { c0, cos, sin })
    }

    pub fn constant(c0: f64) -> Self {
        Self {
            c0,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    /// `xi . v` as a support function (the translation direction `v`).
    pub fn linear(v: [f64; 2]) -> Self {
        Self {
            c0: 0.0,
            cos: vec![v[0]],
            sin: vec![v[1]],
        }
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    /// Coefficient pair `(a_k, b_k)`; zero beyond the stored degree.
    pub fn coeff(&self, k: usize) -> (f64, f64) {
        if k == 0 {
            (self.c0, 0.0)
        } else if k <= self.degree() {
            (self.cos[k - 1], self.sin[k - 1])
        } else {
            (0.0, 0.0)
        }
    }

    pub fn eval(&self, theta: f64) -> f64 {
        self.eval_derivs(theta)[0]
    }

    /// `[f, f', f'']` at `theta`.
    pub fn eval_derivs(&self, theta: f64) -> [f64; 3] {
        let (s1, c1) = theta.sin_cos();
        let (mut ck, mut sk) = (1.0_f64, 0.0_f64);
        let mut out = [self.c0, 0.0, 0.0];
        for (k, (&a, &b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let next_c = ck * c1 - sk * s1;
            let next_s = sk * c1 + ck * s1;
            ck = next_c;
            sk = next_s;
            // re-anchor the recurrence every 32 steps
            if (k + 1) % 32 == 0 {
                let (s, c) = (((k + 1) as f64) * theta).sin_cos();
                ck = c;
                sk = s;
            }
            let kf = (k + 1) as f64;
            out[0] += a * ck + b * sk;
            out[1] += kf * (-a * sk + b * ck);
            out[2] += -kf * kf * (a * ck + b * sk);
        }
        out
    }

    /// `s * self + t * other`.
    pub fn combine(&self, s: f64, other: &TrigSupport, t: f64) -> TrigSupport {
        let degree = self.degree().max(other.degree());
        let mut cos = vec![0.0; degree];
        let mut sin = vec![0.0; degree];
        for k in 1..=degree {
            let (a1, b1) = self.coeff(k);
            let (a2, b2) = other.coeff(k);
            cos[k - 1] = s * a1 + t * a2;
            sin[k - 1] = s * b1 + t * b2;
        }
        TrigSupport {
            c0: s * self.c0 + t * other.c0,
            cos,
            sin,
        }
    }

    pub fn scaled(&self, a: f64) -> TrigSupport {
        self.combine(a, &TrigSupport::constant(0.0), 0.0)
    }

    /// Support function of the body translated by `v`.
    pub fn translated(&self, v: [f64; 2]) -> TrigSupport {
        self.combine(1.0, &TrigSupport::linear(v), 1.0)
    }

    /// Copy with the degree-one (translation) terms removed.
    pub fn centered(&self) -> TrigSupport {
        let mut out = self.clone();
        if out.degree() >= 1 {
            out.cos[0] = 0.0;
            out.sin[0] = 0.0;
        }
        out
    }

    /// Minimum of `f'' + f` over a uniform grid with `n` nodes.
    pub fn min_curvature_radius(&self, n: usize) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for m in 0..n {
            let theta = 2.0 * PI * m as f64 / n as f64;
            let [f, _, fpp] = self.eval_derivs(theta);
            if fpp + f < best.0 {
                best = (fpp + f, theta);
            }
        }
        best
    }

    /// Projects `f` onto degree `degree` by discrete Fourier analysis at
    /// `samples` equispaced points.
    pub fn project<F: Fn(f64) -> f64>(f: F, degree: usize, samples: usize) -> Result<Self> {
        if samples <= 2 * degree {
            return Err(Error::InvalidArgument(format!(
                "{samples} samples cannot resolve degree {degree}"
            )));
        }
        let values: Vec<f64> = (0..samples)
            .map(|m| f(2.0 * PI * m as f64 / samples as f64))
            .collect();
        Self::from_samples(&values, degree)
    }

    /// Trigonometric interpolation/projection of periodic samples on the
    /// uniform grid `theta_m = 2 pi m / len`.
    pub fn from_samples(values: &[f64], degree: usize) -> Result<Self> {
        let n = values.len();
        if n == 0 || 2 * degree >= n + usize::from(n % 2 == 0) {
            return Err(Error::InvalidArgument(format!(
                "{n} samples cannot resolve degree {degree}"
            )));
        }
        let (c0, cos, sin) = real_dft(values, degree);
        TrigSupport::new(c0, cos, sin)
    }

    pub fn sample(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|m| self.eval(2.0 * PI * m as f64 / n as f64))
            .collect()
    }
}

/// Real DFT of uniform periodic samples truncated at `degree`.
///
/// Returns the mean term and cosine/sine coefficients such that the
/// trigonometric interpolant is `c0 + sum a_k cos k t + b_k sin k t`. A
/// Nyquist term (k = n/2 for even n) gets half weight.
pub fn real_dft(values: &[f64], degree: usize) -> (f64, Vec<f64>, Vec<f64>) {
    let n = values.len();
    let nf = n as f64;
    let c0 = values.iter().sum::<f64>() / nf;
    let mut cos = vec![0.0; degree];
    let mut sin = vec![0.0; degree];
    // twiddle table: cos/sin of 2 pi j / n
    let table: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let (s, c) = (2.0 * PI * j as f64 / nf).sin_cos();
            (c, s)
        })
        .collect();
    for k in 1..=degree {
        let mut a = 0.0;
        let mut b = 0.0;
        for (m, &v) in values.iter().enumerate() {
            let (c, s) = table[(k * m) % n];
            a += v * c;
            b += v * s;
        }
        let nyquist = n % 2 == 0 && 2 * k == n;
        let scale = if nyquist { 1.0 / nf } else { 2.0 / nf };
        cos[k - 1] = a * scale;
        sin[k - 1] = b * scale;
    }
    (c0, cos, sin)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_closed_form() {
        let t = TrigSupport::new(1.0, vec![0.0, 0.1], vec![0.0, 0.0, -0.05]).unwrap();
        let theta = 0.37;
        let [f, fp, fpp] = t.eval_derivs(theta);
        let exact_f = 1.0 + 0.1 * (2.0 * theta).cos() - 0.05 * (3.0 * theta).sin();
        let exact_fp = -0.2 * (2.0 * theta).sin() - 0.15 * (3.0 * theta).cos();
        let exact_fpp = -0.4 * (2.0 * theta).cos() + 0.45 * (3.0 * theta).sin();
        assert!((f - exact_f).abs() < 1e-14);
        assert!((fp - exact_fp).abs() < 1e-14);
        assert!((fpp - exact_fpp).abs() < 1e-14);
    }

    #[test]
    fn long_recurrence_stays_accurate() {
        let mut cos = vec![0.0; 200];
        cos[199] = 1.0;
        let t = TrigSupport::new(0.0, cos, vec![]).unwrap();
        let theta = 1.2345;
        assert!((t.eval(theta) - (200.0 * theta).cos()).abs() < 1e-12);
    }

    #[test]
    fn projection_recovers_polynomial() {
        let f = |t: f64| 2.0 + 0.3 * t.cos() - 0.2 * (4.0 * t).sin();
        let p = TrigSupport::project(f, 8, 64).unwrap();
        assert!((p.c0() - 2.0).abs() < 1e-14);
        assert!((p.coeff(1).0 - 0.3).abs() < 1e-14);
        assert!((p.coeff(4).1 + 0.2).abs() < 1e-14);
        assert!(p.coeff(5).0.abs() < 1e-14);
    }

    #[test]
    fn rejects_oversized_and_nonfinite() {
        assert!(TrigSupport::new(1.0, vec![0.0; MAX_DEGREE + 1], vec![]).is_err());
        assert!(TrigSupport::new(f64::NAN, vec![], vec![]).is_err());
    }
}
