//! Periodic sampled functions of the normal angle on a body boundary.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexBody2D;
use crate::trig::{real_dft, TrigSupport};

/// Samples of a periodic function at `theta_m = 2 pi m / N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryField {
    values: Vec<f64>,
}

impl BoundaryField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::InvalidArgument(
                "boundary field needs at least 4 samples".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Self {
        Self {
            values: (0..n).map(|m| f(theta_at(m, n))).collect(),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { values: vec![c; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn theta(&self, m: usize) -> f64 {
        theta_at(m, self.len())
    }

    pub fn map<F: Fn(f64, f64) -> f64>(&self, f: F) -> Self {
        Self {
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(m, &v)| f(theta_at(m, self.len()), v))
                .collect(),
        }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with<F: Fn(f64, f64) -> f64>(&self, other: &BoundaryField, f: F) -> Self {
        assert_eq!(self.len(), other.len(), "fields sampled on different grids");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoid rule against `d theta`.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * 2.0 * PI / self.len() as f64
    }

    /// Integral against arc length `dH^1 = w d theta`.
    pub fn integrate_arclength(&self, body: &ConvexBody2D) -> f64 {
        assert_eq!(self.len(), body.nodes(), "field and body grids differ");
        self.values
            .iter()
            .zip(body.w())
            .map(|(v, w)| v * w)
            .sum::<f64>()
            * 2.0
            * PI
            / self.len() as f64
    }

    /// Periodic cubic (four-point Lagrange) interpolation at any angle.
    pub fn interpolate(&self, theta: f64) -> f64 {
        let n = self.len();
        let step = 2.0 * PI / n as f64;
        let s = theta.rem_euclid(2.0 * PI) / step;
        let base = s.floor();
        let u = s - base;
        let i = base as isize;
        let at = |k: isize| self.values[(i + k).rem_euclid(n as isize) as usize];
        // nodes -1, 0, 1, 2 relative to base
        let w_m1 = -u * (u - 1.0) * (u - 2.0) / 6.0;
        let w_0 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
        let w_1 = -(u + 1.0) * u * (u - 2.0) / 2.0;
        let w_2 = (u + 1.0) * u * (u - 1.0) / 6.0;
        w_m1 * at(-1) + w_0 * at(0) + w_1 * at(1) + w_2 * at(2)
    }

    /// Trigonometric interpolant of the samples (Nyquist term halved).
    pub fn to_trig(&self) -> TrigSupport {
        let n = self.len();
        let (c0, cos, sin) = real_dft(&self.values, n / 2);
        TrigSupport::new(c0, cos, sin).expect("finite samples give a finite series")
    }

    /// Spectral derivative with respect to theta. The Nyquist mode is dropped.
    pub fn derivative(&self) -> Self {
        let n = self.len();
        let degree = (n - 1) / 2;
        let (_, cos, sin) = real_dft(&self.values, degree);
        let dcos: Vec<f64> = (1..=degree).map(|k| k as f64 * sin[k - 1]).collect();
        let dsin: Vec<f64> = (1..=degree).map(|k| -(k as f64) * cos[k - 1]).collect();
        let d = TrigSupport::new(0.0, dcos, dsin).expect("finite derivative");
        Self {
            values: d.sample(n),
        }
    }
}

pub(crate) fn theta_at(m: usize, n: usize) -> f64 {
    2.0 * PI * m as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_exact_for_low_modes() {
        let f = BoundaryField::from_fn(64, |t| 1.0 + (3.0 * t).cos() + (5.0 * t).sin().powi(2));
        // mean of sin^2 is 1/2
        assert!((f.integrate() - 2.0 * PI * 1.5).abs() < 1e-12);
    }

    #[test]
    fn cubic_interpolation_is_accurate_between_nodes() {
        let f = BoundaryField::from_fn(256, |t| (2.0 * t).sin() + 0.3 * t.cos());
        for &t in &[0.01_f64, 1.234, 3.9, 6.2] {
            let exact = (2.0 * t).sin() + 0.3 * t.cos();
            assert!((f.interpolate(t) - exact).abs() < 1e-6);
        }
        // periodic wrap
        assert!((f.interpolate(-0.1) - f.interpolate(2.0 * PI - 0.1)).abs() < 1e-14);
    }

    #[test]
    fn spectral_derivative() {
        let f = BoundaryField::from_fn(128, |t| (3.0 * t).cos() + 0.5 * t.sin());
        let d = f.derivative();
        for m in 0..128 {
            let t = f.theta(m);
            let exact = -3.0 * (3.0 * t).sin() + 0.5 * t.cos();
            assert!((d.values()[m] - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn rejects_tiny_fields() {
        assert!(BoundaryField::new(vec![1.0; 3]).is_err());
    }
}
