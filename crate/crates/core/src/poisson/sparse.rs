//! Compressed sparse rows, ILU(0) and right-preconditioned BiCGSTAB.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; columns are sorted and
    /// duplicates summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if col.len() > *row_ptr.last().unwrap() && *col.last().unwrap() == c {
                    *val.last_mut().unwrap() += v;
                } else {
                    col.push(c);
                    val.push(v);
                }
            }
            row_ptr.push(col.len());
        }
        Self {
            n,
            row_ptr,
            col,
            val,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[p] * x[self.col[p]];
            }
            *yi = acc;
        }
    }

    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.n];
        self.mul_into(x, &mut r);
        r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        r
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in lu.row_ptr[i]..lu.row_ptr[i + 1] {
                if lu.col[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SolveFailed {
                    iterations: 0,
                    residual: f64::NAN,
                });
            }
        }
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                marker[lu.col[p]] = p;
            }
            for p in start..end {
                let k = lu.col[p];
                if k >= i {
                    break;
                }
                let pivot = lu.val[diag[k]];
                lu.val[p] /= pivot;
                let factor = lu.val[p];
                for q in diag[k] + 1..lu.row_ptr[k + 1] {
                    let m = marker[lu.col[q]];
                    if m != usize::MAX {
                        lu.val[m] -= factor * lu.val[q];
                    }
                }
            }
            for p in start..end {
                marker[lu.col[p]] = usize::MAX;
            }
        }
        Ok(Self { lu, diag })
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut acc = r[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                acc -= lu.val[p] * z[lu.col[p]];
            }
            z[i] = acc;
        }
        for i in (0..lu.n).rev() {
            let mut acc = z[i];
            for p in self.diag[i] + 1..lu.row_ptr[i + 1] {
                acc -= lu.val[p] * z[lu.col[p]];
            }
            z[i] = acc / lu.val[self.diag[i]];
        }
    }
}

/// Outcome of an iterative solve.
#[derive(Debug, Clone)]
pub struct SolveStats {
    pub iterations: usize,
    /// `||b - A x|| / ||b||` (or `||b - A x||` when `b = 0`).
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` with ILU(0)-preconditioned BiCGSTAB, restarting from the
/// true residual whenever the recursive one drifts. Iteration aims at
/// relative residual `target`; once restarts stop making progress, any
/// iterate within `accept` is returned instead.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    target: f64,
    accept: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let accept = accept.max(target);
    let n = a.n();
    let mut x = vec![0.0; n];
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((
            x,
            SolveStats {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let precond = Ilu0::new(a)?;
    let (aim, good_enough) = (target * b_norm, accept * b_norm);
    let target = aim;
    let mut iterations = 0;
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    let mut r = b.to_vec();
    let (mut p, mut v) = (vec![0.0; n], vec![0.0; n]);
    let (mut p_hat, mut s_hat) = (vec![0.0; n], vec![0.0; n]);
    let (mut s, mut t) = (vec![0.0; n], vec![0.0; n]);

    'restart: while iterations < max_iter {
        let r_norm = norm(&r);
        if r_norm <= target {
            break;
        }
        if r_norm < 0.5 * best {
            stalled = 0;
        } else {
            stalled += 1;
        }
        best = best.min(r_norm);
        if stalled >= 3 && r_norm <= good_enough {
            break;
        }
        let r_shadow = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        p.iter_mut().for_each(|e| *e = 0.0);
        v.iter_mut().for_each(|e| *e = 0.0);
        while iterations < max_iter {
            iterations += 1;
            let rho_new = dot(&r_shadow, &r);
            if rho_new == 0.0 || omega == 0.0 {
                r = a.residual(&x, b);
                continue 'restart;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for k in 0..n {
                p[k] = r[k] + beta * (p[k] - omega * v[k]);
            }
            precond.apply(&p, &mut p_hat);
            a.mul_into(&p_hat, &mut v);
            let denom = dot(&r_shadow, &v);
            if denom == 0.0 {
                r = a.residual(&x, b);
                continue 'restart;
            }
            alpha = rho / denom;
            for k in 0..n {
                s[k] = r[k] - alpha * v[k];
            }
            if norm(&s) <= target {
                for k in 0..n {
                    x[k] += alpha * p_hat[k];
                }
                r = a.residual(&x, b);
                if norm(&r) <= target {
                    break 'restart;
                }
                continue 'restart;
            }
            precond.apply(&s, &mut s_hat);
            a.mul_into(&s_hat, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for k in 0..n {
                x[k] += alpha * p_hat[k] + omega * s_hat[k];
                r[k] = s[k] - omega * t[k];
            }
            if norm(&r) <= target {
                r = a.residual(&x, b);
                if norm(&r) <= target {
                    break 'restart;
                }
                continue 'restart;
            }
        }
    }
    let relative_residual = norm(&a.residual(&x, b)) / b_norm;
    if relative_residual > accept || !x.iter().all(|v| v.is_finite()) {
        return Err(Error::SolveFailed {
            iterations,
            residual: relative_residual,
        });
    }
    Ok((
        x,
        SolveStats {
            iterations,
            relative_residual,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> CsrMatrix {
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![(i, -2.0)];
                if i > 0 {
                    row.push((i - 1, 1.0));
                }
                if i + 1 < n {
                    row.push((i + 1, 1.0));
                }
                row
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    #[test]
    fn ilu_of_tridiagonal_is_exact() {
        let a = laplacian_1d(20);
        let ilu = Ilu0::new(&a).unwrap();
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let mut z = vec![0.0; 20];
        ilu.apply(&b, &mut z);
        let r = a.residual(&z, &b);
        assert!(norm(&r) < 1e-12);
    }

    #[test]
    fn bicgstab_solves_nonsymmetric_system() {
        let n = 200;
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![(i, -4.0)];
                if i > 0 {
                    row.push((i - 1, 1.5));
                }
                if i + 1 < n {
                    row.push((i + 1, 0.5));
                }
                if i + 10 < n {
                    row.push((i + 10, 1.0));
                }
                if i >= 10 {
                    row.push((i - 10, 0.7));
                }
                row
            })
            .collect();
        let a = CsrMatrix::from_rows(rows);
        let b = vec![1.0; n];
        let (x, stats) = bicgstab(&a, &b, 1e-12, 1e-12, 500).unwrap();
        assert!(stats.relative_residual <= 1e-12);
        assert!(norm(&a.residual(&x, &b)) <= 1e-12 * norm(&b));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = laplacian_1d(5);
        let (x, stats) = bicgstab(&a, &[0.0; 5], 1e-10, 1e-10, 10).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(stats.iterations, 0);
    }

    #[test]
    fn duplicate_entries_are_summed() {
        let a = CsrMatrix::from_rows(vec![vec![(0, 1.0), (0, 2.0)]]);
        let mut y = [0.0];
        a.mul_into(&[1.0], &mut y);
        assert_eq!(y[0], 3.0);
    }
}
