//! Dense LU factorization with log-magnitude determinant accumulation.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Pivots with magnitude below this are treated as exact zeros.
pub const SINGULAR_PIVOT: f64 = 1e-300;

/// `det = sign · exp(log_abs)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogDet {
    pub sign: f64,
    pub log_abs: f64,
}

/// Row-pivoted LU factorization `P·M = L·U`, stored packed.
#[derive(Clone, Debug)]
pub struct Lu {
    packed: Array2<f64>,
    perm: Vec<usize>,
    sign: f64,
}

impl Lu {
    pub fn factor(matrix: ArrayView2<'_, f64>) -> Result<Self> {
        let (rows, cols) = matrix.dim();
        if rows != cols {
            return Err(Error::Shape(format!("matrix is {rows} x {cols}, not square")));
        }
        let n = rows;
        let mut a = matrix.to_owned();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for k in 0..n {
            let (p, mag) =
                (k..n)
                    .map(|i| (i, a[(i, k)].abs()))
                    .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if mag.is_nan() || mag < SINGULAR_PIVOT {
                return Err(Error::Singular {
                    pivot: mag,
                    condition: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    a.swap((k, j), (p, j));
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                if factor != 0.0 {
                    for j in k + 1..n {
                        a[(i, j)] -= factor * a[(k, j)];
                    }
                }
            }
        }
        Ok(Lu { packed: a, perm, sign })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn log_det(&self) -> LogDet {
        let mut sign = self.sign;
        let mut log_abs = 0.0;
        for k in 0..self.dim() {
            let d = self.packed[(k, k)];
            if d < 0.0 {
                sign = -sign;
            }
            log_abs += d.abs().ln();
        }
        LogDet { sign, log_abs }
    }

    /// Ratio of largest to smallest pivot magnitude; a cheap conditioning proxy.
    pub fn condition_estimate(&self) -> f64 {
        let (lo, hi) = (0..self.dim())
            .map(|k| self.packed[(k, k)].abs())
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        if self.dim() == 0 {
            1.0
        } else {
            hi / lo
        }
    }

    /// Solves `M x = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.packed[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.packed[(i, j)] * x[j];
            }
            x[i] = s / self.packed[(i, i)];
        }
        b.copy_from_slice(&x);
    }

    pub fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        let mut inv = Array2::zeros((n, n));
        let mut col = vec![0.0; n];
        for j in 0..n {
            col.iter_mut().for_each(|c| *c = 0.0);
            col[j] = 1.0;
            self.solve_in_place(&mut col);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        inv
    }
}

/// Signed log-determinant of a square matrix. The empty matrix has det 1.
pub fn log_det(matrix: ArrayView2<'_, f64>) -> Result<LogDet> {
    Ok(Lu::factor(matrix)?.log_det())
}

/// Embeds `matrix` top-left in a `target × target` identity: padding rows
/// and columns are zero except for ones on the padding diagonal.
pub fn identity_pad(matrix: ArrayView2<'_, f64>, target: usize) -> Result<Array2<f64>> {
    let (rows, cols) = matrix.dim();
    if rows != cols {
        return Err(Error::Shape(format!("matrix is {rows} x {cols}, not square")));
    }
    if target < rows {
        return Err(Error::Shape(format!(
            "cannot pad a {rows} x {rows} matrix down to {target} x {target}"
        )));
    }
    let mut padded = Array2::eye(target);
    padded.slice_mut(ndarray::s![..rows, ..rows]).assign(&matrix);
    Ok(padded)
}

/// Log-determinants of variable-size matrices computed at one common size.
///
/// Each matrix is identity-padded to `target_size` and factored at that
/// size; by cofactor expansion along the padding rows the determinant is
/// unchanged. Failures are reported per item and do not stop the batch.
/// Output order matches input order.
pub fn padded_batch_log_det(matrices: &[Array2<f64>], target_size: usize) -> Vec<Result<LogDet>> {
    matrices
        .par_iter()
        .map(|m| {
            let padded = identity_pad(m.view(), target_size)?;
            log_det(padded.view())
        })
        .collect()
}
