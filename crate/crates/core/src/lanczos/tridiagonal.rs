//! Symmetric tridiagonal matrices and the implicit-shift QL eigensolver.
//!
//! The QL sweep follows the EISPACK `tql2` recurrence. Rotations act on the
//! columns of an eigenvector matrix, so any subset of its rows can be carried
//! along: Gauss quadrature only needs the first row (`O(m²)` per solve), the
//! dense oracle carries all of them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalMatrix {
    /// Diagonal, length `m`.
    pub alpha: Vec<f64>,
    /// Off-diagonal, length `m - 1`.
    pub beta: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || beta.len() + 1 != alpha.len() {
            return Err(Error::invalid(format!(
                "tridiagonal needs m >= 1 diagonal and m - 1 off-diagonal entries (got {} and {})",
                alpha.len(),
                beta.len()
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// Eigenvalues (ascending) and the squared first components of the
    /// normalized eigenvectors, i.e. the Gauss nodes and weights.
    pub fn gauss_rule(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let eig = tridiagonal_eigen(&self.alpha, &self.beta, &[0])?;
        let weights = eig.rows[0].iter().map(|v| v * v).collect();
        Ok((eig.values, weights))
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(tridiagonal_eigen(&self.alpha, &self.beta, &[])?.values)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            alpha: self.alpha.iter().map(|a| a * c).collect(),
            beta: self.beta.iter().map(|b| b * c.abs()).collect(),
        }
    }

    /// Solves `(T - shift I) z = e_m` and returns `z_m`, or `None` when a
    /// pivot vanishes.
    pub(crate) fn last_entry_of_shifted_solve(&self, shift: f64) -> Option<f64> {
        // LDLᵀ of T - shift I; only the last component of the solution is needed,
        // which for right-hand side e_m equals 1 / d_m.
        let m = self.dim();
        let mut d = self.alpha[0] - shift;
        for i in 1..m {
            if d == 0.0 || !d.is_finite() {
                return None;
            }
            let l = self.beta[i - 1] / d;
            d = self.alpha[i] - shift - l * self.beta[i - 1];
        }
        if d == 0.0 || !d.is_finite() {
            None
        } else {
            Some(1.0 / d)
        }
    }
}

/// Eigenvalues (ascending) plus selected rows of the eigenvector matrix.
#[derive(Debug, Clone)]
pub struct TridiagonalEigen {
    pub values: Vec<f64>,
    /// `rows[r][j]` = component `tracked_rows[r]` of eigenvector `j`.
    pub rows: Vec<Vec<f64>>,
}

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal
/// `diag` and off-diagonal `offdiag`, tracking the eigenvector rows listed in
/// `tracked_rows`.
pub fn tridiagonal_eigen(diag: &[f64], offdiag: &[f64], tracked_rows: &[usize]) -> Result<TridiagonalEigen> {
    let n = diag.len();
    if n == 0 || offdiag.len() + 1 != n {
        return Err(Error::invalid("tridiagonal dimensions inconsistent"));
    }
    if diag.iter().chain(offdiag).any(|v| !v.is_finite()) {
        return Err(Error::invalid("tridiagonal matrix has non-finite entries"));
    }
    let rows = tracked_rows.len();
    let mut v = vec![0.0; rows * n];
    for (r, &row) in tracked_rows.iter().enumerate() {
        if row >= n {
            return Err(Error::invalid(format!("tracked row {row} out of range")));
        }
        v[r * n + row] = 1.0;
    }
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    implicit_ql(&mut d, &mut e, &mut v, rows)?;
    Ok(TridiagonalEigen {
        values: d,
        rows: (0..rows).map(|r| v[r * n..(r + 1) * n].to_vec()).collect(),
    })
}

/// In-place implicit QL on `(d, e)` where `e[i]` couples `i` and `i + 1`
/// (`e[n-1]` ignored). `v` is a `rows x n` row-major block whose columns are
/// rotated alongside; on return `d` is ascending and `v` columns follow it.
pub(crate) fn implicit_ql(d: &mut [f64], e: &mut [f64], v: &mut [f64], rows: usize) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let eps = f64::EPSILON;
    let max_iter = 60 * n;
    let mut total_iter = 0usize;
    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            loop {
                total_iter += 1;
                if total_iter > max_iter {
                    return Err(Error::NoConvergence { iterations: total_iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for k in 0..rows {
                        let row = &mut v[k * n..(k + 1) * n];
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // selection sort keeps the column swaps cheap for the tracked rows
    for i in 0..n - 1 {
        let mut k = i;
        let mut p = d[i];
        for (j, &dj) in d.iter().enumerate().skip(i + 1) {
            if dj < p {
                k = j;
                p = dj;
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for r in 0..rows {
                v.swap(r * n + i, r * n + k);
            }
        }
    }
    Ok(())
}
