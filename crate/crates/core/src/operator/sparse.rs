use std::collections::BTreeMap;

use super::{OperatorNorms, SymmetricOperator};
use crate::error::{Error, Result};

/// Symmetric sparse matrix.
///
/// The lower triangle is kept as a sorted, duplicate-free coordinate list;
/// a full compressed-row copy of both triangles backs the matvec.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymmetricMatrix {
    n: usize,
    /// `(row, col, value)` with `row >= col`, sorted by `(row, col)`.
    lower: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    /// Assembles from 0-based coordinates. `(i, j, v)` sets both `A_ij` and
    /// `A_ji`; repeated coordinates are summed.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("entry ({i}, {j}) out of range for n = {n}")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("entry ({i}, {j}) is not finite")));
            }
            let key = if i >= j { (i, j) } else { (j, i) };
            *acc.entry(key).or_insert(0.0) += v;
        }
        let lower: Vec<_> = acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
        Ok(Self::assemble(n, lower))
    }

    fn assemble(n: usize, lower: Vec<(usize, usize, f64)>) -> Self {
        let mut counts = vec![0usize; n];
        for &(i, j, _) in &lower {
            counts[i] += 1;
            if i != j {
                counts[j] += 1;
            }
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let nnz = row_ptr[n];
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = row_ptr.clone();
        for &(i, j, v) in &lower {
            col_idx[next[i]] = j;
            values[next[i]] = v;
            next[i] += 1;
            if i != j {
                col_idx[next[j]] = i;
                values[next[j]] = v;
                next[j] += 1;
            }
        }
        Self {
            n,
            lower,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::assemble(n, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored (lower-triangle) coordinates.
    pub fn stored_entries(&self) -> usize {
        self.lower.len()
    }

    pub fn lower_entries(&self) -> &[(usize, usize, f64)] {
        &self.lower
    }

    /// Iterates over the nonzeros of row `i` (both triangles).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn diagonal_vec(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for &(i, j, v) in &self.lower {
            if i == j {
                d[i] = v;
            }
        }
        d
    }

    pub fn trace(&self) -> f64 {
        self.diagonal_vec().iter().sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.lower
            .iter()
            .map(|&(i, j, v)| if i == j { v * v } else { 2.0 * v * v })
            .sum::<f64>()
            .sqrt()
    }

    pub fn offdiag_frobenius(&self) -> f64 {
        self.lower
            .iter()
            .filter(|&&(i, j, _)| i != j)
            .map(|&(_, _, v)| 2.0 * v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut a = vec![0.0; n * n];
        for &(i, j, v) in &self.lower {
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
        a
    }

    /// True when the matrix is a 0/1 adjacency matrix with empty diagonal.
    pub fn is_simple_adjacency(&self) -> bool {
        self.lower.iter().all(|&(i, j, v)| i != j && v == 1.0)
    }

    /// Sorted neighbor lists of the graph given by the off-diagonal pattern.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        (0..self.n)
            .map(|i| {
                let mut nb: Vec<usize> = self
                    .row(i)
                    .filter(|&(j, v)| j != i && v != 0.0)
                    .map(|(j, _)| j)
                    .collect();
                nb.sort_unstable();
                nb
            })
            .collect()
    }
}

impl SymmetricOperator for SparseSymmetricMatrix {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.diagonal_vec())
    }

    fn known_norms(&self) -> Option<OperatorNorms> {
        None
    }
}
