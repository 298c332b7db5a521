//! Synthetic matrices: tightness examples, the sparse low-rank SPSD family,
//! random sparse symmetric/SPD matrices and random graphs.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ExchangeOperator, PolynomialOfOperator, SignSplitOperator, SparseSymmetricMatrix, SymmetricOperator};
use crate::error::{Error, Result};

/// `diag(I_{n/2}, -I_{n/2})`: trace 0, `‖B‖_F = √n`, `‖B‖₂ = 1`.
pub fn gen_tightness_gaussian(n: usize) -> Result<SignSplitOperator> {
    SignSplitOperator::new(n)
}

/// The `n x n` exchange (anti-identity) matrix: trace 0 for even `n`.
pub fn gen_tightness_rademacher(n: usize) -> Result<ExchangeOperator> {
    ExchangeOperator::new(n)
}

const LOWRANK_TERMS: usize = 300;
const LOWRANK_HEAVY: usize = 40;
const LOWRANK_DENSITY: f64 = 0.025;

/// Factored form of `Σ_j w_j x_j x_jᵀ (+ σ I)`.
///
/// `w_j = 10/j²` for `j ≤ 40` and `1/j²` up to `j = 300`. Each coordinate
/// of `x_j` is nonzero independently with probability 0.025, with a value
/// uniform on `(0, 1)`.
#[derive(Debug, Clone)]
pub struct LowRankFactors {
    n: usize,
    weights: Vec<f64>,
    vectors: Vec<Vec<(usize, f64)>>,
    shift: f64,
}

impl LowRankFactors {
    pub fn generate(n: usize, seed: u64, shift: f64) -> Result<Self> {
        if n < LOWRANK_TERMS {
            return Err(Error::invalid(format!(
                "lowrank generator needs n >= {LOWRANK_TERMS}, got {n}"
            )));
        }
        if !(shift >= 0.0 && shift.is_finite()) {
            return Err(Error::invalid("shift must be finite and nonnegative"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(LOWRANK_TERMS);
        let mut vectors = Vec::with_capacity(LOWRANK_TERMS);
        for j in 1..=LOWRANK_TERMS {
            let jf = j as f64;
            weights.push(if j <= LOWRANK_HEAVY {
                10.0 / (jf * jf)
            } else {
                1.0 / (jf * jf)
            });
            let mut v = Vec::new();
            for i in 0..n {
                if rng.random::<f64>() < LOWRANK_DENSITY {
                    v.push((i, rng.random::<f64>()));
                }
            }
            vectors.push(v);
        }
        Ok(Self {
            n,
            weights,
            vectors,
            shift,
        })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Explicit sparse assembly (dense blocks of size ~(0.025 n)² per term).
    pub fn to_sparse(&self) -> Result<SparseSymmetricMatrix> {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (w, v) in self.weights.iter().zip(&self.vectors) {
            for &(i, a) in v {
                for &(j, b) in v {
                    if i >= j {
                        *acc.entry((i, j)).or_insert(0.0) += w * a * b;
                    }
                }
            }
        }
        if self.shift != 0.0 {
            for i in 0..self.n {
                *acc.entry((i, i)).or_insert(0.0) += self.shift;
            }
        }
        SparseSymmetricMatrix::from_triplets(self.n, acc.into_iter().map(|((i, j), v)| (i, j, v)))
    }
}

impl SymmetricOperator for LowRankFactors {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.shift * xi;
        }
        for (w, v) in self.weights.iter().zip(&self.vectors) {
            let c: f64 = v.iter().map(|&(i, a)| a * x[i]).sum::<f64>() * w;
            if c != 0.0 {
                for &(i, a) in v {
                    y[i] += c * a;
                }
            }
        }
    }
}

/// The sparse low-rank SPSD test matrix, assembled explicitly. `shift` adds
/// `σ I`; with `σ = 0` the matrix is singular whenever `n > 300`.
pub fn gen_lowrank(n: usize, seed: u64, shift: f64) -> Result<SparseSymmetricMatrix> {
    LowRankFactors::generate(n, seed, shift)?.to_sparse()
}

/// `A³` for a simple undirected graph; `tr(A³) / 6` counts triangles.
pub fn triangle_operator(adjacency: SparseSymmetricMatrix) -> Result<PolynomialOfOperator<SparseSymmetricMatrix>> {
    if let Some(&(i, _, v)) = adjacency.lower_entries().iter().find(|&&(i, j, _)| i == j) {
        return Err(Error::invalid(format!(
            "adjacency matrix has nonzero diagonal entry {v} at ({i}, {i})"
        )));
    }
    if let Some(&(i, j, v)) = adjacency.lower_entries().iter().find(|&&(_, _, v)| v != 1.0) {
        return Err(Error::invalid(format!(
            "adjacency entry ({i}, {j}) = {v}, expected 0/1"
        )));
    }
    PolynomialOfOperator::new(adjacency, 3)
}

/// Random symmetric matrix with about `per_row` off-diagonal entries per row,
/// a full diagonal, and values uniform on `[-1, 1]`.
pub fn random_sparse_symmetric(n: usize, per_row: usize, seed: u64) -> Result<SparseSymmetricMatrix> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trips = Vec::with_capacity(n * (per_row / 2 + 1));
    for i in 0..n {
        trips.push((i, i, rng.random_range(-1.0..1.0)));
        for _ in 0..per_row / 2 {
            let j = rng.random_range(0..n);
            if j != i {
                trips.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    SparseSymmetricMatrix::from_triplets(n, trips)
}

/// `I + B` with `B` sparse symmetric, zero diagonal, scaled so every
/// Gershgorin radius is at most `radius < 1`; the spectrum lies in
/// `[1 - radius, 1 + radius]`.
pub fn random_sparse_spd(n: usize, per_row: usize, radius: f64, seed: u64) -> Result<SparseSymmetricMatrix> {
    if !(0.0..1.0).contains(&radius) {
        return Err(Error::invalid("radius must lie in [0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut off = Vec::new();
    for i in 0..n {
        for _ in 0..per_row / 2 {
            let j = rng.random_range(0..n);
            if j != i {
                off.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
    }
    let b = SparseSymmetricMatrix::from_triplets(n, off)?;
    let max_row = (0..n)
        .map(|i| b.row(i).map(|(_, v)| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let scale = if max_row > 0.0 { radius / max_row } else { 0.0 };
    let trips = b
        .lower_entries()
        .iter()
        .map(|&(i, j, v)| (i, j, v * scale))
        .chain((0..n).map(|i| (i, i, 1.0)));
    SparseSymmetricMatrix::from_triplets(n, trips)
}

/// Erdős–Rényi graph `G(n, p)` as a 0/1 adjacency matrix.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Result<SparseSymmetricMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("edge probability must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 1..n {
        for j in 0..i {
            if rng.random::<f64>() < p {
                edges.push((i, j, 1.0));
            }
        }
    }
    SparseSymmetricMatrix::from_triplets(n, edges)
}
