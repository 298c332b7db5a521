use serde::{Deserialize, Serialize};

use super::{OffDiagonalPart, SparseSymmetricMatrix, SymmetricOperator};
use crate::error::{Error, Result};
use crate::lanczos::extreme_eigenvalues;
use crate::oracle::DenseSymmetric;

/// Up to this dimension spectral norms come from a dense eigendecomposition.
pub const DENSE_SPECTRAL_LIMIT: usize = 400;
/// Relative Ritz residual required of iterative spectral norms.
pub const SPECTRAL_REL_TOL: f64 = 1e-8;
/// Largest dimension for which [`operator_norms`] will probe all `n` columns.
pub const COLUMN_PROBE_LIMIT: usize = 20_000;

const MAX_LANCZOS_STEPS: usize = 1000;
const NORM_SEED: u64 = 0x6e6f_726d;

/// Norm data of a symmetric `B` and of its off-diagonal part `B − diag(B)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorNorms {
    pub frobenius: f64,
    pub spectral: f64,
    pub trace: f64,
    /// `‖B‖_F² / ‖B‖₂²`, or 0 for the zero matrix.
    pub stable_rank: f64,
    pub offdiag_frobenius: f64,
    pub offdiag_spectral: f64,
}

impl OperatorNorms {
    pub fn from_parts(
        frobenius: f64,
        spectral: f64,
        trace: f64,
        offdiag_frobenius: f64,
        offdiag_spectral: f64,
    ) -> Self {
        let stable_rank = if spectral > 0.0 {
            (frobenius / spectral).powi(2)
        } else {
            0.0
        };
        Self {
            frobenius,
            spectral,
            trace,
            stable_rank,
            offdiag_frobenius,
            offdiag_spectral,
        }
    }
}

fn spectral_norm<O: SymmetricOperator + ?Sized>(op: &O, dense: impl FnOnce() -> Result<DenseSymmetric>) -> Result<f64> {
    let n = op.dim();
    if n <= DENSE_SPECTRAL_LIMIT {
        let values = dense()?.eigenvalues()?;
        return Ok(values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
    }
    let ext = extreme_eigenvalues(op, MAX_LANCZOS_STEPS, SPECTRAL_REL_TOL, NORM_SEED)?;
    Ok(ext.min.abs().max(ext.max.abs()))
}

/// Frobenius and trace from the stored entries, spectral norms from a dense
/// eigendecomposition (small `n`) or converged Lanczos.
pub fn exact_norms(matrix: &SparseSymmetricMatrix) -> Result<OperatorNorms> {
    let spectral = spectral_norm(matrix, || DenseSymmetric::from_sparse(matrix))?;
    let off = SparseSymmetricMatrix::from_triplets(
        matrix.dim(),
        matrix.lower_entries().iter().copied().filter(|(i, j, _)| i != j),
    )?;
    let offdiag_spectral = if off.stored_entries() == 0 {
        0.0
    } else {
        spectral_norm(&off, || DenseSymmetric::from_sparse(&off))?
    };
    Ok(OperatorNorms::from_parts(
        matrix.frobenius(),
        spectral,
        matrix.trace(),
        matrix.offdiag_frobenius(),
        offdiag_spectral,
    ))
}

/// Norms of a matrix-free operator: declared ones if available, otherwise
/// `n` unit-vector products for the entry-wise quantities plus Lanczos.
pub fn operator_norms<O: SymmetricOperator + ?Sized>(op: &O) -> Result<OperatorNorms> {
    if let Some(norms) = op.known_norms() {
        return Ok(norms);
    }
    let n = op.dim();
    if n > COLUMN_PROBE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: COLUMN_PROBE_LIMIT,
        });
    }
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut fro_sq = 0.0;
    let mut off_sq = 0.0;
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for (i, v) in col.iter().enumerate() {
            let sq = v * v;
            fro_sq += sq;
            if i != j {
                off_sq += sq;
            }
        }
        diag[j] = col[j];
    }
    let trace = diag.iter().sum();
    let spectral = spectral_norm(op, || DenseSymmetric::from_operator(op))?;
    let off = OffDiagonalPart::new(op, diag)?;
    let offdiag_spectral = if off_sq == 0.0 {
        0.0
    } else {
        spectral_norm(&off, || DenseSymmetric::from_operator(&off))?
    };
    Ok(OperatorNorms::from_parts(
        fro_sq.sqrt(),
        spectral,
        trace,
        off_sq.sqrt(),
        offdiag_spectral,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{gen_tightness_gaussian, ScaledIdentity};

    #[test]
    fn identity_norms() {
        let m = SparseSymmetricMatrix::from_triplets(10, (0..10).map(|i| (i, i, 1.0))).unwrap();
        let norms = exact_norms(&m).unwrap();
        assert!((norms.frobenius - 10f64.sqrt()).abs() < 1e-14);
        assert!((norms.spectral - 1.0).abs() < 1e-12);
        assert!((norms.stable_rank - 10.0).abs() < 1e-10);
        assert_eq!(norms.offdiag_frobenius, 0.0);
        assert_eq!(norms.offdiag_spectral, 0.0);
    }

    #[test]
    fn rank_one_ones() {
        let m =
            SparseSymmetricMatrix::from_triplets(5, (0..5).flat_map(|i| (0..=i).map(move |j| (i, j, 1.0)))).unwrap();
        let norms = exact_norms(&m).unwrap();
        assert!((norms.stable_rank - 1.0).abs() < 1e-10);
        assert!((norms.spectral - 5.0).abs() < 1e-12);
    }

    #[test]
    fn tightness_gaussian_stable_rank() {
        let norms = operator_norms(&gen_tightness_gaussian(8).unwrap()).unwrap();
        assert!((norms.stable_rank - 8.0).abs() < 1e-12);
    }

    #[test]
    fn generic_path_matches_declared() {
        struct Hidden(ScaledIdentity);
        impl SymmetricOperator for Hidden {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn apply(&self, x: &[f64], y: &mut [f64]) {
                self.0.apply(x, y)
            }
        }
        let op = Hidden(ScaledIdentity { n: 6, c: -2.0 });
        let norms = operator_norms(&op).unwrap();
        let declared = op.0.known_norms().unwrap();
        assert!((norms.frobenius - declared.frobenius).abs() < 1e-12);
        assert!((norms.spectral - declared.spectral).abs() < 1e-12);
        assert!((norms.trace - declared.trace).abs() < 1e-12);
    }

    #[test]
    fn lanczos_path_for_large_dimension() {
        let n = DENSE_SPECTRAL_LIMIT + 50;
        let m = SparseSymmetricMatrix::from_triplets(n, (0..n).map(|i| (i, i, 1.0 + i as f64 / n as f64))).unwrap();
        let norms = exact_norms(&m).unwrap();
        assert!((norms.spectral - (1.0 + (n - 1) as f64 / n as f64)).abs() < 1e-7);
    }
}
