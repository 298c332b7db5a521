use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trace_sketch::operator::{
    gen_lowrank, gen_tightness_gaussian, gen_tightness_rademacher, load_matrix_market, random_graph, random_sparse_spd,
    random_sparse_symmetric, DiagonalOperator, ScaledIdentity, SparseSymmetricMatrix,
};
use trace_sketch::oracle::{random_spd, DenseSymmetric, DENSE_LIMIT};
use trace_sketch::probe::derive_seed;
use trace_sketch::SymmetricOperator;

use crate::args::SourceArgs;

const GENERATOR_STREAM: u64 = 0x67656e;

/// A loaded input matrix.
pub struct Matrix {
    pub op: Arc<dyn SymmetricOperator>,
    pub sparse: Option<SparseSymmetricMatrix>,
    pub dense: Option<DenseSymmetric>,
    pub description: String,
}

impl Matrix {
    fn sparse(m: SparseSymmetricMatrix, description: String) -> Self {
        Self {
            op: Arc::new(m.clone()),
            sparse: Some(m),
            dense: None,
            description,
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// A dense copy, built on demand up to the oracle size limit.
    pub fn to_dense(&self) -> Result<DenseSymmetric> {
        if let Some(d) = &self.dense {
            return Ok(d.clone());
        }
        let d = match &self.sparse {
            Some(s) => DenseSymmetric::from_sparse(s)?,
            None => DenseSymmetric::from_operator(self.op.as_ref())?,
        };
        Ok(match self.op.spectral_interval() {
            Some(iv) => d.with_interval(iv),
            None => d,
        })
    }

    pub fn dense_feasible(&self) -> bool {
        self.dim() <= DENSE_LIMIT
    }
}

pub fn load(source: &SourceArgs, seed: u64) -> Result<Option<Matrix>> {
    match (&source.matrix, &source.generator) {
        (Some(path), None) => {
            let m = load_matrix_market(path).with_context(|| format!("loading {}", path.display()))?;
            Ok(Some(Matrix::sparse(m, format!("file:{}", path.display()))))
        }
        (None, Some(spec)) => generate(spec, derive_seed(seed, GENERATOR_STREAM)).map(Some),
        (None, None) => Ok(None),
        (Some(_), Some(_)) => bail!("--matrix and --generator are mutually exclusive"),
    }
}

pub fn require(source: &SourceArgs, seed: u64) -> Result<Matrix> {
    load(source, seed)?.ok_or_else(|| anyhow!("one of --matrix or --generator is required"))
}

fn field<T: std::str::FromStr>(parts: &[&str], i: usize, name: &str, default: Option<T>) -> Result<T> {
    match parts.get(i) {
        Some(s) => s
            .parse()
            .map_err(|_| anyhow!("generator field {name}: cannot parse '{s}'")),
        None => default.ok_or_else(|| anyhow!("generator needs field {name}")),
    }
}

/// Parses `name:arg1:arg2...`.
pub fn generate(spec: &str, seed: u64) -> Result<Matrix> {
    let parts: Vec<&str> = spec.split(':').collect();
    let desc = format!("generator:{spec}");
    let m = match parts[0] {
        "identity" => {
            let n: usize = field(&parts, 1, "n", None)?;
            Matrix {
                op: Arc::new(ScaledIdentity::identity(n)),
                sparse: None,
                dense: None,
                description: desc,
            }
        }
        "diag" => {
            let d = parts
                .get(1)
                .ok_or_else(|| anyhow!("diag needs comma-separated entries"))?
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| anyhow!("bad diagonal entry '{v}'")))
                .collect::<Result<Vec<_>>>()?;
            Matrix {
                op: Arc::new(DiagonalOperator { d }),
                sparse: None,
                dense: None,
                description: desc,
            }
        }
        "tightness-gaussian" => Matrix {
            op: Arc::new(gen_tightness_gaussian(field(&parts, 1, "n", None)?)?),
            sparse: None,
            dense: None,
            description: desc,
        },
        "tightness-rademacher" => Matrix {
            op: Arc::new(gen_tightness_rademacher(field(&parts, 1, "n", None)?)?),
            sparse: None,
            dense: None,
            description: desc,
        },
        "lowrank" => {
            let n = field(&parts, 1, "n", None)?;
            let shift = field(&parts, 2, "shift", Some(0.0))?;
            Matrix::sparse(gen_lowrank(n, seed, shift)?, desc)
        }
        "random-spd" => {
            let n = field(&parts, 1, "n", None)?;
            let kappa = field(&parts, 2, "kappa", Some(100.0))?;
            let d = random_spd(n, kappa, seed)?;
            Matrix {
                op: Arc::new(d.clone()),
                sparse: None,
                dense: Some(d),
                description: desc,
            }
        }
        "random-sparse-spd" => {
            let n = field(&parts, 1, "n", None)?;
            let per_row = field(&parts, 2, "per_row", Some(4))?;
            let radius = field(&parts, 3, "radius", Some(0.5))?;
            Matrix::sparse(random_sparse_spd(n, per_row, radius, seed)?, desc)
        }
        "random-symmetric" => {
            let n = field(&parts, 1, "n", None)?;
            let per_row = field(&parts, 2, "per_row", Some(4))?;
            Matrix::sparse(random_sparse_symmetric(n, per_row, seed)?, desc)
        }
        "diag-dominant" => {
            let n = field(&parts, 1, "n", None)?;
            let spread = field(&parts, 2, "spread", Some(100.0))?;
            Matrix::sparse(diagonal_dominant(n, spread, seed)?, desc)
        }
        "graph" => {
            let n = field(&parts, 1, "n", None)?;
            let p = field(&parts, 2, "p", None)?;
            Matrix::sparse(random_graph(n, p, seed)?, desc)
        }
        "complete" => {
            let n: usize = field(&parts, 1, "n", None)?;
            let m = SparseSymmetricMatrix::from_triplets(n, (0..n).flat_map(|i| (0..i).map(move |j| (i, j, 1.0))))?;
            Matrix::sparse(m, desc)
        }
        other => bail!(
            "unknown generator '{other}' (identity, diag, tightness-gaussian, tightness-rademacher, lowrank, \
             random-spd, random-sparse-spd, random-symmetric, diag-dominant, graph, complete)"
        ),
    };
    Ok(m)
}

/// SPD matrix whose diagonal is log-uniform on `[1, spread]` and dominates a
/// sparse off-diagonal part of Gershgorin radius below one.
fn diagonal_dominant(n: usize, spread: f64, seed: u64) -> Result<SparseSymmetricMatrix> {
    if !(spread >= 1.0) {
        bail!("spread must be at least 1, got {spread}");
    }
    let base = random_sparse_spd(n, 4, 0.9, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let diag: Vec<f64> = (0..n).map(|_| spread.powf(rng.random::<f64>())).collect();
    let entries = base
        .lower_entries()
        .iter()
        .filter(|&&(i, j, _)| i != j)
        .copied()
        .chain(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
    Ok(SparseSymmetricMatrix::from_triplets(n, entries)?)
}
