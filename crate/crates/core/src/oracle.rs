//! Dense, brute-force references for validating the stochastic and
//! quadrature paths at small scale.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::MatrixFunction;
use crate::lanczos::implicit_ql;
use crate::operator::{dot, SparseSymmetricMatrix, SpectralInterval, SymmetricOperator};
use crate::parallel::map_indexed;
use crate::probe::{derive_seed, ProbeKind, ProbeStream};

/// Largest dimension accepted for dense storage.
pub const DENSE_LIMIT: usize = 5000;

/// Full symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSymmetric {
    n: usize,
    data: Vec<f64>,
    interval: Option<SpectralInterval>,
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if n > DENSE_LIMIT {
        return Err(Error::TooLarge { n, limit: DENSE_LIMIT });
    }
    Ok(())
}

impl DenseSymmetric {
    /// Rejects asymmetry beyond `1e-12` relative to the largest entry.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("dense matrix has non-finite entries"));
        }
        let scale = data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..n {
            for j in 0..i {
                if (data[i * n + j] - data[j * n + i]).abs() > 1e-12 * scale {
                    return Err(Error::invalid(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self {
            n,
            data,
            interval: None,
        })
    }

    pub fn from_sparse(m: &SparseSymmetricMatrix) -> Result<Self> {
        check_dim(m.dim())?;
        Self::new(m.dim(), m.to_dense())
    }

    /// Materializes `op` with `n` unit-vector products, then symmetrizes.
    pub fn from_operator<O: SymmetricOperator + ?Sized>(op: &O) -> Result<Self> {
        let n = op.dim();
        check_dim(n)?;
        let mut data = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            op.apply(&e, &mut col);
            e[j] = 0.0;
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        let mut out = Self::new(n, data)?;
        out.interval = op.spectral_interval();
        Ok(out)
    }

    pub fn diagonal_matrix(d: &[f64]) -> Result<Self> {
        let n = d.len();
        check_dim(n)?;
        let mut data = vec![0.0; n * n];
        for (i, v) in d.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self::new(n, data)
    }

    pub fn with_interval(mut self, interval: SpectralInterval) -> Self {
        self.interval = Some(interval);
        self
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
            interval: self.interval.map(|iv| {
                let (a, b) = (iv.lo * c, iv.hi * c);
                SpectralInterval {
                    lo: a.min(b),
                    hi: a.max(b),
                }
            }),
        }
    }

    /// Full eigendecomposition by Householder reduction and implicit QL.
    pub fn eigen(&self) -> Result<DenseEigen> {
        let n = self.n;
        let mut v = self.data.clone();
        let mut d = vec![0.0; n];
        let mut e = vec![0.0; n];
        householder_tridiagonalize(n, &mut v, &mut d, &mut e);
        // shift so that e[i] couples i and i + 1
        for i in 1..n {
            e[i - 1] = e[i];
        }
        e[n - 1] = 0.0;
        implicit_ql(&mut d, &mut e, &mut v, n)?;
        Ok(DenseEigen {
            n,
            values: d,
            vectors: v,
        })
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.values)
    }

    pub fn frobenius(&self) -> f64 {
        dot(&self.data, &self.data).sqrt()
    }

    pub fn offdiag_frobenius(&self) -> f64 {
        let n = self.n;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += self.data[i * n + j].powi(2);
                }
            }
        }
        s.sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }

    pub fn without_diagonal(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] = 0.0;
        }
        out.interval = None;
        out
    }
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(&self.data[i * self.n..(i + 1) * self.n], x);
        }
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        self.interval
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some((0..self.n).map(|i| self.data[i * self.n + i]).collect())
    }
}

/// `A = V diag(values) Vᵀ`; `vectors` is row-major with eigenvector `j` in column `j`.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

impl DenseEigen {
    pub fn vector_component(&self, i: usize, j: usize) -> f64 {
        self.vectors[i * self.n + j]
    }

    /// `Σ_j f(λ_j) (v_jᵀ x)²`.
    pub fn quadratic_form(&self, x: &[f64], f: &MatrixFunction) -> Result<f64> {
        let n = self.n;
        let mut total = 0.0;
        for j in 0..n {
            let mut c = 0.0;
            for (i, xi) in x.iter().enumerate() {
                c += self.vectors[i * n + j] * xi;
            }
            total += f.eval(self.values[j])? * c * c;
        }
        Ok(total)
    }

    /// `f(A)` as a dense matrix.
    pub fn apply_function(&self, f: &MatrixFunction) -> Result<DenseSymmetric> {
        let n = self.n;
        let fv: Vec<f64> = self.values.iter().map(|v| f.eval(*v)).collect::<Result<_>>()?;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..=i {
                let (ri, rk) = (&self.vectors[i * n..(i + 1) * n], &self.vectors[k * n..(k + 1) * n]);
                let s: f64 = ri.iter().zip(&fv).zip(rk).map(|((a, f), b)| a * f * b).sum();
                data[i * n + k] = s;
                data[k * n + i] = s;
            }
        }
        DenseSymmetric::new(n, data)
    }
}

/// Householder reduction to tridiagonal form (EISPACK `tred2`). On entry `v`
/// holds `A`; on exit it holds the orthogonal transform, `d` the diagonal and
/// `e[1..]` the subdiagonal.
fn householder_tridiagonalize(n: usize, v: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    let idx = |i: usize, j: usize| i * n + j;
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in j + 1..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// `tr f(A) = Σ f(λ_i)`.
pub fn exact_trace_f(a: &DenseSymmetric, f: &MatrixFunction) -> Result<f64> {
    let mut s = 0.0;
    for v in a.eigenvalues()? {
        s += f.eval(v)?;
    }
    Ok(s)
}

/// `xᵀ f(A) x` via the eigendecomposition.
pub fn quadratic_form_f(a: &DenseSymmetric, x: &[f64], f: &MatrixFunction) -> Result<f64> {
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: x.len(),
        });
    }
    a.eigen()?.quadratic_form(x, f)
}

/// `log det A = 2 Σ log L_ii` from the Cholesky factor `A = L Lᵀ`.
pub fn cholesky_logdet(a: &DenseSymmetric) -> Result<f64> {
    let n = a.dim();
    let mut l = a.data().to_vec();
    let mut logdet = 0.0;
    for j in 0..n {
        let mut diag = l[j * n + j];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[j * n + j] = ljj;
        logdet += 2.0 * ljj.ln();
        for i in j + 1..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(logdet)
}

/// A random orthogonal matrix (row-major) from Gram-Schmidt on Gaussian columns.
pub fn random_orthogonal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut c: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for q in &cols {
                let p = dot(&c, q);
                for (ci, qi) in c.iter_mut().zip(q) {
                    *ci -= p * qi;
                }
            }
        }
        let norm = dot(&c, &c).sqrt();
        if norm > 1e-8 {
            cols.push(c.into_iter().map(|v| v / norm).collect());
        }
    }
    let mut q = vec![0.0; n * n];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..n {
            q[i * n + j] = c[i];
        }
    }
    q
}

/// `Q diag(λ) Qᵀ` with `Q` random orthogonal.
pub fn spd_with_spectrum(eigenvalues: &[f64], seed: u64) -> Result<DenseSymmetric> {
    let n = eigenvalues.len();
    check_dim(n)?;
    let q = random_orthogonal(n, seed);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..=i {
            let mut s = 0.0;
            for (j, lam) in eigenvalues.iter().enumerate() {
                s += q[i * n + j] * lam * q[k * n + j];
            }
            data[i * n + k] = s;
            data[k * n + i] = s;
        }
    }
    let lo = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DenseSymmetric::new(n, data)?.with_interval(SpectralInterval::new(lo, hi)?))
}

/// Random SPD matrix with eigenvalues `1` and `kappa` plus `n - 2` values
/// log-uniform in between; the declared interval is `[1, kappa]`.
pub fn random_spd(n: usize, kappa: f64, seed: u64) -> Result<DenseSymmetric> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!(
            "condition number must be at least 1, got {kappa}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut eig: Vec<f64> = (0..n)
        .map(|i| match i {
            0 => 1.0,
            _ if i == n - 1 => kappa,
            _ => (rng.random::<f64>() * kappa.ln()).exp(),
        })
        .collect();
    eig.sort_by(f64::total_cmp);
    spd_with_spectrum(&eig, seed)
}

/// Number of triangles in a simple undirected graph, by intersecting sorted
/// neighbor lists over ordered wedges `i < j < k`.
pub fn exact_triangle_count(adjacency: &SparseSymmetricMatrix) -> Result<u64> {
    if !adjacency.is_simple_adjacency() {
        return Err(Error::invalid("expected a 0/1 adjacency matrix with zero diagonal"));
    }
    let nbrs = adjacency.neighbor_lists();
    let mut count = 0u64;
    for (i, ni) in nbrs.iter().enumerate() {
        for &j in ni.iter().filter(|&&j| j > i) {
            let nj = &nbrs[j];
            let (mut a, mut b) = (0, 0);
            while a < ni.len() && b < nj.len() {
                match ni[a].cmp(&nj[b]) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        if ni[a] > j {
                            count += 1;
                        }
                        a += 1;
                        b += 1;
                    }
                }
            }
        }
    }
    Ok(count)
}

/// Monte-Carlo failure frequencies of the `N`-probe Hutchinson estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalTail {
    pub true_trace: f64,
    pub trials: usize,
    pub epsilons: Vec<f64>,
    /// Number of trials with `|estimate − trace| ≥ ε`, per grid point.
    pub failures: Vec<usize>,
    /// Signed errors `estimate − trace` per trial.
    pub errors: Vec<f64>,
}

impl EmpiricalTail {
    pub fn frequencies(&self) -> Vec<f64> {
        self.failures.iter().map(|&f| f as f64 / self.trials as f64).collect()
    }
}

/// Exact trace of an operator from its diagonal, or from `n` unit-vector products.
pub fn operator_trace<O: SymmetricOperator + ?Sized>(op: &O) -> f64 {
    if let Some(d) = op.diagonal() {
        return d.iter().sum();
    }
    let n = op.dim();
    let mut e = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut t = 0.0;
    for i in 0..n {
        e[i] = 1.0;
        op.apply(&e, &mut y);
        e[i] = 0.0;
        t += y[i];
    }
    t
}

/// Runs `trials` independent `N`-probe estimates (trial `t` seeded with
/// `derive_seed(seed, t)`) and counts failures `|error| ≥ ε` on the grid.
pub fn empirical_tail<O: SymmetricOperator + ?Sized>(
    op: &O,
    kind: ProbeKind,
    n_samples: usize,
    trials: usize,
    epsilons: &[f64],
    seed: u64,
) -> Result<EmpiricalTail> {
    if n_samples == 0 || trials == 0 {
        return Err(Error::invalid("need at least one sample and one trial"));
    }
    let n = op.dim();
    let true_trace = operator_trace(op);
    let errors = map_indexed(trials, |t| {
        let stream = ProbeStream::new(kind, n, derive_seed(seed, t as u64)).expect("dimension is positive");
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut sum = 0.0;
        for i in 0..n_samples as u64 {
            stream.fill_probe(i, &mut x);
            op.apply(&x, &mut y);
            sum += stream.weight() * dot(&x, &y);
        }
        sum / n_samples as f64 - true_trace
    });
    let failures = epsilons
        .iter()
        .map(|eps| errors.iter().filter(|e| e.abs() >= *eps).count())
        .collect();
    Ok(EmpiricalTail {
        true_trace,
        trials,
        epsilons: epsilons.to_vec(),
        failures,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_product(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
        let mut c = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    c[i * n + j] += a[i * n + k] * b[k * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn eigen_reconstructs_matrix() {
        let a = random_spd(25, 50.0, 3).unwrap();
        let eig = a.eigen().unwrap();
        let rebuilt = eig.apply_function(&MatrixFunction::Identity).unwrap();
        for (x, y) in a.data().iter().zip(rebuilt.data()) {
            assert!((x - y).abs() < 1e-10);
        }
        assert!((eig.values[0] - 1.0).abs() < 1e-10);
        assert!((eig.values[24] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn trace_f_examples() {
        let d = DenseSymmetric::diagonal_matrix(&[1.0, 2.0, 3.0]).unwrap();
        assert!((exact_trace_f(&d, &MatrixFunction::Identity).unwrap() - 6.0).abs() < 1e-14);
        let d = DenseSymmetric::diagonal_matrix(&[1.0, std::f64::consts::E.powi(2)]).unwrap();
        assert!((exact_trace_f(&d, &MatrixFunction::Log).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_examples() {
        let i = DenseSymmetric::diagonal_matrix(&[1.0; 5]).unwrap();
        assert_eq!(cholesky_logdet(&i).unwrap(), 0.0);
        let d = DenseSymmetric::diagonal_matrix(&[4.0]).unwrap();
        assert!((cholesky_logdet(&d).unwrap() - 4f64.ln()).abs() < 1e-15);
        let bad = DenseSymmetric::diagonal_matrix(&[1.0, -1.0]).unwrap();
        assert!(matches!(
            cholesky_logdet(&bad),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
    }

    #[test]
    fn cholesky_matches_spectral_logdet() {
        for seed in 0..20 {
            let a = random_spd(50, 1e3, seed).unwrap();
            let chol = cholesky_logdet(&a).unwrap();
            let spec = exact_trace_f(&a, &MatrixFunction::Log).unwrap();
            assert!(
                (chol - spec).abs() < 1e-9 * (1.0 + spec.abs()),
                "seed {seed}: {chol} vs {spec}"
            );
        }
    }

    #[test]
    fn triangle_counts_small_graphs() {
        let complete = |n: usize| {
            SparseSymmetricMatrix::from_triplets(n, (0..n).flat_map(|i| (0..i).map(move |j| (i, j, 1.0)))).unwrap()
        };
        assert_eq!(exact_triangle_count(&complete(3)).unwrap(), 1);
        assert_eq!(exact_triangle_count(&complete(4)).unwrap(), 4);
        let path = SparseSymmetricMatrix::from_triplets(3, [(1, 0, 1.0), (2, 1, 1.0)]).unwrap();
        assert_eq!(exact_triangle_count(&path).unwrap(), 0);
    }

    #[test]
    fn triangle_count_matches_dense_cube() {
        for seed in 0..5 {
            let g = crate::operator::random_graph(60, 0.15, seed).unwrap();
            let a = g.to_dense();
            let a3 = dense_product(&dense_product(&a, &a, 60), &a, 60);
            let tr: f64 = (0..60).map(|i| a3[i * 60 + i]).sum();
            assert_eq!(exact_triangle_count(&g).unwrap() as f64, tr / 6.0);
        }
    }

    #[test]
    fn empirical_tail_identity_rademacher_is_exact() {
        let op = crate::operator::ScaledIdentity::identity(16);
        let tail = empirical_tail(&op, ProbeKind::Rademacher, 3, 50, &[1e-9, 0.5, 1.0], 9).unwrap();
        assert_eq!(tail.failures, vec![0, 0, 0]);
    }

    #[test]
    fn asymmetric_input_rejected() {
        assert!(DenseSymmetric::new(2, vec![1.0, 2.0, 3.0, 1.0]).is_err());
        assert!(matches!(
            DenseSymmetric::new(DENSE_LIMIT + 1, vec![]),
            Err(Error::TooLarge { .. })
        ));
    }
}
