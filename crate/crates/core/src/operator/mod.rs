//! Matrix-free symmetric operators.
//!
//! Everything downstream (estimator, Lanczos, planners) sees a matrix only
//! through [`SymmetricOperator::apply`]. Concrete operators here cover
//! explicit sparse storage, the structured test matrices of the tightness
//! lemmas, matrix powers for triangle counting, and a few wrappers.

mod generators;
mod matrix_market;
mod norms;
mod sparse;

pub use generators::{
    gen_lowrank, gen_tightness_gaussian, gen_tightness_rademacher, random_graph, random_sparse_spd,
    random_sparse_symmetric, triangle_operator, LowRankFactors,
};
pub use matrix_market::{load_matrix_market, parse_matrix_market, write_matrix_market};
pub use norms::{exact_norms, operator_norms, OperatorNorms};
pub use sparse::SparseSymmetricMatrix;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Claimed enclosure `[lo, hi]` of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SpectralInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::invalid(format!("invalid spectral interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Condition number `hi / lo` for a positive interval.
    pub fn condition_number(&self) -> Option<f64> {
        (self.lo > 0.0).then(|| self.hi / self.lo)
    }

    pub fn contains(&self, x: f64, rel_slack: f64) -> bool {
        let slack = rel_slack * self.lo.abs().max(self.hi.abs()).max(f64::MIN_POSITIVE);
        x >= self.lo - slack && x <= self.hi + slack
    }
}

/// A symmetric linear map `x -> A x`.
///
/// `apply` must be linear and symmetric (`<Ax, y> = <x, Ay>`); operators are
/// immutable once built and may be applied from several threads at once.
pub trait SymmetricOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Computes `y = A x`; both slices have length [`dim`](Self::dim).
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn spectral_interval(&self) -> Option<SpectralInterval> {
        None
    }

    /// Norms known in closed form, if any.
    fn known_norms(&self) -> Option<OperatorNorms> {
        None
    }

    /// The diagonal, when cheaply available.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        (**self).spectral_interval()
    }
    fn known_norms(&self) -> Option<OperatorNorms> {
        (**self).known_norms()
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        (**self).diagonal()
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        (**self).spectral_interval()
    }
    fn known_norms(&self) -> Option<OperatorNorms> {
        (**self).known_norms()
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        (**self).diagonal()
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for std::sync::Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply(x, y)
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        (**self).spectral_interval()
    }
    fn known_norms(&self) -> Option<OperatorNorms> {
        (**self).known_norms()
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        (**self).diagonal()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `c · I_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledIdentity {
    pub n: usize,
    pub c: f64,
}

impl ScaledIdentity {
    pub fn identity(n: usize) -> Self {
        Self { n, c: 1.0 }
    }
}

impl SymmetricOperator for ScaledIdentity {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi = self.c * xi;
        }
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        Some(SpectralInterval { lo: self.c, hi: self.c })
    }
    fn known_norms(&self) -> Option<OperatorNorms> {
        let n = self.n as f64;
        Some(OperatorNorms::from_parts(
            self.c.abs() * n.sqrt(),
            self.c.abs(),
            self.c * n,
            0.0,
            0.0,
        ))
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(vec![self.c; self.n])
    }
}

/// `diag(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    pub d: Vec<f64>,
}

impl SymmetricOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.d.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.d) {
            *yi = di * xi;
        }
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        let lo = self.d.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        SpectralInterval::new(lo, hi).ok()
    }
    fn known_norms(&self) -> Option<OperatorNorms> {
        let fro = self.d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let spec = self.d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Some(OperatorNorms::from_parts(fro, spec, self.d.iter().sum(), 0.0, 0.0))
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.d.clone())
    }
}

/// The traceless sign matrix `diag(I_{n/2}, -I_{n/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignSplitOperator {
    n: usize,
}

impl SignSplitOperator {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!("dimension must be even and positive, got {n}")));
        }
        Ok(Self { n })
    }
}

impl SymmetricOperator for SignSplitOperator {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let h = self.n / 2;
        y[..h].copy_from_slice(&x[..h]);
        for (yi, xi) in y[h..].iter_mut().zip(&x[h..]) {
            *yi = -xi;
        }
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        Some(SpectralInterval { lo: -1.0, hi: 1.0 })
    }
    fn known_norms(&self) -> Option<OperatorNorms> {
        Some(OperatorNorms::from_parts((self.n as f64).sqrt(), 1.0, 0.0, 0.0, 0.0))
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        let h = self.n / 2;
        Some((0..self.n).map(|i| if i < h { 1.0 } else { -1.0 }).collect())
    }
}

/// The exchange matrix: ones on the anti-diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangeOperator {
    n: usize,
}

impl ExchangeOperator {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!("dimension must be even and positive, got {n}")));
        }
        Ok(Self { n })
    }
}

impl SymmetricOperator for ExchangeOperator {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (yi, xi) in y.iter_mut().zip(x.iter().rev()) {
            *yi = *xi;
        }
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        Some(SpectralInterval { lo: -1.0, hi: 1.0 })
    }
    fn known_norms(&self) -> Option<OperatorNorms> {
        // zero diagonal for even n, so the off-diagonal part is the matrix itself
        let fro = (self.n as f64).sqrt();
        Some(OperatorNorms::from_parts(fro, 1.0, 0.0, fro, 1.0))
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.n])
    }
}

/// `A^k`, applied with `k` successive products.
#[derive(Debug, Clone)]
pub struct PolynomialOfOperator<O> {
    base: O,
    exponent: u32,
}

impl<O: SymmetricOperator> PolynomialOfOperator<O> {
    pub fn new(base: O, exponent: u32) -> Result<Self> {
        if exponent == 0 {
            return Err(Error::invalid("exponent must be at least 1"));
        }
        Ok(Self { base, exponent })
    }

    pub fn base(&self) -> &O {
        &self.base
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }
}

impl<O: SymmetricOperator> SymmetricOperator for PolynomialOfOperator<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y);
        if self.exponent > 1 {
            let mut tmp = y.to_vec();
            for _ in 1..self.exponent {
                self.base.apply(&tmp, y);
                tmp.copy_from_slice(y);
            }
        }
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        let iv = self.base.spectral_interval()?;
        let k = self.exponent as i32;
        let (a, b) = (iv.lo.powi(k), iv.hi.powi(k));
        if k % 2 == 1 {
            Some(SpectralInterval { lo: a, hi: b })
        } else {
            let lo = if iv.lo <= 0.0 && iv.hi >= 0.0 { 0.0 } else { a.min(b) };
            Some(SpectralInterval { lo, hi: a.max(b) })
        }
    }
}

/// `c · A`.
#[derive(Debug, Clone)]
pub struct ScaledOperator<O> {
    pub base: O,
    pub factor: f64,
}

impl<O: SymmetricOperator> SymmetricOperator for ScaledOperator<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y);
        for v in y.iter_mut() {
            *v *= self.factor;
        }
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        let iv = self.base.spectral_interval()?;
        let (a, b) = (iv.lo * self.factor, iv.hi * self.factor);
        Some(SpectralInterval {
            lo: a.min(b),
            hi: a.max(b),
        })
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        self.base
            .diagonal()
            .map(|d| d.into_iter().map(|v| v * self.factor).collect())
    }
}

/// `A + σ I`.
#[derive(Debug, Clone)]
pub struct ShiftedOperator<O> {
    pub base: O,
    pub shift: f64,
}

impl<O: SymmetricOperator> SymmetricOperator for ShiftedOperator<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y);
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += self.shift * xi;
        }
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        let iv = self.base.spectral_interval()?;
        Some(SpectralInterval {
            lo: iv.lo + self.shift,
            hi: iv.hi + self.shift,
        })
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        self.base
            .diagonal()
            .map(|d| d.into_iter().map(|v| v + self.shift).collect())
    }
}

/// Attaches a user-declared spectral interval to an operator.
#[derive(Debug, Clone)]
pub struct WithInterval<O> {
    pub base: O,
    pub interval: SpectralInterval,
}

impl<O: SymmetricOperator> SymmetricOperator for WithInterval<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y)
    }
    fn spectral_interval(&self) -> Option<SpectralInterval> {
        Some(self.interval)
    }
    fn known_norms(&self) -> Option<OperatorNorms> {
        self.base.known_norms()
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        self.base.diagonal()
    }
}

/// `A - D_A`, the operator with its diagonal removed.
#[derive(Debug, Clone)]
pub struct OffDiagonalPart<O> {
    base: O,
    diag: Vec<f64>,
}

impl<O: SymmetricOperator> OffDiagonalPart<O> {
    pub fn new(base: O, diag: Vec<f64>) -> Result<Self> {
        if diag.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                actual: diag.len(),
            });
        }
        Ok(Self { base, diag })
    }
}

impl<O: SymmetricOperator> SymmetricOperator for OffDiagonalPart<O> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.base.apply(x, y);
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.diag) {
            *yi -= di * xi;
        }
    }
    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.diag.len()])
    }
}

/// Largest relative violation of `<Ax, y> = <x, Ay>` over `trials` random pairs,
/// normalized by `‖Ax‖‖y‖ + ‖x‖‖Ay‖`.
pub fn symmetry_defect(op: &dyn SymmetricOperator, trials: usize, seed: u64) -> f64 {
    use crate::probe::{ProbeKind, ProbeStream};
    let n = op.dim();
    let stream = ProbeStream::new(ProbeKind::Gaussian, n, seed).expect("dimension checked by operator");
    let mut worst = 0.0f64;
    for t in 0..trials as u64 {
        let x = stream.probe(2 * t);
        let y = stream.probe(2 * t + 1);
        let ax = op.apply_vec(&x);
        let ay = op.apply_vec(&y);
        let lhs = dot(&ax, &y);
        let rhs = dot(&x, &ay);
        let scale = norm2(&ax) * norm2(&y) + norm2(&x) * norm2(&ay);
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_split_two_by_two() {
        let op = SignSplitOperator::new(2).unwrap();
        assert_eq!(op.apply_vec(&[1.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(op.apply_vec(&[0.0, 1.0]), vec![0.0, -1.0]);
        assert!(SignSplitOperator::new(3).is_err());
    }

    #[test]
    fn exchange_quadratic_form() {
        let op = ExchangeOperator::new(4).unwrap();
        let x = [1.0, 2.0, 3.0, 4.0];
        let q = dot(&x, &op.apply_vec(&x));
        assert_eq!(q, 2.0 * (1.0 * 4.0 + 2.0 * 3.0));
        let ones = [1.0; 4];
        assert_eq!(dot(&ones, &op.apply_vec(&ones)), 4.0);
    }

    #[test]
    fn polynomial_applies_k_times() {
        let d = DiagonalOperator {
            d: vec![2.0, -1.0, 3.0],
        };
        let p = PolynomialOfOperator::new(d, 3).unwrap();
        assert_eq!(p.apply_vec(&[1.0, 1.0, 1.0]), vec![8.0, -1.0, 27.0]);
        assert!(PolynomialOfOperator::new(ScaledIdentity::identity(2), 0).is_err());
    }

    #[test]
    fn offdiagonal_part_removes_diagonal() {
        let d = DiagonalOperator { d: vec![2.0, 5.0] };
        let off = OffDiagonalPart::new(d, vec![2.0, 5.0]).unwrap();
        assert_eq!(off.apply_vec(&[1.0, 1.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn structured_operators_are_symmetric() {
        let ops: Vec<Box<dyn SymmetricOperator>> = vec![
            Box::new(SignSplitOperator::new(10).unwrap()),
            Box::new(ExchangeOperator::new(10).unwrap()),
            Box::new(ScaledIdentity { n: 10, c: 2.5 }),
            Box::new(PolynomialOfOperator::new(ExchangeOperator::new(10).unwrap(), 3).unwrap()),
        ];
        for op in &ops {
            assert!(symmetry_defect(op.as_ref(), 5, 1) < 1e-14);
        }
    }
}
