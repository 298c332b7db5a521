//! The Hutchinson estimator `tr_N(B) = (1/N) Σ X⁽ⁱ⁾ᵀ B X⁽ⁱ⁾`.
//!
//! Quadratic forms are evaluated in parallel and stored by probe index; the
//! mean is a compensated sum in index order, so results do not depend on
//! scheduling.

use serde::{Deserialize, Serialize};

use crate::bounds::{gaussian_envelope, rademacher_envelope, FormulaId, NormData};
use crate::error::{Error, Result};
use crate::func::MatrixFunction;
use crate::lanczos::{approx_quadratic_form_log, quadratic_form, LanczosOptions, LogBracket};
use crate::operator::{dot, SpectralInterval, SymmetricOperator};
use crate::parallel::try_map_indexed;
use crate::probe::{ProbeKind, ProbeStream};
use crate::summation::{mean, sample_variance};

/// How a single `xᵀ f(A) x` is computed.
#[derive(Debug, Clone)]
pub enum QuadraticFormEvaluator {
    /// Horner evaluation with matrix-vector products; exact for polynomial `f`.
    Exact(MatrixFunction),
    /// Fixed number of Lanczos steps.
    Lanczos {
        f: MatrixFunction,
        steps: usize,
        opts: LanczosOptions,
    },
    /// Lanczos on `log` until the Gauss / Gauss-Lobatto bracket is below `tol`.
    AdaptiveLog {
        tol: f64,
        max_steps: usize,
        interval: SpectralInterval,
        opts: LanczosOptions,
    },
}

/// One evaluated quadratic form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFormValue {
    pub value: f64,
    /// Lanczos steps or matrix-vector products used.
    pub iterations: usize,
    pub bracket: Option<LogBracket>,
    pub converged: bool,
}

impl QuadraticFormValue {
    fn scaled(self, w: f64) -> Self {
        Self {
            value: w * self.value,
            bracket: self.bracket.map(|b| b.scaled(w)),
            ..self
        }
    }
}

impl QuadraticFormEvaluator {
    /// `xᵀ B x`.
    pub fn exact() -> Self {
        Self::Exact(MatrixFunction::Identity)
    }

    pub fn exact_polynomial(f: MatrixFunction) -> Result<Self> {
        if f.coefficients().is_none() {
            return Err(Error::invalid(format!(
                "exact evaluation needs a polynomial function, got {}",
                f.name()
            )));
        }
        Ok(Self::Exact(f))
    }

    pub fn lanczos(f: MatrixFunction, steps: usize) -> Self {
        Self::Lanczos {
            f,
            steps,
            opts: LanczosOptions::default(),
        }
    }

    pub fn description(&self) -> String {
        match self {
            Self::Exact(f) => format!("exact({})", f.name()),
            Self::Lanczos { f, steps, .. } => format!("lanczos({}, m={steps})", f.name()),
            Self::AdaptiveLog { tol, max_steps, .. } => format!("adaptive_log(tol={tol}, max_m={max_steps})"),
        }
    }

    pub fn evaluate<O: SymmetricOperator + ?Sized>(&self, op: &O, x: &[f64]) -> Result<QuadraticFormValue> {
        match self {
            Self::Exact(f) => {
                let c = f
                    .coefficients()
                    .ok_or_else(|| Error::invalid("exact evaluation needs a polynomial function"))?;
                let (value, products) = polynomial_form(op, x, &c)?;
                Ok(QuadraticFormValue {
                    value,
                    iterations: products,
                    bracket: None,
                    converged: true,
                })
            }
            Self::Lanczos { f, steps, opts } => {
                let r = quadratic_form(op, x, f, *steps, *opts)?;
                Ok(QuadraticFormValue {
                    value: r.value,
                    iterations: r.iterations,
                    bracket: None,
                    converged: true,
                })
            }
            Self::AdaptiveLog {
                tol,
                max_steps,
                interval,
                opts,
            } => {
                let r = approx_quadratic_form_log(op, x, *tol, *max_steps, *interval, *opts)?;
                Ok(QuadraticFormValue {
                    value: r.value,
                    iterations: r.iterations,
                    bracket: r.bracket,
                    converged: r.converged,
                })
            }
        }
    }
}

/// `xᵀ p(A) x` by Horner's rule; returns the value and the number of products.
fn polynomial_form<O: SymmetricOperator + ?Sized>(op: &O, x: &[f64], coeffs: &[f64]) -> Result<(f64, usize)> {
    let n = op.dim();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: x.len(),
        });
    }
    let Some((&lead, rest)) = coeffs.split_last() else {
        return Ok((0.0, 0));
    };
    let mut y: Vec<f64> = x.iter().map(|v| lead * v).collect();
    let mut tmp = vec![0.0; n];
    for (k, &c) in rest.iter().enumerate().rev() {
        op.apply(&y, &mut tmp);
        if tmp.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: rest.len() - k });
        }
        for ((yi, ti), xi) in y.iter_mut().zip(&tmp).zip(x) {
            *yi = ti + c * xi;
        }
    }
    Ok((dot(x, &y), rest.len()))
}

/// A-priori error level attached to an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub epsilon: f64,
    pub delta: f64,
    pub formula: FormulaId,
    pub surrogate: bool,
    pub estimated_norms: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub estimate: f64,
    pub per_probe_values: Vec<f64>,
    pub probe_kind: ProbeKind,
    pub seed: u64,
    pub n_samples: usize,
    pub dim: usize,
    pub sample_variance: f64,
    /// `sqrt(variance / N)`.
    pub standard_error: f64,
    pub total_iterations: usize,
    pub evaluator: String,
    pub envelope: Option<Envelope>,
    pub wall_time_secs: f64,
}

impl EstimateReport {
    /// Attaches the `(ε, δ)` statement for this probe kind and `N`, given
    /// norm data of the matrix whose trace is estimated.
    pub fn with_envelope(mut self, norms: &NormData, delta: f64) -> Result<Self> {
        let n = self.n_samples as u64;
        let estimated = norms.source == crate::bounds::NormSource::Estimated;
        self.envelope = match self.probe_kind {
            ProbeKind::Gaussian => Some(Envelope {
                epsilon: gaussian_envelope(norms, delta, n)?,
                delta,
                formula: FormulaId::GaussianAbsolute,
                surrogate: false,
                estimated_norms: estimated,
            }),
            ProbeKind::Rademacher => {
                let (epsilon, surrogate) = rademacher_envelope(norms, delta, n)?;
                Some(Envelope {
                    epsilon,
                    delta,
                    formula: FormulaId::RademacherAbsolute,
                    surrogate,
                    estimated_norms: estimated,
                })
            }
            // complete sweeps over the basis are exact
            ProbeKind::UnitBasis if self.n_samples.is_multiple_of(self.dim) => Some(Envelope {
                epsilon: 0.0,
                delta,
                formula: FormulaId::UnitBasisExact,
                surrogate: false,
                estimated_norms: false,
            }),
            ProbeKind::UnitBasis => None,
        };
        Ok(self)
    }
}

pub(crate) fn elapsed_secs(start: Option<std::time::Instant>) -> f64 {
    start.map(|s| s.elapsed().as_secs_f64()).unwrap_or(0.0)
}

pub(crate) fn start_timer() -> Option<std::time::Instant> {
    if cfg!(target_arch = "wasm32") {
        None
    } else {
        Some(std::time::Instant::now())
    }
}

/// Mean of `N` quadratic forms over probes `0..N` of `probes`.
pub fn estimate_trace<O: SymmetricOperator + ?Sized>(
    op: &O,
    probes: &ProbeStream,
    n_samples: usize,
    eval: &QuadraticFormEvaluator,
) -> Result<EstimateReport> {
    if n_samples == 0 {
        return Err(Error::invalid("number of samples must be at least 1"));
    }
    if probes.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: probes.dim(),
        });
    }
    let timer = start_timer();
    let w = probes.weight();
    let values = try_map_indexed(n_samples, |i| {
        let x = probes.probe(i as u64);
        eval.evaluate(op, &x).map(|v| v.scaled(w))
    })
    .map_err(|(index, e)| Error::Probe {
        index: index as u64,
        source: Box::new(e),
    })?;
    let per_probe: Vec<f64> = values.iter().map(|v| v.value).collect();
    let variance = sample_variance(&per_probe);
    Ok(EstimateReport {
        estimate: mean(&per_probe),
        sample_variance: variance,
        standard_error: (variance / n_samples as f64).sqrt(),
        total_iterations: values.iter().map(|v| v.iterations).sum(),
        per_probe_values: per_probe,
        probe_kind: probes.kind(),
        seed: probes.seed(),
        n_samples,
        dim: op.dim(),
        evaluator: eval.description(),
        envelope: None,
        wall_time_secs: elapsed_secs(timer),
    })
}

/// `Σ_i e_iᵀ f(A) e_i` over all `n` unit vectors.
pub fn estimate_diag_trace<O: SymmetricOperator + ?Sized>(op: &O, eval: &QuadraticFormEvaluator) -> Result<f64> {
    let n = op.dim();
    let stream = ProbeStream::new(ProbeKind::UnitBasis, n, 0)?;
    Ok(estimate_trace(op, &stream, n, eval)?.estimate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{DiagonalOperator, ScaledIdentity};

    #[test]
    fn identity_rademacher_exact() {
        let op = ScaledIdentity::identity(12);
        let stream = ProbeStream::new(ProbeKind::Rademacher, 12, 5).unwrap();
        let r = estimate_trace(&op, &stream, 7, &QuadraticFormEvaluator::exact()).unwrap();
        assert_eq!(r.estimate, 12.0);
        assert_eq!(r.sample_variance, 0.0);
    }

    #[test]
    fn unit_basis_sign_diagonal() {
        let op = DiagonalOperator { d: vec![1.0, -1.0] };
        let stream = ProbeStream::new(ProbeKind::UnitBasis, 2, 0).unwrap();
        let r = estimate_trace(&op, &stream, 2, &QuadraticFormEvaluator::exact()).unwrap();
        assert_eq!(r.estimate, 0.0);
        let id = ScaledIdentity::identity(10);
        let stream = ProbeStream::new(ProbeKind::UnitBasis, 10, 0).unwrap();
        let r = estimate_trace(&id, &stream, 10, &QuadraticFormEvaluator::exact()).unwrap();
        assert_eq!(r.estimate, 10.0);
        assert!(r.per_probe_values.iter().all(|&v| v == 10.0));
    }

    #[test]
    fn polynomial_horner() {
        let op = DiagonalOperator { d: vec![2.0, 3.0] };
        let eval = QuadraticFormEvaluator::exact_polynomial(MatrixFunction::Polynomial(vec![1.0, -1.0, 2.0])).unwrap();
        // p(λ) = 1 − λ + 2λ², x = (1, 1)
        let v = eval.evaluate(&op, &[1.0, 1.0]).unwrap();
        assert_eq!(v.value, (1.0 - 2.0 + 8.0) + (1.0 - 3.0 + 18.0));
        assert!(QuadraticFormEvaluator::exact_polynomial(MatrixFunction::Log).is_err());
    }

    #[test]
    fn diag_trace_of_log() {
        let op = DiagonalOperator {
            d: vec![1.0, std::f64::consts::E],
        };
        let t = estimate_diag_trace(&op, &QuadraticFormEvaluator::lanczos(MatrixFunction::Log, 2)).unwrap();
        assert!((t - 1.0).abs() < 1e-14);
    }

    #[test]
    fn failing_probe_reports_index() {
        let op = DiagonalOperator { d: vec![1.0, -1.0] };
        let stream = ProbeStream::new(ProbeKind::UnitBasis, 2, 0).unwrap();
        let err = estimate_trace(
            &op,
            &stream,
            2,
            &QuadraticFormEvaluator::lanczos(MatrixFunction::Log, 1),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Probe { index: 1, .. }));
    }
}
