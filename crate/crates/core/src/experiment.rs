//! Data series for failure-probability and error-envelope studies.
//!
//! Each generator returns plain rows; rendering is left to callers. Rows
//! implement [`Tabular`] so they can be written as CSV with a fixed column
//! order.

use serde::{Deserialize, Serialize};

use crate::bounds::{
    comparison_bounds, gaussian_envelope, gaussian_sample_plan, gaussian_tail, rademacher_envelope, rademacher_tail,
    tightness_bound, NormData, NormSource,
};
use crate::error::{Error, Result};
use crate::logdet::{estimate_logdet_adaptive, AdaptiveOptions};
use crate::operator::{dot, gen_tightness_gaussian, gen_tightness_rademacher, SymmetricOperator};
use crate::oracle::empirical_tail;
use crate::parallel::map_indexed;
use crate::probe::{derive_seed, ProbeKind, ProbeStream};

/// A table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

/// Fixed-schema rows.
pub trait Tabular {
    fn columns() -> &'static [&'static str];
    fn cells(&self) -> Vec<Cell>;
}

/// The structured traceless matrix matching a probe kind: `diag(I, −I)` for
/// Gaussian and the exchange matrix for Rademacher probes.
pub fn tightness_operator(kind: ProbeKind, n: usize) -> Result<Box<dyn SymmetricOperator>> {
    match kind {
        ProbeKind::Gaussian => Ok(Box::new(gen_tightness_gaussian(n)?)),
        ProbeKind::Rademacher => Ok(Box::new(gen_tightness_rademacher(n)?)),
        ProbeKind::UnitBasis => Err(Error::invalid("tightness matrices are defined for random probes only")),
    }
}

/// Norm data of the tightness matrices (`‖B‖_F = √n`, `‖B‖₂ = 1`; the
/// exchange matrix has zero diagonal, the sign matrix is diagonal).
pub fn tightness_norms(kind: ProbeKind, n: usize) -> Result<NormData> {
    let f = (n as f64).sqrt();
    let norms = NormData::new(n, f, 1.0)?
        .with_trace(0.0)?
        .with_source(NormSource::Exact);
    match kind {
        ProbeKind::Rademacher => norms.with_offdiag(f, 1.0),
        _ => norms.with_offdiag(0.0, 0.0),
    }
}

fn envelope_for(kind: ProbeKind, norms: &NormData, delta: f64, n_samples: u64) -> Result<f64> {
    match kind {
        ProbeKind::Rademacher => Ok(rademacher_envelope(norms, delta, n_samples)?.0),
        _ => gaussian_envelope(norms, delta, n_samples),
    }
}

fn tail_for(kind: ProbeKind, norms: &NormData, n_samples: u64, eps: f64) -> Result<f64> {
    match kind {
        ProbeKind::Rademacher => rademacher_tail(norms, n_samples, eps),
        _ => gaussian_tail(norms, n_samples, eps),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub n: usize,
    pub trial: usize,
    pub estimate: f64,
    pub abs_error: f64,
    pub envelope: f64,
}

impl Tabular for EnvelopeRow {
    fn columns() -> &'static [&'static str] {
        &["n", "trial", "estimate", "abs_error", "envelope"]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.n as i64),
            Cell::Int(self.trial as i64),
            Cell::Float(self.estimate),
            Cell::Float(self.abs_error),
            Cell::Float(self.envelope),
        ]
    }
}

/// For each `n` in `dims`, `trials` estimates `tr_N(B)` of the tightness
/// matrix (true trace 0) alongside the `(δ, N)` envelope.
pub fn tightness_envelope_sweep(
    kind: ProbeKind,
    dims: &[usize],
    trials: usize,
    n_samples: usize,
    delta: f64,
    seed: u64,
) -> Result<Vec<EnvelopeRow>> {
    if n_samples == 0 || trials == 0 {
        return Err(Error::invalid("need at least one sample and one trial"));
    }
    let mut rows = Vec::with_capacity(dims.len() * trials);
    for &n in dims {
        let op = tightness_operator(kind, n)?;
        let envelope = envelope_for(kind, &tightness_norms(kind, n)?, delta, n_samples as u64)?;
        let estimates = map_indexed(trials, |t| {
            let stream = ProbeStream::new(kind, n, derive_seed(seed, ((n as u64) << 32) | t as u64))
                .expect("dimension is positive");
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            let mut sum = 0.0;
            for i in 0..n_samples as u64 {
                stream.fill_probe(i, &mut x);
                op.apply(&x, &mut y);
                sum += stream.weight() * dot(&x, &y);
            }
            sum / n_samples as f64
        });
        rows.extend(estimates.into_iter().enumerate().map(|(trial, estimate)| EnvelopeRow {
            n,
            trial,
            estimate,
            abs_error: estimate.abs(),
            envelope,
        }));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub epsilon: f64,
    pub failures: usize,
    pub trials: usize,
    pub empirical: f64,
    pub bound: f64,
    /// `sqrt(p (1 − p) / trials)` at `p = min(bound, 1)`.
    pub binomial_sd: f64,
}

impl Tabular for TailRow {
    fn columns() -> &'static [&'static str] {
        &["epsilon", "failures", "trials", "empirical", "bound", "binomial_sd"]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Float(self.epsilon),
            Cell::Int(self.failures as i64),
            Cell::Int(self.trials as i64),
            Cell::Float(self.empirical),
            Cell::Float(self.bound),
            Cell::Float(self.binomial_sd),
        ]
    }
}

/// Binomial standard deviation of a frequency with success probability `p`.
pub fn binomial_sd(p: f64, trials: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Empirical failure frequencies on the tightness matrix against the tail bound.
pub fn tightness_tail_curve(
    kind: ProbeKind,
    n: usize,
    n_samples: usize,
    trials: usize,
    epsilons: &[f64],
    seed: u64,
) -> Result<Vec<TailRow>> {
    let op = tightness_operator(kind, n)?;
    let norms = tightness_norms(kind, n)?;
    let tail = empirical_tail(op.as_ref(), kind, n_samples, trials, epsilons, seed)?;
    epsilons
        .iter()
        .zip(&tail.failures)
        .map(|(&eps, &failures)| {
            let bound = tail_for(kind, &norms, n_samples as u64, eps)?;
            Ok(TailRow {
                epsilon: eps,
                failures,
                trials,
                empirical: failures as f64 / trials as f64,
                bound,
                binomial_sd: binomial_sd(bound, trials),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRow {
    pub epsilon: f64,
    /// Fraction of trials with `|estimate| ≤ ε`.
    pub empirical: f64,
    pub bound: f64,
    pub binomial_sd: f64,
}

impl Tabular for ConcentrationRow {
    fn columns() -> &'static [&'static str] {
        &["epsilon", "empirical", "bound", "binomial_sd"]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Float(self.epsilon),
            Cell::Float(self.empirical),
            Cell::Float(self.bound),
            Cell::Float(self.binomial_sd),
        ]
    }
}

/// Empirical `P(|tr_N(B)| ≤ ε)` on the tightness matrix against `ε √(N/(πn))`.
pub fn tightness_lower_curve(
    kind: ProbeKind,
    n: usize,
    n_samples: usize,
    trials: usize,
    epsilons: &[f64],
    seed: u64,
) -> Result<Vec<ConcentrationRow>> {
    let op = tightness_operator(kind, n)?;
    let tail = empirical_tail(op.as_ref(), kind, n_samples, trials, epsilons, seed)?;
    epsilons
        .iter()
        .map(|&eps| {
            let inside = tail.errors.iter().filter(|e| e.abs() <= eps).count();
            let bound = tightness_bound(n, n_samples as u64, eps)?;
            Ok(ConcentrationRow {
                epsilon: eps,
                empirical: inside as f64 / trials as f64,
                bound,
                binomial_sd: binomial_sd(bound, trials),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub n_samples: usize,
    pub trial: usize,
    pub estimate: f64,
    pub abs_error: f64,
}

impl Tabular for ErrorRow {
    fn columns() -> &'static [&'static str] {
        &["n_samples", "trial", "estimate", "abs_error"]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.n_samples as i64),
            Cell::Int(self.trial as i64),
            Cell::Float(self.estimate),
            Cell::Float(self.abs_error),
        ]
    }
}

/// Error of `tr_N(B)` against `truth` for each `N` in `sample_counts`. Trial
/// `t` reuses one probe sequence across all `N`, so its rows form a running mean.
pub fn trace_error_curve<O: SymmetricOperator + ?Sized>(
    op: &O,
    truth: f64,
    kind: ProbeKind,
    sample_counts: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<ErrorRow>> {
    let n = op.dim();
    let max_n = sample_counts.iter().copied().max().unwrap_or(0);
    if max_n == 0 || trials == 0 {
        return Err(Error::invalid("need positive sample counts and at least one trial"));
    }
    let per_trial = map_indexed(trials, |t| {
        let stream = ProbeStream::new(kind, n, derive_seed(seed, t as u64)).expect("dimension is positive");
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut prefix = Vec::with_capacity(max_n);
        let mut sum = 0.0;
        for i in 0..max_n as u64 {
            stream.fill_probe(i, &mut x);
            op.apply(&x, &mut y);
            sum += stream.weight() * dot(&x, &y);
            prefix.push(sum);
        }
        prefix
    });
    let mut rows = Vec::new();
    for &ns in sample_counts {
        if ns == 0 {
            continue;
        }
        for (trial, prefix) in per_trial.iter().enumerate() {
            let estimate = prefix[ns - 1] / ns as f64;
            rows.push(ErrorRow {
                n_samples: ns,
                trial,
                estimate,
                abs_error: (estimate - truth).abs(),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDetRow {
    pub trial: usize,
    pub n_samples: usize,
    pub max_lanczos_steps: usize,
    pub estimate: f64,
    pub abs_error: f64,
    pub converged: bool,
}

impl Tabular for LogDetRow {
    fn columns() -> &'static [&'static str] {
        &[
            "trial",
            "n_samples",
            "max_lanczos_steps",
            "estimate",
            "abs_error",
            "converged",
        ]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.trial as i64),
            Cell::Int(self.n_samples as i64),
            Cell::Int(self.max_lanczos_steps as i64),
            Cell::Float(self.estimate),
            Cell::Float(self.abs_error),
            Cell::Int(self.converged as i64),
        ]
    }
}

/// Repeated adaptive log-det runs against a known value.
pub fn logdet_sweep<O: SymmetricOperator + ?Sized>(
    op: &O,
    truth: f64,
    kind: ProbeKind,
    options: &AdaptiveOptions,
    trials: usize,
    seed: u64,
) -> Result<Vec<LogDetRow>> {
    (0..trials)
        .map(|trial| {
            let run = estimate_logdet_adaptive(op, kind, derive_seed(seed, trial as u64), options)?;
            Ok(LogDetRow {
                trial,
                n_samples: run.n_samples,
                max_lanczos_steps: run.lanczos_steps,
                estimate: run.estimate,
                abs_error: (run.estimate - truth).abs(),
                converged: run.diagnostics.as_ref().is_some_and(|d| d.converged),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanComparisonRow {
    pub n: usize,
    pub gaussian_n: u64,
    pub nuclear_gaussian_n: f64,
    pub ratio: f64,
}

impl Tabular for PlanComparisonRow {
    fn columns() -> &'static [&'static str] {
        &["n", "gaussian_n", "nuclear_gaussian_n", "ratio"]
    }
    fn cells(&self) -> Vec<Cell> {
        vec![
            Cell::Int(self.n as i64),
            Cell::Int(self.gaussian_n as i64),
            Cell::Float(self.nuclear_gaussian_n),
            Cell::Float(self.ratio),
        ]
    }
}

/// Gaussian plan against the nuclear-norm plan on `diag(I, −I)` (nuclear
/// norm `n`, full rank).
pub fn plan_comparison(dims: &[usize], epsilon: f64, delta: f64) -> Result<Vec<PlanComparisonRow>> {
    dims.iter()
        .map(|&n| {
            let norms = tightness_norms(ProbeKind::Gaussian, n)?;
            let ours = gaussian_sample_plan(&norms, epsilon, delta)?;
            let cmp = comparison_bounds(&norms, n as f64, n, epsilon, delta)?;
            Ok(PlanComparisonRow {
                n,
                gaussian_n: ours.n_samples,
                nuclear_gaussian_n: cmp.nuclear_gaussian_n,
                ratio: cmp.nuclear_gaussian_n / ours.n_samples as f64,
            })
        })
        .collect()
}
