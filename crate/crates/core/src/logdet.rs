//! `log det A = tr(log A)` for SPD `A` by Lanczos quadrature on random probes.
//!
//! Three modes:
//!
//! * planned: a fixed `(N, m)` from the bounds module, carrying its `(ε, δ)` certificate;
//! * adaptive: per-probe bracket stopping and sample doubling with a
//!   split-half criterion, no certificate;
//! * oracle doubling: the experimental protocol that doubles `N` until the
//!   empirical failure rate against a known log-determinant drops below `δ`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::bounds::{logdet_plan_gaussian, logdet_plan_rademacher, logdet_plan_simplified, FormulaId, PlanResult};
use crate::error::{Error, Result};
use crate::estimator::{elapsed_secs, start_timer};
use crate::func::MatrixFunction;
use crate::lanczos::{
    approx_quadratic_form_log, evaluate_quadrature, lanczos_tridiagonalize, resolve_interval, LanczosOptions,
    LogBracket,
};
use crate::operator::{SpectralInterval, SymmetricOperator};
use crate::oracle::DenseSymmetric;
use crate::parallel::try_map_indexed;
use crate::probe::{derive_seed, ProbeKind, ProbeStream};
use crate::summation::{mean, neumaier_sum, sample_variance};

/// Lanczos step cap for adaptive runs when the caller gives none.
pub const DEFAULT_MAX_STEPS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LogDetMode {
    Planned { plan: PlanResult },
    Fixed { n_samples: usize, steps: usize },
    Adaptive { epsilon: f64, delta: f64, max_n: usize },
}

/// One probe's contribution `‖x‖² e₁ᵀ log(T_m) e₁`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeLogValue {
    pub x_norm_sq: f64,
    pub value: f64,
    pub iterations: usize,
    pub breakdown: bool,
    pub bracket: Option<LogBracket>,
    pub converged: bool,
}

/// `(ε, δ)` statement inherited from a plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub epsilon: f64,
    pub delta: f64,
    pub formula: FormulaId,
    /// Side conditions of the plan hold and `m` was not truncated.
    pub valid: bool,
    pub estimated_norms: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRound {
    /// Size of each half.
    pub half_size: usize,
    pub estimate: f64,
    /// `|mean(first half) − mean(second half)|`.
    pub half_difference: f64,
    /// Student-t half-width of the `1 − δ` interval for the mean of both halves.
    pub confidence_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveDiagnostics {
    pub rounds: Vec<AdaptiveRound>,
    pub converged: bool,
    pub interval: SpectralInterval,
    pub interval_declared: bool,
    /// Probes whose bracket did not close within the step cap.
    pub unconverged_probes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogDetRun {
    pub mode: LogDetMode,
    pub probe_kind: ProbeKind,
    pub seed: u64,
    pub dim: usize,
    pub per_probe: Vec<ProbeLogValue>,
    /// `Σ_i ‖X⁽ⁱ⁾‖² e₁ᵀ log(T_m⁽ⁱ⁾) e₁`.
    pub raw_sum: f64,
    /// `raw_sum / N`, the estimate of `log det A`.
    pub estimate: f64,
    pub n_samples: usize,
    /// Lanczos steps per probe (planned) or the largest used (adaptive).
    pub lanczos_steps: usize,
    pub certificate: Option<Certificate>,
    pub diagnostics: Option<AdaptiveDiagnostics>,
    pub wall_time_secs: f64,
}

fn check_dims<O: SymmetricOperator + ?Sized>(op: &O, probes: &ProbeStream) -> Result<()> {
    if probes.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: probes.dim(),
        });
    }
    Ok(())
}

fn probe_error(index: usize, e: Error) -> Error {
    Error::Probe {
        index: index as u64,
        source: Box::new(e),
    }
}

/// Fixed-step Lanczos values for probes `range`.
fn planned_values<O: SymmetricOperator + ?Sized>(
    op: &O,
    probes: &ProbeStream,
    start: usize,
    count: usize,
    m: usize,
) -> Result<Vec<ProbeLogValue>> {
    try_map_indexed(count, |k| {
        let x = probes.probe((start + k) as u64);
        let d = lanczos_tridiagonalize(op, &x, m, LanczosOptions::default())?;
        let value = evaluate_quadrature(&d.t, d.x_norm_sq, &MatrixFunction::Log)?;
        Ok(ProbeLogValue {
            x_norm_sq: d.x_norm_sq,
            value: probes.weight() * value,
            iterations: d.iterations(),
            breakdown: d.breakdown,
            bracket: None,
            converged: true,
        })
    })
    .map_err(|(i, e)| probe_error(start + i, e))
}

/// Runs the planned `N` probes with `m` Lanczos steps each (`m` capped at `n`).
pub fn estimate_logdet<O: SymmetricOperator + ?Sized>(
    op: &O,
    probes: &ProbeStream,
    plan: &PlanResult,
) -> Result<LogDetRun> {
    let m = plan
        .m
        .ok_or_else(|| Error::invalid("log-det plan lacks a Lanczos step count"))?;
    let n_samples = usize::try_from(plan.n_samples)
        .map_err(|_| Error::invalid(format!("planned sample count {} is too large", plan.n_samples)))?;
    let certificate = Certificate {
        epsilon: plan.epsilon,
        delta: plan.delta,
        formula: plan.formula,
        // capping m at n keeps the quadrature exact, so the certificate survives
        valid: plan.valid,
        estimated_norms: plan.estimated_norms,
    };
    fixed_run(
        op,
        probes,
        n_samples,
        m,
        LogDetMode::Planned { plan: *plan },
        Some(certificate),
    )
}

/// `N` probes with `m` Lanczos steps each and no accuracy certificate.
pub fn estimate_logdet_fixed<O: SymmetricOperator + ?Sized>(
    op: &O,
    probes: &ProbeStream,
    n_samples: usize,
    steps: usize,
) -> Result<LogDetRun> {
    if n_samples == 0 || steps == 0 {
        return Err(Error::invalid("need at least one probe and one Lanczos step"));
    }
    fixed_run(
        op,
        probes,
        n_samples,
        steps,
        LogDetMode::Fixed { n_samples, steps },
        None,
    )
}

fn fixed_run<O: SymmetricOperator + ?Sized>(
    op: &O,
    probes: &ProbeStream,
    n_samples: usize,
    m: usize,
    mode: LogDetMode,
    certificate: Option<Certificate>,
) -> Result<LogDetRun> {
    check_dims(op, probes)?;
    let timer = start_timer();
    let steps = m.clamp(1, op.dim());
    let per_probe = planned_values(op, probes, 0, n_samples, steps)?;
    let values: Vec<f64> = per_probe.iter().map(|p| p.value).collect();
    let raw_sum = neumaier_sum(&values);
    Ok(LogDetRun {
        mode,
        probe_kind: probes.kind(),
        seed: probes.seed(),
        dim: op.dim(),
        raw_sum,
        estimate: raw_sum / n_samples as f64,
        n_samples,
        lanczos_steps: steps,
        certificate,
        diagnostics: None,
        per_probe,
        wall_time_secs: elapsed_secs(timer),
    })
}

/// Settings for [`estimate_logdet_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOptions {
    pub epsilon: f64,
    pub delta: f64,
    /// Upper limit on the total number of probes.
    pub max_n: usize,
    pub max_steps: usize,
    /// Overrides the operator's declared interval.
    pub interval: Option<SpectralInterval>,
}

impl AdaptiveOptions {
    pub fn new(epsilon: f64, delta: f64, max_n: usize) -> Self {
        Self {
            epsilon,
            delta,
            max_n,
            max_steps: DEFAULT_MAX_STEPS,
            interval: None,
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adaptive_values<O: SymmetricOperator + ?Sized>(
    op: &O,
    probes: &ProbeStream,
    start: usize,
    count: usize,
    tol: f64,
    max_steps: usize,
    interval: SpectralInterval,
    opts: LanczosOptions,
) -> Result<Vec<ProbeLogValue>> {
    try_map_indexed(count, |k| {
        let x = probes.probe((start + k) as u64);
        let r = approx_quadratic_form_log(op, &x, tol, max_steps, interval, opts)?;
        Ok(ProbeLogValue {
            x_norm_sq: r.x_norm_sq,
            value: probes.weight() * r.value,
            iterations: r.iterations,
            breakdown: r.breakdown,
            bracket: r.bracket.map(|b| b.scaled(probes.weight())),
            converged: r.converged,
        })
    })
    .map_err(|(i, e)| probe_error(start + i, e))
}

fn student_t_quantile(p: f64, df: f64) -> Result<f64> {
    let t = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(format!("Student t: {e}")))?;
    Ok(t.inverse_cdf(p))
}

/// Adaptive estimation without norm information.
///
/// Each probe runs Lanczos until its Gauss / Gauss-Lobatto bracket is below
/// `ε/2`. Round `k` uses `2N` probes (`N = 2^k`) and stops once the two
/// half-means differ by at most `ε/2` and the Student-t half-width of the
/// `1 − δ` interval for the overall mean is at most `ε/2`. This is a
/// heuristic: the result carries no certificate.
pub fn estimate_logdet_adaptive<O: SymmetricOperator + ?Sized>(
    op: &O,
    kind: ProbeKind,
    seed: u64,
    options: &AdaptiveOptions,
) -> Result<LogDetRun> {
    let AdaptiveOptions {
        epsilon,
        delta,
        max_n,
        max_steps,
        ..
    } = *options;
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid("adaptive mode needs epsilon > 0 and delta in (0, 1)"));
    }
    if max_n < 2 {
        return Err(Error::invalid("adaptive mode needs max_n >= 2"));
    }
    let timer = start_timer();
    let n = op.dim();
    let probes = ProbeStream::new(kind, n, seed)?;
    let (interval, declared) = match options.interval {
        Some(iv) => (iv, true),
        None => resolve_interval(op, derive_seed(seed, u64::MAX))?,
    };
    if !(interval.lo > 0.0) {
        return Err(Error::invalid(format!(
            "spectral interval [{}, {}] is not positive; the operator is not SPD",
            interval.lo, interval.hi
        )));
    }
    let opts = LanczosOptions {
        widen_interval: !declared,
        ..LanczosOptions::default()
    };
    let tol = epsilon / 2.0;
    let mut per_probe: Vec<ProbeLogValue> = Vec::new();
    let mut rounds = Vec::new();
    let mut half = 1usize;
    let mut converged = false;
    while 2 * half <= max_n {
        let have = per_probe.len();
        let extra = adaptive_values(op, &probes, have, 2 * half - have, tol, max_steps, interval, opts)?;
        per_probe.extend(extra);
        let values: Vec<f64> = per_probe.iter().map(|p| p.value).collect();
        let diff = (mean(&values[..half]) - mean(&values[half..])).abs();
        let total = 2 * half;
        let sd = sample_variance(&values).sqrt();
        let width = if sd == 0.0 {
            0.0
        } else {
            student_t_quantile(1.0 - delta / 2.0, (total - 1) as f64)? * sd / (total as f64).sqrt()
        };
        rounds.push(AdaptiveRound {
            half_size: half,
            estimate: mean(&values),
            half_difference: diff,
            confidence_half_width: width,
        });
        if diff <= epsilon / 2.0 && width <= epsilon / 2.0 {
            converged = true;
            break;
        }
        half *= 2;
    }
    let values: Vec<f64> = per_probe.iter().map(|p| p.value).collect();
    let raw_sum = neumaier_sum(&values);
    Ok(LogDetRun {
        mode: LogDetMode::Adaptive { epsilon, delta, max_n },
        probe_kind: kind,
        seed,
        dim: n,
        raw_sum,
        estimate: raw_sum / values.len() as f64,
        n_samples: values.len(),
        lanczos_steps: per_probe.iter().map(|p| p.iterations).max().unwrap_or(0),
        certificate: None,
        diagnostics: Some(AdaptiveDiagnostics {
            rounds,
            converged,
            interval,
            interval_declared: declared,
            unconverged_probes: per_probe.iter().filter(|p| !p.converged).count(),
        }),
        per_probe,
        wall_time_secs: elapsed_secs(timer),
    })
}

/// One doubling step of the oracle-driven protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRound {
    pub n_samples: usize,
    pub failure_frequency: f64,
    pub mean_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleDoubling {
    pub rounds: Vec<OracleRound>,
    /// First `N` whose empirical failure frequency is at most `δ`.
    pub n_required: Option<usize>,
}

/// Doubles `N` from 1 until, over `trials` independent runs (trial `t`
/// seeded with `derive_seed(seed, t)`), the fraction with
/// `|estimate − truth| ≥ ε` is at most `δ`. Per-probe values use the
/// `ε/2` bracket stopping rule.
pub fn oracle_doubling<O: SymmetricOperator + ?Sized>(
    op: &O,
    kind: ProbeKind,
    seed: u64,
    truth: f64,
    options: &AdaptiveOptions,
    trials: usize,
) -> Result<OracleDoubling> {
    let AdaptiveOptions {
        epsilon,
        delta,
        max_n,
        max_steps,
        ..
    } = *options;
    if trials == 0 || max_n == 0 {
        return Err(Error::invalid("need at least one trial and max_n >= 1"));
    }
    let (interval, declared) = match options.interval {
        Some(iv) => (iv, true),
        None => resolve_interval(op, derive_seed(seed, u64::MAX))?,
    };
    let opts = LanczosOptions {
        widen_interval: !declared,
        ..LanczosOptions::default()
    };
    let streams: Vec<ProbeStream> = (0..trials)
        .map(|t| ProbeStream::new(kind, op.dim(), derive_seed(seed, t as u64)))
        .collect::<Result<_>>()?;
    let mut cache: Vec<Vec<f64>> = vec![Vec::new(); trials];
    let mut rounds = Vec::new();
    let mut n_samples = 1usize;
    while n_samples <= max_n {
        let mut failures = 0usize;
        let mut abs_err = 0.0;
        for (stream, values) in streams.iter().zip(cache.iter_mut()) {
            let have = values.len();
            let extra = adaptive_values(
                op,
                stream,
                have,
                n_samples - have,
                epsilon / 2.0,
                max_steps,
                interval,
                opts,
            )?;
            values.extend(extra.iter().map(|p| p.value));
            let err = (mean(values) - truth).abs();
            abs_err += err;
            if err >= epsilon {
                failures += 1;
            }
        }
        let freq = failures as f64 / trials as f64;
        rounds.push(OracleRound {
            n_samples,
            failure_frequency: freq,
            mean_abs_error: abs_err / trials as f64,
        });
        if freq <= delta {
            return Ok(OracleDoubling {
                rounds,
                n_required: Some(n_samples),
            });
        }
        n_samples *= 2;
    }
    Ok(OracleDoubling {
        rounds,
        n_required: None,
    })
}

/// Outcome of the scaling self-test `log(λA) = log λ · I + log A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub lambda: f64,
    pub estimate_base: f64,
    pub estimate_scaled: f64,
    /// `log λ · mean ‖X⁽ⁱ⁾‖²`, which is `n log λ` for Rademacher probes.
    pub expected_shift: f64,
    /// `|estimate_scaled − expected_shift − estimate_base|`.
    pub discrepancy: f64,
}

/// Runs the same planned estimate on `A` and `λA` with identical probes.
pub fn rescale_shift_identity_check<O: SymmetricOperator + ?Sized>(
    op: &O,
    lambda: f64,
    probes: &ProbeStream,
    n_samples: usize,
    m: usize,
) -> Result<ScalingCheck> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("scale must be positive, got {lambda}")));
    }
    check_dims(op, probes)?;
    if n_samples == 0 {
        return Err(Error::invalid("number of samples must be at least 1"));
    }
    let scaled = crate::operator::ScaledOperator {
        base: op,
        factor: lambda,
    };
    let steps = m.clamp(1, op.dim());
    let base = planned_values(op, probes, 0, n_samples, steps)?;
    let other = planned_values(&scaled, probes, 0, n_samples, steps)?;
    let estimate_base = mean(&base.iter().map(|p| p.value).collect::<Vec<_>>());
    let estimate_scaled = mean(&other.iter().map(|p| p.value).collect::<Vec<_>>());
    let expected_shift = lambda.ln() * mean(&base.iter().map(|p| p.x_norm_sq).collect::<Vec<_>>());
    Ok(ScalingCheck {
        lambda,
        estimate_base,
        estimate_scaled,
        expected_shift,
        discrepancy: (estimate_scaled - expected_shift - estimate_base).abs(),
    })
}

/// Spectral data of `log A` used by the log-det planners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNorms {
    pub kappa: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub frobenius: f64,
    pub spectral: f64,
    pub offdiag_frobenius: f64,
    pub offdiag_spectral: f64,
    /// `tr(log A)`.
    pub logdet: f64,
}

/// Exact `log A` norms from a dense eigendecomposition.
pub fn log_norms_dense(a: &DenseSymmetric) -> Result<LogNorms> {
    let eig = a.eigen()?;
    let lambda_min = eig.values[0];
    let lambda_max = eig.values[eig.values.len() - 1];
    if !(lambda_min > 0.0) {
        return Err(Error::NotPositiveDefinite {
            pivot: 0,
            value: lambda_min,
        });
    }
    let logs: Vec<f64> = eig.values.iter().map(|v| v.ln()).collect();
    let frobenius = logs.iter().map(|l| l * l).sum::<f64>().sqrt();
    let spectral = logs.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let log_a = eig.apply_function(&MatrixFunction::Log)?;
    let off = log_a.without_diagonal();
    let off_eig = off.eigenvalues()?;
    Ok(LogNorms {
        kappa: lambda_max / lambda_min,
        lambda_min,
        lambda_max,
        frobenius,
        spectral,
        offdiag_frobenius: off.offdiag_frobenius(),
        offdiag_spectral: off_eig.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        logdet: neumaier_sum(&logs),
    })
}

/// The planner matching a probe kind: the Gaussian or Rademacher log-det
/// theorem with exact log-norms, or the norm-free plan when `norms` is absent
/// (Rademacher only).
pub fn plan_for(
    kind: ProbeKind,
    kappa: f64,
    norms: Option<&LogNorms>,
    n: usize,
    epsilon: f64,
    delta: f64,
) -> Result<PlanResult> {
    match (kind, norms) {
        (ProbeKind::Gaussian, Some(l)) => logdet_plan_gaussian(kappa, l.spectral, l.frobenius, n, epsilon, delta),
        (ProbeKind::Rademacher, Some(l)) => {
            logdet_plan_rademacher(kappa, l.offdiag_spectral, l.offdiag_frobenius, n, epsilon, delta)
        }
        (ProbeKind::Rademacher, None) => logdet_plan_simplified(kappa, n, epsilon, delta),
        (ProbeKind::Gaussian, None) => Err(Error::invalid("the Gaussian log-det plan needs log-norms")),
        (ProbeKind::UnitBasis, _) => Err(Error::invalid("no log-det plan exists for unit-basis probes")),
    }
}

#[cfg(test)]
mod tests;
