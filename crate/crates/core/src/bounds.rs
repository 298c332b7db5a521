//! Tail bounds, error envelopes and sample-size / iteration planners.
//!
//! All functions are pure. Failure probabilities are returned unclamped
//! (they may exceed 1 for tiny `N`). Planned counts are ceilings clamped to
//! at least 1; a value within `1e-9` (relative) of an integer is treated as
//! that integer so that exact thresholds are not pushed up by rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::OperatorNorms;

/// Relative slack for norm consistency checks.
const NORM_SLACK: f64 = 1e-12;
/// Relative distance to an integer below which a threshold is not rounded up.
const CEIL_SNAP: f64 = 1e-9;

/// Where norm values came from; estimated norms taint any certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSource {
    Exact,
    Supplied,
    Estimated,
}

/// Norm information about a symmetric `B` of dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormData {
    pub n: usize,
    pub frobenius: f64,
    pub spectral: f64,
    pub offdiag_frobenius: Option<f64>,
    pub offdiag_spectral: Option<f64>,
    pub trace: Option<f64>,
    pub source: NormSource,
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!(
            "{name} must be finite and nonnegative, got {v}"
        )));
    }
    Ok(())
}

impl NormData {
    pub fn new(n: usize, frobenius: f64, spectral: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        check_nonneg("Frobenius norm", frobenius)?;
        check_nonneg("spectral norm", spectral)?;
        if spectral > frobenius * (1.0 + NORM_SLACK) {
            return Err(Error::invalid(format!(
                "spectral norm {spectral} exceeds Frobenius norm {frobenius}"
            )));
        }
        Ok(Self {
            n,
            frobenius,
            spectral,
            offdiag_frobenius: None,
            offdiag_spectral: None,
            trace: None,
            source: NormSource::Supplied,
        })
    }

    /// Adds `‖B − D_B‖_F` and `‖B − D_B‖₂`.
    pub fn with_offdiag(mut self, frobenius: f64, spectral: f64) -> Result<Self> {
        check_nonneg("off-diagonal Frobenius norm", frobenius)?;
        check_nonneg("off-diagonal spectral norm", spectral)?;
        if frobenius > self.frobenius * (1.0 + NORM_SLACK) {
            return Err(Error::invalid(format!(
                "off-diagonal Frobenius norm {frobenius} exceeds Frobenius norm {}",
                self.frobenius
            )));
        }
        if spectral > 2.0 * self.spectral * (1.0 + NORM_SLACK) {
            return Err(Error::invalid(format!(
                "off-diagonal spectral norm {spectral} exceeds twice the spectral norm {}",
                self.spectral
            )));
        }
        self.offdiag_frobenius = Some(frobenius);
        self.offdiag_spectral = Some(spectral);
        Ok(self)
    }

    pub fn with_trace(mut self, trace: f64) -> Result<Self> {
        if !trace.is_finite() {
            return Err(Error::invalid("trace must be finite"));
        }
        self.trace = Some(trace);
        Ok(self)
    }

    pub fn with_source(mut self, source: NormSource) -> Self {
        self.source = source;
        self
    }

    pub fn from_operator_norms(n: usize, norms: &OperatorNorms, source: NormSource) -> Result<Self> {
        Ok(Self::new(n, norms.frobenius, norms.spectral)?
            .with_offdiag(norms.offdiag_frobenius, norms.offdiag_spectral)?
            .with_trace(norms.trace)?
            .with_source(source))
    }

    /// `‖B‖_F² / ‖B‖₂²` (0 for the zero matrix).
    pub fn stable_rank(&self) -> f64 {
        if self.spectral > 0.0 {
            (self.frobenius / self.spectral).powi(2)
        } else {
            0.0
        }
    }

    /// `‖B‖₂ / tr(B)` when the trace is known.
    pub fn mu(&self) -> Option<f64> {
        self.trace.map(|t| self.spectral / t)
    }

    /// Off-diagonal norms, or the worst-case surrogates `‖B‖_F` and `2‖B‖₂`
    /// with the flag set.
    pub fn offdiag_or_surrogate(&self) -> (f64, f64, bool) {
        match (self.offdiag_frobenius, self.offdiag_spectral) {
            (Some(f), Some(s)) => (f, s, false),
            _ => (self.frobenius, 2.0 * self.spectral, true),
        }
    }
}

/// Which bound produced a plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    GaussianAbsolute,
    RademacherAbsolute,
    GaussianRelativeSpsd,
    RademacherRelativeSpsd,
    UnitBasisExact,
    LogdetGaussian,
    LogdetRademacher,
    LogdetSimplified,
    NuclearGaussian,
    NuclearRademacher,
}

impl FormulaId {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::GaussianAbsolute => "gaussian_absolute",
            Self::RademacherAbsolute => "rademacher_absolute",
            Self::GaussianRelativeSpsd => "gaussian_relative_spsd",
            Self::RademacherRelativeSpsd => "rademacher_relative_spsd",
            Self::UnitBasisExact => "unit_basis_exact",
            Self::LogdetGaussian => "logdet_gaussian",
            Self::LogdetRademacher => "logdet_rademacher",
            Self::LogdetSimplified => "logdet_simplified",
            Self::NuclearGaussian => "nuclear_gaussian",
            Self::NuclearRademacher => "nuclear_rademacher",
        }
    }
}

/// A planned sample count (and Lanczos steps for log-determinants).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub n_samples: u64,
    pub m: Option<usize>,
    pub epsilon: f64,
    pub delta: f64,
    pub formula: FormulaId,
    /// The threshold before rounding.
    pub raw_n: f64,
    /// False when a side condition of the underlying bound fails.
    pub valid: bool,
    /// Off-diagonal norms were replaced by worst-case surrogates.
    pub surrogate: bool,
    /// Norm inputs were estimated rather than exact or user supplied.
    pub estimated_norms: bool,
}

impl PlanResult {
    fn new(raw: f64, epsilon: f64, delta: f64, formula: FormulaId) -> Self {
        Self {
            n_samples: plan_ceil(raw),
            m: None,
            epsilon,
            delta,
            formula,
            raw_n: raw,
            valid: true,
            surrogate: false,
            estimated_norms: false,
        }
    }

    /// A label such as `rademacher_absolute+surrogate+estimated`.
    pub fn formula_label(&self) -> String {
        let mut s = self.formula.as_str().to_string();
        if self.surrogate {
            s.push_str("+surrogate");
        }
        if self.estimated_norms {
            s.push_str("+estimated");
        }
        s
    }
}

/// `max(1, ⌈x⌉)`, snapping values within `1e-9` relative of an integer.
pub fn plan_ceil(x: f64) -> u64 {
    if x.is_nan() {
        return 1;
    }
    let r = x.round();
    let c = if (x - r).abs() <= CEIL_SNAP * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    };
    if c >= u64::MAX as f64 {
        u64::MAX
    } else {
        (c as u64).max(1)
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::invalid(format!(
            "epsilon must be positive and finite, got {eps}"
        )));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

fn check_samples(n_samples: u64) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::invalid("number of samples must be at least 1"));
    }
    Ok(())
}

/// `2 exp(−N ε² / (a F² + a ε S))`, and 0 when the denominator vanishes.
fn bernstein_type(n_samples: u64, eps: f64, a_f: f64, f: f64, a_s: f64, s: f64) -> f64 {
    let denom = a_f * f * f + a_s * eps * s;
    if denom == 0.0 {
        return 0.0;
    }
    2.0 * (-(n_samples as f64) * eps * eps / denom).exp()
}

/// `P(|tr_N − tr| ≥ ε) ≤ 2 exp(−N ε² / (4‖B‖_F² + 4ε‖B‖₂))` for Gaussian probes.
pub fn gaussian_tail(norms: &NormData, n_samples: u64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_samples(n_samples)?;
    Ok(bernstein_type(
        n_samples,
        epsilon,
        4.0,
        norms.frobenius,
        4.0,
        norms.spectral,
    ))
}

/// `N = ⌈(4/ε²)(‖B‖_F² + ε‖B‖₂) log(2/δ)⌉`.
pub fn gaussian_sample_plan(norms: &NormData, epsilon: f64, delta: f64) -> Result<PlanResult> {
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    let raw = 4.0 / (epsilon * epsilon) * (norms.frobenius.powi(2) + epsilon * norms.spectral) * (2.0 / delta).ln();
    let mut plan = PlanResult::new(raw, epsilon, delta, FormulaId::GaussianAbsolute);
    plan.estimated_norms = norms.source == NormSource::Estimated;
    Ok(plan)
}

/// Error level `ε = 2‖B‖_F √(L/N) + 2‖B‖₂ L/N`, `L = log(2/δ)`, reached
/// with probability at least `1 − δ` by `N` Gaussian probes.
pub fn gaussian_envelope(norms: &NormData, delta: f64, n_samples: u64) -> Result<f64> {
    check_delta(delta)?;
    check_samples(n_samples)?;
    let l = (2.0 / delta).ln();
    let n = n_samples as f64;
    Ok(2.0 * norms.frobenius * (l / n).sqrt() + 2.0 * norms.spectral * l / n)
}

/// Upper bound `ε √(N/(πn))` on `P(|tr_N(B)| ≤ ε)` for the traceless
/// tightness matrices (sign split for Gaussian, exchange for Rademacher probes).
pub fn tightness_bound(n: usize, n_samples: u64, epsilon: f64) -> Result<f64> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!("dimension must be even and positive, got {n}")));
    }
    check_samples(n_samples)?;
    if !(epsilon >= 0.0) {
        return Err(Error::invalid("epsilon must be nonnegative"));
    }
    Ok(epsilon * (n_samples as f64 / (std::f64::consts::PI * n as f64)).sqrt())
}

/// Gaussian case of [`tightness_bound`].
pub fn gaussian_tightness_bound(n: usize, n_samples: u64, epsilon: f64) -> Result<f64> {
    tightness_bound(n, n_samples, epsilon)
}

/// `2 exp(−N ε² / (8‖B − D_B‖_F² + 8ε‖B − D_B‖₂))` for Rademacher probes,
/// with surrogates when the off-diagonal norms are absent.
pub fn rademacher_tail(norms: &NormData, n_samples: u64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_samples(n_samples)?;
    let (f, s, _) = norms.offdiag_or_surrogate();
    Ok(bernstein_type(n_samples, epsilon, 8.0, f, 8.0, s))
}

/// `N = ⌈(8/ε²)(‖B − D_B‖_F² + ε‖B − D_B‖₂) log(2/δ)⌉`.
pub fn rademacher_sample_plan(norms: &NormData, epsilon: f64, delta: f64) -> Result<PlanResult> {
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    let (f, s, surrogate) = norms.offdiag_or_surrogate();
    let raw = 8.0 / (epsilon * epsilon) * (f * f + epsilon * s) * (2.0 / delta).ln();
    let mut plan = PlanResult::new(raw, epsilon, delta, FormulaId::RademacherAbsolute);
    plan.surrogate = surrogate;
    plan.estimated_norms = norms.source == NormSource::Estimated;
    Ok(plan)
}

/// Rademacher analogue of [`gaussian_envelope`]:
/// `ε = 2√2 ‖B − D_B‖_F √(L/N) + 4‖B − D_B‖₂ L/N`.
pub fn rademacher_envelope(norms: &NormData, delta: f64, n_samples: u64) -> Result<(f64, bool)> {
    check_delta(delta)?;
    check_samples(n_samples)?;
    let (f, s, surrogate) = norms.offdiag_or_surrogate();
    let l = (2.0 / delta).ln();
    let n = n_samples as f64;
    Ok((8f64.sqrt() * f * (l / n).sqrt() + 4.0 * s * l / n, surrogate))
}

/// Relative-error plans for nonzero SPSD `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpsdPlans {
    pub gaussian: PlanResult,
    pub rademacher: PlanResult,
}

/// `N = ⌈(c/ε²)(1 + ε) μ log(2/δ)⌉` with `μ = ‖B‖₂/tr(B)`, `c = 4` (Gaussian)
/// or `8` (Rademacher); `ε` is relative to `tr(B)`.
pub fn spsd_relative_plans(norms: &NormData, epsilon: f64, delta: f64) -> Result<SpsdPlans> {
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    let trace = norms
        .trace
        .ok_or_else(|| Error::invalid("relative plans need the trace"))?;
    if !(trace > 0.0) {
        return Err(Error::invalid(format!(
            "relative plans need a positive trace, got {trace}"
        )));
    }
    let mu = norms.spectral / trace;
    let base = (1.0 + epsilon) * mu * (2.0 / delta).ln() / (epsilon * epsilon);
    let estimated = norms.source == NormSource::Estimated;
    let mut gaussian = PlanResult::new(4.0 * base, epsilon, delta, FormulaId::GaussianRelativeSpsd);
    let mut rademacher = PlanResult::new(8.0 * base, epsilon, delta, FormulaId::RademacherRelativeSpsd);
    gaussian.estimated_norms = estimated;
    rademacher.estimated_norms = estimated;
    Ok(SpsdPlans { gaussian, rademacher })
}

/// Earlier nuclear-norm based sample counts and the direct Bernstein tail,
/// for side-by-side reporting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonBounds {
    /// `(20/ε²)‖B‖_*² log(4/δ)`.
    pub nuclear_gaussian_n: f64,
    /// `(6/ε²)‖B‖_*² log(2 rank/δ)`.
    pub nuclear_rademacher_n: f64,
    /// [`bernstein_tail`] at the Rademacher plan's `N`.
    pub bernstein_tail: f64,
    pub bernstein_n_samples: u64,
}

/// `2 exp(−N ε² / (4‖B − D_B‖_F² + (4/3) n ε ‖B − D_B‖₂))`.
pub fn bernstein_tail(norms: &NormData, n_samples: u64, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    check_samples(n_samples)?;
    let (f, s, _) = norms.offdiag_or_surrogate();
    Ok(bernstein_type(
        n_samples,
        epsilon,
        4.0,
        f,
        4.0 / 3.0 * norms.n as f64,
        s,
    ))
}

pub fn comparison_bounds(
    norms: &NormData,
    nuclear_norm: f64,
    rank: usize,
    epsilon: f64,
    delta: f64,
) -> Result<ComparisonBounds> {
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    check_nonneg("nuclear norm", nuclear_norm)?;
    if nuclear_norm < norms.frobenius * (1.0 - NORM_SLACK) {
        return Err(Error::invalid(format!(
            "nuclear norm {nuclear_norm} is below the Frobenius norm {}",
            norms.frobenius
        )));
    }
    if rank == 0 || rank > norms.n {
        return Err(Error::invalid(format!("rank must lie in [1, {}], got {rank}", norms.n)));
    }
    let e2 = epsilon * epsilon;
    let nuc2 = nuclear_norm * nuclear_norm;
    let plan = rademacher_sample_plan(norms, epsilon, delta)?;
    Ok(ComparisonBounds {
        nuclear_gaussian_n: 20.0 / e2 * nuc2 * (4.0 / delta).ln(),
        nuclear_rademacher_n: 6.0 / e2 * nuc2 * (2.0 * rank as f64 / delta).ln(),
        bernstein_tail: bernstein_tail(norms, plan.n_samples, epsilon)?,
        bernstein_n_samples: plan.n_samples,
    })
}

fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!(
            "condition number must be at least 1, got {kappa}"
        )));
    }
    Ok(())
}

/// `⌈(√(κ+1)/4) log(4ε⁻¹ size (√(κ+1)+1) log(2κ))⌉`, at least 1.
fn logdet_steps(kappa: f64, size: f64, epsilon: f64) -> usize {
    let s = (kappa + 1.0).sqrt();
    let raw = s / 4.0 * (4.0 / epsilon * size * (s + 1.0) * (2.0 * kappa).ln()).ln();
    plan_ceil(raw) as usize
}

/// Lanczos steps for the Gaussian log-determinant plan (uses `n²`).
pub fn logdet_steps_gaussian(kappa: f64, n: usize, epsilon: f64) -> Result<usize> {
    check_kappa(kappa)?;
    check_epsilon(epsilon)?;
    Ok(logdet_steps(kappa, (n as f64).powi(2), epsilon))
}

/// Lanczos steps for the Rademacher and simplified plans (uses `n`).
pub fn logdet_steps_rademacher(kappa: f64, n: usize, epsilon: f64) -> Result<usize> {
    check_kappa(kappa)?;
    check_epsilon(epsilon)?;
    Ok(logdet_steps(kappa, n as f64, epsilon))
}

/// Gaussian probes for `log det A`:
/// `N = ⌈16ε⁻²(‖log A‖_F² + ε‖log A‖₂) log(4/δ)⌉` plus the `n²` step count.
/// `valid` records the side condition `N ≤ (δ/2) exp(n²/16)`.
pub fn logdet_plan_gaussian(
    kappa: f64,
    lognorm_spectral: f64,
    lognorm_frobenius: f64,
    n: usize,
    epsilon: f64,
    delta: f64,
) -> Result<PlanResult> {
    check_kappa(kappa)?;
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    check_nonneg("spectral norm of log A", lognorm_spectral)?;
    check_nonneg("Frobenius norm of log A", lognorm_frobenius)?;
    if n < 2 {
        return Err(Error::invalid(format!(
            "the Gaussian log-det plan needs n >= 2, got {n}"
        )));
    }
    let raw =
        16.0 / (epsilon * epsilon) * (lognorm_frobenius.powi(2) + epsilon * lognorm_spectral) * (4.0 / delta).ln();
    let mut plan = PlanResult::new(raw, epsilon, delta, FormulaId::LogdetGaussian);
    plan.m = Some(logdet_steps(kappa, (n as f64).powi(2), epsilon));
    let nf = n as f64;
    plan.valid = (plan.n_samples as f64).ln() <= (delta / 2.0).ln() + nf * nf / 16.0;
    Ok(plan)
}

/// Rademacher probes for `log det A`:
/// `N = ⌈32ε⁻²(‖log A − D‖_F² + (ε/2)‖log A − D‖₂) log(2/δ)⌉` plus the `n` step count.
pub fn logdet_plan_rademacher(
    kappa: f64,
    offdiag_lognorm_spectral: f64,
    offdiag_lognorm_frobenius: f64,
    n: usize,
    epsilon: f64,
    delta: f64,
) -> Result<PlanResult> {
    check_kappa(kappa)?;
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    check_nonneg("off-diagonal spectral norm of log A", offdiag_lognorm_spectral)?;
    check_nonneg("off-diagonal Frobenius norm of log A", offdiag_lognorm_frobenius)?;
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let raw = 32.0 / (epsilon * epsilon)
        * (offdiag_lognorm_frobenius.powi(2) + 0.5 * epsilon * offdiag_lognorm_spectral)
        * (2.0 / delta).ln();
    let mut plan = PlanResult::new(raw, epsilon, delta, FormulaId::LogdetRademacher);
    plan.m = Some(logdet_steps(kappa, n as f64, epsilon));
    Ok(plan)
}

/// Norm-free Rademacher plan: `N = ⌈8ε⁻²(n log²κ + 2ε log κ) log(2/δ)⌉`.
pub fn logdet_plan_simplified(kappa: f64, n: usize, epsilon: f64, delta: f64) -> Result<PlanResult> {
    check_kappa(kappa)?;
    check_epsilon(epsilon)?;
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let lk = kappa.ln();
    let raw = 8.0 / (epsilon * epsilon) * (n as f64 * lk * lk + 2.0 * epsilon * lk) * (2.0 / delta).ln();
    let mut plan = PlanResult::new(raw, epsilon, delta, FormulaId::LogdetSimplified);
    plan.m = Some(logdet_steps(kappa, n as f64, epsilon));
    Ok(plan)
}

#[cfg(test)]
mod tests;
