//! A-priori Lanczos error bounds from analyticity on a Bernstein ellipse.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::SpectralInterval;

/// `‖x‖² · 4 M_ρ ρ^{−2m} / (1 − ρ^{−1})` as a function of `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseBound {
    pub rho: f64,
    pub m_rho: f64,
    pub x_norm_sq: f64,
}

impl EllipseBound {
    pub fn bound(&self, m: usize) -> f64 {
        let decay = (-2.0 * m as f64 * self.rho.ln()).exp();
        self.x_norm_sq * 4.0 * self.m_rho * decay / (1.0 - 1.0 / self.rho)
    }
}

/// How `M_ρ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EllipseFunction {
    /// `f = log`; `M_ρ` from [`max_log_on_ellipse`].
    Log,
    /// Caller-supplied maximum of `|f|` on the transformed ellipse.
    MaxModulus(f64),
}

/// Real-axis intercepts of the image of `E_ρ` under the affine map taking
/// `[-1, 1]` to `interval`.
pub fn ellipse_intercepts(interval: SpectralInterval, rho: f64) -> (f64, f64) {
    // c ∓ h(ρ + 1/ρ)/2 rewritten as lo − h(ρ−1)²/(2ρ), hi + h(ρ−1)²/(2ρ) to avoid cancellation
    let h = 0.5 * (interval.hi - interval.lo);
    let overhang = h * (rho - 1.0).powi(2) / (2.0 * rho);
    (interval.lo - overhang, interval.hi + overhang)
}

pub fn ellipse_error_bound(
    f: EllipseFunction,
    interval: SpectralInterval,
    x_norm_sq: f64,
    rho: f64,
) -> Result<EllipseBound> {
    if !(rho > 1.0) || !rho.is_finite() {
        return Err(Error::invalid(format!("elliptical radius must exceed 1, got {rho}")));
    }
    let m_rho = match f {
        EllipseFunction::Log => {
            let (alpha, beta) = ellipse_intercepts(interval, rho);
            max_log_on_ellipse(alpha, beta)?
        }
        EllipseFunction::MaxModulus(m) if m >= 0.0 && m.is_finite() => m,
        EllipseFunction::MaxModulus(m) => {
            return Err(Error::invalid(format!("M_rho must be finite and nonnegative, got {m}")))
        }
    };
    Ok(EllipseBound { rho, m_rho, x_norm_sq })
}

/// Maximum of `|log z|` over an ellipse with real foci and real intercepts
/// `alpha < beta`; attained at one of the intercepts.
pub fn max_log_on_ellipse(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!(
            "ellipse must lie in the right half plane, left intercept is {alpha}"
        )));
    }
    if !(beta >= alpha) {
        return Err(Error::invalid(format!("intercepts out of order: {alpha} > {beta}")));
    }
    Ok(alpha.ln().abs().max(beta.ln().abs()))
}

/// `c_A = 2 (√(κ+1) + 1) log(2κ)`.
pub fn log_lanczos_constant(kappa: f64) -> f64 {
    let s = (kappa + 1.0).sqrt();
    2.0 * (s + 1.0) * (2.0 * kappa).ln()
}

/// `c_A ‖x‖² ((√(κ+1) − 1)/(√(κ+1) + 1))^{2m}` bounding the `m`-step Lanczos
/// error for `xᵀ log(A) x`, with `A` scaled so its spectrum is in `[1/2, κ/2]`
/// (the error itself is scale invariant).
pub fn log_lanczos_bound(kappa: f64, x_norm_sq: f64, m: usize) -> Result<f64> {
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::invalid(format!(
            "condition number must be at least 1, got {kappa}"
        )));
    }
    let s = (kappa + 1.0).sqrt();
    let ratio = (s - 1.0) / (s + 1.0);
    Ok(log_lanczos_constant(kappa) * x_norm_sq * ratio.powf(2.0 * m as f64))
}
