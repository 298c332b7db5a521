//! Lanczos quadrature for quadratic forms `xᵀ f(A) x`.
//!
//! `m` Lanczos steps from `u₁ = x/‖x‖` give a tridiagonal `T_m`, and
//! `‖x‖² e₁ᵀ f(T_m) e₁` is the `m`-point Gauss rule for the spectral measure
//! of `A` weighted by the components of `x`. For `f = log` on SPD `A` the
//! Gauss value is an upper bound and the Gauss-Lobatto value (nodes forced
//! at the ends of an enclosing interval) a lower bound.

mod ellipse;
mod tridiagonal;

pub use ellipse::{
    ellipse_error_bound, ellipse_intercepts, log_lanczos_bound, log_lanczos_constant, max_log_on_ellipse, EllipseBound,
    EllipseFunction,
};
pub(crate) use tridiagonal::implicit_ql;
pub use tridiagonal::{tridiagonal_eigen, TridiagonalEigen, TridiagonalMatrix};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::MatrixFunction;
use crate::operator::{dot, norm2, SpectralInterval, SymmetricOperator};
use crate::probe::{ProbeKind, ProbeStream};

/// Relative size of `β_i` (against the largest `‖A u_j‖` seen) that counts
/// as an invariant Krylov subspace.
pub const BREAKDOWN_TOL: f64 = 1e-12;

/// Lower/upper factors applied to Ritz extremes when the interval is estimated.
pub const INTERVAL_DEFLATION: f64 = 0.99;
pub const INTERVAL_INFLATION: f64 = 1.01;

/// Lanczos steps used to estimate an undeclared spectral interval.
pub const INTERVAL_ESTIMATION_STEPS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanczosOptions {
    /// Full (twice-applied classical Gram-Schmidt) reorthogonalization.
    pub reorthogonalize: bool,
    /// Let the Lobatto interval grow to cover Ritz values that fall outside
    /// it instead of failing. Meant for estimated intervals.
    pub widen_interval: bool,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            reorthogonalize: true,
            widen_interval: false,
        }
    }
}

/// Incremental Lanczos iteration.
pub struct LanczosProcess<'a, O: SymmetricOperator + ?Sized> {
    op: &'a O,
    opts: LanczosOptions,
    basis: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    x_norm_sq: f64,
    breakdown: bool,
    scale: f64,
    work: Vec<f64>,
}

impl<'a, O: SymmetricOperator + ?Sized> LanczosProcess<'a, O> {
    pub fn new(op: &'a O, x: &[f64], opts: LanczosOptions) -> Result<Self> {
        let n = op.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        let x_norm_sq = dot(x, x);
        if x_norm_sq == 0.0 || !x_norm_sq.is_finite() {
            return Err(Error::ZeroStartVector);
        }
        let inv = 1.0 / x_norm_sq.sqrt();
        let u1: Vec<f64> = x.iter().map(|v| v * inv).collect();
        Ok(Self {
            op,
            opts,
            basis: vec![u1],
            alpha: Vec::new(),
            beta: Vec::new(),
            x_norm_sq,
            breakdown: false,
            scale: 0.0,
            work: vec![0.0; n],
        })
    }

    pub fn steps(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_breakdown(&self) -> bool {
        self.breakdown
    }

    pub fn x_norm_sq(&self) -> f64 {
        self.x_norm_sq
    }

    /// Performs one step; returns `Ok(false)` if the iteration had already
    /// stopped at an invariant subspace.
    pub fn step(&mut self) -> Result<bool> {
        if self.breakdown {
            return Ok(false);
        }
        let i = self.alpha.len();
        let cur = self.basis.len() - 1;
        self.op.apply(&self.basis[cur], &mut self.work);
        if self.work.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: i + 1 });
        }
        self.scale = self.scale.max(norm2(&self.work));
        let a = dot(&self.basis[cur], &self.work);
        for (w, u) in self.work.iter_mut().zip(&self.basis[cur]) {
            *w -= a * u;
        }
        if i > 0 {
            let b = self.beta[i - 1];
            for (w, u) in self.work.iter_mut().zip(&self.basis[cur - 1]) {
                *w -= b * u;
            }
        }
        if self.opts.reorthogonalize {
            for _ in 0..2 {
                for u in &self.basis {
                    let c = dot(&self.work, u);
                    for (w, uk) in self.work.iter_mut().zip(u) {
                        *w -= c * uk;
                    }
                }
            }
        }
        let b = norm2(&self.work);
        self.alpha.push(a);
        self.beta.push(b);
        if b <= BREAKDOWN_TOL * self.scale || i + 1 == self.op.dim() {
            self.breakdown = b <= BREAKDOWN_TOL * self.scale;
            if i + 1 == self.op.dim() {
                // the Krylov space is the whole space
                self.breakdown = true;
            }
            return Ok(true);
        }
        let next: Vec<f64> = self.work.iter().map(|w| w / b).collect();
        if !self.opts.reorthogonalize && self.basis.len() >= 2 {
            self.basis.remove(0);
        }
        self.basis.push(next);
        Ok(true)
    }

    /// `T_m` for the steps taken so far.
    pub fn tridiagonal(&self) -> TridiagonalMatrix {
        let m = self.alpha.len();
        TridiagonalMatrix {
            alpha: self.alpha.clone(),
            beta: self.beta[..m.saturating_sub(1)].to_vec(),
        }
    }

    pub fn decomposition(&self) -> LanczosDecomposition {
        LanczosDecomposition {
            t: self.tridiagonal(),
            x_norm_sq: self.x_norm_sq,
            residual_norm: self.beta.last().copied().unwrap_or(0.0),
            breakdown: self.breakdown,
        }
    }
}

/// Output of `m` Lanczos steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanczosDecomposition {
    pub t: TridiagonalMatrix,
    pub x_norm_sq: f64,
    /// `β_m = ‖r_m‖`, the coupling to the next (unbuilt) Lanczos vector.
    pub residual_norm: f64,
    /// The Krylov space became invariant; quadrature is exact.
    pub breakdown: bool,
}

impl LanczosDecomposition {
    pub fn iterations(&self) -> usize {
        self.t.dim()
    }
}

/// Runs `m` Lanczos steps (fewer on breakdown); `m` is capped at `n`.
pub fn lanczos_tridiagonalize<O: SymmetricOperator + ?Sized>(
    op: &O,
    x: &[f64],
    m: usize,
    opts: LanczosOptions,
) -> Result<LanczosDecomposition> {
    if m == 0 {
        return Err(Error::invalid("number of Lanczos steps must be at least 1"));
    }
    let mut proc = LanczosProcess::new(op, x, opts)?;
    let m = m.min(op.dim());
    while proc.steps() < m && proc.step()? {
        if proc.is_breakdown() {
            break;
        }
    }
    Ok(proc.decomposition())
}

/// `x_norm_sq · e₁ᵀ f(T) e₁ = x_norm_sq · Σ_j f(θ_j) (e₁ᵀ s_j)²`.
pub fn evaluate_quadrature(t: &TridiagonalMatrix, x_norm_sq: f64, f: &MatrixFunction) -> Result<f64> {
    let (nodes, weights) = t.gauss_rule()?;
    let mut sum = 0.0;
    for (theta, w) in nodes.iter().zip(&weights) {
        sum += f.eval(*theta)? * w;
    }
    Ok(x_norm_sq * sum)
}

/// Gauss-Lobatto value of `xᵀ log(A) x` with nodes prescribed at both ends of
/// `interval`: a lower bound whenever the interval encloses the spectrum.
///
/// `T` is extended to `T̃ = [[T, η e_m], [η e_mᵀ, ω]]` where `ω` and `η` are
/// chosen so that `lo` and `hi` are eigenvalues of `T̃`.
pub fn lobatto_lower_bound(t: &TridiagonalMatrix, x_norm_sq: f64, interval: SpectralInterval) -> Result<f64> {
    lobatto_impl(t, x_norm_sq, interval, true)
}

fn lobatto_impl(t: &TridiagonalMatrix, x_norm_sq: f64, interval: SpectralInterval, strict: bool) -> Result<f64> {
    if !(interval.lo > 0.0) {
        return Err(Error::invalid(format!(
            "log bracket needs a positive interval, got [{}, {}]",
            interval.lo, interval.hi
        )));
    }
    let ritz = t.eigenvalues()?;
    let (theta_min, theta_max) = (ritz[0], ritz[ritz.len() - 1]);
    if strict && (!interval.contains(theta_min, 1e-8) || !interval.contains(theta_max, 1e-8)) {
        return Err(Error::invalid(format!(
            "Ritz values [{theta_min}, {theta_max}] fall outside the declared interval [{}, {}]",
            interval.lo, interval.hi
        )));
    }
    // keep the prescribed nodes strictly outside the Ritz values so both
    // shifted systems stay definite
    let lo = interval.lo.min(theta_min * (1.0 - 1e-12));
    let hi = interval.hi.max(theta_max * (1.0 + 1e-12));
    if lo <= 0.0 {
        return Err(Error::UndefinedAtRitzValue { value: lo });
    }
    if hi - lo <= 1e-14 * hi {
        // single-point spectrum
        return Ok(x_norm_sq * lo.ln());
    }
    let delta = t
        .last_entry_of_shifted_solve(lo)
        .ok_or_else(|| Error::invalid("singular system at the lower Lobatto node"))?;
    let mu = t
        .last_entry_of_shifted_solve(hi)
        .ok_or_else(|| Error::invalid("singular system at the upper Lobatto node"))?;
    let eta_sq = (hi - lo) / (delta - mu);
    let omega = lo + eta_sq * delta;
    if !(eta_sq > 0.0 && eta_sq.is_finite() && omega.is_finite()) {
        return Err(Error::invalid("Gauss-Lobatto extension is not well defined"));
    }
    let mut alpha = t.alpha.clone();
    alpha.push(omega);
    let mut beta = t.beta.clone();
    beta.push(eta_sq.sqrt());
    let ext = TridiagonalMatrix { alpha, beta };
    evaluate_quadrature(&ext, x_norm_sq, &MatrixFunction::Log)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBracket {
    pub gauss_upper: f64,
    pub lobatto_lower: f64,
}

impl LogBracket {
    /// Both ends multiplied by `w > 0`.
    pub fn scaled(&self, w: f64) -> Self {
        Self {
            gauss_upper: w * self.gauss_upper,
            lobatto_lower: w * self.lobatto_lower,
        }
    }

    pub fn width(&self) -> f64 {
        (self.gauss_upper - self.lobatto_lower).max(0.0)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.gauss_upper + self.lobatto_lower)
    }
}

/// Gauss and Gauss-Lobatto values for `f = log`; both collapse to the exact
/// value after a breakdown.
pub fn log_bracket(
    decomp: &LanczosDecomposition,
    interval: SpectralInterval,
    opts: LanczosOptions,
) -> Result<LogBracket> {
    let gauss = evaluate_quadrature(&decomp.t, decomp.x_norm_sq, &MatrixFunction::Log)?;
    let lobatto = if decomp.breakdown {
        gauss
    } else {
        lobatto_impl(&decomp.t, decomp.x_norm_sq, interval, !opts.widen_interval)?
    };
    Ok(LogBracket {
        gauss_upper: gauss,
        lobatto_lower: lobatto,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanczosResult {
    pub t: TridiagonalMatrix,
    pub x_norm_sq: f64,
    pub value: f64,
    pub bracket: Option<LogBracket>,
    pub iterations: usize,
    pub breakdown: bool,
    /// False only for adaptive runs that hit `max_m` before the bracket closed.
    pub converged: bool,
}

/// `m`-step Gauss approximation of `xᵀ f(A) x` (`m` capped at `n`).
pub fn quadratic_form<O: SymmetricOperator + ?Sized>(
    op: &O,
    x: &[f64],
    f: &MatrixFunction,
    m: usize,
    opts: LanczosOptions,
) -> Result<LanczosResult> {
    let decomp = lanczos_tridiagonalize(op, x, m, opts)?;
    let value = evaluate_quadrature(&decomp.t, decomp.x_norm_sq, f)?;
    Ok(LanczosResult {
        iterations: decomp.iterations(),
        breakdown: decomp.breakdown,
        x_norm_sq: decomp.x_norm_sq,
        t: decomp.t,
        value,
        bracket: None,
        converged: true,
    })
}

/// Adds Lanczos steps until the Gauss / Gauss-Lobatto bracket of
/// `xᵀ log(A) x` is narrower than `tol`; the value is the bracket midpoint.
pub fn approx_quadratic_form_log<O: SymmetricOperator + ?Sized>(
    op: &O,
    x: &[f64],
    tol: f64,
    max_m: usize,
    interval: SpectralInterval,
    opts: LanczosOptions,
) -> Result<LanczosResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("bracket tolerance must be positive"));
    }
    if max_m == 0 {
        return Err(Error::invalid("max_m must be at least 1"));
    }
    if !(interval.lo > 0.0) {
        return Err(Error::invalid("log quadrature needs a positive spectral interval"));
    }
    let max_m = max_m.min(op.dim());
    let mut proc = LanczosProcess::new(op, x, opts)?;
    loop {
        proc.step()?;
        let decomp = proc.decomposition();
        let bracket = log_bracket(&decomp, interval, opts)?;
        let converged = decomp.breakdown || bracket.width() < tol;
        if converged || proc.steps() >= max_m {
            return Ok(LanczosResult {
                iterations: decomp.iterations(),
                breakdown: decomp.breakdown,
                x_norm_sq: decomp.x_norm_sq,
                t: decomp.t,
                value: if decomp.breakdown {
                    bracket.gauss_upper
                } else {
                    bracket.midpoint()
                },
                bracket: Some(bracket),
                converged,
            });
        }
    }
}

/// Extreme Ritz values after `steps` Lanczos steps from a seeded Gaussian
/// start, widened by [`INTERVAL_DEFLATION`] / [`INTERVAL_INFLATION`].
///
/// Ritz values lie inside the spectrum, so the widening is a heuristic: the
/// result is not a guaranteed enclosure.
pub fn estimate_spectral_interval<O: SymmetricOperator + ?Sized>(
    op: &O,
    steps: usize,
    seed: u64,
) -> Result<SpectralInterval> {
    let x = ProbeStream::new(ProbeKind::Gaussian, op.dim(), seed)?.probe(0);
    let decomp = lanczos_tridiagonalize(op, &x, steps.max(1), LanczosOptions::default())?;
    let ritz = decomp.t.eigenvalues()?;
    let (lo, hi) = (ritz[0], ritz[ritz.len() - 1]);
    SpectralInterval::new(
        lo - (1.0 - INTERVAL_DEFLATION) * lo.abs(),
        hi + (INTERVAL_INFLATION - 1.0) * hi.abs(),
    )
}

/// The operator's declared interval, or an estimate from
/// [`INTERVAL_ESTIMATION_STEPS`] Lanczos steps.
pub fn resolve_interval<O: SymmetricOperator + ?Sized>(op: &O, seed: u64) -> Result<(SpectralInterval, bool)> {
    match op.spectral_interval() {
        Some(iv) => Ok((iv, true)),
        None => Ok((estimate_spectral_interval(op, INTERVAL_ESTIMATION_STEPS, seed)?, false)),
    }
}

/// Converged extreme eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremeEigenvalues {
    pub min: f64,
    pub max: f64,
    /// Largest relative Ritz residual `β_m |s_{m,j}| / max|θ|` of the two.
    pub residual: f64,
    pub steps: usize,
}

/// Iterates Lanczos until both extreme Ritz pairs have relative residual at
/// most `rel_tol`, or fails with the achieved residual after `max_steps`.
pub fn extreme_eigenvalues<O: SymmetricOperator + ?Sized>(
    op: &O,
    max_steps: usize,
    rel_tol: f64,
    seed: u64,
) -> Result<ExtremeEigenvalues> {
    let n = op.dim();
    let x = ProbeStream::new(ProbeKind::Gaussian, n, seed)?.probe(0);
    let mut proc = LanczosProcess::new(op, &x, LanczosOptions::default())?;
    let max_steps = max_steps.clamp(1, n);
    loop {
        proc.step()?;
        let m = proc.steps();
        if proc.is_breakdown() || m >= max_steps || m % 4 == 0 {
            let d = proc.decomposition();
            let eig = tridiagonal_eigen(&d.t.alpha, &d.t.beta, &[m - 1])?;
            let (lo, hi) = (eig.values[0], eig.values[m - 1]);
            let scale = lo.abs().max(hi.abs());
            let res = if d.breakdown || scale == 0.0 {
                0.0
            } else {
                let r_lo = d.residual_norm * eig.rows[0][0].abs();
                let r_hi = d.residual_norm * eig.rows[0][m - 1].abs();
                r_lo.max(r_hi) / scale
            };
            if res <= rel_tol || d.breakdown {
                return Ok(ExtremeEigenvalues {
                    min: lo,
                    max: hi,
                    residual: res,
                    steps: m,
                });
            }
            if m >= max_steps {
                return Err(Error::NormNotConverged { residual: res });
            }
        }
    }
}
