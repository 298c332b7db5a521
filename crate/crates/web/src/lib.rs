//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function returns a JSON string. The `*_data` functions hold
//! the logic and are callable natively.

use serde::Serialize;
use trace_sketch::experiment::{tightness_envelope_sweep, tightness_tail_curve, EnvelopeRow, TailRow};
use trace_sketch::lanczos::{lanczos_tridiagonalize, log_bracket, log_lanczos_bound, LanczosOptions};
use trace_sketch::oracle::{quadratic_form_f, random_spd};
use trace_sketch::{Error, MatrixFunction, ProbeKind, ProbeStream, Result, SymmetricOperator};
use wasm_bindgen::prelude::*;

/// Largest dimension accepted by the demo.
pub const MAX_DIM: usize = 4096;
/// Largest number of Monte Carlo trials per point.
pub const MAX_TRIALS: usize = 20_000;

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

fn probe_kind(name: &str) -> Result<ProbeKind> {
    match name {
        "gaussian" => Ok(ProbeKind::Gaussian),
        "rademacher" => Ok(ProbeKind::Rademacher),
        other => Err(invalid(format!("unknown probe kind '{other}'"))),
    }
}

fn check(name: &str, value: usize, max: usize) -> Result<()> {
    if value == 0 || value > max {
        return Err(invalid(format!("{name} must be in 1..={max}, got {value}")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct EnvelopeData {
    pub probe_kind: &'static str,
    pub n_samples: usize,
    pub delta: f64,
    pub rows: Vec<EnvelopeRow>,
    /// Per dimension, the fraction of trials above the envelope.
    pub violations: Vec<(usize, f64)>,
}

/// `|tr_N(B)|` against the envelope for tightness matrices of size `4^k`,
/// `k = 1..=max_power`.
pub fn envelope_data(
    kind: &str,
    max_power: u32,
    n_samples: usize,
    trials: usize,
    delta: f64,
    seed: u64,
) -> Result<EnvelopeData> {
    let kind = probe_kind(kind)?;
    let dims: Vec<usize> = (1..=max_power).map(|k| 4usize.pow(k)).collect();
    check("largest dimension", dims.last().copied().unwrap_or(0), MAX_DIM)?;
    check("trials", trials, MAX_TRIALS)?;
    let rows = tightness_envelope_sweep(kind, &dims, trials, n_samples, delta, seed)?;
    let violations = dims
        .iter()
        .map(|&n| {
            let over = rows.iter().filter(|r| r.n == n && r.abs_error > r.envelope).count();
            (n, over as f64 / trials as f64)
        })
        .collect();
    Ok(EnvelopeData {
        probe_kind: kind.name(),
        n_samples,
        delta,
        rows,
        violations,
    })
}

#[derive(Debug, Serialize)]
pub struct TailData {
    pub probe_kind: &'static str,
    pub n: usize,
    pub n_samples: usize,
    pub rows: Vec<TailRow>,
}

/// Failure frequency on the tightness matrix of size `n` against the tail
/// bound, at `points` evenly spaced tolerances up to `max_epsilon`.
pub fn tail_data(
    kind: &str,
    n: usize,
    n_samples: usize,
    trials: usize,
    max_epsilon: f64,
    points: usize,
    seed: u64,
) -> Result<TailData> {
    let kind = probe_kind(kind)?;
    check("dimension", n, MAX_DIM)?;
    check("trials", trials, MAX_TRIALS)?;
    check("points", points, 200)?;
    if !(max_epsilon > 0.0 && max_epsilon.is_finite()) {
        return Err(invalid(format!("max epsilon must be positive, got {max_epsilon}")));
    }
    let eps: Vec<f64> = (1..=points).map(|i| max_epsilon * i as f64 / points as f64).collect();
    let rows = tightness_tail_curve(kind, n, n_samples, trials, &eps, seed)?;
    Ok(TailData {
        probe_kind: kind.name(),
        n,
        n_samples,
        rows,
    })
}

#[derive(Debug, Serialize)]
pub struct BracketStep {
    pub m: usize,
    pub gauss_upper: f64,
    pub lobatto_lower: f64,
    /// A-priori error bound for `m` steps.
    pub a_priori: f64,
}

#[derive(Debug, Serialize)]
pub struct BracketData {
    pub n: usize,
    pub kappa: f64,
    pub exact: f64,
    pub steps: Vec<BracketStep>,
}

/// Gauss and Gauss-Lobatto values of `xᵀ log(A) x` for `m = 1..=max_steps` on
/// a random SPD matrix with condition number `kappa` and a Rademacher `x`.
pub fn bracket_data(n: usize, kappa: f64, max_steps: usize, seed: u64) -> Result<BracketData> {
    check("dimension", n, 400)?;
    check("steps", max_steps, n)?;
    let a = random_spd(n, kappa, seed)?;
    let interval = a
        .spectral_interval()
        .ok_or_else(|| invalid("generated matrix has no interval"))?;
    let x = ProbeStream::new(ProbeKind::Rademacher, n, seed)?.probe(0);
    let exact = quadratic_form_f(&a, &x, &MatrixFunction::Log)?;
    let opts = LanczosOptions::default();
    let mut steps = Vec::with_capacity(max_steps);
    for m in 1..=max_steps {
        let decomp = lanczos_tridiagonalize(&a, &x, m, opts)?;
        let b = log_bracket(&decomp, interval, opts)?;
        steps.push(BracketStep {
            m,
            gauss_upper: b.gauss_upper,
            lobatto_lower: b.lobatto_lower,
            a_priori: log_lanczos_bound(kappa, decomp.x_norm_sq, m)?,
        });
        if decomp.breakdown {
            break;
        }
    }
    Ok(BracketData { n, kappa, exact, steps })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = envelopeCurve)]
pub fn envelope_curve(
    kind: &str,
    max_power: u32,
    n_samples: usize,
    trials: usize,
    delta: f64,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(envelope_data(kind, max_power, n_samples, trials, delta, seed.into()))
}

#[wasm_bindgen(js_name = tailCurve)]
pub fn tail_curve(
    kind: &str,
    n: usize,
    n_samples: usize,
    trials: usize,
    max_epsilon: f64,
    points: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    to_js(tail_data(kind, n, n_samples, trials, max_epsilon, points, seed.into()))
}

#[wasm_bindgen(js_name = lanczosBracket)]
pub fn lanczos_bracket(n: usize, kappa: f64, max_steps: usize, seed: u32) -> std::result::Result<String, JsError> {
    to_js(bracket_data(n, kappa, max_steps, seed.into()))
}
