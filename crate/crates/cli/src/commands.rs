use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use trace_sketch::bounds::{
    comparison_bounds, gaussian_sample_plan, plan_ceil, rademacher_sample_plan, spsd_relative_plans, NormData,
    NormSource, PlanResult,
};
use trace_sketch::estimator::{estimate_trace, EstimateReport, QuadraticFormEvaluator};
use trace_sketch::experiment::{
    logdet_sweep, plan_comparison, tightness_envelope_sweep, tightness_lower_curve, tightness_tail_curve,
    trace_error_curve, Cell, Tabular,
};
use trace_sketch::lanczos::{extreme_eigenvalues, resolve_interval, LanczosOptions};
use trace_sketch::logdet::{
    estimate_logdet, estimate_logdet_adaptive, estimate_logdet_fixed, log_norms_dense, plan_for, AdaptiveOptions,
    LogDetRun, LogNorms, DEFAULT_MAX_STEPS,
};
use trace_sketch::operator::{operator_norms, PolynomialOfOperator};
use trace_sketch::oracle::{cholesky_logdet, operator_trace};
use trace_sketch::{MatrixFunction, ProbeKind, ProbeStream, SymmetricOperator};

use crate::args::{ExperimentArgs, ExperimentKind, Format, LogdetArgs, PlanArgs, TraceArgs};
use crate::output::{emit, float, int, text, Report, Table};
use crate::source::{self, Matrix};

/// Largest dimension for which `plan` derives nuclear norm and rank from a
/// dense eigendecomposition.
const NUCLEAR_DENSE_LIMIT: usize = 2000;
/// Lanczos steps allowed when estimating extreme eigenvalues.
const EIGEN_MAX_STEPS: usize = 1000;
const EIGEN_REL_TOL: f64 = 1e-8;
/// Exit status when a report was written but a bound's side condition failed.
pub const EXIT_INVALID_CERTIFICATE: u8 = 3;

pub struct RunContext {
    pub seed: u64,
    pub format: Option<Format>,
    pub output: Option<PathBuf>,
}

impl RunContext {
    fn format(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    fn out(&self) -> Option<&std::path::Path> {
        self.output.as_deref()
    }
}

fn parse_function(s: &str) -> Result<MatrixFunction> {
    Ok(s.parse::<MatrixFunction>()?)
}

fn parse_kind(s: &str) -> Result<ProbeKind> {
    Ok(s.parse::<ProbeKind>()?)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| anyhow::anyhow!("cannot parse {what} entry '{v}'"))
        })
        .collect()
}

/// `f(A)` as an operator when `f` is the identity or a power.
fn polynomial_operator(
    op: &Arc<dyn SymmetricOperator>,
    f: &MatrixFunction,
) -> Result<Option<Arc<dyn SymmetricOperator>>> {
    Ok(match f {
        MatrixFunction::Identity | MatrixFunction::Power(1) => Some(op.clone()),
        MatrixFunction::Power(0) => bail!("power0 is the identity matrix; use the dimension directly"),
        MatrixFunction::Power(k) => Some(Arc::new(PolynomialOfOperator::new(op.clone(), *k)?)),
        _ => None,
    })
}

fn absolute_plan(kind: ProbeKind, norms: &NormData, eps: f64, delta: f64) -> Result<PlanResult> {
    Ok(match kind {
        ProbeKind::Gaussian => gaussian_sample_plan(norms, eps, delta)?,
        ProbeKind::Rademacher => rademacher_sample_plan(norms, eps, delta)?,
        ProbeKind::UnitBasis => bail!("unit-basis probing is exact with N = n; pass --N instead of --epsilon/--delta"),
    })
}

#[derive(Serialize)]
struct TraceBody<'a> {
    source: &'a str,
    function: String,
    plan: Option<PlanResult>,
    norms: Option<NormData>,
    report: EstimateReport,
}

pub fn trace(ctx: &RunContext, a: &TraceArgs) -> Result<ExitCode> {
    let matrix = source::require(&a.source, ctx.seed)?;
    let f = parse_function(&a.function)?;
    let kind = parse_kind(&a.probes)?;
    let n = matrix.dim();
    let probes = ProbeStream::new(kind, n, ctx.seed)?;

    let (b, eval): (Arc<dyn SymmetricOperator>, QuadraticFormEvaluator) = match polynomial_operator(&matrix.op, &f)? {
        Some(b) => (b, QuadraticFormEvaluator::exact()),
        None => {
            if a.epsilon.is_some() {
                bail!("(epsilon, delta) planning needs a polynomial f; use the logdet command for log");
            }
            let eval = match (&f, a.m) {
                (_, Some(m)) => QuadraticFormEvaluator::lanczos(f.clone(), m),
                (MatrixFunction::Log, None) => {
                    let (interval, declared) = resolve_interval(matrix.op.as_ref(), ctx.seed)?;
                    QuadraticFormEvaluator::AdaptiveLog {
                        tol: a.tol,
                        max_steps: DEFAULT_MAX_STEPS,
                        interval,
                        opts: LanczosOptions {
                            widen_interval: !declared,
                            ..LanczosOptions::default()
                        },
                    }
                }
                _ => bail!("--m is required for f = {}", f.name()),
            };
            (matrix.op.clone(), eval)
        }
    };

    let (plan, norms) = match (a.epsilon, a.delta) {
        (Some(eps), Some(delta)) => {
            let norms = NormData::from_operator_norms(n, &operator_norms(b.as_ref())?, NormSource::Exact)?;
            (Some(absolute_plan(kind, &norms, eps, delta)?), Some(norms))
        }
        _ => (None, None),
    };
    let n_samples = match (plan, a.n_samples) {
        (Some(p), _) => usize::try_from(p.n_samples).context("planned sample count does not fit in memory")?,
        (None, Some(ns)) => ns,
        (None, None) => bail!("give --N or both --epsilon and --delta"),
    };
    let mut report = estimate_trace(b.as_ref(), &probes, n_samples, &eval)?;
    if let (Some(nd), Some(delta)) = (&norms, a.delta) {
        report = report.with_envelope(nd, delta)?;
    }

    let mut formula_ids: Vec<String> = plan.iter().map(PlanResult::formula_label).collect();
    if let Some(env) = &report.envelope {
        let id = env.formula.as_str().to_string();
        if !formula_ids.contains(&id) {
            formula_ids.push(id);
        }
    }
    let mut table = Table::new(&[
        "estimate",
        "n_samples",
        "probe_kind",
        "seed",
        "dim",
        "standard_error",
        "envelope_epsilon",
        "envelope_delta",
        "formula",
    ]);
    let env = report.envelope;
    table.push(vec![
        float(report.estimate),
        int(report.n_samples),
        text(kind.name()),
        text(report.seed.to_string()),
        int(report.dim),
        float(report.standard_error),
        float(env.map_or(f64::NAN, |e| e.epsilon)),
        float(env.map_or(f64::NAN, |e| e.delta)),
        text(env.map_or(String::new(), |e| e.formula.as_str().to_string())),
    ]);
    let body = TraceBody {
        source: &matrix.description,
        function: f.name(),
        plan,
        norms,
        report,
    };
    emit(
        ctx.format(Format::Json),
        &Report::new("trace", ctx.seed, formula_ids, body),
        &table,
        ctx.out(),
    )?;
    Ok(ExitCode::SUCCESS)
}

/// One line of the `plan` report.
#[derive(Debug, Clone, Serialize)]
struct PlanRow {
    formula: String,
    n_samples: u64,
    m: Option<usize>,
    raw_n: f64,
    valid: bool,
    surrogate: bool,
    estimated_norms: bool,
    /// Failure probability of the formula at `n_samples`, where reported.
    tail: Option<f64>,
}

impl PlanRow {
    fn from_plan(p: &PlanResult) -> Self {
        Self {
            formula: p.formula.as_str().to_string(),
            n_samples: p.n_samples,
            m: p.m,
            raw_n: p.raw_n,
            valid: p.valid,
            surrogate: p.surrogate,
            estimated_norms: p.estimated_norms,
            tail: None,
        }
    }

    fn comparison(formula: &str, raw: f64) -> Self {
        Self {
            formula: formula.to_string(),
            n_samples: plan_ceil(raw),
            m: None,
            raw_n: raw,
            valid: true,
            surrogate: false,
            estimated_norms: false,
            tail: None,
        }
    }
}

impl Tabular for PlanRow {
    fn columns() -> &'static [&'static str] {
        &[
            "formula",
            "n_samples",
            "m",
            "raw_n",
            "valid",
            "surrogate",
            "estimated_norms",
            "tail",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            text(self.formula.clone()),
            int(self.n_samples),
            self.m.map_or(text(""), int),
            float(self.raw_n),
            int(self.valid as i64),
            int(self.surrogate as i64),
            int(self.estimated_norms as i64),
            self.tail.map_or(text(""), float),
        ]
    }
}

#[derive(Serialize)]
struct PlanBody<'a> {
    source: &'a str,
    function: String,
    epsilon: f64,
    delta: f64,
    norms: Option<NormData>,
    log_norms: Option<LogNorms>,
    plans: Vec<PlanRow>,
}

fn supplied_norms(a: &PlanArgs) -> Result<NormData> {
    let (Some(n), Some(fro), Some(spec)) = (a.dim, a.frobenius, a.spectral) else {
        bail!("without --matrix/--generator, --dim, --frobenius and --spectral are required");
    };
    let mut nd = NormData::new(n, fro, spec)?.with_source(NormSource::Supplied);
    match (a.offdiag_frobenius, a.offdiag_spectral) {
        (Some(f), Some(s)) => nd = nd.with_offdiag(f, s)?,
        (None, None) => {}
        _ => bail!("--offdiag-frobenius and --offdiag-spectral go together"),
    }
    if let Some(t) = a.trace {
        nd = nd.with_trace(t)?;
    }
    Ok(nd)
}

/// Nuclear norm and numerical rank of `A^k` from the eigenvalues of `A`.
fn nuclear_and_rank(matrix: &Matrix, power: u32) -> Result<(f64, usize)> {
    let eig = matrix.to_dense()?.eigenvalues()?;
    let vals: Vec<f64> = eig.iter().map(|l| l.powi(power as i32).abs()).collect();
    let max = vals.iter().cloned().fold(0.0, f64::max);
    let rank = vals.iter().filter(|&&v| v > 1e-12 * max).count();
    Ok((vals.iter().sum(), rank))
}

pub fn plan(ctx: &RunContext, a: &PlanArgs) -> Result<ExitCode> {
    let f = parse_function(&a.function)?;
    let matrix = source::load(&a.source, ctx.seed)?;
    let description = matrix
        .as_ref()
        .map_or("supplied norms".to_string(), |m| m.description.clone());
    let (eps, delta) = (a.epsilon, a.delta);
    let mut rows = Vec::new();
    let mut norms_out = None;
    let mut log_out = None;

    match &f {
        MatrixFunction::Log => {
            let (n, kappa, log_norms) = match &matrix {
                Some(m) if a.kappa.is_none() => {
                    let l = log_norms_dense(&m.to_dense()?)?;
                    (m.dim(), l.kappa, Some(l))
                }
                Some(m) => (m.dim(), a.kappa.unwrap_or(1.0), None),
                None => {
                    let (Some(n), Some(kappa)) = (a.dim, a.kappa) else {
                        bail!("log plans without a matrix need --dim and --kappa");
                    };
                    (n, kappa, None)
                }
            };
            if let Some(l) = &log_norms {
                rows.push(PlanRow::from_plan(&plan_for(
                    ProbeKind::Gaussian,
                    kappa,
                    Some(l),
                    n,
                    eps,
                    delta,
                )?));
                rows.push(PlanRow::from_plan(&plan_for(
                    ProbeKind::Rademacher,
                    kappa,
                    Some(l),
                    n,
                    eps,
                    delta,
                )?));
            } else if let (Some(fro), Some(spec)) = (a.frobenius, a.spectral) {
                let g = trace_sketch::bounds::logdet_plan_gaussian(kappa, spec, fro, n, eps, delta)?;
                rows.push(PlanRow::from_plan(&g));
                if let (Some(of), Some(os)) = (a.offdiag_frobenius, a.offdiag_spectral) {
                    let r = trace_sketch::bounds::logdet_plan_rademacher(kappa, os, of, n, eps, delta)?;
                    rows.push(PlanRow::from_plan(&r));
                }
            }
            rows.push(PlanRow::from_plan(&plan_for(
                ProbeKind::Rademacher,
                kappa,
                None,
                n,
                eps,
                delta,
            )?));
            log_out = log_norms;
        }
        _ => {
            let (norms, matrix_power) = match &matrix {
                Some(m) => {
                    let Some(b) = polynomial_operator(&m.op, &f)? else {
                        bail!("plan supports identity, powers and log, got {}", f.name());
                    };
                    let power = match f {
                        MatrixFunction::Power(k) => k,
                        _ => 1,
                    };
                    let on = operator_norms(b.as_ref())?;
                    (
                        NormData::from_operator_norms(m.dim(), &on, NormSource::Exact)?,
                        Some((m, power)),
                    )
                }
                None => (supplied_norms(a)?, None),
            };
            rows.push(PlanRow::from_plan(&gaussian_sample_plan(&norms, eps, delta)?));
            rows.push(PlanRow::from_plan(&rademacher_sample_plan(&norms, eps, delta)?));
            if norms.trace.is_some_and(|t| t > 0.0) {
                let spsd = spsd_relative_plans(&norms, eps, delta)?;
                rows.push(PlanRow::from_plan(&spsd.gaussian));
                rows.push(PlanRow::from_plan(&spsd.rademacher));
            }
            let nuclear = match (a.nuclear, a.rank, matrix_power) {
                (Some(nu), Some(r), _) => Some((nu, r)),
                (None, None, Some((m, power))) if m.dim() <= NUCLEAR_DENSE_LIMIT => Some(nuclear_and_rank(m, power)?),
                _ => None,
            };
            if let Some((nu, rank)) = nuclear {
                let cmp = comparison_bounds(&norms, nu, rank, eps, delta)?;
                rows.push(PlanRow::comparison("nuclear_gaussian", cmp.nuclear_gaussian_n));
                rows.push(PlanRow::comparison("nuclear_rademacher", cmp.nuclear_rademacher_n));
                let mut b = PlanRow::comparison("bernstein", cmp.bernstein_n_samples as f64);
                b.tail = Some(cmp.bernstein_tail);
                rows.push(b);
            }
            norms_out = Some(norms);
        }
    }

    let formula_ids = rows.iter().map(|r| r.formula.clone()).collect();
    let table = Table::from_rows(&rows);
    let body = PlanBody {
        source: &description,
        function: f.name(),
        epsilon: eps,
        delta,
        norms: norms_out,
        log_norms: log_out,
        plans: rows,
    };
    emit(
        ctx.format(Format::Json),
        &Report::new("plan", ctx.seed, formula_ids, body),
        &table,
        ctx.out(),
    )?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct LogdetBody<'a> {
    source: &'a str,
    log_norms: Option<LogNorms>,
    plan: Option<PlanResult>,
    oracle: Option<f64>,
    abs_error: Option<f64>,
    run: LogDetRun,
}

pub fn logdet(ctx: &RunContext, a: &LogdetArgs) -> Result<ExitCode> {
    let matrix = source::require(&a.source, ctx.seed)?;
    let kind = parse_kind(&a.probes)?;
    let n = matrix.dim();
    let probes = ProbeStream::new(kind, n, ctx.seed)?;
    let mut log_norms = None;
    let mut plan = None;

    let run = match (a.n_samples, a.m, a.epsilon, a.delta) {
        (Some(ns), Some(m), _, _) => estimate_logdet_fixed(matrix.op.as_ref(), &probes, ns, m)?,
        (_, _, Some(eps), Some(delta)) if a.adaptive => {
            let mut opts = AdaptiveOptions::new(eps, delta, a.max_n);
            if let Some(s) = a.max_steps {
                opts.max_steps = s;
            }
            estimate_logdet_adaptive(matrix.op.as_ref(), kind, ctx.seed, &opts)?
        }
        (_, _, Some(eps), Some(delta)) => {
            let p = match a.kappa {
                Some(kappa) => plan_for(kind, kappa, None, n, eps, delta)?,
                None if matrix.dense_feasible() => {
                    let l = log_norms_dense(&matrix.to_dense()?)?;
                    log_norms = Some(l);
                    plan_for(kind, l.kappa, Some(&l), n, eps, delta)?
                }
                None => {
                    let kappa = match matrix.op.spectral_interval() {
                        Some(iv) => iv.condition_number().context("declared interval is not positive")?,
                        None => {
                            let ext =
                                extreme_eigenvalues(matrix.op.as_ref(), EIGEN_MAX_STEPS, EIGEN_REL_TOL, ctx.seed)?;
                            if !(ext.min > 0.0) {
                                bail!("matrix is not positive definite (smallest Ritz value {})", ext.min);
                            }
                            ext.max / ext.min
                        }
                    };
                    let mut p = plan_for(kind, kappa, None, n, eps, delta)?;
                    p.estimated_norms = matrix.op.spectral_interval().is_none();
                    p
                }
            };
            plan = Some(p);
            estimate_logdet(matrix.op.as_ref(), &probes, &p)?
        }
        _ => bail!("give --N with --m, or --epsilon with --delta"),
    };

    let oracle = if a.oracle {
        if !matrix.dense_feasible() {
            bail!("--oracle needs a dense factorization; dimension {n} is too large");
        }
        Some(cholesky_logdet(&matrix.to_dense()?)?)
    } else {
        None
    };
    let abs_error = oracle.map(|o| (run.estimate - o).abs());
    let certificate = run.certificate;
    let formula_ids = plan.iter().map(PlanResult::formula_label).collect();

    let mut table = Table::new(&[
        "estimate",
        "n_samples",
        "lanczos_steps",
        "probe_kind",
        "seed",
        "dim",
        "epsilon",
        "delta",
        "formula",
        "valid",
        "oracle",
    ]);
    table.push(vec![
        float(run.estimate),
        int(run.n_samples),
        int(run.lanczos_steps),
        text(kind.name()),
        text(run.seed.to_string()),
        int(run.dim),
        float(certificate.map_or(f64::NAN, |c| c.epsilon)),
        float(certificate.map_or(f64::NAN, |c| c.delta)),
        text(certificate.map_or(String::new(), |c| c.formula.as_str().to_string())),
        int(certificate.is_none_or(|c| c.valid) as i64),
        float(oracle.unwrap_or(f64::NAN)),
    ]);
    let body = LogdetBody {
        source: &matrix.description,
        log_norms,
        plan,
        oracle,
        abs_error,
        run,
    };
    emit(
        ctx.format(Format::Json),
        &Report::new("logdet", ctx.seed, formula_ids, body),
        &table,
        ctx.out(),
    )?;
    if certificate.is_some_and(|c| !c.valid) {
        eprintln!(
            "{}",
            serde_json::json!({"warning": {"kind": "invalid_certificate", "message": "a side condition of the planning bound does not hold; the (epsilon, delta) statement is void"}})
        );
        return Ok(ExitCode::from(EXIT_INVALID_CERTIFICATE));
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ExperimentBody {
    experiment: &'static str,
    columns: Vec<String>,
    rows: Vec<serde_json::Map<String, serde_json::Value>>,
}

fn kind_name(k: ExperimentKind) -> &'static str {
    match k {
        ExperimentKind::Envelope => "envelope",
        ExperimentKind::Tail => "tail",
        ExperimentKind::Lower => "lower",
        ExperimentKind::Error => "error",
        ExperimentKind::Logdet => "logdet",
        ExperimentKind::Plans => "plans",
    }
}

pub fn experiment(ctx: &RunContext, a: &ExperimentArgs) -> Result<ExitCode> {
    let kinds: Vec<ProbeKind> = a
        .probes
        .split(',')
        .map(|s| parse_kind(s.trim()))
        .collect::<Result<_>>()?;
    let dims: Vec<usize> = parse_list(&a.dims, "--dims")?;
    let epsilons: Vec<f64> = parse_list(&a.epsilons, "--epsilons")?;
    let seed = ctx.seed;
    let tag = |k: ProbeKind| vec![text(k.name())];
    let mut formula_ids = Vec::new();

    let table = match a.kind {
        ExperimentKind::Envelope => {
            let mut blocks = Vec::new();
            for &k in &kinds {
                formula_ids.push(envelope_formula(k));
                blocks.push((
                    tag(k),
                    tightness_envelope_sweep(k, &dims, a.trials, a.n_samples, a.delta, seed)?,
                ));
            }
            Table::tagged(&["probe_kind"], &blocks)
        }
        ExperimentKind::Tail => {
            let mut blocks = Vec::new();
            for &k in &kinds {
                formula_ids.push(envelope_formula(k));
                for &n in &dims {
                    let rows = tightness_tail_curve(k, n, a.n_samples, a.trials, &epsilons, seed)?;
                    blocks.push((vec![text(k.name()), int(n)], rows));
                }
            }
            Table::tagged(&["probe_kind", "n"], &blocks)
        }
        ExperimentKind::Lower => {
            let mut blocks = Vec::new();
            for &k in &kinds {
                for &n in &dims {
                    let rows = tightness_lower_curve(k, n, a.n_samples, a.trials, &epsilons, seed)?;
                    blocks.push((vec![text(k.name()), int(n)], rows));
                }
            }
            Table::tagged(&["probe_kind", "n"], &blocks)
        }
        ExperimentKind::Error => {
            let matrix = source::require(&a.source, seed)?;
            let counts: Vec<usize> = parse_list(&a.counts, "--counts")?;
            let truth = operator_trace(matrix.op.as_ref());
            let mut blocks = Vec::new();
            for &k in &kinds {
                blocks.push((
                    tag(k),
                    trace_error_curve(matrix.op.as_ref(), truth, k, &counts, a.trials, seed)?,
                ));
            }
            Table::tagged(&["probe_kind"], &blocks)
        }
        ExperimentKind::Logdet => {
            let matrix = source::require(&a.source, seed)?;
            let truth = cholesky_logdet(&matrix.to_dense()?)?;
            let eps = *epsilons.first().context("--epsilons is empty")?;
            let opts = AdaptiveOptions::new(eps, a.delta, a.max_n);
            let mut blocks = Vec::new();
            for &k in &kinds {
                blocks.push((
                    tag(k),
                    logdet_sweep(matrix.op.as_ref(), truth, k, &opts, a.trials, seed)?,
                ));
            }
            Table::tagged(&["probe_kind"], &blocks)
        }
        ExperimentKind::Plans => {
            let eps = *epsilons.first().context("--epsilons is empty")?;
            formula_ids = vec!["gaussian_absolute".into(), "nuclear_gaussian".into()];
            Table::from_rows(&plan_comparison(&dims, eps, a.delta)?)
        }
    };
    formula_ids.dedup();
    let body = ExperimentBody {
        experiment: kind_name(a.kind),
        columns: table.header.clone(),
        rows: table.to_json(),
    };
    emit(
        ctx.format(Format::Csv),
        &Report::new("experiment", seed, formula_ids, body),
        &table,
        ctx.out(),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn envelope_formula(k: ProbeKind) -> String {
    match k {
        ProbeKind::Rademacher => "rademacher_absolute",
        _ => "gaussian_absolute",
    }
    .to_string()
}
