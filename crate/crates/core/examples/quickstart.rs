//! Certified trace and log-determinant estimates for a sparse SPD matrix.

use trace_sketch::bounds::{rademacher_sample_plan, NormData, NormSource};
use trace_sketch::estimator::{estimate_trace, QuadraticFormEvaluator};
use trace_sketch::logdet::{estimate_logdet, log_norms_dense, plan_for};
use trace_sketch::operator::{exact_norms, random_sparse_spd};
use trace_sketch::oracle::{cholesky_logdet, DenseSymmetric};
use trace_sketch::{ProbeKind, ProbeStream};

fn main() -> trace_sketch::Result<()> {
    let a = random_sparse_spd(300, 4, 0.6, 12)?;
    let n = a.dim();

    // tr(A) to within 0.5 with probability 0.99.
    let norms = NormData::from_operator_norms(n, &exact_norms(&a)?, NormSource::Exact)?;
    let plan = rademacher_sample_plan(&norms, 0.5, 0.01)?;
    let probes = ProbeStream::new(ProbeKind::Rademacher, n, 7)?;
    let report = estimate_trace(&a, &probes, plan.n_samples as usize, &QuadraticFormEvaluator::exact())?
        .with_envelope(&norms, 0.01)?;
    println!(
        "trace  ≈ {:.4} (N = {}, exact {:.4})",
        report.estimate,
        plan.n_samples,
        norms.trace.unwrap()
    );

    // log det(A) to within 1 with probability 0.95.
    let dense = DenseSymmetric::from_sparse(&a)?;
    let log_norms = log_norms_dense(&dense)?;
    let plan = plan_for(ProbeKind::Rademacher, log_norms.kappa, Some(&log_norms), n, 1.0, 0.05)?;
    let run = estimate_logdet(&a, &probes, &plan)?;
    println!(
        "logdet ≈ {:.4} (N = {}, m = {}, exact {:.4})",
        run.estimate,
        plan.n_samples,
        plan.m.unwrap(),
        cholesky_logdet(&dense)?
    );
    Ok(())
}
