use super::*;
use crate::bounds::logdet_plan_simplified;
use crate::operator::{DiagonalOperator, ScaledIdentity};
use crate::oracle::{cholesky_logdet, random_spd};

fn fixed_plan(n_samples: u64, m: usize) -> PlanResult {
    let mut plan = logdet_plan_simplified(2.0, 10, 1.0, 0.1).unwrap();
    plan.n_samples = n_samples;
    plan.m = Some(m);
    plan
}

#[test]
fn constant_spectrum_exact_at_one_step() {
    let e = std::f64::consts::E;
    let op = DiagonalOperator { d: vec![e, e] };
    let probes = ProbeStream::new(ProbeKind::Rademacher, 2, 3).unwrap();
    let run = estimate_logdet(&op, &probes, &fixed_plan(5, 1)).unwrap();
    assert!((run.estimate - 2.0).abs() < 1e-14);
    assert!((run.raw_sum - 10.0).abs() < 1e-13);
    assert_eq!(run.lanczos_steps, 1);

    let id = ScaledIdentity::identity(7);
    let probes = ProbeStream::new(ProbeKind::Gaussian, 7, 3).unwrap();
    let run = estimate_logdet(&id, &probes, &fixed_plan(4, 3)).unwrap();
    assert!(run.estimate.abs() < 1e-13);
}

#[test]
fn steps_capped_at_dimension() {
    let a = random_spd(8, 10.0, 1).unwrap();
    let probes = ProbeStream::new(ProbeKind::Rademacher, 8, 3).unwrap();
    let run = estimate_logdet(&a, &probes, &fixed_plan(3, 50)).unwrap();
    assert_eq!(run.lanczos_steps, 8);
    assert!(run.per_probe.iter().all(|p| p.iterations <= 8));
}

#[test]
fn non_spd_reports_ritz_value() {
    let op = DiagonalOperator { d: vec![1.0, -2.0] };
    let probes = ProbeStream::new(ProbeKind::UnitBasis, 2, 0).unwrap();
    let err = estimate_logdet(&op, &probes, &fixed_plan(2, 1)).unwrap_err();
    match err {
        Error::Probe { index: 1, source } => {
            assert!(matches!(*source, Error::UndefinedAtRitzValue { value } if value == -2.0))
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn deterministic_per_seed() {
    let a = random_spd(30, 50.0, 2).unwrap();
    let probes = ProbeStream::new(ProbeKind::Gaussian, 30, 17).unwrap();
    let r1 = estimate_logdet(&a, &probes, &fixed_plan(6, 10)).unwrap();
    let r2 = estimate_logdet(&a, &probes, &fixed_plan(6, 10)).unwrap();
    assert_eq!(r1.per_probe, r2.per_probe);
    assert_eq!(r1.estimate.to_bits(), r2.estimate.to_bits());
}

#[test]
fn adaptive_constant_matrix_stops_immediately() {
    let op = ScaledIdentity { n: 9, c: 3.0 };
    let run = estimate_logdet_adaptive(&op, ProbeKind::Rademacher, 1, &AdaptiveOptions::new(0.1, 0.1, 64)).unwrap();
    let diag = run.diagnostics.unwrap();
    assert!(diag.converged);
    assert_eq!(diag.rounds.len(), 1);
    assert_eq!(diag.rounds[0].half_size, 1);
    assert_eq!(run.lanczos_steps, 1);
    assert!((run.estimate - 9.0 * 3f64.ln()).abs() < 1e-12);
}

#[test]
fn adaptive_values_within_brackets() {
    let a = random_spd(60, 100.0, 5).unwrap();
    let truth = cholesky_logdet(&a).unwrap();
    let run = estimate_logdet_adaptive(&a, ProbeKind::Rademacher, 2, &AdaptiveOptions::new(1.0, 0.1, 4096)).unwrap();
    for p in &run.per_probe {
        let b = p.bracket.unwrap();
        assert!(b.lobatto_lower <= p.value && p.value <= b.gauss_upper);
        assert!(b.width() < 0.5 || p.breakdown);
    }
    let diag = run.diagnostics.unwrap();
    assert!(diag.converged);
    assert!(diag.interval_declared);
    assert!((run.estimate - truth).abs() < 3.0, "{} vs {truth}", run.estimate);
}

#[test]
fn adaptive_with_estimated_interval() {
    let a = random_spd(40, 30.0, 9).unwrap();
    let dense = crate::oracle::DenseSymmetric::new(40, a.data().to_vec()).unwrap();
    let truth = cholesky_logdet(&dense).unwrap();
    let run =
        estimate_logdet_adaptive(&dense, ProbeKind::Rademacher, 4, &AdaptiveOptions::new(1.0, 0.1, 4096)).unwrap();
    let diag = run.diagnostics.unwrap();
    assert!(!diag.interval_declared);
    assert!(diag.interval.lo > 0.0);
    assert!((run.estimate - truth).abs() < 3.0);
}

#[test]
fn adaptive_max_n_exhausted_is_flagged() {
    let a = random_spd(50, 1e3, 5).unwrap();
    let run = estimate_logdet_adaptive(&a, ProbeKind::Gaussian, 2, &AdaptiveOptions::new(1e-3, 0.1, 8)).unwrap();
    assert!(!run.diagnostics.unwrap().converged);
    assert_eq!(run.n_samples, 8);
}

#[test]
fn scaling_identity() {
    let a = random_spd(30, 20.0, 12).unwrap();
    for kind in [ProbeKind::Rademacher, ProbeKind::Gaussian] {
        let probes = ProbeStream::new(kind, 30, 5).unwrap();
        for lambda in [0.5, 1.0, 2.0] {
            let c = rescale_shift_identity_check(&a, lambda, &probes, 8, 12).unwrap();
            assert!(c.discrepancy <= 1e-10, "{kind:?} {lambda}: {}", c.discrepancy);
            if lambda == 1.0 {
                assert_eq!(c.estimate_base, c.estimate_scaled);
            }
        }
        if kind == ProbeKind::Rademacher {
            let c = rescale_shift_identity_check(&a, 2.0, &probes, 8, 12).unwrap();
            assert!((c.expected_shift - 30.0 * 2f64.ln()).abs() < 1e-12);
        }
    }
}

#[test]
fn log_norms_and_plans() {
    let a = random_spd(40, 100.0, 3).unwrap();
    let l = log_norms_dense(&a).unwrap();
    assert!((l.kappa - 100.0).abs() < 1e-8);
    assert!((l.spectral - 100f64.ln()).abs() < 1e-10);
    assert!((l.logdet - cholesky_logdet(&a).unwrap()).abs() < 1e-9);
    assert!(l.offdiag_frobenius <= l.frobenius);
    let simplified = plan_for(ProbeKind::Rademacher, l.kappa, None, 40, 0.5, 0.1).unwrap();
    let detailed = plan_for(ProbeKind::Rademacher, l.kappa, Some(&l), 40, 0.5, 0.1).unwrap();
    assert!(simplified.n_samples >= detailed.n_samples);
    assert!(plan_for(ProbeKind::Gaussian, l.kappa, None, 40, 0.5, 0.1).is_err());
    assert!(plan_for(ProbeKind::UnitBasis, l.kappa, Some(&l), 40, 0.5, 0.1).is_err());
}

#[test]
fn oracle_doubling_finds_sample_count() {
    let a = random_spd(30, 10.0, 1).unwrap();
    let truth = cholesky_logdet(&a).unwrap();
    let out = oracle_doubling(
        &a,
        ProbeKind::Rademacher,
        3,
        truth,
        &AdaptiveOptions::new(1.0, 0.2, 1024),
        20,
    )
    .unwrap();
    let n = out.n_required.unwrap();
    let last = out.rounds.last().unwrap();
    assert_eq!(last.n_samples, n);
    assert!(last.failure_frequency <= 0.2);
    assert!(out.rounds.windows(2).all(|w| w[1].n_samples == 2 * w[0].n_samples));
}

#[test]
fn fixed_run_matches_planned_without_certificate() {
    let a = random_spd(12, 5.0, 8).unwrap();
    let probes = ProbeStream::new(ProbeKind::Gaussian, 12, 6).unwrap();
    let planned = estimate_logdet(&a, &probes, &fixed_plan(5, 4)).unwrap();
    let fixed = estimate_logdet_fixed(&a, &probes, 5, 4).unwrap();
    assert_eq!(planned.estimate.to_bits(), fixed.estimate.to_bits());
    assert!(fixed.certificate.is_none());
    assert!(estimate_logdet_fixed(&a, &probes, 0, 4).is_err());
}
