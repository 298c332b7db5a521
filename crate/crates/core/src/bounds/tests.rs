use super::*;
use proptest::prelude::*;

const TWO_OVER_E: f64 = 2.0 / std::f64::consts::E;

fn unit_norms() -> NormData {
    NormData::new(4, 1.0, 1.0).unwrap().with_offdiag(1.0, 1.0).unwrap()
}

#[test]
fn gaussian_tail_arithmetic() {
    let p = gaussian_tail(&unit_norms(), 8, 1.0).unwrap();
    assert!((p - 2.0 / std::f64::consts::E).abs() < 1e-15);
    assert!(gaussian_tail(&unit_norms(), 8, 0.0).is_err());
    let mut last = f64::INFINITY;
    for eps in [0.5, 1.0, 10.0, 100.0, 1e4] {
        let p = gaussian_tail(&unit_norms(), 8, eps).unwrap();
        assert!(p < last);
        last = p;
    }
    assert!(last < 1e-300);
}

#[test]
fn gaussian_plan_arithmetic() {
    let plan = gaussian_sample_plan(&unit_norms(), 1.0, TWO_OVER_E).unwrap();
    assert_eq!(plan.n_samples, 8);
    assert_eq!(plan.formula, FormulaId::GaussianAbsolute);
    assert!(gaussian_tail(&unit_norms(), plan.n_samples, 1.0).unwrap() <= TWO_OVER_E * (1.0 + 1e-6));
}

#[test]
fn doubling_frobenius_quadruples_first_term() {
    let a = NormData::new(10, 2.0, 0.0).unwrap();
    let b = NormData::new(10, 4.0, 0.0).unwrap();
    let pa = gaussian_sample_plan(&a, 0.5, 0.1).unwrap();
    let pb = gaussian_sample_plan(&b, 0.5, 0.1).unwrap();
    assert!((pb.raw_n / pa.raw_n - 4.0).abs() < 1e-12);
}

#[test]
fn envelope_tightness_formula() {
    for n in [4usize, 64, 1024] {
        let norms = NormData::new(n, (n as f64).sqrt(), 1.0).unwrap();
        let l = (2.0f64 / 0.01).ln();
        let expect = 2.0 / 10f64.sqrt() * (n as f64).sqrt() * l.sqrt() + 2.0 / 10.0 * l;
        assert!((gaussian_envelope(&norms, 0.01, 10).unwrap() - expect).abs() < 1e-12 * expect);
    }
    let norms = unit_norms();
    assert!(gaussian_envelope(&norms, 0.1, 1 << 40).unwrap() < 1e-5);
}

#[test]
fn rademacher_envelope_wider_than_gaussian() {
    for (f, s) in [(1.0, 1.0), (10.0, 1.0), (3.0, 2.5)] {
        let norms = NormData::new(100, f, s).unwrap().with_offdiag(f, s).unwrap();
        for n in [1u64, 10, 1000] {
            let eps = gaussian_envelope(&norms, 0.05, n).unwrap();
            let (eps_r, _) = rademacher_envelope(&norms, 0.05, n).unwrap();
            assert!(eps_r >= eps);
        }
    }
}

#[test]
fn tightness_bound_arithmetic() {
    let b = gaussian_tightness_bound(1000, 10, 1.0).unwrap();
    assert!((b - (10.0 / (1000.0 * std::f64::consts::PI)).sqrt()).abs() < 1e-15);
    assert!((b - 0.05642).abs() < 1e-5);
    assert_eq!(gaussian_tightness_bound(1000, 10, 0.0).unwrap(), 0.0);
    assert!(gaussian_tightness_bound(999, 10, 1.0).is_err());
}

#[test]
fn rademacher_examples() {
    let diag = NormData::new(5, 3.0, 2.0).unwrap().with_offdiag(0.0, 0.0).unwrap();
    assert_eq!(rademacher_tail(&diag, 1, 0.1).unwrap(), 0.0);
    assert_eq!(rademacher_sample_plan(&diag, 0.1, 0.01).unwrap().n_samples, 1);
    let p = rademacher_tail(&unit_norms(), 16, 1.0).unwrap();
    assert!((p - 2.0 / std::f64::consts::E).abs() < 1e-15);
    let plan = rademacher_sample_plan(&unit_norms(), 1.0, TWO_OVER_E).unwrap();
    assert_eq!(plan.n_samples, 16);
    assert!(!plan.surrogate);
}

#[test]
fn rademacher_surrogate_when_offdiag_missing() {
    let norms = NormData::new(5, 1.0, 1.0).unwrap();
    let plan = rademacher_sample_plan(&norms, 1.0, TWO_OVER_E).unwrap();
    assert!(plan.surrogate);
    // ‖B‖_F² + ε · 2‖B‖₂ = 3
    assert_eq!(plan.n_samples, 24);
    assert_eq!(plan.formula_label(), "rademacher_absolute+surrogate");
}

#[test]
fn norm_invariants_validated() {
    assert!(NormData::new(3, 1.0, 2.0).is_err());
    let n = NormData::new(3, 2.0, 1.0).unwrap();
    assert!(n.with_offdiag(2.5, 1.0).is_err());
    assert!(n.with_offdiag(1.0, 2.5).is_err());
    assert!(n.with_offdiag(1.0, 2.0).is_ok());
}

#[test]
fn spsd_identity_example() {
    let norms = NormData::new(100, 10.0, 1.0).unwrap().with_trace(100.0).unwrap();
    let plans = spsd_relative_plans(&norms, 0.1, TWO_OVER_E).unwrap();
    // (4/0.01)·1.1·0.01 = 4.4
    assert!((plans.gaussian.raw_n - 4.4).abs() < 1e-12);
    assert_eq!(plans.gaussian.n_samples, 5);
    assert!((plans.rademacher.raw_n - 2.0 * plans.gaussian.raw_n).abs() < 1e-12);
    let no_trace = NormData::new(100, 10.0, 1.0).unwrap();
    assert!(spsd_relative_plans(&no_trace, 0.1, 0.1).is_err());
}

#[test]
fn spsd_rank_one_is_extremal() {
    let rank_one = NormData::new(10, 3.0, 3.0).unwrap().with_trace(3.0).unwrap();
    let spread = NormData::new(10, 3.0, 1.0).unwrap().with_trace(9.0).unwrap();
    let a = spsd_relative_plans(&rank_one, 0.2, 0.05).unwrap();
    let b = spsd_relative_plans(&spread, 0.2, 0.05).unwrap();
    assert!(a.gaussian.raw_n > b.gaussian.raw_n);
}

#[test]
fn comparison_examples() {
    // rank one: nuclear = Frobenius
    let norms = NormData::new(50, 2.0, 2.0).unwrap();
    let cmp = comparison_bounds(&norms, 2.0, 1, 0.5, 0.05).unwrap();
    let ours = gaussian_sample_plan(&norms, 0.5, 0.05).unwrap();
    assert!((ours.n_samples as f64) < cmp.nuclear_gaussian_n);
    assert!(comparison_bounds(&norms, 1.0, 1, 0.5, 0.05).is_err());
    assert!(comparison_bounds(&norms, 2.0, 0, 0.5, 0.05).is_err());

    // worst case ‖B‖_*² = n ‖B‖_F²
    for n in [10usize, 100] {
        let f = (n as f64).sqrt();
        let norms = NormData::new(n, f, 1.0).unwrap();
        let cmp = comparison_bounds(&norms, (n as f64).sqrt() * f, n, 1.0, TWO_OVER_E).unwrap();
        let ours = gaussian_sample_plan(&norms, 1.0, TWO_OVER_E).unwrap();
        assert!(cmp.nuclear_gaussian_n / ours.n_samples as f64 >= n as f64 / 2.0);
    }
}

#[test]
fn bernstein_depends_on_dimension() {
    let small = NormData::new(10, 1.0, 1.0).unwrap().with_offdiag(1.0, 1.0).unwrap();
    let large = NormData::new(1000, 1.0, 1.0).unwrap().with_offdiag(1.0, 1.0).unwrap();
    assert!(bernstein_tail(&large, 100, 1.0).unwrap() > bernstein_tail(&small, 100, 1.0).unwrap());
}

#[test]
fn logdet_plan_examples() {
    let e2 = std::f64::consts::E.powi(2);
    let plan = logdet_plan_simplified(e2, 100, 1.0, TWO_OVER_E).unwrap();
    assert_eq!(plan.n_samples, 3232);
    assert_eq!(logdet_plan_simplified(1.0, 100, 1.0, 0.1).unwrap().n_samples, 1);

    let g = logdet_plan_gaussian(1.0, 0.5, 1.0, 20, 0.5, 0.1).unwrap();
    let s = 2f64.sqrt();
    let m = s / 4.0 * (4.0 / 0.5 * 400.0 * (s + 1.0) * 2f64.ln()).ln();
    assert_eq!(g.m, Some(m.ceil() as usize));
    assert!(g.valid);
    // n = 10: (δ/2) exp(100/16) ≈ 25.9 < N
    assert!(!logdet_plan_gaussian(1.0, 0.5, 1.0, 10, 0.5, 0.1).unwrap().valid);
    assert!(logdet_plan_gaussian(1.0, 0.5, 1.0, 1, 0.5, 0.1).is_err());
    assert!(logdet_plan_gaussian(0.9, 0.5, 1.0, 10, 0.5, 0.1).is_err());

    // tiny n with a huge N violates N ≤ (δ/2) exp(n²/16)
    let big = logdet_plan_gaussian(10.0, 5.0, 20.0, 2, 0.01, 0.1).unwrap();
    assert!(!big.valid);
}

#[test]
fn logdet_m_grows_with_kappa() {
    let mut last = 0;
    for kappa in [1.0, 10.0, 100.0, 1e4, 1e6] {
        let m = logdet_steps_rademacher(kappa, 100, 0.1).unwrap();
        assert!(m >= last);
        last = m;
    }
}

#[test]
fn plan_ceil_snaps() {
    assert_eq!(plan_ceil(8.000_000_000_1), 8);
    assert_eq!(plan_ceil(8.01), 9);
    assert_eq!(plan_ceil(0.2), 1);
    assert_eq!(plan_ceil(-3.0), 1);
    assert_eq!(plan_ceil(f64::INFINITY), u64::MAX);
}

fn norms_strategy() -> impl Strategy<Value = NormData> {
    (1usize..2000, 0.01f64..100.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(n, f, s_frac, of, os)| {
        let s = f * s_frac.max(1e-3);
        NormData::new(n, f, s)
            .unwrap()
            .with_offdiag(f * of, 2.0 * s * os)
            .unwrap()
    })
}

proptest! {
    #[test]
    fn plug_back_gaussian(norms in norms_strategy(), eps in 0.01f64..10.0, delta in 0.001f64..0.99) {
        let plan = gaussian_sample_plan(&norms, eps, delta).unwrap();
        prop_assert!(gaussian_tail(&norms, plan.n_samples, eps).unwrap() <= delta * (1.0 + 1e-6));
    }

    #[test]
    fn plug_back_rademacher(norms in norms_strategy(), eps in 0.01f64..10.0, delta in 0.001f64..0.99) {
        let plan = rademacher_sample_plan(&norms, eps, delta).unwrap();
        prop_assert!(rademacher_tail(&norms, plan.n_samples, eps).unwrap() <= delta * (1.0 + 1e-6));
    }

    #[test]
    fn plans_monotone(norms in norms_strategy(), eps in 0.01f64..5.0, delta in 0.001f64..0.5) {
        let base = gaussian_sample_plan(&norms, eps, delta).unwrap().n_samples;
        prop_assert!(gaussian_sample_plan(&norms, eps * 1.5, delta).unwrap().n_samples <= base);
        prop_assert!(gaussian_sample_plan(&norms, eps, delta * 1.5).unwrap().n_samples <= base);
        let base = rademacher_sample_plan(&norms, eps, delta).unwrap().n_samples;
        prop_assert!(rademacher_sample_plan(&norms, eps * 1.5, delta).unwrap().n_samples <= base);
        prop_assert!(rademacher_sample_plan(&norms, eps, delta * 1.5).unwrap().n_samples <= base);
    }

    #[test]
    fn tails_monotone(norms in norms_strategy(), eps in 0.01f64..5.0, n in 1u64..10_000) {
        let g = gaussian_tail(&norms, n, eps).unwrap();
        prop_assert!(gaussian_tail(&norms, n, eps * 1.1).unwrap() <= g);
        prop_assert!(gaussian_tail(&norms, n + 1, eps).unwrap() <= g);
        let r = rademacher_tail(&norms, n, eps).unwrap();
        prop_assert!(rademacher_tail(&norms, n, eps * 1.1).unwrap() <= r);
        prop_assert!(rademacher_tail(&norms, n + 1, eps).unwrap() <= r);
    }

    #[test]
    fn relative_plan_not_above_absolute(n in 1usize..500, f in 0.1f64..50.0, s_frac in 0.05f64..1.0, extra in 0.0f64..100.0, eps in 0.01f64..2.0, delta in 0.001f64..0.5) {
        // SPSD-consistent data: tr ≥ ‖B‖_F²/‖B‖₂ so that ‖B‖_F²/tr² ≤ μ
        let s = f * s_frac;
        let trace = f * f / s + extra;
        let norms = NormData::new(n, f, s).unwrap().with_trace(trace).unwrap();
        let rel = spsd_relative_plans(&norms, eps, delta).unwrap();
        let abs = gaussian_sample_plan(&norms, eps * trace, delta).unwrap();
        prop_assert!(rel.gaussian.raw_n >= abs.raw_n * (1.0 - 1e-12));
        prop_assert!(rel.gaussian.raw_n * (1.0 + 1e-12) >= abs.raw_n);
    }

    #[test]
    fn logdet_plans_monotone(kappa in 1.0f64..1e6, eps in 0.01f64..2.0, delta in 0.001f64..0.5, n in 2usize..5000) {
        let a = logdet_plan_simplified(kappa, n, eps, delta).unwrap();
        let b = logdet_plan_simplified(kappa, n, eps * 1.5, delta).unwrap();
        prop_assert!(b.n_samples <= a.n_samples);
        prop_assert!(b.m.unwrap() <= a.m.unwrap());
        let g = logdet_plan_gaussian(kappa, 1.0, 3.0, n, eps, delta).unwrap();
        prop_assert!(g.m.unwrap() >= a.m.unwrap());
    }
}
