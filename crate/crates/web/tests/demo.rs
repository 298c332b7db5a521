use trace_sketch_web::{bracket_data, envelope_data, tail_data};

#[test]
fn envelope_rows_cover_every_dimension_and_trial() {
    let d = envelope_data("gaussian", 3, 10, 50, 0.01, 3).unwrap();
    assert_eq!(d.rows.len(), 3 * 50);
    let dims: Vec<usize> = d.violations.iter().map(|v| v.0).collect();
    assert_eq!(dims, [4, 16, 64]);
    // δ = 0.01 with 50 trials: a handful of exceedances at most.
    assert!(d.violations.iter().all(|&(_, f)| f <= 0.1), "{:?}", d.violations);
    // Envelope grows like sqrt(n) once n dominates N.
    let env = |n| d.rows.iter().find(|r| r.n == n).unwrap().envelope;
    assert!(env(64) > env(16) && env(16) > env(4));
}

#[test]
fn tail_curve_is_monotone_and_below_bound() {
    let d = tail_data("rademacher", 32, 10, 2000, 20.0, 10, 5).unwrap();
    assert_eq!(d.rows.len(), 10);
    for w in d.rows.windows(2) {
        assert!(w[1].epsilon > w[0].epsilon);
        assert!(w[1].empirical <= w[0].empirical);
        assert!(w[1].bound <= w[0].bound);
    }
    for r in &d.rows {
        assert!(r.empirical <= r.bound.min(1.0) + 3.0 * r.binomial_sd + 1e-3, "{r:?}");
    }
}

#[test]
fn bracket_encloses_exact_value_and_tightens() {
    let d = bracket_data(60, 100.0, 20, 9).unwrap();
    let slack = 1e-9 * d.exact.abs().max(1.0);
    for s in &d.steps {
        assert!(s.lobatto_lower <= d.exact + slack, "{s:?} vs {}", d.exact);
        assert!(d.exact <= s.gauss_upper + slack, "{s:?} vs {}", d.exact);
        assert!((s.gauss_upper - d.exact).abs() <= s.a_priori + slack);
    }
    let first = &d.steps[0];
    let last = d.steps.last().unwrap();
    assert!(last.gauss_upper - last.lobatto_lower < 1e-3 * (first.gauss_upper - first.lobatto_lower));
}

#[test]
fn deterministic_for_fixed_seed() {
    let a = serde_json::to_string(&tail_data("gaussian", 16, 5, 100, 10.0, 5, 1).unwrap()).unwrap();
    let b = serde_json::to_string(&tail_data("gaussian", 16, 5, 100, 10.0, 5, 1).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn bad_input_is_rejected() {
    assert!(envelope_data("unit", 2, 10, 10, 0.1, 0).is_err());
    assert!(envelope_data("gaussian", 7, 10, 10, 0.1, 0).is_err());
    assert!(tail_data("gaussian", 16, 5, 0, 10.0, 5, 1).is_err());
    assert!(tail_data("gaussian", 16, 5, 10, -1.0, 5, 1).is_err());
    assert!(bracket_data(10, 0.5, 3, 1).is_err());
    assert!(bracket_data(10, 10.0, 11, 1).is_err());
}
