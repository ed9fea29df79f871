mod common;

use common::*;
use sigshift_core::env::{make_piecewise, PiecewiseSpec, Segment};
use sigshift_core::shift_oracle::{
    eviction_times, gap_dependent_rate, has_significant_regret, restarting_oracle_rate,
    safe_arm_check, significant_shifts, verify_profile,
};
use sigshift_core::{NoiseModel, ScanMode};

#[test]
fn exact_shifts_match_literal_enumeration() {
    let mut with_shifts = 0;
    for seed in 0..60 {
        let d = random_dense(seed, 4, 300);
        let got = significant_shifts(&d.env, ScanMode::Exact);
        assert_eq!(got.shifts, brute_force_shifts(&d), "seed {seed}");
        verify_profile(&d.env, &got).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        with_shifts += usize::from(got.count() > 0);
    }
    assert!(
        with_shifts >= 20,
        "corpus too tame: {with_shifts} of 60 have shifts"
    );
}

#[test]
fn exact_evictions_match_literal_greedy() {
    let mut evicted = 0;
    for seed in 0..40 {
        let d = random_dense(1000 + seed, 4, 200);
        for &c2 in &[0.5, 1.0, 2.0] {
            let trace = eviction_times(&d.env, c2, ScanMode::Exact).unwrap();
            assert_eq!(
                trace.evicted_at,
                brute_force_evictions(&d, c2),
                "seed {seed}, c2 {c2}"
            );
            evicted += trace
                .evicted_at
                .iter()
                .filter(|&&t| t <= d.horizon())
                .count();
        }
    }
    assert!(evicted >= 40, "only {evicted} evictions in the corpus");
}

#[test]
fn flip_environment_shift_is_the_brute_force_round() {
    let spec = PiecewiseSpec::new(
        vec![
            Segment {
                length: 50,
                gaps: vec![0.0, 1.0],
            },
            Segment {
                length: 50,
                gaps: vec![1.0, 0.0],
            },
        ],
        1.0,
    );
    let env = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
    let d = dense_of(&env);
    let got = significant_shifts(&env, ScanMode::Exact);
    assert_eq!(got.count(), 1);
    assert_eq!(got.shifts, brute_force_shifts(&d));
}

#[test]
fn significant_regret_matches_direct_sum() {
    let d = random_dense(7, 3, 120);
    let k = d.arms() as f64;
    for a in 0..d.arms() {
        for s1 in (1..=d.horizon()).step_by(7) {
            for s2 in (s1..=d.horizon()).step_by(5) {
                let sum: f64 = (s1..=s2).map(|t| d.gap(t, a)).sum();
                let want = sum >= (k * (s2 - s1 + 1) as f64).sqrt();
                assert_eq!(has_significant_regret(&d.env, a, s1, s2).unwrap(), want);
            }
        }
    }
}

/// Every surviving arm satisfies the weighted bound on every subinterval of
/// `[1, t_i - 1]`, checked by enumerating all windows.
#[test]
fn eviction_trace_bound_holds_exhaustively() {
    for seed in 0..10 {
        let (_, env) = random_safe_piecewise(seed, 2000);
        let d = dense_of(&env);
        let c2 = 1.0;
        let trace = eviction_times(&env, c2, ScanMode::Exact).unwrap();
        let t_max = d.horizon();
        let log_t = (t_max as f64).ln();
        let size: Vec<f64> = (1..=t_max).map(|t| trace.set_at(t).len() as f64).collect();
        for a in 0..d.arms() {
            let end = trace.evicted_at[a] - 1;
            let mut w = vec![0.0; end + 1];
            let mut v = vec![0.0; end + 1];
            for t in 1..=end {
                w[t] = w[t - 1] + d.gap(t, a) / size[t - 1];
                v[t] = v[t - 1] + log_t / size[t - 1];
            }
            for s2 in 1..=end {
                for s1 in 1..=s2 {
                    let lhs = w[s2] - w[s1 - 1];
                    let rhs = c2 * (v[s2] - v[s1 - 1]).sqrt();
                    assert!(
                        lhs <= rhs * (1.0 + 1e-9),
                        "seed {seed} arm {a} [{s1},{s2}]: {lhs} > {rhs}"
                    );
                }
            }
        }
        // S changes only at eviction times and shrinks.
        for pair in trace.armsets.windows(2) {
            assert!(pair[1].set.len() < pair[0].set.len());
            assert!(pair[1].set.iter().all(|a| pair[0].set.contains(a)));
            assert!(trace.evicted_at.contains(&pair[1].from));
        }
    }
}

#[test]
fn gap_rate_bounds_on_safe_piecewise() {
    for seed in 0..20 {
        let (spec, env) = random_safe_piecewise(500 + seed, 4000);
        let t = env.horizon();
        let trace = eviction_times(&env, 1.0, ScanMode::Exact).unwrap();
        let rate = gap_dependent_rate(&env, &trace).unwrap();
        let oracle = restarting_oracle_rate(&spec, t);
        let sqrt_bound = ((env.arms() * t) as f64 * (t as f64).ln()).sqrt();
        assert!(rate <= oracle + 1e-9, "seed {seed}: {rate} > {oracle}");
        assert!(rate <= sqrt_bound, "seed {seed}: {rate} > {sqrt_bound}");
    }
}

#[test]
fn gap_rate_closed_form_for_single_eviction() {
    let spec = PiecewiseSpec::new(
        vec![Segment {
            length: 1000,
            gaps: vec![0.0, 0.5],
        }],
        1.0,
    );
    let env = make_piecewise(spec, NoiseModel::Bernoulli).unwrap();
    let trace = eviction_times(&env, 1.0, ScanMode::Exact).unwrap();
    let t1 = trace.evicted_at[1];
    assert!(t1 <= 1000);
    let rate = gap_dependent_rate(&env, &trace).unwrap();
    assert!((rate - 0.5 * (t1 - 1) as f64 / 2.0).abs() < 1e-9);
}

#[test]
fn persistent_best_arm_is_safe_under_any_trajectory() {
    for seed in 0..5 {
        let (_, env) = random_safe_piecewise(seed, 800);
        let trace = eviction_times(&env, 1.0, ScanMode::Exact).unwrap();
        for runs in [None, Some(&trace.armsets[..])] {
            let rep = safe_arm_check(&env, runs, 1.0, ScanMode::Exact).unwrap();
            assert!(rep.safe_arms.contains(&0));
            assert_eq!(rep.ratios[0], 0.0);
        }
    }
}
