use proptest::prelude::*;
use towbandit::{
    build_transition_matrix, initial_distribution, propagate, stationary_closed_form,
    stationary_distribution, update_threshold, Arm, Environment64, JointState, SignalModel64,
    SignalSign, ThresholdConfig,
};

/// `(N, x)` with `x` non-integer in `(0, N)`.
fn chain(max_bound: usize) -> impl Strategy<Value = (usize, f64)> {
    (1..=max_bound).prop_flat_map(|n| {
        (Just(n), 0..n, 0.05f64..0.95).prop_map(|(n, f, frac)| (n, f as f64 + frac))
    })
}

fn setup(
    n: usize,
    x: f64,
    p_a: f64,
    p_b: f64,
    lambda: f64,
) -> (Environment64, SignalModel64, ThresholdConfig) {
    (
        Environment64::new(p_a, p_b).unwrap(),
        SignalModel64::new(x, lambda).unwrap(),
        ThresholdConfig::new(n, x).unwrap(),
    )
}

/// Distribution after `steps` transitions, summed over every path of
/// (reward outcome, signal flip) choices.
fn enumerate(p_a: f64, p_b: f64, gamma: f64, n: i64, x: f64, steps: usize) -> Vec<f64> {
    // (sign, threshold, probability)
    let mut paths: Vec<(f64, i64, f64)> = vec![(x, 0, 0.5), (-x, 0, 0.5)];
    for _ in 0..steps {
        let mut next = Vec::with_capacity(paths.len() * 4);
        for &(s, i, w) in &paths {
            let use_a = s >= i as f64;
            let p_win = if use_a { p_a } else { p_b };
            for won in [true, false] {
                // a win on A pulls the threshold down, a win on B pushes it up
                let up = won != use_a;
                let t = if up { (i + 1).min(n) } else { (i - 1).max(-n) };
                let pr = if won { p_win } else { 1.0 - p_win };
                next.push((s, t, w * pr * (1.0 - gamma)));
                next.push((-s, t, w * pr * gamma));
            }
        }
        paths = next;
    }
    let mut dist = vec![0.0; (4 * n + 2) as usize];
    for (s, i, w) in paths {
        let idx = 2 * (i + n) as usize + usize::from(s < 0.0);
        dist[idx] += w;
    }
    dist
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn columns_are_stochastic(
        (n, x) in chain(8),
        p_a in 0.0f64..=1.0,
        p_b in 0.0f64..=1.0,
        lambda in -1.0f64..0.999,
    ) {
        let (env, model, config) = setup(n, x, p_a, p_b, lambda);
        let m = build_transition_matrix(&env, &model, &config).unwrap();
        for col in 0..m.size() {
            let column = m.column(col);
            prop_assert!(column.iter().all(|&v| v >= 0.0));
            let s: f64 = column.iter().sum();
            prop_assert!((s - 1.0).abs() <= 1e-14, "column {} sums to {}", col, s);
        }
    }

    #[test]
    fn propagation_preserves_mass(
        (n, x) in chain(8),
        p_a in 0.0f64..=1.0,
        p_b in 0.0f64..=1.0,
        lambda in -1.0f64..0.999,
        steps in 0usize..400,
    ) {
        let (env, model, config) = setup(n, x, p_a, p_b, lambda);
        let m = build_transition_matrix(&env, &model, &config).unwrap();
        let mu = propagate(&initial_distribution(&config), &m, steps).unwrap();
        prop_assert!(mu.entries().iter().all(|&v| v >= 0.0));
        prop_assert!((mu.total_mass() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn signal_marginal_ignores_thresholds(
        (n, x) in chain(6),
        p_a in 0.0f64..=1.0,
        p_b in 0.0f64..=1.0,
        lambda in -1.0f64..0.999,
        plus0 in 0.0f64..=1.0,
        steps in 0usize..60,
    ) {
        let (env, model, config) = setup(n, x, p_a, p_b, lambda);
        let m = build_transition_matrix(&env, &model, &config).unwrap();
        let mut start = vec![0.0; config.state_count()];
        start[config.index_of(JointState::new(SignalSign::Plus, 0))] = plus0;
        start[config.index_of(JointState::new(SignalSign::Minus, 0))] = 1.0 - plus0;
        let mu = propagate(
            &towbandit::JointDistribution64::from_entries(start).unwrap(),
            &m,
            steps,
        ).unwrap();
        let plus: f64 = mu.entries().iter().step_by(2).sum();
        let gamma = (1.0 - lambda) / 2.0;
        let mut expected = plus0;
        for _ in 0..steps {
            expected = expected * (1.0 - gamma) + (1.0 - expected) * gamma;
        }
        prop_assert!((plus - expected).abs() <= 1e-13);
    }

    #[test]
    fn boundary_chain_factorises(
        (n, x) in chain(8),
        p in 0.0f64..=1.0,
        lambda in -1.0f64..0.999,
        steps in 0usize..200,
    ) {
        let (env, model, config) = setup(n, x, p, 1.0 - p, lambda);
        let m = build_transition_matrix(&env, &model, &config).unwrap();
        let mu = propagate(&initial_distribution(&config), &m, steps).unwrap();

        // threshold walk: up with 1 - p from every state, clamped at ±N
        let levels = 2 * n + 1;
        let mut walk = vec![0.0; levels];
        walk[n] = 1.0;
        for _ in 0..steps {
            let mut next = vec![0.0; levels];
            for (k, &w) in walk.iter().enumerate() {
                next[(k + 1).min(levels - 1)] += w * (1.0 - p);
                next[k.saturating_sub(1)] += w * p;
            }
            walk = next;
        }
        for (idx, &v) in mu.entries().iter().enumerate() {
            let expected = 0.5 * walk[idx / 2];
            prop_assert!((v - expected).abs() <= 1e-13, "state {}: {} vs {}", idx, v, expected);
        }
    }

    #[test]
    fn threshold_updates_stay_clamped(
        bound in 1usize..20,
        offset in 0usize..41,
        arm_a in any::<bool>(),
        won in any::<bool>(),
    ) {
        let config = ThresholdConfig::new(bound, 0.5).unwrap();
        let n = bound as i64;
        let current = (offset as i64 % (2 * n + 1)) - n;
        let arm = if arm_a { Arm::A } else { Arm::B };
        let next = update_threshold(current, arm, won, &config);
        prop_assert!((-n..=n).contains(&next));
        prop_assert!((next - current).abs() <= 1);
        let expected = if won == arm_a { current - 1 } else { current + 1 };
        prop_assert_eq!(next, expected.clamp(-n, n));
    }

    #[test]
    fn single_level_chain_matches_path_enumeration(
        x in 0.05f64..0.95,
        p_a in 0.0f64..=1.0,
        p_b in 0.0f64..=1.0,
        lambda in -1.0f64..0.999,
    ) {
        let (env, model, config) = setup(1, x, p_a, p_b, lambda);
        let m = build_transition_matrix(&env, &model, &config).unwrap();
        let mut mu = initial_distribution(&config);
        for steps in 0..=3 {
            let brute = enumerate(p_a, p_b, model.gamma(), 1, x, steps);
            for (a, b) in mu.entries().iter().zip(&brute) {
                prop_assert!((a - b).abs() <= 1e-15, "step {}: {} vs {}", steps, a, b);
            }
            mu = propagate(&mu, &m, 1).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stationary_matches_closed_form(
        (n, x) in chain(5),
        p in 0.1f64..0.9,
        lambda in -1.0f64..0.99,
    ) {
        let (env, model, config) = setup(n, x, p, 1.0 - p, lambda);
        let m = build_transition_matrix(&env, &model, &config).unwrap();
        let solution = stationary_distribution(&m, 1e-13, 1_000_000).unwrap();
        let exact = stationary_closed_form(p, &config).unwrap();
        for (a, b) in solution.distribution.entries().iter().zip(exact.entries()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }
}
