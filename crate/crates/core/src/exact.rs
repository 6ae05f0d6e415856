//! Exact evolution of the joint `(signal, threshold)` distribution.
//!
//! The state vector is stacked threshold-major with the `+x` entry first
//! inside each threshold block:
//!
//! ```text
//! [ μ(+x,-N), μ(-x,-N), μ(+x,-N+1), μ(-x,-N+1), …, μ(+x,N), μ(-x,N) ]
//! ```
//!
//! The transition matrix is column-stochastic: column `c` holds the
//! outgoing probabilities of source state `c`, and `μ_{n+1} = M μ_n`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{select_arm, Environment, JointState, SignalModel, SignalSign, ThresholdConfig};
use crate::scalar::Scalar;

/// Default stopping tolerance of [`stationary_distribution`] on `‖Mπ − π‖₁`.
pub const DEFAULT_STATIONARY_TOL: f64 = 1e-12;
/// Default iteration cap of [`stationary_distribution`].
pub const DEFAULT_STATIONARY_MAX_ITER: usize = 1_000_000;

/// Probability vector over the `4N + 2` joint states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDistribution<T> {
    entries: Vec<T>,
}

impl<T: Scalar> JointDistribution<T> {
    /// Wraps a vector after checking non-negativity and unit mass (to `√ε`).
    pub fn from_entries(entries: Vec<T>) -> Result<Self> {
        if entries.len() < 6 || !entries.len().is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "joint distribution length must be 4N + 2 with N >= 1, got {}",
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|p| !(**p >= T::zero())) {
            return Err(Error::out_of_range("entry", "[0, 1]", bad.to_f64_lossy()));
        }
        let sum = entries.iter().fold(T::zero(), |acc, &p| acc + p);
        if (sum - T::one()).abs() > T::epsilon().sqrt() {
            return Err(Error::out_of_range("entry sum", "{1}", sum.to_f64_lossy()));
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_raw(entries: Vec<T>) -> Self {
        Self { entries }
    }

    /// Unit mass on a single state.
    pub fn point_mass(config: &ThresholdConfig, state: JointState) -> Self {
        let mut entries = vec![T::zero(); config.state_count()];
        entries[config.index_of(state)] = T::one();
        Self { entries }
    }

    /// Uniform over all `4N + 2` states.
    pub fn uniform(config: &ThresholdConfig) -> Self {
        let n = config.state_count();
        Self {
            entries: vec![T::one() / T::lit(n as f64); n],
        }
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<T> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, config: &ThresholdConfig, state: JointState) -> T {
        self.entries[config.index_of(state)]
    }

    pub fn total_mass(&self) -> T {
        self.entries.iter().fold(T::zero(), |acc, &p| acc + p)
    }

    /// `Σ |a_k - b_k|`.
    pub fn l1_distance(&self, other: &Self) -> T {
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b).abs())
    }
}

/// Dense column-major `(4N + 2) × (4N + 2)` transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix<T> {
    size: usize,
    data: Vec<T>,
    env: Environment<T>,
    model: SignalModel<T>,
    config: ThresholdConfig,
}

impl<T: Scalar> TransitionMatrix<T> {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Entry `(target row, source column)`.
    pub fn get(&self, row: usize, col: usize) -> T {
        self.data[col * self.size + row]
    }

    /// Outgoing probabilities of source state `col`.
    pub fn column(&self, col: usize) -> &[T] {
        &self.data[col * self.size..(col + 1) * self.size]
    }

    pub fn environment(&self) -> &Environment<T> {
        &self.env
    }

    pub fn signal_model(&self) -> &SignalModel<T> {
        &self.model
    }

    pub fn config(&self) -> &ThresholdConfig {
        &self.config
    }

    pub fn column_sums(&self) -> Vec<T> {
        (0..self.size)
            .map(|c| self.column(c).iter().fold(T::zero(), |acc, &v| acc + v))
            .collect()
    }

    /// Row-major copy, convenient for comparisons against other layouts.
    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.size)
            .map(|r| (0..self.size).map(|c| self.get(r, c)).collect())
            .collect()
    }

    /// `out = M v`, touching only the band `|Δthreshold| ≤ 1`.
    pub fn apply_into(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(v.len(), self.size);
        debug_assert_eq!(out.len(), self.size);
        out.iter_mut().for_each(|o| *o = T::zero());
        for (col, &mass) in v.iter().enumerate() {
            if mass == T::zero() {
                continue;
            }
            let level = col / 2;
            let lo = 2 * level.saturating_sub(1);
            let hi = (2 * (level + 2)).min(self.size);
            let column = self.column(col);
            for row in lo..hi {
                out[row] = out[row] + column[row] * mass;
            }
        }
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.size];
        self.apply_into(v, &mut out);
        out
    }
}

/// Builds `M` for a validated parameter triple.
///
/// From source `(σ, i)` the arm is fixed by `σx ≥ i`; the threshold moves to
/// `min(i+1, N)` with the arm's upward probability and to `max(i-1, -N)`
/// otherwise, while the signal keeps its sign with `1 − γ` and flips with `γ`.
pub fn build_transition_matrix<T: Scalar>(
    env: &Environment<T>,
    model: &SignalModel<T>,
    config: &ThresholdConfig,
) -> Result<TransitionMatrix<T>> {
    config.check_signal(model)?;
    let size = config.state_count();
    let n = config.max_threshold();
    let gamma = model.gamma();
    let stay = T::one() - gamma;
    let mut data = vec![T::zero(); size * size];

    for i in config.thresholds() {
        for sign in SignalSign::BOTH {
            let source = config.index_of(JointState::new(sign, i));
            let arm = select_arm(sign.value(model.x()), T::lit(i as f64));
            let (up, down) = env.move_probabilities(arm);
            let targets = [((i + 1).min(n), up), ((i - 1).max(-n), down)];
            for (j, p_move) in targets {
                for (tau, p_signal) in [(sign, stay), (sign.flipped(), gamma)] {
                    let target = config.index_of(JointState::new(tau, j));
                    let cell = &mut data[source * size + target];
                    *cell = *cell + p_signal * p_move;
                }
            }
        }
    }

    Ok(TransitionMatrix {
        size,
        data,
        env: *env,
        model: *model,
        config: *config,
    })
}

/// `μ_1`: threshold at the origin, signal sign uniformly random.
pub fn initial_distribution<T: Scalar>(config: &ThresholdConfig) -> JointDistribution<T> {
    let mut entries = vec![T::zero(); config.state_count()];
    let half = T::lit(0.5);
    for sign in SignalSign::BOTH {
        entries[config.index_of(JointState::new(sign, 0))] = half;
    }
    JointDistribution { entries }
}

/// `M^steps μ`.
pub fn propagate<T: Scalar>(
    mu: &JointDistribution<T>,
    m: &TransitionMatrix<T>,
    steps: usize,
) -> Result<JointDistribution<T>> {
    if mu.len() != m.size() {
        return Err(Error::DimensionMismatch {
            expected: m.size(),
            found: mu.len(),
        });
    }
    let mut cur = mu.entries.clone();
    let mut next = vec![T::zero(); m.size()];
    for _ in 0..steps {
        m.apply_into(&cur, &mut next);
        std::mem::swap(&mut cur, &mut next);
    }
    let out = JointDistribution { entries: cur };
    debug_assert!(
        (out.total_mass() - mu.total_mass()).abs() <= T::epsilon().sqrt(),
        "propagation lost mass"
    );
    Ok(out)
}

/// Probability that the distribution selects arm A.
pub fn cdr<T: Scalar>(mu: &JointDistribution<T>, config: &ThresholdConfig) -> T {
    mu.entries
        .iter()
        .enumerate()
        .filter(|(idx, _)| config.selects_a(config.state_at(*idx)))
        .fold(T::zero(), |acc, (_, &p)| acc + p)
}

/// `(n, CDR_n)` for `n = 1..=max_steps`, starting from [`initial_distribution`].
pub fn cdr_curve<T: Scalar>(
    env: &Environment<T>,
    model: &SignalModel<T>,
    config: &ThresholdConfig,
    max_steps: usize,
) -> Result<Vec<(usize, T)>> {
    if max_steps == 0 {
        return Err(Error::out_of_range("max_steps", "[1, ∞)", 0.0));
    }
    let m = build_transition_matrix(env, model, config)?;
    let mut cur = initial_distribution::<T>(config).entries;
    let mut next = vec![T::zero(); m.size()];
    let mut out = Vec::with_capacity(max_steps);
    for n in 1..=max_steps {
        out.push((n, cdr(&JointDistribution::from_raw(cur.clone()), config)));
        if n < max_steps {
            m.apply_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
    }
    Ok(out)
}

/// `CDR_step` alone, without materializing the whole curve.
pub fn cdr_at_step<T: Scalar>(
    env: &Environment<T>,
    model: &SignalModel<T>,
    config: &ThresholdConfig,
    step: usize,
) -> Result<T> {
    if step == 0 {
        return Err(Error::out_of_range("step", "[1, ∞)", 0.0));
    }
    let m = build_transition_matrix(env, model, config)?;
    let mu = propagate(&initial_distribution(config), &m, step - 1)?;
    Ok(cdr(&mu, config))
}

/// Fixed point of the transition matrix with its final residual.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationarySolution<T> {
    pub distribution: JointDistribution<T>,
    /// `‖Mπ − π‖₁` at exit.
    pub residual: T,
    pub iterations: usize,
}

/// Power iteration on `(M + I) / 2` from the uniform vector.
///
/// The damped operator has the same fixed points as `M` but no eigenvalue
/// at `-1`, so the iteration also settles when the signal alternates
/// deterministically (`λ = -1`).
pub fn stationary_distribution<T: Scalar>(
    m: &TransitionMatrix<T>,
    tol: T,
    max_iter: usize,
) -> Result<StationarySolution<T>> {
    if !(tol > T::zero()) {
        return Err(Error::out_of_range("tol", "(0, ∞)", tol.to_f64_lossy()));
    }
    let size = m.size();
    let half = T::lit(0.5);
    let mut pi = vec![T::one() / T::lit(size as f64); size];
    let mut image = vec![T::zero(); size];
    let mut residual = T::infinity();

    for iteration in 0..=max_iter {
        m.apply_into(&pi, &mut image);
        residual = pi
            .iter()
            .zip(&image)
            .fold(T::zero(), |acc, (&a, &b)| acc + (a - b).abs());
        if residual <= tol {
            return Ok(StationarySolution {
                distribution: JointDistribution { entries: pi },
                residual,
                iterations: iteration,
            });
        }
        let mut total = T::zero();
        for (p, &img) in pi.iter_mut().zip(&image) {
            *p = half * (*p + img);
            total = total + *p;
        }
        pi.iter_mut().for_each(|p| *p = *p / total);
    }

    Err(Error::NotConverged {
        iterations: max_iter,
        residual: residual.to_f64_lossy(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(
        p_a: f64,
        p_b: f64,
        lambda: f64,
    ) -> (Environment<f64>, SignalModel<f64>, ThresholdConfig) {
        (
            Environment::new(p_a, p_b).unwrap(),
            SignalModel::new(3.5, lambda).unwrap(),
            ThresholdConfig::new(4, 3.5).unwrap(),
        )
    }

    fn st(sign: SignalSign, i: i64) -> JointState {
        JointState::new(sign, i)
    }

    #[test]
    fn interior_column_matches_hand_product() {
        let (env, model, cfg) = setup(0.7, 0.3, 0.7);
        let m = build_transition_matrix(&env, &model, &cfg).unwrap();
        let src = cfg.index_of(st(SignalSign::Plus, 0));
        let expect = [
            (st(SignalSign::Plus, 1), 0.255),
            (st(SignalSign::Plus, -1), 0.595),
            (st(SignalSign::Minus, 1), 0.045),
            (st(SignalSign::Minus, -1), 0.105),
        ];
        let mut total = 0.0;
        for (target, p) in expect {
            let v = m.get(cfg.index_of(target), src);
            assert!((v - p).abs() < 1e-15, "{target:?}: {v} vs {p}");
            total += v;
        }
        assert!((total - 1.0).abs() < 1e-15);
        let nonzero = m.column(src).iter().filter(|v| **v != 0.0).count();
        assert_eq!(nonzero, 4);
    }

    #[test]
    fn lower_boundary_clamps_down_moves() {
        let (env, _, cfg) = setup(0.7, 0.3, 0.0);
        let model = SignalModel::from_gamma(3.5, 0.5).unwrap();
        let m = build_transition_matrix(&env, &model, &cfg).unwrap();
        let src = cfg.index_of(st(SignalSign::Plus, -4));
        assert!((m.get(src, src) - 0.35).abs() < 1e-15);
        let src_minus = cfg.index_of(st(SignalSign::Minus, -4));
        assert!((m.get(src_minus, src) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn upper_boundary_clamps_up_moves() {
        let (env, model, cfg) = setup(0.7, 0.1, 0.4);
        let m = build_transition_matrix(&env, &model, &cfg).unwrap();
        let src = cfg.index_of(st(SignalSign::Minus, 4));
        // threshold 4 exceeds -3.5: arm B, up probability p_b
        let stay = m.get(src, src);
        assert!((stay - 0.1 * (1.0 - model.gamma())).abs() < 1e-15);
    }

    #[test]
    fn band_structure() {
        let (env, model, cfg) = setup(0.65, 0.2, -0.3);
        let m = build_transition_matrix(&env, &model, &cfg).unwrap();
        let n = cfg.max_threshold();
        for c in 0..m.size() {
            for r in 0..m.size() {
                let (i, j) = (cfg.state_at(c).threshold, cfg.state_at(r).threshold);
                let v = m.get(r, c);
                if (j - i).abs() > 1 || (j == i && i.abs() != n) {
                    assert_eq!(v, 0.0, "({r},{c})");
                }
            }
        }
    }

    #[test]
    fn initial_distribution_shapes() {
        let cfg = ThresholdConfig::new(4, 3.5).unwrap();
        let mu = initial_distribution::<f64>(&cfg);
        assert_eq!(mu.len(), 18);
        assert_eq!(mu.get(&cfg, st(SignalSign::Plus, 0)), 0.5);
        assert_eq!(mu.get(&cfg, st(SignalSign::Minus, 0)), 0.5);
        assert_eq!(mu.total_mass(), 1.0);
        assert_eq!(cdr(&mu, &cfg), 0.5);

        let cfg1 = ThresholdConfig::new(1, 0.5).unwrap();
        let mu1 = initial_distribution::<f64>(&cfg1);
        assert_eq!(mu1.entries(), &[0.0, 0.0, 0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn propagate_zero_steps_is_identity() {
        let (env, model, cfg) = setup(0.7, 0.1, 0.0);
        let m = build_transition_matrix(&env, &model, &cfg).unwrap();
        let mu = initial_distribution(&cfg);
        assert_eq!(propagate(&mu, &m, 0).unwrap(), mu);
    }

    #[test]
    fn propagate_one_step_hand_expanded() {
        let (env, model, cfg) = setup(0.7, 0.1, 0.0);
        let m = build_transition_matrix(&env, &model, &cfg).unwrap();
        let mu = propagate(&initial_distribution(&cfg), &m, 1).unwrap();
        // (+x,0) selects A: up 0.3, down 0.7; (-x,0) selects B: up 0.1, down 0.9;
        // either sign then lands on ±x with probability 1/2.
        let up = 0.5 * (0.5 * 0.3 + 0.5 * 0.1);
        let down = 0.5 * (0.5 * 0.7 + 0.5 * 0.9);
        for idx in 0..cfg.state_count() {
            let s = cfg.state_at(idx);
            let expected = match s.threshold {
                1 => up,
                -1 => down,
                _ => 0.0,
            };
            assert!((mu.entries()[idx] - expected).abs() < 1e-15, "{s:?}");
        }
    }

    #[test]
    fn propagate_rejects_dimension_mismatch() {
        let (env, model, cfg) = setup(0.7, 0.1, 0.0);
        let m = build_transition_matrix(&env, &model, &cfg).unwrap();
        let small = initial_distribution(&ThresholdConfig::new(2, 1.5).unwrap());
        assert_eq!(
            propagate(&small, &m, 3),
            Err(Error::DimensionMismatch {
                expected: 18,
                found: 10
            })
        );
    }

    #[test]
    fn cdr_of_point_mass_at_top_is_zero() {
        let cfg = ThresholdConfig::new(4, 3.5).unwrap();
        let mu = JointDistribution::<f64>::point_mass(&cfg, st(SignalSign::Plus, 4));
        assert_eq!(cdr(&mu, &cfg), 0.0);
        let mu = JointDistribution::<f64>::point_mass(&cfg, st(SignalSign::Plus, 3));
        assert_eq!(cdr(&mu, &cfg), 1.0);
        let mu = JointDistribution::<f64>::point_mass(&cfg, st(SignalSign::Minus, -4));
        assert_eq!(cdr(&mu, &cfg), 1.0);
        let mu = JointDistribution::<f64>::point_mass(&cfg, st(SignalSign::Minus, -3));
        assert_eq!(cdr(&mu, &cfg), 0.0);
    }

    #[test]
    fn cdr_curve_starts_at_half() {
        let (env, model, cfg) = setup(0.7, 0.5, -0.4);
        let curve = cdr_curve(&env, &model, &cfg, 5).unwrap();
        assert_eq!(curve.len(), 5);
        assert_eq!(curve[0], (1, 0.5));
        assert!(cdr_curve(&env, &model, &cfg, 0).is_err());
        let at5 = cdr_at_step(&env, &model, &cfg, 5).unwrap();
        assert!((curve[4].1 - at5).abs() < 1e-15);
    }

    #[test]
    fn stationary_uniform_when_arms_equal() {
        for lambda in [-1.0, -0.3, 0.0, 0.8] {
            let (env, model, cfg) = setup(0.5, 0.5, lambda);
            let m = build_transition_matrix(&env, &model, &cfg).unwrap();
            let sol = stationary_distribution(&m, 1e-12, 1_000_000).unwrap();
            for &p in sol.distribution.entries() {
                assert!((p - 1.0 / 18.0).abs() < 1e-12, "lambda {lambda}: {p}");
            }
        }
    }

    #[test]
    fn stationary_reports_non_convergence() {
        let (env, model, cfg) = setup(0.7, 0.2, 0.9);
        let m = build_transition_matrix(&env, &model, &cfg).unwrap();
        match stationary_distribution(&m, 1e-14, 3) {
            Err(Error::NotConverged {
                iterations,
                residual,
            }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
        assert!(stationary_distribution(&m, 0.0, 10).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let env = Environment::<f32>::new(0.7, 0.3).unwrap();
        let model = SignalModel::<f32>::new(3.5, 0.4).unwrap();
        let cfg = ThresholdConfig::new(4, 3.5f32).unwrap();
        let c = cdr_at_step(&env, &model, &cfg, 1000).unwrap();
        assert!((c - 0.78554).abs() < 1e-4, "{c}");
    }

    #[test]
    fn from_entries_validation() {
        assert!(JointDistribution::from_entries(vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).is_ok());
        assert!(JointDistribution::from_entries(vec![0.5, 0.6, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(JointDistribution::from_entries(vec![1.5, -0.5, 0.0, 0.0, 0.0, 0.0]).is_err());
        assert!(JointDistribution::from_entries(vec![0.5, 0.5, 0.0, 0.0]).is_err());
    }
}
