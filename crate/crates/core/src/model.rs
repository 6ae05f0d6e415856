//! Domain types and the pure decision rules shared by the exact engine and
//! the Monte Carlo simulator.
//!
//! A decision compares the signal value `s` against the threshold `θ`:
//! arm A is selected when `s ≥ θ`, arm B otherwise. After the reward is
//! observed, a win for A or a loss for B pulls the threshold down by one,
//! and a loss for A or a win for B pushes it up by one. The threshold is
//! clamped to `[-N, N]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One of the two arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arm {
    A,
    B,
}

/// Sign of the two-valued signal, `+x` or `-x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SignalSign {
    Plus,
    Minus,
}

impl SignalSign {
    pub const BOTH: [SignalSign; 2] = [SignalSign::Plus, SignalSign::Minus];

    pub fn flipped(self) -> Self {
        match self {
            SignalSign::Plus => SignalSign::Minus,
            SignalSign::Minus => SignalSign::Plus,
        }
    }

    /// `+1` or `-1`.
    pub fn unit(self) -> i8 {
        match self {
            SignalSign::Plus => 1,
            SignalSign::Minus => -1,
        }
    }

    /// The signal value `±x`.
    pub fn value<T: Scalar>(self, x: T) -> T {
        match self {
            SignalSign::Plus => x,
            SignalSign::Minus => -x,
        }
    }

    /// Offset of this sign inside a threshold block of the joint vector.
    pub(crate) fn block_offset(self) -> usize {
        match self {
            SignalSign::Plus => 0,
            SignalSign::Minus => 1,
        }
    }
}

/// Winning probabilities of arms A and B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment<T> {
    p_a: T,
    p_b: T,
}

impl<T: Scalar> Environment<T> {
    /// Both probabilities must lie in `[0, 1]`. Environments with
    /// `p_a <= p_b` are accepted; see [`Environment::arm_a_optimal`].
    pub fn new(p_a: T, p_b: T) -> Result<Self> {
        check_probability("p_a", p_a)?;
        check_probability("p_b", p_b)?;
        Ok(Self { p_a, p_b })
    }

    /// Environment on the `p_a + p_b = 1` line.
    pub fn boundary(p: T) -> Result<Self> {
        Self::new(p, T::one() - p)
    }

    pub fn p_a(&self) -> T {
        self.p_a
    }

    pub fn p_b(&self) -> T {
        self.p_b
    }

    pub fn win_probability(&self, arm: Arm) -> T {
        match arm {
            Arm::A => self.p_a,
            Arm::B => self.p_b,
        }
    }

    /// False when the analysis convention `p_a > p_b` does not hold.
    /// CDR is still reported as the probability of selecting arm A.
    pub fn arm_a_optimal(&self) -> bool {
        self.p_a > self.p_b
    }

    /// `(up, down)` threshold move probabilities after selecting `arm`.
    pub fn move_probabilities(&self, arm: Arm) -> (T, T) {
        match arm {
            Arm::A => (T::one() - self.p_a, self.p_a),
            Arm::B => (self.p_b, T::one() - self.p_b),
        }
    }
}

fn check_probability<T: Scalar>(name: &'static str, p: T) -> Result<()> {
    if p.is_finite() && p >= T::zero() && p <= T::one() {
        Ok(())
    } else {
        Err(Error::out_of_range(name, "[0, 1]", p.to_f64_lossy()))
    }
}

/// Two-valued Markov signal `s_n ∈ {+x, -x}` that flips sign with
/// probability `gamma = (1 - lambda) / 2` at every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalModel<T> {
    x: T,
    lambda: T,
    gamma: T,
}

impl<T: Scalar> SignalModel<T> {
    /// `x` must be a positive non-integer; `lambda` must lie in `[-1, 1)`.
    pub fn new(x: T, lambda: T) -> Result<Self> {
        check_amplitude(x)?;
        if !lambda.is_finite() || lambda < -T::one() || lambda > T::one() {
            return Err(Error::out_of_range(
                "lambda",
                "[-1, 1)",
                lambda.to_f64_lossy(),
            ));
        }
        if lambda == T::one() {
            return Err(Error::FrozenSignal);
        }
        let gamma = (T::one() - lambda) / T::lit(2.0);
        Ok(Self { x, lambda, gamma })
    }

    /// Builds the model from the switching probability, `gamma ∈ (0, 1]`.
    pub fn from_gamma(x: T, gamma: T) -> Result<Self> {
        if !gamma.is_finite() || gamma < T::zero() || gamma > T::one() {
            return Err(Error::out_of_range("gamma", "(0, 1]", gamma.to_f64_lossy()));
        }
        if gamma == T::zero() {
            return Err(Error::FrozenSignal);
        }
        check_amplitude(x)?;
        let lambda = T::one() - T::lit(2.0) * gamma;
        Ok(Self { x, lambda, gamma })
    }

    pub fn x(&self) -> T {
        self.x
    }

    /// Lag-one autocorrelation coefficient.
    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Sign-switching probability.
    pub fn gamma(&self) -> T {
        self.gamma
    }
}

fn check_amplitude<T: Scalar>(x: T) -> Result<()> {
    if !x.is_finite() || x <= T::zero() {
        return Err(Error::out_of_range("x", "(0, N)", x.to_f64_lossy()));
    }
    if x.fract() == T::zero() {
        return Err(Error::IntegerAmplitude(x.to_f64_lossy()));
    }
    Ok(())
}

/// Threshold bound `N` together with `[x]`, the largest integer below the
/// signal amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThresholdConfig {
    bound: usize,
    floor_x: i64,
}

impl ThresholdConfig {
    /// Requires `bound >= 1` and `x ∈ (0, bound)` non-integer.
    pub fn new<T: Scalar>(bound: usize, x: T) -> Result<Self> {
        if bound == 0 {
            return Err(Error::out_of_range("threshold bound", "[1, ∞)", 0.0));
        }
        check_amplitude(x)?;
        if x >= T::lit(bound as f64) {
            return Err(Error::out_of_range("x", "(0, N)", x.to_f64_lossy()));
        }
        let floor_x = x
            .floor()
            .to_i64()
            .expect("floor of a value below N fits in i64");
        Ok(Self { bound, floor_x })
    }

    /// `N`.
    pub fn bound(&self) -> usize {
        self.bound
    }

    /// `N` as a signed threshold value.
    pub fn max_threshold(&self) -> i64 {
        self.bound as i64
    }

    /// `[x]`.
    pub fn floor_x(&self) -> i64 {
        self.floor_x
    }

    /// `N - [x]`, the exponent of the large-`N` approximation.
    pub fn gap(&self) -> u32 {
        (self.max_threshold() - self.floor_x) as u32
    }

    /// Number of threshold levels, `2N + 1`.
    pub fn levels(&self) -> usize {
        2 * self.bound + 1
    }

    /// Length of the joint vector, `4N + 2`.
    pub fn state_count(&self) -> usize {
        2 * self.levels()
    }

    pub fn thresholds(&self) -> impl Iterator<Item = i64> + Clone {
        let n = self.max_threshold();
        -n..=n
    }

    /// Checks that the amplitude `x` of a signal model falls in the unit
    /// interval above `[x]`.
    pub fn check_signal<T: Scalar>(&self, model: &SignalModel<T>) -> Result<()> {
        let x = model.x();
        let lo = T::lit(self.floor_x as f64);
        if x > lo && x < lo + T::one() && x < T::lit(self.bound as f64) {
            Ok(())
        } else {
            Err(Error::AmplitudeMismatch {
                x: x.to_f64_lossy(),
                floor_x: self.floor_x,
                bound: self.bound,
            })
        }
    }

    /// Canonical position of a joint state: threshold-major, `+x` before `-x`.
    pub fn index_of(&self, state: JointState) -> usize {
        debug_assert!(state.threshold.unsigned_abs() as usize <= self.bound);
        let level = (state.threshold + self.max_threshold()) as usize;
        2 * level + state.sign.block_offset()
    }

    pub fn state_at(&self, index: usize) -> JointState {
        let sign = if index.is_multiple_of(2) {
            SignalSign::Plus
        } else {
            SignalSign::Minus
        };
        JointState {
            sign,
            threshold: (index / 2) as i64 - self.max_threshold(),
        }
    }

    /// Whether `state` selects arm A. Uses `[x]` only, so it needs no scalar.
    pub fn selects_a(&self, state: JointState) -> bool {
        match state.sign {
            SignalSign::Plus => state.threshold <= self.floor_x,
            SignalSign::Minus => state.threshold < -self.floor_x,
        }
    }
}

/// A point of the joint `(signal, threshold)` chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointState {
    pub sign: SignalSign,
    pub threshold: i64,
}

impl JointState {
    pub fn new(sign: SignalSign, threshold: i64) -> Self {
        Self { sign, threshold }
    }
}

/// Arm A iff `signal >= threshold`.
pub fn select_arm<T: PartialOrd>(signal: T, threshold: T) -> Arm {
    if signal >= threshold {
        Arm::A
    } else {
        Arm::B
    }
}

/// Unit threshold step after observing the reward of `selected`, clamped to `[-N, N]`.
pub fn update_threshold(current: i64, selected: Arm, won: bool, config: &ThresholdConfig) -> i64 {
    let n = config.max_threshold();
    debug_assert!(current.abs() <= n);
    let down = matches!((selected, won), (Arm::A, true) | (Arm::B, false));
    if down {
        (current - 1).max(-n)
    } else {
        (current + 1).min(n)
    }
}

/// Probability that the threshold moves up from `threshold` under signal `sign`.
pub fn upward_probability<T: Scalar>(
    sign: SignalSign,
    threshold: i64,
    env: &Environment<T>,
    model: &SignalModel<T>,
) -> T {
    let arm = select_arm(sign.value(model.x()), T::lit(threshold as f64));
    env.move_probabilities(arm).0
}
