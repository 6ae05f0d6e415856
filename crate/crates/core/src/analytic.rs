//! Closed forms on the `p_a + p_b = 1` line.
//!
//! With `p_a = p` and `p_b = q = 1 - p` every threshold step goes up with
//! probability `q` whatever the signal, so the threshold marginal is a
//! birth-death chain with ratio `r = q/p` and the signal stays uniform:
//!
//! ```text
//! π(±x, i) = r^(N+i) / (2 Σ_{k<2N+1} r^k)
//! CDR_∞    = (S(N+[x]+1) + S(N-[x])) / (2 S(2N+1)),   S(k) = Σ_{j<k} r^j
//! ```
//!
//! Both are evaluated through geometric sums of the ratio that is `≤ 1`,
//! which keeps them free of cancellation near `p = 1/2` and of overflow for
//! large `N`. At `p = 1/2` they reduce to the uniform distribution and `1/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::JointDistribution;
use crate::model::{Environment, JointState, SignalSign, ThresholdConfig};
use crate::scalar::Scalar;

/// An environment on the boundary line, parameterized by `p = p_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEnvironment<T> {
    p: T,
}

impl<T: Scalar> BoundaryEnvironment<T> {
    /// `p` must lie strictly inside `(0, 1)`.
    pub fn new(p: T) -> Result<Self> {
        if p.is_finite() && p > T::zero() && p < T::one() {
            Ok(Self { p })
        } else {
            Err(Error::out_of_range("p", "(0, 1)", p.to_f64_lossy()))
        }
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn environment(&self) -> Environment<T> {
        Environment::boundary(self.p).expect("p in (0, 1)")
    }

    /// `(ratio, descending)`: the ratio of `{q/p, p/q}` that is at most one,
    /// and whether it is `q/p` (mass piles up at low thresholds).
    fn ratio(&self) -> (T, bool) {
        let q = T::one() - self.p;
        if q <= self.p {
            (q / self.p, true)
        } else {
            (self.p / q, false)
        }
    }

    pub fn cdr_infinity(&self, config: &ThresholdConfig) -> T {
        let n = config.bound();
        let fx = config.floor_x();
        // exponents of the two partial sums, counted from the heavy end
        let a = (n as i64 + fx + 1) as usize;
        let b = (n as i64 - fx) as usize;
        let total = 2 * n + 1;
        let (r, descending) = self.ratio();
        let s_total = geometric_sum(r, total);
        if descending {
            (geometric_sum(r, a) + geometric_sum(r, b)) / (T::lit(2.0) * s_total)
        } else {
            // mirror image: the same sums counted from the top threshold down
            let tail_a = r.powi((total - a) as i32) * geometric_sum(r, a);
            let tail_b = r.powi((total - b) as i32) * geometric_sum(r, b);
            (tail_a + tail_b) / (T::lit(2.0) * s_total)
        }
    }

    pub fn stationary(&self, config: &ThresholdConfig) -> JointDistribution<T> {
        let n = config.max_threshold();
        let (r, descending) = self.ratio();
        let norm = T::lit(2.0) * geometric_sum(r, config.levels());
        let mut entries = vec![T::zero(); config.state_count()];
        for i in config.thresholds() {
            let k = if descending { n + i } else { n - i };
            let v = r.powi(k as i32) / norm;
            for sign in SignalSign::BOTH {
                entries[config.index_of(JointState::new(sign, i))] = v;
            }
        }
        JointDistribution::from_raw(entries)
    }
}

/// `Σ_{j<k} r^j`.
fn geometric_sum<T: Scalar>(r: T, k: usize) -> T {
    let mut sum = T::zero();
    let mut term = T::one();
    for _ in 0..k {
        sum = sum + term;
        term = term * r;
    }
    sum
}

/// Long-run correct decision rate on the boundary line.
pub fn cdr_infinity_closed_form<T: Scalar>(p: T, config: &ThresholdConfig) -> Result<T> {
    Ok(BoundaryEnvironment::new(p)?.cdr_infinity(config))
}

/// Stationary distribution on the boundary line.
pub fn stationary_closed_form<T: Scalar>(
    p: T,
    config: &ThresholdConfig,
) -> Result<JointDistribution<T>> {
    Ok(BoundaryEnvironment::new(p)?.stationary(config))
}

/// Large-`N` approximation `1 - ((1-p)/p)^m / 2` for `p ∈ (1/2, 1)`.
///
/// The limit of [`cdr_infinity_closed_form`] as `N → ∞` with
/// `m = N - [x]` held fixed; `m` is not checked against any config.
pub fn f_approx<T: Scalar>(p: T, m: u32) -> Result<T> {
    if !(p.is_finite() && p > T::lit(0.5) && p < T::one()) {
        return Err(Error::out_of_range("p", "(0.5, 1)", p.to_f64_lossy()));
    }
    if m == 0 {
        return Err(Error::out_of_range("m", "[1, ∞)", 0.0));
    }
    let ratio = (T::one() - p) / p;
    Ok(T::one() - ratio.powi(m as i32) / T::lit(2.0))
}
