//! Exact and Monte Carlo engine for tug-of-war decision making in a
//! two-armed bandit, driven by a two-valued Markov signal.
//!
//! The learner compares a signal `s_n ∈ {+x, -x}` against an integer
//! threshold `θ_n ∈ [-N, N]` to pick an arm. The pair `(s_n, θ_n)` is a
//! Markov chain on `4N + 2` states; [`exact`] evolves its distribution,
//! [`analytic`] holds the closed forms available when `p_a + p_b = 1`,
//! [`montecarlo`] simulates trajectories, and [`sweep`] evaluates the
//! `λ` and `(p_a, p_b)` grids.
//!
//! The numerical types are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common choices.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod error;
pub mod exact;
pub mod model;
pub mod montecarlo;
pub mod scalar;
pub mod sweep;

pub use analytic::{
    cdr_infinity_closed_form, f_approx, stationary_closed_form, BoundaryEnvironment,
};
pub use error::{Error, Result};
pub use exact::{
    build_transition_matrix, cdr, cdr_at_step, cdr_curve, initial_distribution, propagate,
    stationary_distribution, JointDistribution, StationarySolution, TransitionMatrix,
};
pub use model::{
    select_arm, update_threshold, upward_probability, Arm, Environment, JointState, SignalModel,
    SignalSign, ThresholdConfig,
};
pub use montecarlo::{
    empirical_cdr_vs_exact, simulate, CrossValidationReport, SimulationConfig, SimulationMode,
    TaParams, TrajectoryStats,
};
pub use scalar::Scalar;
pub use sweep::{
    argmax_lambda, heatmap, lambda_sweep, ArgmaxLambda, EnvGrid, HeatmapSpec, LambdaGrid,
    SweepRecord,
};

pub type Environment64 = Environment<f64>;
pub type Environment32 = Environment<f32>;
pub type SignalModel64 = SignalModel<f64>;
pub type SignalModel32 = SignalModel<f32>;
pub type JointDistribution64 = JointDistribution<f64>;
pub type JointDistribution32 = JointDistribution<f32>;
pub type TransitionMatrix64 = TransitionMatrix<f64>;
pub type TransitionMatrix32 = TransitionMatrix<f32>;
pub type BoundaryEnvironment64 = BoundaryEnvironment<f64>;
pub type LambdaGrid64 = LambdaGrid<f64>;
pub type EnvGrid64 = EnvGrid<f64>;
pub type SweepRecord64 = SweepRecord<f64>;
pub type HeatmapSpec64 = HeatmapSpec<f64>;
