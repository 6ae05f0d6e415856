//! Trajectory-level simulation of the decision maker.
//!
//! Two learners are available. [`SimulationMode::IntegerThreshold`] runs
//! the unit-step integer threshold used by the exact engine.
//! [`SimulationMode::GeneralizedTa`] runs the threshold adjuster
//! `TA_{n+1} = clamp(α TA_n ∓ Δ or Ω)` with `θ_n = k [TA_n]`, where `[·]`
//! is the floor (`[-0.2] = -1`, integers map to themselves). With
//! `k = α = Δ = Ω = 1` the two modes produce identical trajectories.
//!
//! Reproducibility: replication `r` draws from ChaCha8 keyed by
//! `seed_from_u64(seed)` on stream `r`. Each trajectory consumes one
//! uniform for the initial sign, then per step one uniform for the reward
//! and one for the signal flip, in that order. Counts are aggregated as
//! integers, so results do not depend on thread count or scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::cdr_curve;
use crate::model::{
    select_arm, update_threshold, Arm, Environment, JointState, SignalModel, SignalSign,
    ThresholdConfig,
};

/// Identifier echoed in output metadata.
pub const GENERATOR_ID: &str = "chacha8:seed_from_u64(seed):stream=replication";

/// |z| above which a cross-validation row is flagged.
pub const Z_FLAG_THRESHOLD: f64 = 4.0;

const BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    IntegerThreshold,
    GeneralizedTa,
}

/// Threshold-adjuster parameters `(k, α, Δ, Ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaParams {
    pub k: f64,
    pub alpha: f64,
    pub delta: f64,
    pub omega: f64,
}

impl TaParams {
    pub const UNIT: TaParams = TaParams {
        k: 1.0,
        alpha: 1.0,
        delta: 1.0,
        omega: 1.0,
    };

    pub fn is_unit(&self) -> bool {
        *self == Self::UNIT
    }
}

impl Default for TaParams {
    fn default() -> Self {
        Self::UNIT
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub env: Environment<f64>,
    pub model: SignalModel<f64>,
    pub config: ThresholdConfig,
    pub steps: usize,
    pub replications: usize,
    pub seed: u64,
    pub mode: SimulationMode,
    pub ta_params: Option<TaParams>,
}

impl SimulationConfig {
    /// Integer-threshold run with no adjuster parameters.
    pub fn integer(
        env: Environment<f64>,
        model: SignalModel<f64>,
        config: ThresholdConfig,
        steps: usize,
        replications: usize,
        seed: u64,
    ) -> Self {
        Self {
            env,
            model,
            config,
            steps,
            replications,
            seed,
            mode: SimulationMode::IntegerThreshold,
            ta_params: None,
        }
    }

    pub fn generalized(self, params: TaParams) -> Self {
        Self {
            mode: SimulationMode::GeneralizedTa,
            ta_params: Some(params),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be >= 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        self.config.check_signal(&self.model)?;
        let params = self.params();
        match self.mode {
            SimulationMode::IntegerThreshold if !params.is_unit() => Err(Error::InvalidConfig(
                "integer_threshold mode requires (k, alpha, delta, omega) = (1, 1, 1, 1)".into(),
            )),
            SimulationMode::GeneralizedTa => {
                if !(0.0..=1.0).contains(&params.alpha) {
                    return Err(Error::out_of_range("alpha", "[0, 1]", params.alpha));
                }
                for (name, v) in [
                    ("k", params.k),
                    ("delta", params.delta),
                    ("omega", params.omega),
                ] {
                    if !v.is_finite() {
                        return Err(Error::out_of_range(name, "finite reals", v));
                    }
                }
                Ok(())
            }
            SimulationMode::IntegerThreshold => Ok(()),
        }
    }

    pub fn params(&self) -> TaParams {
        self.ta_params.unwrap_or(TaParams::UNIT)
    }

    /// True when the run is statistically identical to the integer chain.
    pub fn reduces_to_integer_model(&self) -> bool {
        self.params().is_unit()
    }
}

/// Aggregated outcome of all replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryStats {
    /// Fraction of replications selecting arm A at decision `n`, index `n - 1`.
    pub cdr_by_step: Vec<f64>,
    /// Fraction of replications with `s_n = +x`, index `n - 1`.
    pub plus_signal_by_step: Vec<f64>,
    /// Counts of the joint state `(sign, [θ])` at the last decision, in the
    /// canonical joint order.
    pub final_threshold_histogram: Vec<u64>,
    pub replications: u64,
    /// Largest `|θ|` (integer mode) or `|TA|` (generalized mode) observed.
    pub max_abs_threshold: f64,
}

impl TrajectoryStats {
    /// Empirical CDR at decision `n` (1-based).
    pub fn cdr_at(&self, n: usize) -> f64 {
        self.cdr_by_step[n - 1]
    }
}

struct Counts {
    correct: Vec<u64>,
    plus: Vec<u64>,
    histogram: Vec<u64>,
    max_abs: f64,
}

impl Counts {
    fn new(steps: usize, states: usize) -> Self {
        Self {
            correct: vec![0; steps],
            plus: vec![0; steps],
            histogram: vec![0; states],
            max_abs: 0.0,
        }
    }

    fn merge(mut self, other: Counts) -> Counts {
        for (a, b) in self.correct.iter_mut().zip(&other.correct) {
            *a += b;
        }
        for (a, b) in self.plus.iter_mut().zip(&other.plus) {
            *a += b;
        }
        for (a, b) in self.histogram.iter_mut().zip(&other.histogram) {
            *a += b;
        }
        self.max_abs = self.max_abs.max(other.max_abs);
        self
    }
}

/// Random stream of replication `r`.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Runs `cfg.replications` independent trajectories of `cfg.steps` decisions.
pub fn simulate(cfg: &SimulationConfig) -> Result<TrajectoryStats> {
    cfg.validate()?;
    let states = cfg.config.state_count();
    let blocks = cfg.replications.div_ceil(BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut counts = Counts::new(cfg.steps, states);
            let end = ((b + 1) * BLOCK).min(cfg.replications);
            for r in b * BLOCK..end {
                let mut rng = replication_rng(cfg.seed, r as u64);
                match cfg.mode {
                    SimulationMode::IntegerThreshold => run_integer(cfg, &mut rng, &mut counts),
                    SimulationMode::GeneralizedTa => run_generalized(cfg, &mut rng, &mut counts),
                }
            }
            counts
        })
        .reduce(|| Counts::new(cfg.steps, states), Counts::merge);

    let reps = cfg.replications as f64;
    Ok(TrajectoryStats {
        cdr_by_step: counts.correct.iter().map(|&c| c as f64 / reps).collect(),
        plus_signal_by_step: counts.plus.iter().map(|&c| c as f64 / reps).collect(),
        final_threshold_histogram: counts.histogram,
        replications: cfg.replications as u64,
        max_abs_threshold: counts.max_abs,
    })
}

fn initial_sign(rng: &mut ChaCha8Rng) -> SignalSign {
    if rng.random::<f64>() < 0.5 {
        SignalSign::Plus
    } else {
        SignalSign::Minus
    }
}

/// Reward draw followed by flip draw; returns (won, next sign).
fn draw_step(rng: &mut ChaCha8Rng, p_win: f64, gamma: f64, sign: SignalSign) -> (bool, SignalSign) {
    let won = rng.random::<f64>() < p_win;
    let flip = rng.random::<f64>() < gamma;
    (won, if flip { sign.flipped() } else { sign })
}

fn run_integer(cfg: &SimulationConfig, rng: &mut ChaCha8Rng, counts: &mut Counts) {
    let x = cfg.model.x();
    let gamma = cfg.model.gamma();
    let mut sign = initial_sign(rng);
    let mut theta: i64 = 0;
    for n in 0..cfg.steps {
        counts.max_abs = counts.max_abs.max(theta.abs() as f64);
        let arm = select_arm(sign.value(x), theta as f64);
        record(counts, n, arm, sign);
        if n + 1 == cfg.steps {
            counts.histogram[cfg.config.index_of(JointState::new(sign, theta))] += 1;
        }
        let (won, next) = draw_step(rng, cfg.env.win_probability(arm), gamma, sign);
        theta = update_threshold(theta, arm, won, &cfg.config);
        sign = next;
    }
}

/// One adjuster update, clamped to `[-N, N]`.
pub fn update_adjuster(ta: f64, arm: Arm, won: bool, params: &TaParams, bound: f64) -> f64 {
    let decayed = params.alpha * ta;
    let next = match (arm, won) {
        (Arm::A, true) => decayed - params.delta,
        (Arm::A, false) => decayed + params.omega,
        (Arm::B, true) => decayed + params.delta,
        (Arm::B, false) => decayed - params.omega,
    };
    next.clamp(-bound, bound)
}

fn run_generalized(cfg: &SimulationConfig, rng: &mut ChaCha8Rng, counts: &mut Counts) {
    let x = cfg.model.x();
    let gamma = cfg.model.gamma();
    let params = cfg.params();
    let bound = cfg.config.max_threshold() as f64;
    let mut sign = initial_sign(rng);
    let mut ta = 0.0_f64;
    for n in 0..cfg.steps {
        counts.max_abs = counts.max_abs.max(ta.abs());
        let level = ta.floor();
        let theta = params.k * level;
        let arm = select_arm(sign.value(x), theta);
        record(counts, n, arm, sign);
        if n + 1 == cfg.steps {
            counts.histogram[cfg.config.index_of(JointState::new(sign, level as i64))] += 1;
        }
        let (won, next) = draw_step(rng, cfg.env.win_probability(arm), gamma, sign);
        ta = update_adjuster(ta, arm, won, &params, bound);
        sign = next;
    }
}

fn record(counts: &mut Counts, n: usize, arm: Arm, sign: SignalSign) {
    if arm == Arm::A {
        counts.correct[n] += 1;
    }
    if sign == SignalSign::Plus {
        counts.plus[n] += 1;
    }
}

/// One row of a simulation-versus-exact comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidationRow {
    pub n: usize,
    pub empirical: f64,
    pub exact: f64,
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossValidationReport {
    pub rows: Vec<CrossValidationRow>,
}

impl CrossValidationReport {
    /// Compares `stats` against an exact curve `(n, CDR_n)` at `sample_steps`.
    ///
    /// The binomial standard error is floored at `1 / (2R)` so cells where the
    /// exact value is 0 or 1 still produce finite z-scores.
    pub fn from_parts(
        stats: &TrajectoryStats,
        exact_curve: &[(usize, f64)],
        sample_steps: &[usize],
    ) -> Result<Self> {
        let reps = stats.replications as f64;
        let rows = sample_steps
            .iter()
            .map(|&n| {
                if n == 0 || n > stats.cdr_by_step.len() || n > exact_curve.len() {
                    return Err(Error::out_of_range("sample step", "[1, steps]", n as f64));
                }
                let empirical = stats.cdr_at(n);
                let exact = exact_curve[n - 1].1;
                let se = (exact * (1.0 - exact) / reps).sqrt().max(0.5 / reps);
                let z = (empirical - exact) / se;
                Ok(CrossValidationRow {
                    n,
                    empirical,
                    exact,
                    z,
                    flagged: z.abs() > Z_FLAG_THRESHOLD,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows })
    }

    pub fn flagged(&self) -> impl Iterator<Item = &CrossValidationRow> {
        self.rows.iter().filter(|r| r.flagged)
    }

    pub fn any_flagged(&self) -> bool {
        self.flagged().next().is_some()
    }
}

/// Simulates `cfg` and compares against the exact engine at `sample_steps`
/// (every step when empty). Only runs that reduce to the integer chain
/// have an exact counterpart.
pub fn empirical_cdr_vs_exact(
    cfg: &SimulationConfig,
    sample_steps: &[usize],
) -> Result<(TrajectoryStats, CrossValidationReport)> {
    if !cfg.reduces_to_integer_model() {
        return Err(Error::InvalidConfig(
            "exact comparison needs the integer model, i.e. (k, alpha, delta, omega) = (1, 1, 1, 1)"
                .into(),
        ));
    }
    let stats = simulate(cfg)?;
    let exact = cdr_curve(&cfg.env, &cfg.model, &cfg.config, cfg.steps)?;
    let all: Vec<usize>;
    let samples = if sample_steps.is_empty() {
        all = (1..=cfg.steps).collect();
        &all
    } else {
        sample_steps
    };
    let report = CrossValidationReport::from_parts(&stats, &exact, samples)?;
    Ok((stats, report))
}
