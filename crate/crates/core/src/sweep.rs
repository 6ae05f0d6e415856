//! Grid sweeps over the autocorrelation coefficient and the environment plane.
//!
//! Every cell is evaluated with the exact engine. Cells are independent and
//! computed in parallel; the assembled output is sorted by `(p_a, p_b)` so it
//! does not depend on scheduling.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{build_transition_matrix, cdr, initial_distribution, propagate};
use crate::model::{Environment, SignalModel, ThresholdConfig};
use crate::scalar::Scalar;

/// Default tie tolerance of [`argmax_lambda`].
pub const DEFAULT_TIE_TOL: f64 = 1e-12;
/// Default decision step used as the long-run proxy.
pub const DEFAULT_AT_STEP: usize = 1000;

/// Grid points are snapped to this many decimals to avoid accumulation drift.
const GRID_DECIMALS: i32 = 12;

fn snap(v: f64) -> f64 {
    let scale = 10f64.powi(GRID_DECIMALS);
    (v * scale).round() / scale
}

/// Ordered autocorrelation coefficients, all in `[-1, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaGrid<T> {
    values: Vec<T>,
}

impl<T: Scalar> LambdaGrid<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidConfig("lambda grid is empty".into()));
        }
        for &v in &values {
            if !(v >= -T::one() && v < T::one()) {
                return Err(Error::out_of_range("lambda", "[-1, 1)", v.to_f64_lossy()));
            }
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidConfig(
                "lambda grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { values })
    }

    /// `min, min + step, …` up to `max` inclusive, with `+1` always excluded.
    pub fn range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::out_of_range("lambda step", "(0, ∞)", step));
        }
        if !(min <= max) {
            return Err(Error::InvalidConfig(format!(
                "lambda min {min} exceeds max {max}"
            )));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        let values = (0..count)
            .map(|k| snap(min + k as f64 * step))
            .filter(|&v| v < 1.0)
            .map(T::lit)
            .collect();
        Self::new(values)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl<T: Scalar> Default for LambdaGrid<T> {
    /// `{-1.00, -0.99, …, 0.99}`, 200 points.
    fn default() -> Self {
        Self::range(-1.0, 0.99, 0.01).expect("default lambda grid is valid")
    }
}

/// Environment pairs with `p_a > p_b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvGrid<T> {
    values: Vec<(T, T)>,
}

impl<T: Scalar> EnvGrid<T> {
    pub fn new(values: Vec<(T, T)>) -> Result<Self> {
        for &(a, b) in &values {
            Environment::new(a, b)?;
            if !(a > b) {
                return Err(Error::InvalidConfig(format!(
                    "environment grid requires p_a > p_b, got ({a}, {b})"
                )));
            }
        }
        Ok(Self { values })
    }

    /// All pairs `p_a > p_b` drawn from `{step, 2·step, …} ∩ (0, 1)`.
    pub fn uniform(step: f64) -> Result<Self> {
        let levels = Self::levels(step)?;
        let mut values = Vec::new();
        for &a in &levels {
            for &b in &levels {
                if b < a {
                    values.push((T::lit(a), T::lit(b)));
                }
            }
        }
        Self::new(values)
    }

    /// Probability levels `{step, 2·step, …}` strictly below one.
    pub fn levels(step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0 && step < 1.0) {
            return Err(Error::out_of_range("grid step", "(0, 1)", step));
        }
        Ok((1..)
            .map(|k| snap(k as f64 * step))
            .take_while(|&v| v < 1.0 - 1e-9)
            .collect())
    }

    pub fn values(&self) -> &[(T, T)] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `CDR_at_step` for every `λ` of the grid.
pub fn lambda_sweep<T: Scalar>(
    env: &Environment<T>,
    x: T,
    config: &ThresholdConfig,
    grid: &LambdaGrid<T>,
    at_step: usize,
) -> Result<Vec<(T, T)>> {
    if at_step == 0 {
        return Err(Error::out_of_range("at_step", "[1, ∞)", 0.0));
    }
    let mu1 = initial_distribution(config);
    grid.values
        .iter()
        .map(|&lambda| {
            let model = SignalModel::new(x, lambda)?;
            let m = build_transition_matrix(env, &model, config)?;
            let mu = propagate(&mu1, &m, at_step - 1)?;
            Ok((lambda, cdr(&mu, config)))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ArgmaxLambda<T> {
    /// Mean of every `λ` whose CDR is within `tie_tol` of the maximum.
    pub lambda_m: T,
    pub max_cdr: T,
    pub argmax_count: usize,
}

pub fn argmax_lambda<T: Scalar>(sweep: &[(T, T)], tie_tol: T) -> Result<ArgmaxLambda<T>> {
    if sweep.is_empty() {
        return Err(Error::InvalidConfig("argmax over an empty sweep".into()));
    }
    if !(tie_tol >= T::zero()) {
        return Err(Error::out_of_range(
            "tie_tol",
            "[0, ∞)",
            tie_tol.to_f64_lossy(),
        ));
    }
    let max_cdr = sweep
        .iter()
        .map(|&(_, c)| c)
        .fold(T::neg_infinity(), T::max);
    let (sum, count) = sweep
        .iter()
        .filter(|&&(_, c)| c >= max_cdr - tie_tol)
        .fold((T::zero(), 0usize), |(s, n), &(l, _)| (s + l, n + 1));
    Ok(ArgmaxLambda {
        lambda_m: sum / T::lit(count as f64),
        max_cdr,
        argmax_count: count,
    })
}

/// One heatmap cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRecord<T> {
    pub p_a: T,
    pub p_b: T,
    pub max_cdr: T,
    pub lambda_m: T,
    pub argmax_count: usize,
}

/// Parameters shared by every heatmap cell.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec<T> {
    pub x: T,
    pub config: ThresholdConfig,
    pub lambda_grid: LambdaGrid<T>,
    pub at_step: usize,
    pub tie_tol: T,
}

impl<T: Scalar> HeatmapSpec<T> {
    /// Defaults: full `λ` grid, `n = 1000`, tie tolerance `1e-12`.
    pub fn new(x: T, config: ThresholdConfig) -> Self {
        Self {
            x,
            config,
            lambda_grid: LambdaGrid::default(),
            at_step: DEFAULT_AT_STEP,
            tie_tol: T::lit(DEFAULT_TIE_TOL),
        }
    }

    pub fn cell(&self, p_a: T, p_b: T) -> Result<SweepRecord<T>> {
        let env = Environment::new(p_a, p_b)?;
        let sweep = lambda_sweep(&env, self.x, &self.config, &self.lambda_grid, self.at_step)?;
        let best = argmax_lambda(&sweep, self.tie_tol)?;
        Ok(SweepRecord {
            p_a,
            p_b,
            max_cdr: best.max_cdr,
            lambda_m: best.lambda_m,
            argmax_count: best.argmax_count,
        })
    }
}

/// One record per grid cell, sorted by `(p_a, p_b)`.
pub fn heatmap<T: Scalar>(
    env_grid: &EnvGrid<T>,
    spec: &HeatmapSpec<T>,
) -> Result<Vec<SweepRecord<T>>> {
    let mut records = env_grid
        .values
        .par_iter()
        .map(|&(a, b)| spec.cell(a, b))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by(|l, r| {
        l.p_a
            .partial_cmp(&r.p_a)
            .unwrap_or(Ordering::Equal)
            .then(l.p_b.partial_cmp(&r.p_b).unwrap_or(Ordering::Equal))
    });
    Ok(records)
}
