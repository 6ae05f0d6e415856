use serde_json::{Map, Value};
use towbandit::montecarlo::GENERATOR_ID;
use towbandit::{
    build_transition_matrix, cdr_curve, cdr_infinity_closed_form, empirical_cdr_vs_exact, f_approx,
    heatmap, lambda_sweep, simulate, stationary_distribution, EnvGrid64, Environment64,
    HeatmapSpec64, LambdaGrid64, SignalModel64, SimulationConfig, TaParams, ThresholdConfig,
};

use crate::args::{
    CdrCurveArgs, ChainArgs, ClosedFormArgs, Command, EnvArgs, HeatmapArgs, LambdaGridArgs,
    LambdaSweepArgs, ModeArg, SimulateArgs, StationaryArgs,
};
use crate::output::{Cell, Table};
use crate::svg;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Param(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Param(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<towbandit::Error> for CliError {
    fn from(e: towbandit::Error) -> Self {
        match e {
            towbandit::Error::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            other => CliError::Param(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Everything a command produces before it is written out.
pub struct Outcome {
    pub table: Table,
    /// Extra metadata entries (seed, residual, ...).
    pub metadata: Map<String, Value>,
    /// `(file suffix, document)` pairs for auxiliary SVG output.
    pub svgs: Vec<(&'static str, String)>,
}

impl Outcome {
    fn table(table: Table) -> Self {
        Self {
            table,
            metadata: Map::new(),
            svgs: Vec::new(),
        }
    }
}

pub fn execute(cmd: &Command) -> CliResult<Outcome> {
    match cmd {
        Command::CdrCurve(a) => cmd_cdr_curve(a),
        Command::LambdaSweep(a) => cmd_lambda_sweep(a),
        Command::Heatmap(a) => cmd_heatmap(a),
        Command::ClosedForm(a) => cmd_closed_form(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Stationary(a) => cmd_stationary(a),
    }
}

fn threshold_config(chain: &ChainArgs) -> CliResult<ThresholdConfig> {
    Ok(ThresholdConfig::new(chain.threshold_bound, chain.x)?)
}

fn chain_setup(
    env: &EnvArgs,
    lambda: f64,
    chain: &ChainArgs,
) -> CliResult<(Environment64, SignalModel64, ThresholdConfig)> {
    let config = threshold_config(chain)?;
    let model = SignalModel64::new(chain.x, lambda)?;
    let env = Environment64::new(env.p_a, env.p_b)?;
    Ok((env, model, config))
}

fn positive(name: &str, v: usize) -> CliResult<()> {
    if v == 0 {
        return Err(CliError::Param(format!("{name} must be >= 1")));
    }
    Ok(())
}

fn lambda_grid(g: &LambdaGridArgs) -> CliResult<LambdaGrid64> {
    Ok(LambdaGrid64::range(
        g.lambda_min,
        g.lambda_max,
        g.lambda_step,
    )?)
}

fn cmd_cdr_curve(a: &CdrCurveArgs) -> CliResult<Outcome> {
    let (env, model, config) = chain_setup(&a.env, a.lambda, &a.chain)?;
    positive("steps", a.steps)?;
    let mut table = Table::new(vec!["n", "cdr"]);
    for (n, c) in cdr_curve(&env, &model, &config, a.steps)? {
        table.push(vec![Cell::Int(n as i64), Cell::Num(c)]);
    }
    Ok(Outcome::table(table))
}

fn cmd_lambda_sweep(a: &LambdaSweepArgs) -> CliResult<Outcome> {
    let config = threshold_config(&a.chain)?;
    let env = Environment64::new(a.env.p_a, a.env.p_b)?;
    positive("at-step", a.at_step)?;
    let grid = lambda_grid(&a.grid)?;
    let mut table = Table::new(vec!["lambda", "cdr"]);
    for (l, c) in lambda_sweep(&env, a.chain.x, &config, &grid, a.at_step)? {
        table.push(vec![Cell::Num(l), Cell::Num(c)]);
    }
    Ok(Outcome::table(table))
}

fn cmd_heatmap(a: &HeatmapArgs) -> CliResult<Outcome> {
    let config = threshold_config(&a.chain)?;
    positive("at-step", a.at_step)?;
    if !(a.tie_tol >= 0.0) {
        return Err(CliError::Param(format!(
            "tie-tol must be >= 0, got {}",
            a.tie_tol
        )));
    }
    let env_grid = EnvGrid64::uniform(a.grid_step)?;
    let levels = EnvGrid64::levels(a.grid_step)?;
    let mut spec = HeatmapSpec64::new(a.chain.x, config);
    spec.lambda_grid = lambda_grid(&a.lambda)?;
    spec.at_step = a.at_step;
    spec.tie_tol = a.tie_tol;
    let records = heatmap(&env_grid, &spec)?;

    let mut table = Table::new(vec!["p_a", "p_b", "max_cdr", "lambda_m", "argmax_count"]);
    for r in &records {
        table.push(vec![
            Cell::Num(r.p_a),
            Cell::Num(r.p_b),
            Cell::Num(r.max_cdr),
            Cell::Num(r.lambda_m),
            Cell::Int(r.argmax_count as i64),
        ]);
    }
    let mut out = Outcome::table(table);
    if a.svg {
        out.svgs
            .push(("_max_cdr.svg", svg::max_cdr(&records, &levels)));
        out.svgs
            .push(("_lambda_m.svg", svg::lambda_m(&records, &levels)));
    }
    Ok(out)
}

fn cmd_closed_form(a: &ClosedFormArgs) -> CliResult<Outcome> {
    let config = threshold_config(&a.chain)?;
    let value = cdr_infinity_closed_form(a.p, &config)?;
    let out = if a.f_approx {
        let m = a.m.unwrap_or_else(|| config.gap());
        let f = f_approx(a.p, m)?;
        let mut table = Table::new(vec!["p", "cdr_infinity", "m", "f_approx", "difference"]);
        table.push(vec![
            Cell::Num(a.p),
            Cell::Num(value),
            Cell::Int(m as i64),
            Cell::Num(f),
            Cell::Num(value - f),
        ]);
        table
    } else {
        let mut table = Table::new(vec!["p", "cdr_infinity"]);
        table.push(vec![Cell::Num(a.p), Cell::Num(value)]);
        table
    };
    Ok(Outcome::table(out))
}

fn cmd_simulate(a: &SimulateArgs) -> CliResult<Outcome> {
    let (env, model, config) = chain_setup(&a.env, a.lambda, &a.chain)?;
    let params = TaParams {
        k: a.k,
        alpha: a.alpha,
        delta: a.delta,
        omega: a.omega,
    };
    let mut cfg = SimulationConfig::integer(env, model, config, a.steps, a.replications, a.seed);
    cfg.ta_params = Some(params);
    if a.mode == ModeArg::Generalized {
        cfg = cfg.generalized(params);
    }
    cfg.validate()?;

    let mut metadata = Map::new();
    metadata.insert("seed".into(), Value::from(a.seed));
    metadata.insert("generator".into(), Value::from(GENERATOR_ID));

    let table = match a.mode {
        ModeArg::Integer => {
            let (_, report) = empirical_cdr_vs_exact(&cfg, &a.sample_steps)?;
            metadata.insert("flagged".into(), Value::from(report.flagged().count()));
            let mut table = Table::new(vec!["n", "empirical_cdr", "exact_cdr", "z"]);
            for row in &report.rows {
                table.push(vec![
                    Cell::Int(row.n as i64),
                    Cell::Num(row.empirical),
                    Cell::Num(row.exact),
                    Cell::Num(row.z),
                ]);
            }
            table
        }
        ModeArg::Generalized => {
            if let Some(&n) = a.sample_steps.iter().find(|&&n| n == 0 || n > a.steps) {
                return Err(CliError::Param(format!(
                    "sample step must be in [1, {}], got {n}",
                    a.steps
                )));
            }
            let stats = simulate(&cfg)?;
            metadata.insert(
                "max_abs_threshold".into(),
                Value::from(stats.max_abs_threshold),
            );
            let steps: Vec<usize> = if a.sample_steps.is_empty() {
                (1..=a.steps).collect()
            } else {
                a.sample_steps.clone()
            };
            let mut table = Table::new(vec!["n", "empirical_cdr"]);
            for n in steps {
                table.push(vec![Cell::Int(n as i64), Cell::Num(stats.cdr_at(n))]);
            }
            table
        }
    };
    Ok(Outcome {
        table,
        metadata,
        svgs: Vec::new(),
    })
}

fn cmd_stationary(a: &StationaryArgs) -> CliResult<Outcome> {
    let (env, model, config) = chain_setup(&a.env, a.lambda, &a.chain)?;
    let m = build_transition_matrix(&env, &model, &config)?;
    let solution = stationary_distribution(&m, a.tol, a.max_iter)?;
    let mut table = Table::new(vec!["signal", "threshold", "prob"]);
    for (idx, &p) in solution.distribution.entries().iter().enumerate() {
        let state = config.state_at(idx);
        table.push(vec![
            Cell::Num(state.sign.value(a.chain.x)),
            Cell::Int(state.threshold),
            Cell::Num(p),
        ]);
    }
    let mut metadata = Map::new();
    metadata.insert("residual".into(), Value::from(solution.residual));
    metadata.insert("iterations".into(), Value::from(solution.iterations));
    Ok(Outcome {
        table,
        metadata,
        svgs: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::args::Cli;
    use clap::Parser;
    use towbandit::exact::{DEFAULT_STATIONARY_MAX_ITER, DEFAULT_STATIONARY_TOL};

    #[test]
    fn stationary_defaults_match_library() {
        let cli = Cli::parse_from(["tow-bandit", "stationary"]);
        let Some(Command::Stationary(a)) = cli.command else {
            panic!("expected stationary");
        };
        assert_eq!(a.tol, DEFAULT_STATIONARY_TOL);
        assert_eq!(a.max_iter, DEFAULT_STATIONARY_MAX_ITER);
    }

    #[test]
    fn exit_codes() {
        let bad = execute(
            &Cli::parse_from(["t", "cdr-curve", "--x", "3.0"])
                .command
                .unwrap(),
        );
        assert_eq!(bad.err().unwrap().exit_code(), 2);
        let slow = execute(
            &Cli::parse_from([
                "t",
                "stationary",
                "--max-iter",
                "1",
                "--p-a",
                "0.9",
                "--p-b",
                "0.2",
            ])
            .command
            .unwrap(),
        );
        assert_eq!(slow.err().unwrap().exit_code(), 3);
    }
}
