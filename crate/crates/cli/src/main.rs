#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;
mod svg;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{Map, Value};

use args::{Cli, Command, Format};
use commands::{CliError, CliResult};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let command = match (cli.params_json, cli.command) {
        (Some(path), _) => {
            let mut cmd = load_command(&path)?;
            *cmd.output_mut() = cli.output;
            if let Some(jobs) = cmd.jobs_mut() {
                *jobs = cli.jobs;
            }
            cmd
        }
        (None, Some(cmd)) => cmd,
        (None, None) => {
            return Err(CliError::Param(
                "a subcommand or --params-json is required (see --help)".into(),
            ))
        }
    };
    let jobs = match &command {
        Command::Heatmap(a) => a.jobs,
        Command::Simulate(a) => a.jobs,
        _ => 0,
    };
    if jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Io(e.to_string()))?;
    }

    let started = Instant::now();
    let outcome = commands::execute(&command)?;
    let output = command.output();

    let mut metadata = Map::new();
    metadata.insert("tool".into(), Value::from("tow-bandit"));
    metadata.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    let echo = serde_json::to_value(&command).map_err(|e| CliError::Io(e.to_string()))?;
    if let Value::Object(echo) = echo {
        metadata.extend(echo);
    }
    metadata.extend(outcome.metadata);
    if output.timing {
        metadata.insert(
            "duration_s".into(),
            Value::from(started.elapsed().as_secs_f64()),
        );
    }
    let body = output::render(&outcome.table, &metadata, output.format);

    let prefix = match &command {
        Command::Heatmap(a) => a.out_prefix.clone(),
        _ => None,
    };
    let main_path = match &prefix {
        Some(p) => Some(with_suffix(
            p,
            match output.format {
                Format::Csv => ".csv",
                Format::Json => ".json",
            },
        )),
        None => output.out.clone(),
    };
    write_out(main_path.as_deref(), &body)?;
    if let Some(p) = &prefix {
        for (suffix, doc) in &outcome.svgs {
            write_out(Some(&with_suffix(p, suffix)), doc)?;
        }
    }
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

fn write_out(path: Option<&Path>, body: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

/// Reads the `command` and `params` entries of a metadata echo, from either
/// a JSON output (or bare metadata object) or a CSV comment header.
fn load_command(path: &Path) -> CliResult<Command> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let meta = match serde_json::from_str::<Value>(&text) {
        Ok(v) => v.get("metadata").cloned().unwrap_or(v),
        Err(_) => csv_header(&text)?,
    };
    let pick = |key: &str| {
        meta.get(key)
            .cloned()
            .ok_or_else(|| CliError::Param(format!("{}: no `{key}` entry", path.display())))
    };
    let mut echo = Map::new();
    echo.insert("command".into(), pick("command")?);
    echo.insert("params".into(), pick("params")?);
    serde_json::from_value(Value::Object(echo))
        .map_err(|e| CliError::Param(format!("{}: {e}", path.display())))
}

fn csv_header(text: &str) -> CliResult<Value> {
    let mut meta = Map::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let Some((key, value)) = line.trim_start_matches('#').trim().split_once(": ") else {
            continue;
        };
        let value = match key {
            "params" => {
                serde_json::from_str(value).map_err(|e| CliError::Param(format!("params: {e}")))?
            }
            _ => Value::from(value),
        };
        meta.insert(key.to_string(), value);
    }
    Ok(Value::Object(meta))
}
