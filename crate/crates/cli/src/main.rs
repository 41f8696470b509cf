mod args;
mod commands;
mod output;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use lunar_polar::continuation::StepConfig;
use lunar_polar::integrator::IntegratorConfig;
use serde::Serialize;

use args::{Cli, Command};
use commands::Status;
use output::{describe_output, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Solver(lunar_polar::error::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 4,
            CliError::Solver(_) => 3,
            _ => 1,
        }
    }
}

fn step_config(integrator_tol: f64, max_step: Option<f64>) -> Result<StepConfig, CliError> {
    if !(integrator_tol > 0.0) {
        return Err(CliError::Usage("--integrator-tol must be positive".into()));
    }
    let mut step = StepConfig::default();
    if let Some(max) = max_step {
        if !(max > 0.0) {
            return Err(CliError::Usage("--h-step must be positive".into()));
        }
        step.max = max;
        step.initial = step.initial.min(max);
    }
    step.shooting.integrator = IntegratorConfig::with_tolerance(integrator_tol);
    Ok(step)
}

fn finish<P: Serialize>(
    command: &'static str,
    params: &P,
    out: &Path,
    step: &StepConfig,
    started: Instant,
    status: Status,
) -> Result<Status, CliError> {
    let manifest = RunManifest {
        command,
        parameters: params,
        tool_version: env!("CARGO_PKG_VERSION"),
        integrator: &step.shooting.integrator,
        wall_time_s: started.elapsed().as_secs_f64(),
        status: status.to_string(),
        output: describe_output(out)?,
    };
    manifest.write_for(out)?;
    Ok(status)
}

fn run(cli: Cli) -> Result<Status, CliError> {
    let started = Instant::now();
    let tol = cli.integrator_tol;
    match &cli.command {
        Command::Family(a) => {
            let step = step_config(tol, Some(a.h_step))?;
            let status = commands::family(a, &step)?;
            finish("family", a, &a.out, &step, started, status)
        }
        Command::Orbit(a) => {
            let step = step_config(tol, None)?;
            let status = commands::orbit(a, &step)?;
            finish("orbit", a, &a.out, &step, started, status)
        }
        Command::Bridge(a) => {
            let step = step_config(tol, None)?;
            let status = commands::bridge(a, &step)?;
            finish("bridge", a, &a.out, &step, started, status)
        }
        Command::Bifurcations(a) => {
            let step = step_config(tol, None)?;
            let status = commands::bifurcations(a, &step)?;
            finish("bifurcations", a, &a.out, &step, started, status)
        }
        Command::MoonEarth(a) => {
            let step = step_config(tol, Some(a.h_step))?;
            let status = commands::moon_earth(a, &step)?;
            finish("moon-earth", a, &a.out, &step, started, status)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Status::Complete) => ExitCode::SUCCESS,
        Ok(status @ Status::Truncated(_)) => {
            eprintln!("warning: {status}; partial output written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
