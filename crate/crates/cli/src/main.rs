//! `solenoid-ab`: reproducible experiments over the small-divisor solver, the planar
//! Beltrami solver and the solenoidal tower, each emitting a JSON report.

mod commands;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::Overrides;
use report::{ErrorInfo, Finding, Outcome, Report, EXIT_ERROR};

#[derive(Parser)]
#[command(name = "solenoid-ab", version, about = "Limit-periodic small divisors and solenoidal Beltrami experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration; defaults apply when omitted
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for `<command>.json` and `<command>.csv`; stdout when omitted
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for randomized sampling
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Nodes per grid side
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Solver or check tolerance
    #[arg(long, global = true, value_name = "FLOAT")]
    tol: Option<f64>,
    /// Emit the JSON report (the default)
    #[arg(long, global = true)]
    json: bool,
    /// Emit the CSV table
    #[arg(long, global = true)]
    csv: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Certify a frequency vector, solve the cohomological equation and profile a chain
    SolveDiophantine,
    /// Chain-weighted norm of a series against its strip norm
    SNorm,
    /// Normal solution of a compactly supported planar coefficient
    SolveBeltrami,
    /// Tower of periodic approximants and its Cauchy diagnostics
    Tower,
    /// Closed-form counterexample checks
    Counterexample,
    /// Two-stage solve for a coefficient without compact support
    SplitSolve,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SolveDiophantine => "solve-diophantine",
            Command::SNorm => "s-norm",
            Command::SolveBeltrami => "solve-beltrami",
            Command::Tower => "tower",
            Command::Counterexample => "counterexample",
            Command::SplitSolve => "split-solve",
        }
    }
}

fn execute<C: Serialize>(config: Result<C>, seed: impl Fn(&C) -> Option<u64>, run: impl Fn(&C) -> Result<Finding>) -> Outcome {
    match config {
        Err(e) => Outcome {
            config: serde_json::Value::Null,
            seed: None,
            body: Err(ErrorInfo::from_anyhow(&e)),
        },
        Ok(cfg) => Outcome {
            config: report::to_value(&cfg),
            seed: seed(&cfg),
            body: run(&cfg).map_err(|e| ErrorInfo::from_anyhow(&e)),
        },
    }
}

fn load_with<C>(path: Option<&Path>, apply: impl Fn(&mut C)) -> Result<C>
where
    C: serde::de::DeserializeOwned + Default,
{
    let mut c = config::load::<C>(path)?;
    apply(&mut c);
    Ok(c)
}

fn dispatch(command: Command, common: &Common) -> Outcome {
    let o = Overrides {
        seed: common.seed,
        grid: common.grid,
        tol: common.tol,
    };
    let path = common.config.as_deref();
    match command {
        Command::SolveDiophantine => execute(
            load_with(path, |c: &mut config::DiophantineConfig| c.apply(&o)),
            |c| Some(c.seed),
            commands::diophantine::run,
        ),
        Command::SNorm => execute(load_with(path, |_: &mut config::SNormConfig| {}), |_| None, commands::snorm::run),
        Command::SolveBeltrami => execute(
            load_with(path, |c: &mut config::BeltramiConfig| c.apply(&o)),
            |_| None,
            commands::beltrami::run,
        ),
        Command::Tower => execute(
            load_with(path, |c: &mut config::TowerConfig| c.apply(&o)),
            |_| None,
            commands::tower::run,
        ),
        Command::Counterexample => execute(
            load_with(path, |c: &mut config::CounterexampleConfig| c.apply(&o)),
            |c| Some(c.seed),
            commands::counterexample::run,
        ),
        Command::SplitSolve => execute(
            load_with(path, |c: &mut config::SplitConfig| c.apply(&o)),
            |_| None,
            commands::split::run,
        ),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SOLENOID_AB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .with_context(|| format!("SOLENOID_AB_THREADS must be a positive integer, got {value:?}"))?;
    anyhow::ensure!(n > 0, "SOLENOID_AB_THREADS must be positive");
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn emit(command: Command, common: &Common, outcome: &Outcome, report: &Report) -> Result<()> {
    let json = report.to_json()?;
    let csv = outcome.body.as_ref().ok().and_then(|f| f.csv.as_deref());
    let want_json = common.json || !common.csv;
    match &common.out {
        Some(dir) => {
            if want_json {
                report::write_atomic(&dir.join(format!("{}.json", command.name())), &json)?;
            }
            if let (true, Some(text)) = (common.csv, csv) {
                report::write_atomic(&dir.join(format!("{}.csv", command.name())), text)?;
            }
        }
        None => {
            if want_json {
                print!("{json}");
            }
            if let (true, Some(text)) = (common.csv, csv) {
                print!("{text}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    let outcome = dispatch(cli.command, &cli.common);
    let report = Report::new(cli.command.name(), &outcome);
    if let Some(err) = &report.error {
        eprintln!("error [{}]: {}", err.kind, err.message);
    }
    if let Err(e) = emit(cli.command, &cli.common, &outcome, &report) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    ExitCode::from(report.exit_code as u8)
}
