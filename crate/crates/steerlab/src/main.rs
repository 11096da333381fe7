use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};
use steerlab::config::{load_config, ExperimentKind, FrameChoice};

#[derive(Parser)]
#[command(
    name = "steerlab",
    version,
    about = "Steered dark-state simulations and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write results.csv and report.json.
    Run(Flags),
    /// Run the verification suite; exits non-zero if any check fails.
    Verify(Flags),
}

#[derive(Args)]
struct Flags {
    /// JSON configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    experiment: Option<ExperimentKind>,
    /// Squeezing amplitude (first channel for fivelevel).
    #[arg(long)]
    r: Option<f64>,
    /// Second-channel squeezing amplitude.
    #[arg(long)]
    r2: Option<f64>,
    /// Adiabatic parameter phi_rate / gamma.
    #[arg(long, allow_negative_numbers = true)]
    xi: Option<f64>,
    /// Geometric xi range as start:stop:factor.
    #[arg(long)]
    xi_range: Option<String>,
    #[arg(long, value_parser = parse_frame)]
    frame: Option<FrameChoice>,
    /// Record every n-th integration step.
    #[arg(long)]
    stride: Option<usize>,
    /// Fixed number of integration steps per loop period.
    #[arg(long)]
    steps_per_period: Option<u64>,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    serde_json::from_value(Value::from(s)).map_err(|_| {
        format!("unknown experiment `{s}` (loop, sweep, berry, fivelevel, polarization, verify)")
    })
}

fn parse_frame(s: &str) -> Result<FrameChoice, String> {
    serde_json::from_value(Value::from(s))
        .map_err(|_| format!("unknown frame `{s}` (lab, rotating)"))
}

impl Flags {
    fn overrides(&self) -> Map<String, Value> {
        let mut map = Map::new();
        let mut set = |key: &str, value: Option<Value>| {
            if let Some(v) = value {
                map.insert(key.to_string(), v);
            }
        };
        set(
            "experiment",
            self.experiment.map(|e| Value::from(e.to_string())),
        );
        set("r", self.r.map(Value::from));
        set("r2", self.r2.map(Value::from));
        set("xi", self.xi.map(Value::from));
        set("xi_range", self.xi_range.clone().map(Value::from));
        set(
            "frame",
            self.frame
                .map(|f| serde_json::to_value(f).expect("frame serializes")),
        );
        set("record_stride", self.stride.map(Value::from));
        set("steps_per_period", self.steps_per_period.map(Value::from));
        set(
            "out",
            self.out
                .as_ref()
                .map(|p| Value::from(p.to_string_lossy().into_owned())),
        );
        map
    }
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    let (flags, verify) = match cli.command {
        Command::Run(flags) => (flags, false),
        Command::Verify(flags) => (flags, true),
    };
    let mut overrides = flags.overrides();
    if verify {
        overrides.insert("experiment".into(), Value::from("verify"));
    }
    let cfg = load_config(flags.config.as_deref(), overrides)?;

    let pool = steerlab::worker_pool()?;
    let outcome = pool.install(|| steerlab::run(&cfg));
    outcome
        .write(&cfg.out)
        .with_context(|| format!("writing results to {}", cfg.out.display()))?;

    for failure in &outcome.report.failures {
        eprintln!("failed point {}: {}", failure.point, failure.error);
    }
    for row in &outcome.report.criteria {
        let status = if row.passed { "PASS" } else { "FAIL" };
        println!(
            "{status} criterion {} {}: measured {:e}, target {:e}, tolerance {:e}",
            row.criterion, row.check, row.measured, row.target, row.tolerance
        );
    }
    println!("wrote {}", cfg.out.display());
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
