//! Command-line runner: parse a config, execute a parameter sweep across
//! schedulers and seeds, and write the result CSVs.
//!
//! Exit codes: 0 on success (including `--help`/`--version`), 1 for argument
//! or configuration problems, 2 when a simulation run fails.

use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;
use wpmec::config::{parse_config, SystemConfig};
use wpmec::engine::SchedulerKind;
use wpmec::experiment::{run_experiment, ExperimentError, ExperimentSpec, SweepAxis};

#[derive(Parser, Debug)]
#[command(
    name = "wpmec",
    version,
    about = "Discrete-time simulator for wireless-powered mobile edge computing"
)]
struct Cli {
    /// Config file (sectioned `key = value`); built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Schedulers to run: proposed, lco, fo (comma separated).
    #[arg(
        long,
        value_name = "NAME[,NAME...]",
        default_value = "proposed",
        value_delimiter = ','
    )]
    scheduler: Vec<String>,

    /// Sweep the penalty weight V over these values.
    #[arg(long = "sweep-v", value_name = "LIST", value_delimiter = ',')]
    sweep_v: Option<Vec<f64>>,

    /// Sweep the number of WDs over these values.
    #[arg(long = "sweep-n", value_name = "LIST", value_delimiter = ',')]
    sweep_n: Option<Vec<f64>>,

    /// Sweep the number of APs over these values.
    #[arg(long = "sweep-m", value_name = "LIST", value_delimiter = ',')]
    sweep_m: Option<Vec<f64>>,

    /// Random seeds (comma separated).
    #[arg(long, value_name = "LIST", default_value = "1", value_delimiter = ',')]
    seeds: Vec<u64>,

    /// Override the simulation horizon (slots per run).
    #[arg(long, value_name = "H")]
    slots: Option<usize>,

    /// Output directory for summary.csv and friends.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Also write one per-slot CSV per run.
    #[arg(long)]
    emit_slots: bool,

    /// Also write one scheduler trace file per run.
    #[arg(long)]
    trace: bool,
}

enum AppError {
    Config(String),
    Run(String),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<(), AppError> {
    let mut base = match &cli.config {
        Some(path) => parse_config(path).map_err(|e| AppError::Config(e.to_string()))?,
        None => SystemConfig::default(),
    };
    if let Some(slots) = cli.slots {
        base.horizon = slots;
    }
    let schedulers: Vec<SchedulerKind> = cli
        .scheduler
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, String>>()
        .map_err(AppError::Config)?;

    let sweeps = [
        cli.sweep_v.clone().map(|v| (SweepAxis::PenaltyV, v)),
        cli.sweep_n.clone().map(|v| (SweepAxis::NumWd, v)),
        cli.sweep_m.clone().map(|v| (SweepAxis::NumAp, v)),
    ];
    let mut picked: Vec<(SweepAxis, Vec<f64>)> = sweeps.into_iter().flatten().collect();
    if picked.len() > 1 {
        return Err(AppError::Config(
            "choose at most one of --sweep-v, --sweep-n, --sweep-m".into(),
        ));
    }
    let (axis, values) = picked
        .pop()
        .unwrap_or((SweepAxis::PenaltyV, vec![base.penalty_v]));

    let spec = ExperimentSpec {
        base,
        axis,
        values,
        schedulers,
        seeds: cli.seeds,
        out_dir: cli.out,
        emit_slots: cli.emit_slots,
        trace: cli.trace,
    };
    let rows = run_experiment(&spec).map_err(|e| match e {
        ExperimentError::Invalid(_) => AppError::Config(e.to_string()),
        err => AppError::Run(err.to_string()),
    })?;

    for row in rows.iter().filter(|r| r.seed.is_none()) {
        let delay = row
            .avg_delay
            .map_or_else(|| "n/a".to_string(), |d| format!("{d:.3} slots"));
        println!(
            "{}={} {}: {:.6e} J/slot, delay {}, stable {}, fallback rate {:.4}",
            row.axis, row.value, row.scheduler, row.avg_ap_energy, delay, row.stable,
            row.fallback_rate
        );
    }
    println!("wrote {}", spec.out_dir.join("summary.csv").display());
    Ok(())
}
