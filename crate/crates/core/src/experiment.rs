//! Experiment sweeps: a grid of (sweep value, scheduler, seed) simulation
//! cells, summarized into one CSV plus optional per-slot CSVs and scheduler
//! trace files. Output is a pure function of the [`ExperimentSpec`], byte
//! for byte.

use crate::config::SystemConfig;
use crate::engine::{run, MetricsRecord, SchedulerKind, SimError};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// The drift-plus-penalty weight `V`.
    PenaltyV,
    /// The number of WDs `N` (device parameters must be uniform).
    NumWd,
    /// The number of APs `M` (AP parameters must be uniform).
    NumAp,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::PenaltyV => "V",
            SweepAxis::NumWd => "N",
            SweepAxis::NumAp => "M",
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub schedulers: Vec<SchedulerKind>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// Write one per-slot CSV per cell.
    pub emit_slots: bool,
    /// Write one scheduler trace file per cell.
    pub trace: bool,
}

impl ExperimentSpec {
    /// A single-cell experiment: the base config as-is (degenerate V sweep at
    /// its own value), proposed scheduler, seed 1.
    pub fn single(base: SystemConfig) -> Self {
        let v = base.penalty_v;
        ExperimentSpec {
            base,
            axis: SweepAxis::PenaltyV,
            values: vec![v],
            schedulers: vec![SchedulerKind::Proposed],
            seeds: vec![1],
            out_dir: PathBuf::from("out"),
            emit_slots: false,
            trace: false,
        }
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        let invalid = |msg: String| Err(ExperimentError::Invalid(msg));
        if self.values.is_empty() {
            return invalid("sweep needs at least one value".into());
        }
        if self.schedulers.is_empty() {
            return invalid("experiment needs at least one scheduler".into());
        }
        if self.seeds.is_empty() {
            return invalid("experiment needs at least one seed".into());
        }
        for &value in &self.values {
            if !(value > 0.0) || !value.is_finite() {
                return invalid(format!("sweep value {value} is not positive"));
            }
            if self.axis != SweepAxis::PenaltyV && value.fract() != 0.0 {
                return invalid(format!(
                    "{} sweep value {value} is not an integer",
                    self.axis
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Invalid(String),
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("run {cell} failed: {source}")]
    Run {
        cell: String,
        #[source]
        source: SimError,
    },
}

/// One line of the summary CSV; `seed = None` marks a seeds-averaged row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub scheduler: SchedulerKind,
    pub seed: Option<u64>,
    pub avg_ap_energy: f64,
    pub avg_delay: Option<f64>,
    pub avg_queue: f64,
    pub stable: bool,
    pub fallback_rate: f64,
}

pub const SUMMARY_HEADER: &str = "sweep_axis,sweep_value,scheduler,seed,\
avg_ap_energy_J_per_slot,avg_delay_slots,avg_queue_bits,stable,adjust_fallback_rate";

const SLOTS_HEADER: &str = "t,ap_energy_J,wpt_energy_J,edge_energy_J,harvested_J,\
local_energy_J,offload_energy_J,total_queue_bits,mean_battery_J,arrivals_bits,\
local_bits,offloaded_bits,adjust_fallback";

/// Executes the whole grid and writes `summary.csv` (plus per-slot CSVs and
/// traces when requested) under `spec.out_dir`. Returns every row written,
/// data rows first, seeds-averaged rows appended.
///
/// On a run failure the rows finished so far are still flushed, a marker row
/// naming the failed cell (empty metrics, `failed` in the stable column) is
/// appended, and the error is returned.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<SummaryRow>, ExperimentError> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir).map_err(|source| ExperimentError::Io {
        path: spec.out_dir.clone(),
        source,
    })?;

    let mut rows = Vec::new();
    let mut failure: Option<(String, f64, SchedulerKind, u64, SimError)> = None;
    'grid: for &value in &spec.values {
        for &scheduler in &spec.schedulers {
            for &seed in &spec.seeds {
                let config = configure(&spec.base, spec.axis, value)?;
                let stem = cell_stem(spec.axis, value, scheduler, seed);
                match run(&config, scheduler, seed) {
                    Ok(record) => {
                        rows.push(summary_row(spec.axis, value, scheduler, seed, &record));
                        if spec.emit_slots {
                            let path = spec.out_dir.join(format!("slots_{stem}.csv"));
                            write_file(&path, &slots_csv(&record))?;
                        }
                        if spec.trace {
                            let path = spec.out_dir.join(format!("trace_{stem}.txt"));
                            write_file(&path, &trace_text(&record))?;
                        }
                    }
                    Err(source) => {
                        failure = Some((stem, value, scheduler, seed, source));
                        break 'grid;
                    }
                }
            }
        }
    }

    let mut csv = String::from(SUMMARY_HEADER);
    csv.push('\n');
    if failure.is_none() {
        append_mean_rows(spec, &mut rows);
    }
    for row in &rows {
        push_summary_line(&mut csv, row);
    }
    if let Some((_, value, scheduler, seed, _)) = &failure {
        let _ = writeln!(
            csv,
            "{},{},{},{},,,,failed,",
            spec.axis, value, scheduler, seed
        );
    }
    write_file(&spec.out_dir.join("summary.csv"), &csv)?;

    match failure {
        Some((cell, _, _, _, source)) => Err(ExperimentError::Run { cell, source }),
        None => Ok(rows),
    }
}

fn configure(
    base: &SystemConfig,
    axis: SweepAxis,
    value: f64,
) -> Result<SystemConfig, ExperimentError> {
    match axis {
        SweepAxis::PenaltyV => {
            let mut config = base.clone();
            config.penalty_v = value;
            Ok(config)
        }
        SweepAxis::NumWd => base
            .with_n_wd(value as usize)
            .map_err(|e| ExperimentError::Invalid(e.to_string())),
        SweepAxis::NumAp => base
            .with_m_ap(value as usize)
            .map_err(|e| ExperimentError::Invalid(e.to_string())),
    }
}

fn cell_stem(axis: SweepAxis, value: f64, scheduler: SchedulerKind, seed: u64) -> String {
    format!("{axis}{value}_{scheduler}_seed{seed}")
}

fn summary_row(
    axis: SweepAxis,
    value: f64,
    scheduler: SchedulerKind,
    seed: u64,
    record: &MetricsRecord,
) -> SummaryRow {
    SummaryRow {
        axis,
        value,
        scheduler,
        seed: Some(seed),
        avg_ap_energy: record.summary.avg_ap_energy,
        avg_delay: record.summary.avg_delay,
        avg_queue: record.summary.avg_queue,
        stable: record.summary.stable,
        fallback_rate: record.summary.fallback_rate,
    }
}

/// Appends one seeds-averaged row per (value, scheduler) cell group, in grid
/// order. Delay averages over the seeds where it exists; stability is the
/// conjunction.
fn append_mean_rows(spec: &ExperimentSpec, rows: &mut Vec<SummaryRow>) {
    let mut means = Vec::new();
    for &value in &spec.values {
        for &scheduler in &spec.schedulers {
            let group: Vec<&SummaryRow> = rows
                .iter()
                .filter(|r| r.value == value && r.scheduler == scheduler && r.seed.is_some())
                .collect();
            if group.is_empty() {
                continue;
            }
            let count = group.len() as f64;
            let delays: Vec<f64> = group.iter().filter_map(|r| r.avg_delay).collect();
            means.push(SummaryRow {
                axis: spec.axis,
                value,
                scheduler,
                seed: None,
                avg_ap_energy: group.iter().map(|r| r.avg_ap_energy).sum::<f64>() / count,
                avg_delay: (!delays.is_empty())
                    .then(|| delays.iter().sum::<f64>() / delays.len() as f64),
                avg_queue: group.iter().map(|r| r.avg_queue).sum::<f64>() / count,
                stable: group.iter().all(|r| r.stable),
                fallback_rate: group.iter().map(|r| r.fallback_rate).sum::<f64>() / count,
            });
        }
    }
    rows.extend(means);
}

fn push_summary_line(csv: &mut String, row: &SummaryRow) {
    let seed = row
        .seed
        .map_or_else(|| "mean".to_string(), |s| s.to_string());
    let delay = row.avg_delay.map_or_else(String::new, |d| d.to_string());
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{}",
        row.axis,
        row.value,
        row.scheduler,
        seed,
        row.avg_ap_energy,
        delay,
        row.avg_queue,
        row.stable,
        row.fallback_rate
    );
}

fn slots_csv(record: &MetricsRecord) -> String {
    let mut csv = String::from(SLOTS_HEADER);
    csv.push('\n');
    for s in &record.slots {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            s.t,
            s.ap_energy,
            s.wpt_energy,
            s.edge_energy,
            s.harvested,
            s.local_energy,
            s.offload_energy,
            s.total_queue,
            s.mean_battery,
            s.arrivals,
            s.local_bits,
            s.offload_bits,
            s.adjust_fallback
        );
    }
    csv
}

fn trace_text(record: &MetricsRecord) -> String {
    let mut text = String::new();
    for s in &record.slots {
        let wpt_ap = s
            .wpt_ap
            .map_or_else(|| "none".to_string(), |j| j.to_string());
        let _ = writeln!(
            text,
            "t={} wpt_ap={} wpt_time={} offloaders={} am_iterations={} am_objective={} \
             queue_bits={} fallback={}",
            s.t, wpt_ap, s.wpt_time, s.offloaders, s.am_iterations, s.am_objective,
            s.total_queue, s.adjust_fallback
        );
    }
    text
}

fn write_file(path: &Path, content: &str) -> Result<(), ExperimentError> {
    fs::write(path, content).map_err(|source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    })
}
