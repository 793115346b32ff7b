//! Python bindings: a `Config` wrapper, full simulation runs, single-slot
//! scheduling, and the assignment solver.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::path::PathBuf;
use wpmec::assignment::{self, AssignmentProblem};
use wpmec::benchmarks::{schedule_fo, schedule_lco};
use wpmec::config::parse_config;
use wpmec::engine;
use wpmec::model::{slot_outcome, validate_decision};
use wpmec::scheduler::schedule;
use wpmec::{NetworkState, SchedulerKind, SystemConfig};

fn value_error(err: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(err.to_string())
}

/// System parameters for a simulation run.
#[pyclass(module = "wpmec_py", skip_from_py_object)]
#[derive(Clone)]
struct Config {
    inner: SystemConfig,
}

#[pymethods]
impl Config {
    /// The built-in default parameter set.
    #[new]
    fn new() -> Self {
        Config {
            inner: SystemConfig::default(),
        }
    }

    /// Loads a sectioned `key = value` config file.
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        parse_config(&path)
            .map(|inner| Config { inner })
            .map_err(value_error)
    }

    #[getter]
    fn n_wd(&self) -> usize {
        self.inner.n_wd
    }

    #[setter]
    fn set_n_wd(&mut self, n: usize) -> PyResult<()> {
        self.inner = self.inner.with_n_wd(n).map_err(value_error)?;
        Ok(())
    }

    #[getter]
    fn m_ap(&self) -> usize {
        self.inner.m_ap
    }

    #[setter]
    fn set_m_ap(&mut self, m: usize) -> PyResult<()> {
        self.inner = self.inner.with_m_ap(m).map_err(value_error)?;
        Ok(())
    }

    #[getter]
    fn penalty_v(&self) -> f64 {
        self.inner.penalty_v
    }

    #[setter]
    fn set_penalty_v(&mut self, v: f64) {
        self.inner.penalty_v = v;
    }

    #[getter]
    fn horizon(&self) -> usize {
        self.inner.horizon
    }

    #[setter]
    fn set_horizon(&mut self, horizon: usize) {
        self.inner.horizon = horizon;
    }

    #[getter]
    fn swipt_enabled(&self) -> bool {
        self.inner.swipt_enabled
    }

    #[setter]
    fn set_swipt_enabled(&mut self, enabled: bool) {
        self.inner.swipt_enabled = enabled;
    }

    #[getter]
    fn slot_length(&self) -> f64 {
        self.inner.slot_length
    }

    #[getter]
    fn bandwidth(&self) -> f64 {
        self.inner.bandwidth
    }

    #[getter]
    fn warmup_fraction(&self) -> f64 {
        self.inner.warmup_fraction
    }

    #[setter]
    fn set_warmup_fraction(&mut self, fraction: f64) {
        self.inner.warmup_fraction = fraction;
    }

    /// Mean arrival rate per WD (bits/slot).
    #[getter]
    fn arrival_rates(&self) -> Vec<f64> {
        self.inner.lambda.clone()
    }

    /// Sets every WD's mean arrival rate to `rate` bits/slot.
    fn set_uniform_arrival_rate(&mut self, rate: f64) {
        self.inner.lambda = vec![rate; self.inner.n_wd];
    }

    /// Raises `ValueError` if any parameter invariant is violated.
    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(value_error)
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(n_wd={}, m_ap={}, penalty_v={}, horizon={})",
            self.inner.n_wd, self.inner.m_ap, self.inner.penalty_v, self.inner.horizon
        )
    }
}

/// Simulates `config.horizon` slots under the named scheduler
/// (`"proposed"`, `"lco"`, or `"fo"`) and returns the summary metrics.
#[pyfunction]
fn run(py: Python<'_>, config: &Config, scheduler: &str, seed: u64) -> PyResult<Py<PyDict>> {
    let kind: SchedulerKind = scheduler.parse().map_err(PyValueError::new_err)?;
    let record =
        engine::run(&config.inner, kind, seed).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let summary = &record.summary;
    let dict = PyDict::new(py);
    dict.set_item("avg_ap_energy", summary.avg_ap_energy)?;
    dict.set_item("avg_delay", summary.avg_delay)?;
    dict.set_item("fifo_delay", summary.fifo_delay)?;
    dict.set_item("avg_queue", summary.avg_queue)?;
    dict.set_item("stable", summary.stable)?;
    dict.set_item("stability_ratio", summary.stability_ratio)?;
    dict.set_item("fallback_rate", summary.fallback_rate)?;
    dict.set_item("violations", summary.violation_count)?;
    dict.set_item("warmup_slots", summary.warmup_slots)?;
    dict.set_item("slots", record.slots.len())?;
    Ok(dict.unbind())
}

/// Exact minimum-cost assignment of rows to columns. With `allow_skip` a row
/// may stay unassigned (entry `None`) at zero cost. Returns
/// `(assignments, total_cost)`.
#[pyfunction]
#[pyo3(signature = (costs, allow_skip = true))]
fn solve_assignment(
    costs: Vec<Vec<f64>>,
    allow_skip: bool,
) -> PyResult<(Vec<Option<usize>>, f64)> {
    let solution = assignment::solve_assignment(&AssignmentProblem { costs, allow_skip })
        .map_err(value_error)?;
    Ok((solution.assigned, solution.total_cost))
}

/// Schedules a single slot from an explicit network state and returns the
/// decision (control vectors), the resulting AP-side energy, and whether the
/// decision passes the feasibility validator.
#[pyfunction]
fn schedule_slot(
    py: Python<'_>,
    config: &Config,
    scheduler: &str,
    queues: Vec<f64>,
    batteries: Vec<f64>,
    h_u: Vec<Vec<f64>>,
    h_d: Vec<Vec<f64>>,
) -> PyResult<Py<PyDict>> {
    let cfg = &config.inner;
    cfg.validate().map_err(value_error)?;
    let kind: SchedulerKind = scheduler.parse().map_err(PyValueError::new_err)?;
    for (name, len) in [("queues", queues.len()), ("batteries", batteries.len())] {
        if len != cfg.n_wd {
            return Err(value_error(format!(
                "{name} has {len} entries but n_wd = {}",
                cfg.n_wd
            )));
        }
    }
    for (name, gains) in [("h_u", &h_u), ("h_d", &h_d)] {
        if gains.len() != cfg.n_wd || gains.iter().any(|row| row.len() != cfg.m_ap) {
            return Err(value_error(format!(
                "{name} must be an n_wd x m_ap matrix ({} x {})",
                cfg.n_wd, cfg.m_ap
            )));
        }
    }
    let mut state = NetworkState::initial(cfg, h_u, h_d);
    state.queues = queues;
    state.batteries = batteries;
    let decision = match kind {
        SchedulerKind::Proposed => schedule(&state, cfg),
        SchedulerKind::Lco => schedule_lco(&state, cfg),
        SchedulerKind::Fo => schedule_fo(&state, cfg),
    }
    .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let outcome = slot_outcome(&decision, &state, cfg);
    let feasible = validate_decision(&decision, &state, cfg).is_empty();
    let dict = PyDict::new(py);
    dict.set_item("wpt_active", decision.wpt_active)?;
    dict.set_item("wpt_power", decision.wpt_power)?;
    dict.set_item("wpt_time", decision.wpt_time)?;
    dict.set_item("offload_ap", decision.offload_ap)?;
    dict.set_item("offload_time", decision.offload_time)?;
    dict.set_item("offload_power", decision.offload_power)?;
    dict.set_item("cpu_freq", decision.cpu_freq)?;
    dict.set_item("local_time", decision.local_time)?;
    dict.set_item("ap_energy", outcome.ap_energy())?;
    dict.set_item("harvested", outcome.harvested)?;
    dict.set_item("local_bits", outcome.local_bits)?;
    dict.set_item("offload_bits", outcome.offload_bits)?;
    dict.set_item("feasible", feasible)?;
    Ok(dict.unbind())
}

#[pymodule]
fn wpmec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Config>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(solve_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(schedule_slot, m)?)?;
    Ok(())
}
