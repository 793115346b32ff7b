//! The discrete-time simulation loop: per slot, sample channels, schedule,
//! realize the outcome, append fresh arrivals, and collect metrics over a
//! finite horizon.

use crate::benchmarks::{schedule_fo_with_info, schedule_lco_with_info};
use crate::config::SystemConfig;
pub use crate::model::SimError;
use crate::model::{slot_outcome, step_state, validate_decision, NetworkState};
use crate::scheduler::schedule_with_info;
use crate::stochastic::{
    resolve_topology, sample_arrivals, sample_channels, Purpose, RandomStream,
};
use std::collections::VecDeque;
use std::str::FromStr;

/// Which scheduler drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedulerKind {
    /// The proposed relax-then-adjust drift-plus-penalty scheduler.
    Proposed,
    /// Local computation only.
    Lco,
    /// Fully offloading.
    Fo,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [
        SchedulerKind::Proposed,
        SchedulerKind::Lco,
        SchedulerKind::Fo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Proposed => "proposed",
            SchedulerKind::Lco => "lco",
            SchedulerKind::Fo => "fo",
        }
    }
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "proposed" => Ok(SchedulerKind::Proposed),
            "lco" => Ok(SchedulerKind::Lco),
            "fo" => Ok(SchedulerKind::Fo),
            other => Err(format!(
                "unknown scheduler '{other}' (expected proposed, lco, or fo)"
            )),
        }
    }
}

/// Per-slot metrics. Energies are summed over APs/WDs; queue and battery
/// figures describe the state at the start of the slot; `arrivals` is the
/// data appended at its end.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub t: usize,
    /// AP-side energy `sum_j (E^T_j + E^C_j)` — the objective's term (J).
    pub ap_energy: f64,
    pub wpt_energy: f64,
    pub edge_energy: f64,
    pub harvested: f64,
    pub local_energy: f64,
    pub offload_energy: f64,
    pub total_queue: f64,
    pub mean_battery: f64,
    pub arrivals: f64,
    pub local_bits: f64,
    pub offload_bits: f64,
    /// True when the feasibility repair fell back to proportional scaling.
    pub adjust_fallback: bool,
    // Scheduler diagnostics (trace output only, not part of the CSV schema).
    pub wpt_ap: Option<usize>,
    pub wpt_time: f64,
    pub offloaders: usize,
    pub am_iterations: usize,
    pub am_objective: f64,
}

/// Horizon-level aggregates. Averages exclude the warm-up window.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    /// Mean per-slot AP-side energy (J/slot), the long-term objective.
    pub avg_ap_energy: f64,
    /// Little's-law delay estimate: avg total queue / total arrival rate
    /// (slots); absent when nothing arrives.
    pub avg_delay: Option<f64>,
    /// Companion per-bit FIFO sojourn estimate (slots); absent when no bits
    /// were served after warm-up.
    pub fifo_delay: Option<f64>,
    /// Mean total queue backlog (bits).
    pub avg_queue: f64,
    /// Queue-stability diagnostic (see [`stability_check`]).
    pub stable: bool,
    pub stability_ratio: f64,
    /// Fraction of slots (over the whole horizon) repaired by the fallback.
    pub fallback_rate: f64,
    /// Slots whose decision failed validation — always 0 for the provided
    /// schedulers.
    pub violation_count: usize,
    /// Number of leading slots excluded from the averages.
    pub warmup_slots: usize,
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub slots: Vec<SlotRecord>,
    pub summary: RunSummary,
}

impl MetricsRecord {
    /// Re-runs the stability diagnostic on the recorded queue series.
    pub fn stability(&self) -> (bool, f64) {
        let series: Vec<f64> = self.slots.iter().map(|s| s.total_queue).collect();
        stability_check(&series)
    }
}

fn warmup_slots(config: &SystemConfig) -> usize {
    (config.horizon as f64 * config.warmup_fraction).floor() as usize
}

/// Simulates `config.horizon` slots under the given scheduler and seed.
/// Deterministic: identical inputs produce an identical record, bit for bit.
pub fn run(
    config: &SystemConfig,
    scheduler: SchedulerKind,
    seed: u64,
) -> Result<MetricsRecord, SimError> {
    config
        .validate()
        .map_err(|e| SimError::Setup(e.to_string()))?;
    let topology = resolve_topology(config, seed).map_err(SimError::Setup)?;
    let mut channel_stream = RandomStream::new(seed, 0, Purpose::Channels);
    let mut arrival_stream = RandomStream::new(seed, 0, Purpose::Arrivals);
    let (h_u, h_d) = sample_channels(&topology, config, &mut channel_stream);
    let mut state = NetworkState::initial(config, h_u, h_d);

    let horizon = config.horizon;
    let warmup = warmup_slots(config);
    let mut slots = Vec::with_capacity(horizon);
    let mut violation_count = 0usize;
    let mut fallback_count = 0usize;
    let mut fifo = FifoDelay::new(config.n_wd);

    for t in 0..horizon {
        let scheduled = match scheduler {
            SchedulerKind::Proposed => schedule_with_info(&state, config)?,
            SchedulerKind::Lco => schedule_lco_with_info(&state, config)?,
            SchedulerKind::Fo => schedule_fo_with_info(&state, config)?,
        };
        let decision = &scheduled.decision;
        if !validate_decision(decision, &state, config).is_empty() {
            violation_count += 1;
        }
        if scheduled.used_fallback {
            fallback_count += 1;
        }
        let outcome = slot_outcome(decision, &state, config);
        for i in 0..config.n_wd {
            fifo.serve(t, i, outcome.local_bits[i] + outcome.offload_bits[i], t >= warmup);
        }

        let arrivals = sample_arrivals(config, &mut arrival_stream);
        for (i, &bits) in arrivals.iter().enumerate() {
            fifo.arrive(t, i, bits);
        }
        let next_channels = sample_channels(&topology, config, &mut channel_stream);

        slots.push(SlotRecord {
            t,
            ap_energy: outcome.ap_energy(),
            wpt_energy: outcome.wpt_energy.iter().sum(),
            edge_energy: outcome.edge_energy.iter().sum(),
            harvested: outcome.harvested.iter().sum(),
            local_energy: outcome.local_energy.iter().sum(),
            offload_energy: outcome.offload_energy.iter().sum(),
            total_queue: state.queues.iter().sum(),
            mean_battery: state.batteries.iter().sum::<f64>() / config.n_wd as f64,
            arrivals: arrivals.iter().sum(),
            local_bits: outcome.local_bits.iter().sum(),
            offload_bits: outcome.offload_bits.iter().sum(),
            adjust_fallback: scheduled.used_fallback,
            wpt_ap: decision.broadcasting_ap(),
            wpt_time: decision
                .broadcasting_ap()
                .map_or(0.0, |j| decision.wpt_time[j]),
            offloaders: decision.offload_ap.iter().flatten().count(),
            am_iterations: scheduled.am_trace.as_ref().map_or(0, |tr| tr.iterations),
            am_objective: scheduled
                .am_trace
                .as_ref()
                .and_then(|tr| tr.objectives.last())
                .copied()
                .unwrap_or(0.0),
        });

        state = step_state(&state, decision, &outcome, config, next_channels, arrivals)?;
    }

    let mut summary = summarize(config, &slots, warmup);
    summary.violation_count = violation_count;
    summary.fallback_rate = if horizon == 0 {
        0.0
    } else {
        fallback_count as f64 / horizon as f64
    };
    summary.fifo_delay = fifo.estimate();
    Ok(MetricsRecord { slots, summary })
}

fn summarize(config: &SystemConfig, slots: &[SlotRecord], warmup: usize) -> RunSummary {
    let included = &slots[warmup.min(slots.len())..];
    let count = included.len();
    let mean = |f: fn(&SlotRecord) -> f64| -> f64 {
        if count == 0 {
            0.0
        } else {
            included.iter().map(f).sum::<f64>() / count as f64
        }
    };
    let avg_queue = mean(|s| s.total_queue);
    let total_lambda: f64 = config.lambda.iter().sum();
    let series: Vec<f64> = slots.iter().map(|s| s.total_queue).collect();
    let (stable, stability_ratio) = stability_check(&series);
    RunSummary {
        avg_ap_energy: mean(|s| s.ap_energy),
        avg_delay: (total_lambda > 0.0 && count > 0).then(|| avg_queue / total_lambda),
        fifo_delay: None,
        avg_queue,
        stable,
        stability_ratio,
        fallback_rate: 0.0,
        violation_count: 0,
        warmup_slots: warmup.min(slots.len()),
    }
}

/// Little's-law delay estimate of a finished record: time-averaged total
/// queue (post-warm-up) divided by the total arrival rate, in slots. Absent
/// when the configured arrival rate is zero.
pub fn average_delay(record: &MetricsRecord, config: &SystemConfig) -> Option<f64> {
    let included = &record.slots[record.summary.warmup_slots.min(record.slots.len())..];
    if included.is_empty() {
        return None;
    }
    let total_lambda: f64 = config.lambda.iter().sum();
    if total_lambda <= 0.0 {
        return None;
    }
    let avg_queue = included.iter().map(|s| s.total_queue).sum::<f64>() / included.len() as f64;
    Some(avg_queue / total_lambda)
}

/// Queue-stability diagnostic over a total-queue series.
///
/// Two complementary checks: the mean over the last 10% of slots must stay
/// within a factor 2 of the mean over the middle 10%, and the least-squares
/// drift over the last half, extrapolated across the horizon, must not
/// exceed the mid-run level (the ratio alone misses steady linear growth,
/// which sits near its boundary). Returns the verdict and the window ratio;
/// an empty or all-zero series counts as stable with ratio 1.
pub fn stability_check(total_queue: &[f64]) -> (bool, f64) {
    let h = total_queue.len();
    if h == 0 {
        return (true, 1.0);
    }
    let window = |lo: usize, hi: usize| -> f64 {
        let hi = hi.clamp(lo + 1, h);
        let lo = lo.min(h - 1);
        let span = &total_queue[lo..hi.max(lo + 1)];
        span.iter().sum::<f64>() / span.len() as f64
    };
    let mean_mid = window((h as f64 * 0.45) as usize, (h as f64 * 0.55) as usize);
    let mean_last = window((h as f64 * 0.9) as usize, h);
    let ratio = if mean_mid == 0.0 {
        if mean_last == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        mean_last / mean_mid
    };
    let slope = ols_slope(&total_queue[h / 2..]);
    let stable = ratio <= 2.0 && slope * h as f64 <= mean_mid.max(1.0);
    (stable, ratio)
}

fn ols_slope(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 2 {
        return 0.0;
    }
    let mean_x = (n as f64 - 1.0) / 2.0;
    let mean_y = series.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, &y) in series.iter().enumerate() {
        let dx = k as f64 - mean_x;
        num += dx * (y - mean_y);
        den += dx * dx;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per-bit FIFO sojourn bookkeeping: bits arriving in slot `t` become
/// available at `t + 1`; a bit served in slot `s` sojourned `s - t` slots
/// counting from its availability (recorded as `s - avail + 1` so same-slot
/// service costs one slot). Bits still queued at the end are censored and
/// excluded.
struct FifoDelay {
    queues: Vec<VecDeque<(usize, f64)>>,
    weighted: f64,
    served: f64,
}

impl FifoDelay {
    fn new(n_wd: usize) -> Self {
        FifoDelay {
            queues: vec![VecDeque::new(); n_wd],
            weighted: 0.0,
            served: 0.0,
        }
    }

    fn serve(&mut self, t: usize, wd: usize, mut bits: f64, count: bool) {
        while bits > 0.0 {
            let Some(front) = self.queues[wd].front_mut() else {
                break;
            };
            if front.0 > t {
                break;
            }
            let take = bits.min(front.1);
            front.1 -= take;
            bits -= take;
            if count {
                self.weighted += take * (t - front.0 + 1) as f64;
                self.served += take;
            }
            if front.1 <= 0.0 {
                self.queues[wd].pop_front();
            }
        }
    }

    fn arrive(&mut self, t: usize, wd: usize, bits: f64) {
        if bits > 0.0 {
            self.queues[wd].push_back((t + 1, bits));
        }
    }

    fn estimate(&self) -> Option<f64> {
        (self.served > 0.0).then(|| self.weighted / self.served)
    }
}
