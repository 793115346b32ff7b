//! The per-slot online scheduler: drift-plus-penalty minimization via three
//! relaxed subproblems (WPT selection, local CPU frequency, offloading by
//! alternating minimization) followed by a feasibility repair.
//!
//! The relaxed solutions ignore the coupling constraints — energy causality,
//! data availability, and the per-AP TDMA budget — which [`adjust`] then
//! restores by marginal-cost equalization. If the repair cannot establish its
//! bisection brackets it reports [`AdjustFailure`] and [`schedule`] falls
//! back to proportionally scaling the raw controls, which always succeeds.

mod adjust;
mod subproblems;

pub use adjust::{adjust, proportional_fallback, AdjustFailure, AdjustMode, Regime};
pub use subproblems::{
    am_power_step, am_time_step, coupled_frequency, marginal_ee_local, marginal_ee_offload,
    offload_objective, offload_pair_cost, solve_local, solve_offloading, solve_wpt, wpt_marginal,
};

use crate::config::SystemConfig;
use crate::model::{slot_outcome, validate_decision, NetworkState, SlotDecision};
use thiserror::Error;

/// The Lyapunov control state of one slot: data queues, battery shortages,
/// and the energy/delay tradeoff weight.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualState {
    /// Queue backlog `Q_i` (bits).
    pub queue: Vec<f64>,
    /// Battery shortage `B^-_i = b_max_i - B_i` (J).
    pub shortage: Vec<f64>,
    /// Penalty weight `V`.
    pub penalty_v: f64,
}

impl VirtualState {
    pub fn from_state(state: &NetworkState, config: &SystemConfig) -> Self {
        VirtualState {
            queue: state.queues.clone(),
            shortage: (0..config.n_wd)
                .map(|i| state.battery_shortage(config, i).max(0.0))
                .collect(),
            penalty_v: config.penalty_v,
        }
    }

    /// Lyapunov function `L = (1/2) sum_i (Q_i^2 + (B^-_i)^2)` (diagnostic).
    pub fn lyapunov(&self) -> f64 {
        0.5 * self
            .queue
            .iter()
            .zip(&self.shortage)
            .map(|(q, s)| q * q + s * s)
            .sum::<f64>()
    }
}

/// Per-iteration record of the alternating-minimization offloading solver.
#[derive(Debug, Clone, PartialEq)]
pub struct AmTrace {
    /// Offloading-objective value after each full (time, power) iteration.
    pub objectives: Vec<f64>,
    /// Number of full iterations executed.
    pub iterations: usize,
    /// Whether the relative-improvement stopping rule fired (as opposed to
    /// hitting the iteration cap).
    pub converged: bool,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    /// The alternating-minimization objective increased between iterations.
    /// Both steps are exact block minimizers, so this indicates a bug rather
    /// than a property of the instance.
    #[error(
        "offloading objective increased at iteration {iteration}: {previous} -> {current}"
    )]
    NonMonotoneAm {
        iteration: usize,
        previous: f64,
        current: f64,
    },
}

/// A scheduling result with diagnostics.
#[derive(Debug, Clone)]
pub struct ScheduleOutcome {
    pub decision: SlotDecision,
    /// Alternating-minimization trace; `None` for schedulers that skip it.
    pub am_trace: Option<AmTrace>,
    /// True when the feasibility repair failed and the proportional-scaling
    /// fallback produced the decision instead.
    pub used_fallback: bool,
}

/// One slot of the proposed online algorithm. The returned decision always
/// passes [`validate_decision`].
pub fn schedule(state: &NetworkState, config: &SystemConfig) -> Result<SlotDecision, SchedulerError> {
    schedule_with_info(state, config).map(|outcome| outcome.decision)
}

/// [`schedule`] plus the AM trace and the fallback flag.
pub fn schedule_with_info(
    state: &NetworkState,
    config: &SystemConfig,
) -> Result<ScheduleOutcome, SchedulerError> {
    let virt = VirtualState::from_state(state, config);
    let (wpt_active, wpt_power, wpt_time) = solve_wpt(&virt, state, config);
    let cpu_freq = solve_local(&virt, config);
    let (offload_ap, offload_time, offload_power, trace) =
        solve_offloading(&virt, state, config)?;
    let raw = SlotDecision {
        wpt_active,
        wpt_power,
        wpt_time,
        offload_ap,
        offload_time,
        offload_power,
        cpu_freq,
        local_time: vec![config.slot_length; config.n_wd],
    };
    let (decision, used_fallback) = repair(raw, state, &virt, config, AdjustMode::Full);
    Ok(ScheduleOutcome {
        decision,
        am_trace: Some(trace),
        used_fallback,
    })
}

/// Runs [`adjust`] and, if it fails or its output is not verifiably feasible,
/// the proportional-scaling fallback. Returns the decision and whether the
/// fallback was used.
pub(crate) fn repair(
    raw: SlotDecision,
    state: &NetworkState,
    virt: &VirtualState,
    config: &SystemConfig,
    mode: AdjustMode,
) -> (SlotDecision, bool) {
    if let Ok(decision) = adjust(&raw, state, virt, config, mode) {
        if validate_decision(&decision, state, config).is_empty() {
            return (decision, false);
        }
    }
    (proportional_fallback(&raw, state, config), true)
}

/// The drift-plus-penalty surrogate of a decision:
/// `-sum_i Q_i (D^L_i + D^O_i) - sum_i B^-_i (E^H_i - E^L_i - E^O_i)
///  + V sum_j (E^T_j + E^C_j)`.
/// Lower is better; the zero decision scores 0.
pub fn drift_penalty_surrogate(
    virt: &VirtualState,
    decision: &SlotDecision,
    state: &NetworkState,
    config: &SystemConfig,
) -> f64 {
    let outcome = slot_outcome(decision, state, config);
    let mut value = virt.penalty_v * outcome.ap_energy();
    for i in 0..config.n_wd {
        value -= virt.queue[i] * (outcome.local_bits[i] + outcome.offload_bits[i]);
        value -= virt.shortage[i]
            * (outcome.harvested[i] - outcome.local_energy[i] - outcome.offload_energy[i]);
    }
    value
}

#[cfg(test)]
mod tests;
