//! The two comparison schedulers: local computation only (LCO) and fully
//! offloading (FO). Both optimize the same drift-plus-penalty surrogate with
//! the complementary control group forced to zero, then run the shared
//! feasibility repair restricted to their own variables.

use crate::config::SystemConfig;
use crate::model::{NetworkState, SlotDecision};
use crate::scheduler::{
    repair, solve_local, solve_offloading, solve_wpt, AdjustMode, ScheduleOutcome,
    SchedulerError, VirtualState,
};

/// Local-computation-only scheduler: WPT and CPU frequency control, no
/// offloading ever. Never fails; the `Result` mirrors [`schedule_fo`].
pub fn schedule_lco(
    state: &NetworkState,
    config: &SystemConfig,
) -> Result<SlotDecision, SchedulerError> {
    schedule_lco_with_info(state, config).map(|outcome| outcome.decision)
}

pub fn schedule_lco_with_info(
    state: &NetworkState,
    config: &SystemConfig,
) -> Result<ScheduleOutcome, SchedulerError> {
    let virt = VirtualState::from_state(state, config);
    let (wpt_active, wpt_power, wpt_time) = solve_wpt(&virt, state, config);
    let cpu_freq = solve_local(&virt, config);
    let n = config.n_wd;
    let raw = SlotDecision {
        wpt_active,
        wpt_power,
        wpt_time,
        offload_ap: vec![None; n],
        offload_time: vec![0.0; n],
        offload_power: vec![0.0; n],
        cpu_freq,
        local_time: vec![config.slot_length; n],
    };
    let (decision, used_fallback) = repair(raw, state, &virt, config, AdjustMode::LocalOnly);
    Ok(ScheduleOutcome {
        decision,
        am_trace: None,
        used_fallback,
    })
}

/// Fully-offloading scheduler: WPT and offloading control, zero CPU
/// frequency everywhere. May offload nothing when that minimizes the
/// surrogate.
pub fn schedule_fo(
    state: &NetworkState,
    config: &SystemConfig,
) -> Result<SlotDecision, SchedulerError> {
    schedule_fo_with_info(state, config).map(|outcome| outcome.decision)
}

pub fn schedule_fo_with_info(
    state: &NetworkState,
    config: &SystemConfig,
) -> Result<ScheduleOutcome, SchedulerError> {
    let virt = VirtualState::from_state(state, config);
    let (wpt_active, wpt_power, wpt_time) = solve_wpt(&virt, state, config);
    let (offload_ap, offload_time, offload_power, trace) =
        solve_offloading(&virt, state, config)?;
    let n = config.n_wd;
    let raw = SlotDecision {
        wpt_active,
        wpt_power,
        wpt_time,
        offload_ap,
        offload_time,
        offload_power,
        cpu_freq: vec![0.0; n],
        local_time: vec![config.slot_length; n],
    };
    let (decision, used_fallback) = repair(raw, state, &virt, config, AdjustMode::OffloadOnly);
    Ok(ScheduleOutcome {
        decision,
        am_trace: Some(trace),
        used_fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{slot_outcome, validate_decision};
    use crate::stochastic::{resolve_topology, sample_channels, Purpose, RandomStream};

    fn random_state(config: &SystemConfig, seed: u64) -> NetworkState {
        let topology = resolve_topology(config, seed).unwrap();
        let mut channels = RandomStream::new(seed, 0, Purpose::Channels);
        let (h_u, h_d) = sample_channels(&topology, config, &mut channels);
        let mut state = NetworkState::initial(config, h_u, h_d);
        let mut u = RandomStream::new(seed, 0, Purpose::Arrivals);
        for i in 0..config.n_wd {
            state.queues[i] = 2e6 * u.uniform();
            state.batteries[i] = config.b_max[i] * u.uniform();
        }
        state
    }

    #[test]
    fn lco_never_offloads_and_stays_feasible() {
        let config = SystemConfig::default();
        for seed in 0..50 {
            let state = random_state(&config, seed);
            let decision = schedule_lco(&state, &config).unwrap();
            let outcome = slot_outcome(&decision, &state, &config);
            assert!(outcome.offload_bits.iter().all(|&b| b == 0.0));
            assert!(outcome.offload_energy.iter().all(|&e| e == 0.0));
            assert!(validate_decision(&decision, &state, &config).is_empty());
        }
    }

    #[test]
    fn fo_never_computes_locally_and_stays_feasible() {
        let config = SystemConfig::default();
        for seed in 0..50 {
            let state = random_state(&config, seed);
            let decision = schedule_fo(&state, &config).unwrap();
            let outcome = slot_outcome(&decision, &state, &config);
            assert!(outcome.local_bits.iter().all(|&b| b == 0.0));
            assert!(outcome.local_energy.iter().all(|&e| e == 0.0));
            assert!(validate_decision(&decision, &state, &config).is_empty());
        }
    }

    #[test]
    fn empty_queues_idle_apart_from_wpt() {
        let mut config = SystemConfig::default();
        config.swipt_enabled = true;
        let mut state = random_state(&config, 7);
        state.queues = vec![0.0; config.n_wd];
        for scheduler in [schedule_lco, schedule_fo] {
            let decision = scheduler(&state, &config).unwrap();
            let outcome = slot_outcome(&decision, &state, &config);
            let served: f64 = outcome
                .local_bits
                .iter()
                .chain(&outcome.offload_bits)
                .sum();
            assert_eq!(served, 0.0);
        }
    }
}
