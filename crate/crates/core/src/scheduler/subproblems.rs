//! Closed-form and alternating-minimization solutions of the three relaxed
//! per-slot subproblems.

use super::{AmTrace, SchedulerError, VirtualState};
use crate::assignment::{solve_assignment, AssignmentProblem};
use crate::config::SystemConfig;
use crate::model::{offload_rate, NetworkState};
use std::f64::consts::LN_2;

const AM_MAX_ITERATIONS: usize = 100;
const AM_REL_TOL: f64 = 1e-9;
/// Relative slack for the monotonicity guard; absorbs summation-order noise
/// in the objective evaluation.
const AM_MONOTONE_GUARD: f64 = 1e-12;

/// Marginal WPT value of AP `j` per joule broadcast:
/// `c^T_j = V - sum_i B^-_i mu_i h^D_ij`. Negative means broadcasting from
/// `j` lowers the surrogate.
pub fn wpt_marginal(
    virt: &VirtualState,
    state: &NetworkState,
    config: &SystemConfig,
    ap: usize,
) -> f64 {
    let mut c = virt.penalty_v;
    for i in 0..config.n_wd {
        c -= virt.shortage[i] * config.mu[i] * state.h_d[i][ap];
    }
    c
}

/// WPT subproblem: either nobody broadcasts, or the AP minimizing
/// `c^T_j P^T,max_j` broadcasts at full power for the whole slot.
/// Ties go to the lowest index.
pub fn solve_wpt(
    virt: &VirtualState,
    state: &NetworkState,
    config: &SystemConfig,
) -> (Vec<bool>, Vec<f64>, Vec<f64>) {
    let m = config.m_ap;
    let mut active = vec![false; m];
    let mut power = vec![0.0; m];
    let mut time = vec![0.0; m];
    let mut best: Option<(usize, f64)> = None;
    for j in 0..m {
        let c = wpt_marginal(virt, state, config, j);
        if c < 0.0 {
            let score = c * config.p_t_max[j];
            if best.map_or(true, |(_, s)| score < s) {
                best = Some((j, score));
            }
        }
    }
    if let Some((j, _)) = best {
        active[j] = true;
        power[j] = config.p_t_max[j];
        time[j] = config.slot_length;
    }
    (active, power, time)
}

/// Local-computation subproblem: the per-WD frequency minimizing
/// `-Q_i D^L_i + B^-_i E^L_i`, i.e.
/// `f_i = min(f_max_i, sqrt(Q_i / (3 kappa_i phi_i B^-_i)))`, with the
/// boundary conventions for empty queues and full batteries.
pub fn solve_local(virt: &VirtualState, config: &SystemConfig) -> Vec<f64> {
    (0..config.n_wd)
        .map(|i| {
            if virt.queue[i] <= 0.0 {
                return 0.0;
            }
            if virt.shortage[i] <= 0.0 {
                return config.f_max[i];
            }
            let interior =
                (virt.queue[i] / (3.0 * config.kappa[i] * config.phi[i] * virt.shortage[i])).sqrt();
            interior.min(config.f_max[i])
        })
        .collect()
}

/// Marginal energy per locally processed bit, `eps^L = 3 kappa_i phi_i f^2`.
pub fn marginal_ee_local(config: &SystemConfig, wd: usize, f: f64) -> f64 {
    3.0 * config.kappa[wd] * config.phi[wd] * f * f
}

/// Marginal system energy per offloaded bit at transmit power `power` over a
/// link with uplink gain `gain` to AP `ap`:
/// `eps^O = (v_i ln2 / B)(sigma2_j / gain + power) + eta phi_i`.
/// Requires `gain > 0`.
pub fn marginal_ee_offload(
    config: &SystemConfig,
    wd: usize,
    ap: usize,
    gain: f64,
    power: f64,
) -> f64 {
    (config.v[wd] * LN_2 / config.bandwidth) * (config.sigma2[ap] / gain + power)
        + config.eta * config.phi[wd]
}

/// The CPU frequency whose local marginal energy efficiency equals the
/// offloading marginal efficiency at transmit power `power`.
pub fn coupled_frequency(
    config: &SystemConfig,
    wd: usize,
    ap: usize,
    gain: f64,
    power: f64,
) -> f64 {
    (marginal_ee_offload(config, wd, ap, gain, power)
        / (3.0 * config.kappa[wd] * config.phi[wd]))
        .sqrt()
}

/// Offloading cost of pairing WD `wd` with AP `ap` for the whole slot at
/// transmit power `power`:
/// `c_ij = (V eta phi_i - Q_i) rate T + B^-_i P_i T`.
pub fn offload_pair_cost(
    virt: &VirtualState,
    state: &NetworkState,
    config: &SystemConfig,
    wd: usize,
    ap: usize,
    power: f64,
) -> f64 {
    let t = config.slot_length;
    let rate = offload_rate(power, state.h_u[wd][ap], config, wd, ap);
    (virt.penalty_v * config.eta * config.phi[wd] - virt.queue[wd]) * rate * t
        + virt.shortage[wd] * power * t
}

/// AM time step: with powers fixed, the optimal times are bang-bang, so the
/// problem reduces to a minimum-cost assignment with skipping. Beneficial
/// (negative-cost) pairs get the full slot; everything else stays idle.
pub fn am_time_step(
    virt: &VirtualState,
    power: &[f64],
    state: &NetworkState,
    config: &SystemConfig,
) -> (Vec<Option<usize>>, Vec<f64>) {
    let n = config.n_wd;
    let costs: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..config.m_ap)
                .map(|j| offload_pair_cost(virt, state, config, i, j, power[i]).min(0.0))
                .collect()
        })
        .collect();
    let solution = solve_assignment(&AssignmentProblem {
        costs,
        allow_skip: true,
    })
    .expect("offloading cost matrix is finite and non-empty");
    let mut assigned = vec![None; n];
    let mut tau = vec![0.0; n];
    for i in 0..n {
        if let Some(j) = solution.assigned[i] {
            // Drop zero-benefit ties with the skip option.
            if offload_pair_cost(virt, state, config, i, j, power[i]) < 0.0 {
                assigned[i] = Some(j);
                tau[i] = config.slot_length;
            }
        }
    }
    (assigned, tau)
}

/// AM power step: per-WD exact minimizer of the offloading objective at a
/// fixed assignment. Unassigned WDs transmit nothing.
pub fn am_power_step(
    virt: &VirtualState,
    assigned: &[Option<usize>],
    state: &NetworkState,
    config: &SystemConfig,
) -> Vec<f64> {
    (0..config.n_wd)
        .map(|i| {
            let Some(j) = assigned[i] else {
                return 0.0;
            };
            let coefficient = virt.penalty_v * config.eta * config.phi[i];
            if coefficient >= virt.queue[i] {
                return 0.0;
            }
            let gain = state.h_u[i][j];
            if gain <= 0.0 {
                return 0.0;
            }
            if virt.shortage[i] <= 0.0 {
                return config.p_max[i];
            }
            let stationary = (virt.queue[i] - coefficient) * config.bandwidth
                / (virt.shortage[i] * config.v[i] * LN_2)
                - config.sigma2[j] / gain;
            stationary.clamp(0.0, config.p_max[i])
        })
        .collect()
}

/// The offloading objective
/// `sum_i (V eta phi_i - Q_i) D^O_i + B^-_i E^O_i` of an iterate.
pub fn offload_objective(
    virt: &VirtualState,
    assigned: &[Option<usize>],
    tau: &[f64],
    power: &[f64],
    state: &NetworkState,
    config: &SystemConfig,
) -> f64 {
    (0..config.n_wd)
        .filter_map(|i| {
            assigned[i].map(|j| {
                let bits = offload_rate(power[i], state.h_u[i][j], config, i, j) * tau[i];
                (virt.penalty_v * config.eta * config.phi[i] - virt.queue[i]) * bits
                    + virt.shortage[i] * power[i] * tau[i]
            })
        })
        .sum()
}

/// Offloading subproblem by alternating minimization: powers start at
/// `p_max`, then time and power steps alternate until the objective stops
/// improving (relative tolerance 1e-9) or 100 iterations elapse.
pub fn solve_offloading(
    virt: &VirtualState,
    state: &NetworkState,
    config: &SystemConfig,
) -> Result<(Vec<Option<usize>>, Vec<f64>, Vec<f64>, AmTrace), SchedulerError> {
    let mut power = config.p_max.clone();
    let mut assigned = vec![None; config.n_wd];
    let mut tau = vec![0.0; config.n_wd];
    let mut objectives = Vec::new();
    let mut converged = false;
    // The empty iterate (nobody offloads) scores 0.
    let mut previous = 0.0_f64;
    for iteration in 1..=AM_MAX_ITERATIONS {
        let (next_assigned, next_tau) = am_time_step(virt, &power, state, config);
        assigned = next_assigned;
        tau = next_tau;
        power = am_power_step(virt, &assigned, state, config);
        let objective = offload_objective(virt, &assigned, &tau, &power, state, config);
        if objective > previous + AM_MONOTONE_GUARD * previous.abs().max(1.0) {
            return Err(SchedulerError::NonMonotoneAm {
                iteration,
                previous,
                current: objective,
            });
        }
        objectives.push(objective);
        if previous - objective <= AM_REL_TOL * previous.abs().max(1.0) {
            converged = true;
            break;
        }
        previous = objective;
    }
    let iterations = objectives.len();
    Ok((
        assigned,
        tau,
        power,
        AmTrace {
            objectives,
            iterations,
            converged,
        },
    ))
}
