use super::*;
use crate::config::SystemConfig;
use crate::model::{
    local_bits, local_energy, offload_rate, slot_outcome, validate_decision, NetworkState,
    SlotDecision,
};
use crate::stochastic::{resolve_topology, sample_channels, Purpose, RandomStream};

fn tiny(n: usize, m: usize) -> SystemConfig {
    SystemConfig::default()
        .with_n_wd(n)
        .unwrap()
        .with_m_ap(m)
        .unwrap()
}

/// A randomized mid-run state: generated topology and channels, uniformly
/// loaded queues, partially charged batteries.
fn random_state(config: &SystemConfig, seed: u64) -> NetworkState {
    let topology = resolve_topology(config, seed).unwrap();
    let mut channels = RandomStream::new(seed, 0, Purpose::Channels);
    let (h_u, h_d) = sample_channels(&topology, config, &mut channels);
    let mut state = NetworkState::initial(config, h_u, h_d);
    let mut noise = RandomStream::new(seed, 0, Purpose::Arrivals);
    for i in 0..config.n_wd {
        state.queues[i] = 2e6 * noise.uniform();
        state.batteries[i] = config.b_max[i] * noise.uniform();
    }
    state
}

/// A 1-WD, 1-AP state with hand-set channels, queue, and battery.
fn single_state(config: &SystemConfig, h_u: f64, queue: f64, battery: f64) -> NetworkState {
    let mut state = NetworkState::initial(config, vec![vec![h_u]], vec![vec![2.0 * h_u]]);
    state.queues[0] = queue;
    state.batteries[0] = battery;
    state
}

#[test]
fn wpt_picks_the_ap_with_the_best_weighted_marginal() {
    let mut config = tiny(2, 2);
    config.penalty_v = 1.0;
    config.mu = vec![1.0, 1.0];
    let h_d = vec![vec![1.0, 1.5], vec![1.0, 1.5]];
    let mut state = NetworkState::initial(&config, h_d.clone(), h_d);
    for i in 0..2 {
        state.batteries[i] = config.b_max[i] - 1.0;
    }
    let virt = VirtualState::from_state(&state, &config);
    assert_eq!(wpt_marginal(&virt, &state, &config, 0), -1.0);
    assert_eq!(wpt_marginal(&virt, &state, &config, 1), -2.0);
    let (active, power, time) = solve_wpt(&virt, &state, &config);
    assert_eq!(active, vec![false, true]);
    assert_eq!(power, vec![0.0, config.p_t_max[1]]);
    assert_eq!(time, vec![0.0, config.slot_length]);
}

#[test]
fn full_batteries_disable_wpt() {
    let config = tiny(3, 2);
    let state = NetworkState::initial(&config, vec![vec![1.0; 2]; 3], vec![vec![1.0; 2]; 3]);
    let virt = VirtualState::from_state(&state, &config);
    let (active, power, time) = solve_wpt(&virt, &state, &config);
    assert!(active.iter().all(|&a| !a));
    assert!(power.iter().chain(&time).all(|&x| x == 0.0));
}

#[test]
fn wpt_ties_go_to_the_lowest_index() {
    let mut config = tiny(2, 3);
    config.penalty_v = 1.0;
    config.mu = vec![1.0, 1.0];
    let h_d = vec![vec![1.0; 3]; 2];
    let mut state = NetworkState::initial(&config, h_d.clone(), h_d);
    for i in 0..2 {
        state.batteries[i] = config.b_max[i] - 1.0;
    }
    let virt = VirtualState::from_state(&state, &config);
    let (active, ..) = solve_wpt(&virt, &state, &config);
    assert_eq!(active, vec![true, false, false]);
}

#[test]
fn wpt_choice_minimizes_the_full_surrogate() {
    let config = tiny(5, 3);
    for seed in 0..30 {
        let state = random_state(&config, seed);
        let virt = VirtualState::from_state(&state, &config);
        let (active, power, time) = solve_wpt(&virt, &state, &config);
        // Independent oracle: score every WPT-only candidate decision with
        // the full surrogate and keep the best strictly below idle's zero.
        let mut best: (Option<usize>, f64) = (None, 0.0);
        for j in 0..config.m_ap {
            let mut candidate = SlotDecision::zero(&config);
            candidate.wpt_active[j] = true;
            candidate.wpt_power[j] = config.p_t_max[j];
            candidate.wpt_time[j] = config.slot_length;
            let value = drift_penalty_surrogate(&virt, &candidate, &state, &config);
            if value < best.1 {
                best = (Some(j), value);
            }
        }
        let chosen = active.iter().position(|&a| a);
        assert_eq!(chosen, best.0, "seed {seed}");
        if let Some(j) = chosen {
            assert_eq!(power[j], config.p_t_max[j]);
            assert_eq!(time[j], config.slot_length);
        }
    }
}

#[test]
fn local_frequency_matches_the_closed_form_and_a_grid_search() {
    let mut config = tiny(1, 1);
    config.kappa = vec![1e-3];
    config.phi = vec![1.0];
    config.f_max = vec![100.0];
    config.slot_length = 1.0;
    let virt = VirtualState {
        queue: vec![3.0],
        shortage: vec![1.0],
        penalty_v: 1.0,
    };
    let f = solve_local(&virt, &config)[0];
    let expected = 1000f64.sqrt();
    assert!((f - expected).abs() <= 1e-9 * expected);

    let objective = |f: f64| {
        -virt.queue[0] * local_bits(&config, 0, f, 1.0)
            + virt.shortage[0] * local_energy(&config, 0, f, 1.0)
    };
    let steps = 100_000;
    let step = config.f_max[0] / steps as f64;
    let best = (0..=steps)
        .map(|k| k as f64 * step)
        .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
        .unwrap();
    assert!((f - best).abs() <= step);
}

#[test]
fn local_frequency_boundary_conventions() {
    let config = tiny(1, 1);
    let mk = |q: f64, s: f64| VirtualState {
        queue: vec![q],
        shortage: vec![s],
        penalty_v: 3.0,
    };
    assert_eq!(solve_local(&mk(0.0, 5.0), &config)[0], 0.0);
    assert_eq!(solve_local(&mk(1e6, 0.0), &config)[0], config.f_max[0]);
    // Huge backlog relative to the energy price: the box binds.
    assert_eq!(solve_local(&mk(1e6, 1.0), &config)[0], config.f_max[0]);
}

#[test]
fn marginal_energy_per_bit_at_the_default_chip_constants() {
    let config = tiny(1, 1);
    let eps = marginal_ee_local(&config, 0, 5e8);
    assert!((eps / 7.5e-8 - 1.0).abs() <= 1e-12);
}

#[test]
fn coupled_frequency_equalizes_the_marginals() {
    let config = tiny(1, 1);
    for &(gain, power) in &[(1e-6, 0.05), (2.5e-7, 0.1), (1e-5, 0.0)] {
        let f = coupled_frequency(&config, 0, 0, gain, power);
        let lhs = marginal_ee_local(&config, 0, f);
        let rhs = marginal_ee_offload(&config, 0, 0, gain, power);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs());
    }
}

#[test]
fn power_step_branch_conventions() {
    let config = tiny(1, 1);
    let state = single_state(&config, 1e-6, 1e6, 0.5 * config.b_max[0]);
    let virt = VirtualState::from_state(&state, &config);
    // Unassigned WDs never transmit.
    assert_eq!(am_power_step(&virt, &[None], &state, &config)[0], 0.0);
    // Edge price at or above the queue value: idle.
    let pricey = VirtualState {
        queue: vec![config.penalty_v * config.eta * config.phi[0] * 0.5],
        shortage: vec![1.0],
        penalty_v: config.penalty_v,
    };
    assert_eq!(am_power_step(&pricey, &[Some(0)], &state, &config)[0], 0.0);
    // No battery shortage: transmit flat out.
    let full = VirtualState {
        queue: vec![1e6],
        shortage: vec![0.0],
        penalty_v: config.penalty_v,
    };
    assert_eq!(
        am_power_step(&full, &[Some(0)], &state, &config)[0],
        config.p_max[0]
    );
}

#[test]
fn power_step_matches_a_grid_search() {
    let config = tiny(1, 1);
    let mut rng = RandomStream::new(77, 0, Purpose::Arrivals);
    for instance in 0..25 {
        let q = 1e5 + 2e6 * rng.uniform();
        let shortage = 1e12 * 10f64.powf(2.0 * rng.uniform());
        let h = 1e-7 * 10f64.powf(rng.uniform());
        let state = single_state(&config, h, q, config.b_max[0]);
        let virt = VirtualState {
            queue: vec![q],
            shortage: vec![shortage],
            penalty_v: config.penalty_v,
        };
        let p = am_power_step(&virt, &[Some(0)], &state, &config)[0];
        let objective = |p: f64| {
            let rate = offload_rate(p, h, &config, 0, 0);
            (virt.penalty_v * config.eta * config.phi[0] - q) * rate * config.slot_length
                + shortage * p * config.slot_length
        };
        let steps = 100_000;
        let step = config.p_max[0] / steps as f64;
        let best = (0..=steps)
            .map(|k| k as f64 * step)
            .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
            .unwrap();
        assert!(
            (p - best).abs() <= step + 1e-12,
            "instance {instance}: solver {p}, grid {best}"
        );
    }
}

#[test]
fn time_step_matches_exhaustive_assignment_enumeration() {
    let config = tiny(3, 2);
    for seed in 0..50u64 {
        let state = random_state(&config, seed);
        let virt = VirtualState::from_state(&state, &config);
        let power = vec![config.p_max[0]; 3];
        let (assigned, tau) = am_time_step(&virt, &power, &state, &config);
        let pair_cost = |i: usize, j: usize| {
            let rate = offload_rate(power[i], state.h_u[i][j], &config, i, j);
            (virt.penalty_v * config.eta * config.phi[i] - virt.queue[i])
                * rate
                * config.slot_length
                + virt.shortage[i] * power[i] * config.slot_length
        };
        // Brute force over every conflict-free (partial) assignment.
        let choices = [None, Some(0), Some(1)];
        let mut best = f64::INFINITY;
        for &c0 in &choices {
            for &c1 in &choices {
                for &c2 in &choices {
                    let picks = [c0, c1, c2];
                    let mut used = [false; 2];
                    let mut ok = true;
                    let mut total = 0.0;
                    for (i, pick) in picks.iter().enumerate() {
                        if let Some(j) = *pick {
                            if used[j] {
                                ok = false;
                                break;
                            }
                            used[j] = true;
                            total += pair_cost(i, j);
                        }
                    }
                    if ok {
                        best = best.min(total);
                    }
                }
            }
        }
        let algo_total: f64 = (0..3)
            .filter_map(|i| assigned[i].map(|j| pair_cost(i, j)))
            .sum();
        assert!(
            (algo_total - best).abs() <= 1e-9 * best.abs().max(1.0),
            "seed {seed}: solver {algo_total}, brute force {best}"
        );
        for i in 0..3 {
            assert_eq!(assigned[i].is_some(), tau[i] == config.slot_length);
            assert_eq!(assigned[i].is_none(), tau[i] == 0.0);
            if let Some(j) = assigned[i] {
                assert!(pair_cost(i, j) < 0.0);
            }
        }
    }
}

#[test]
fn empty_queues_converge_immediately_to_idle_offloading() {
    let config = tiny(4, 2);
    let mut state = random_state(&config, 9);
    state.queues = vec![0.0; 4];
    let virt = VirtualState::from_state(&state, &config);
    let (assigned, tau, power, trace) = solve_offloading(&virt, &state, &config).unwrap();
    assert!(assigned.iter().all(Option::is_none));
    assert!(tau.iter().all(|&x| x == 0.0));
    assert!(power.iter().all(|&x| x == 0.0));
    assert!(trace.converged);
    assert!(trace.iterations <= 2);
}

#[test]
fn alternating_minimization_is_monotone_and_converges() {
    let config = tiny(6, 3);
    for seed in 0..50 {
        let state = random_state(&config, seed);
        let virt = VirtualState::from_state(&state, &config);
        let (.., trace) = solve_offloading(&virt, &state, &config).unwrap();
        assert!(trace.converged, "seed {seed} hit the iteration cap");
        for w in trace.objectives.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0),
                "seed {seed}: objective rose {} -> {}",
                w[0],
                w[1]
            );
        }
        assert!(*trace.objectives.last().unwrap() <= 0.0);
    }
}

#[test]
fn feasible_decisions_pass_through_adjust_unchanged() {
    let config = tiny(3, 2);
    let mut state = random_state(&config, 3);
    state.queues = vec![1e6; 3];
    let virt = VirtualState::from_state(&state, &config);
    let mut raw = SlotDecision::zero(&config);
    raw.cpu_freq = vec![1e5, 2e5, 0.0];
    raw.offload_ap[0] = Some(1);
    raw.offload_time[0] = 0.25;
    raw.offload_power[0] = 1e-3;
    assert!(validate_decision(&raw, &state, &config).is_empty());
    let adjusted = adjust(&raw, &state, &virt, &config, AdjustMode::Full).unwrap();
    assert_eq!(adjusted, raw);
}

#[test]
fn energy_tight_repair_binds_the_battery_and_equalizes_marginals() {
    let mut config = tiny(1, 1);
    config.f_max = vec![1e10];
    let h = 1e-6;
    // Battery between the energy of the coupled path's two joints, so the
    // crossing lands strictly inside the power-coupled segment.
    let state = single_state(&config, h, 1e12, 14.4);
    let virt = VirtualState::from_state(&state, &config);
    let mut raw = SlotDecision::zero(&config);
    raw.cpu_freq[0] = config.f_max[0];
    raw.offload_ap[0] = Some(0);
    raw.offload_time[0] = 1.0;
    raw.offload_power[0] = config.p_max[0];
    let adjusted = adjust(&raw, &state, &virt, &config, AdjustMode::Full).unwrap();
    assert!(validate_decision(&adjusted, &state, &config).is_empty());
    let outcome = slot_outcome(&adjusted, &state, &config);
    let spent = outcome.local_energy[0] + outcome.offload_energy[0];
    assert!(spent <= state.batteries[0]);
    assert!(spent >= state.batteries[0] * (1.0 - 1e-9));
    let f = adjusted.cpu_freq[0];
    let p = adjusted.offload_power[0];
    assert!(p > 0.0 && p < config.p_max[0], "power not interior: {p}");
    assert!(f > 0.0 && f < config.f_max[0], "frequency not interior: {f}");
    let lhs = marginal_ee_local(&config, 0, f);
    let rhs = marginal_ee_offload(&config, 0, 0, h, p);
    assert!(
        (lhs - rhs).abs() <= 1e-9 * rhs,
        "marginals not equalized: {lhs} vs {rhs}"
    );
}

#[test]
fn data_tight_repair_binds_the_queue() {
    let config = tiny(1, 1);
    let queue = 1e5;
    let state = single_state(&config, 1e-6, queue, config.b_max[0]);
    let virt = VirtualState::from_state(&state, &config);
    let mut raw = SlotDecision::zero(&config);
    raw.cpu_freq[0] = config.f_max[0];
    raw.offload_ap[0] = Some(0);
    raw.offload_time[0] = 1.0;
    raw.offload_power[0] = config.p_max[0];
    let adjusted = adjust(&raw, &state, &virt, &config, AdjustMode::Full).unwrap();
    assert!(validate_decision(&adjusted, &state, &config).is_empty());
    let outcome = slot_outcome(&adjusted, &state, &config);
    let served = outcome.local_bits[0] + outcome.offload_bits[0];
    assert!(served <= queue);
    assert!(served >= queue * (1.0 - 1e-6));
    // The crossing happens on the pure-local leg: f T / phi = Q.
    let expected_f = queue * config.phi[0] / config.slot_length;
    assert!((adjusted.cpu_freq[0] / expected_f - 1.0).abs() <= 1e-9);
    assert_eq!(adjusted.offload_power[0], 0.0);
}

/// One SWIPT re-split scenario per branch of the marginal-vs-level
/// comparison: interior split, offloading takeover, and WPT takeover.
#[test]
fn swipt_resplit_covers_all_three_branches() {
    let base = {
        let mut config = tiny(1, 1);
        config.penalty_v = 1.0;
        config.f_max = vec![1.0];
        config.b_max = vec![100.0];
        config
    };
    let raw = {
        let mut raw = SlotDecision::zero(&base);
        raw.wpt_active[0] = true;
        raw.wpt_power[0] = base.p_t_max[0];
        raw.wpt_time[0] = base.slot_length;
        raw.offload_ap[0] = Some(0);
        raw.offload_time[0] = 1.0;
        raw.offload_power[0] = base.p_max[0];
        raw
    };

    // Interior split: shortage 95 prices the broadcast between the
    // offloading marginal at tau = 0 and at tau = T.
    let state = single_state(&base, 1.0, 10.0, 5.0);
    let virt = VirtualState::from_state(&state, &base);
    let adjusted = adjust(&raw, &state, &virt, &base, AdjustMode::Full).unwrap();
    assert!(adjusted.wpt_active[0]);
    assert!(
        adjusted.wpt_time[0] > 0.6 && adjusted.wpt_time[0] < 0.7,
        "wpt_time {}",
        adjusted.wpt_time[0]
    );
    let total = adjusted.wpt_time[0] + adjusted.offload_time[0];
    assert!((total - base.slot_length).abs() <= 1e-12);
    assert!(validate_decision(&adjusted, &state, &base).is_empty());
    let outcome = slot_outcome(&adjusted, &state, &base);
    let served = outcome.local_bits[0] + outcome.offload_bits[0];
    assert!(served <= 10.0 && served >= 10.0 * (1.0 - 1e-6));

    // Offloading takeover: a mild shortage cannot outbid the transmission
    // anywhere in the slot, so the broadcast is dropped.
    let state = single_state(&base, 1.0, 10.0, 70.0);
    let virt = VirtualState::from_state(&state, &base);
    let adjusted = adjust(&raw, &state, &virt, &base, AdjustMode::Full).unwrap();
    assert!(!adjusted.wpt_active[0]);
    assert_eq!(adjusted.wpt_time[0], 0.0);
    assert_eq!(adjusted.offload_time[0], 1.0);
    assert!(validate_decision(&adjusted, &state, &base).is_empty());

    // WPT takeover: an enormous shortage outbids offloading even at its most
    // valuable, so the WD is unassigned and the broadcast keeps the slot.
    let mut config = base.clone();
    config.b_max = vec![2e8];
    let state = single_state(&config, 1.0, 10.0, 5.0);
    let virt = VirtualState::from_state(&state, &config);
    let adjusted = adjust(&raw, &state, &virt, &config, AdjustMode::Full).unwrap();
    assert_eq!(adjusted.offload_ap[0], None);
    assert_eq!(adjusted.offload_time[0], 0.0);
    assert!(adjusted.wpt_active[0]);
    assert_eq!(adjusted.wpt_time[0], 1.0);
    assert!(validate_decision(&adjusted, &state, &config).is_empty());
}

#[test]
fn shared_resplit_respects_every_ap_budget() {
    let mut config = tiny(2, 2);
    config.swipt_enabled = false;
    config.penalty_v = 1.0;
    config.f_max = vec![1.0; 2];
    config.b_max = vec![100.0; 2];
    let ones = vec![vec![1.0; 2]; 2];
    let mut state = NetworkState::initial(&config, ones.clone(), ones);
    state.queues = vec![10.0; 2];
    state.batteries = vec![5.0; 2];
    let virt = VirtualState::from_state(&state, &config);
    let mut raw = SlotDecision::zero(&config);
    raw.wpt_active[0] = true;
    raw.wpt_power[0] = config.p_t_max[0];
    raw.wpt_time[0] = config.slot_length;
    for i in 0..2 {
        raw.offload_ap[i] = Some(i);
        raw.offload_time[i] = 1.0;
        raw.offload_power[i] = config.p_max[i];
    }
    let adjusted = adjust(&raw, &state, &virt, &config, AdjustMode::Full).unwrap();
    assert!(validate_decision(&adjusted, &state, &config).is_empty());
    assert!(adjusted.wpt_active[0]);
    let tau_t = adjusted.wpt_time[0];
    assert!(tau_t > 0.25 && tau_t < 0.35, "wpt_time {tau_t}");
    for i in 0..2 {
        // Without SWIPT the broadcast blocks both APs, and here neither WD
        // saturates, so each one takes exactly the remaining budget.
        assert!((adjusted.offload_time[i] - (1.0 - tau_t)).abs() <= 1e-12);
    }
}

#[test]
fn proportional_fallback_recovers_feasibility() {
    let config = tiny(3, 2);
    let mut state = random_state(&config, 11);
    state.queues = vec![1e4; 3];
    state.batteries = vec![1e-3; 3];
    let mut raw = SlotDecision::zero(&config);
    raw.wpt_active[0] = true;
    raw.wpt_power[0] = config.p_t_max[0];
    raw.wpt_time[0] = config.slot_length;
    for i in 0..3 {
        raw.cpu_freq[i] = config.f_max[i];
        raw.offload_ap[i] = Some(i % 2);
        raw.offload_time[i] = config.slot_length;
        raw.offload_power[i] = config.p_max[i];
    }
    assert!(!validate_decision(&raw, &state, &config).is_empty());
    let repaired = proportional_fallback(&raw, &state, &config);
    assert!(validate_decision(&repaired, &state, &config).is_empty());

    // Feasible decisions come back untouched.
    let zero = SlotDecision::zero(&config);
    assert_eq!(proportional_fallback(&zero, &state, &config), zero);
}

#[test]
fn repair_falls_back_when_the_resplit_is_unbracketable() {
    let mut config = tiny(2, 1);
    config.b_max = vec![100.0; 2];
    let ones = vec![vec![1.0]; 2];
    let mut state = NetworkState::initial(&config, ones.clone(), ones);
    state.queues = vec![10.0; 2];
    state.batteries = vec![5.0; 2];
    let virt = VirtualState::from_state(&state, &config);
    // Two WDs on the broadcasting AP: structurally valid for the validator's
    // TDMA check, but outside what the re-split brackets.
    let mut raw = SlotDecision::zero(&config);
    raw.wpt_active[0] = true;
    raw.wpt_power[0] = config.p_t_max[0];
    raw.wpt_time[0] = config.slot_length;
    for i in 0..2 {
        raw.offload_ap[i] = Some(0);
        raw.offload_time[i] = config.slot_length;
        raw.offload_power[i] = config.p_max[i];
    }
    assert!(adjust(&raw, &state, &virt, &config, AdjustMode::Full).is_err());
    let (decision, used_fallback) = repair(raw, &state, &virt, &config, AdjustMode::Full);
    assert!(used_fallback);
    assert!(validate_decision(&decision, &state, &config).is_empty());
}

#[test]
fn schedule_is_feasible_on_random_states() {
    for swipt in [true, false] {
        let mut config = tiny(6, 3);
        config.swipt_enabled = swipt;
        let mut any_service = false;
        for seed in 0..40 {
            let state = random_state(&config, seed);
            let outcome = schedule_with_info(&state, &config).unwrap();
            let violations = validate_decision(&outcome.decision, &state, &config);
            assert!(
                violations.is_empty(),
                "swipt={swipt} seed={seed}: {violations:?}"
            );
            assert!(outcome.am_trace.is_some());
            let result = slot_outcome(&outcome.decision, &state, &config);
            if result.local_bits.iter().sum::<f64>() + result.offload_bits.iter().sum::<f64>()
                > 0.0
            {
                any_service = true;
            }
        }
        assert!(any_service, "swipt={swipt}: scheduler never served anything");
    }
}
