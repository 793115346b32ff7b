//! Domain types and the pure per-slot physics.
//!
//! Everything here is a total function of its inputs: energy and data
//! formulas, the battery/queue state transition, and the feasibility
//! validator. Violations are data (a list of [`Violation`] with signed
//! slack), not errors; only [`step_state`] can fail, when a decision would
//! drive a battery or queue negative beyond the rounding guard.

use thiserror::Error;

use crate::config::SystemConfig;

/// Absolute feasibility tolerance in a constraint's native unit
/// (seconds, joules, or bits).
pub const FEAS_TOL: f64 = 1e-9;

/// Per-slot dynamic state: queues, batteries, current channel gains, and the
/// arrivals appended at the end of the previous slot.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    /// Slot index `t`.
    pub t: usize,
    /// Data queue backlog per WD (bits).
    pub queues: Vec<f64>,
    /// Stored battery energy per WD (J), within `[0, b_max]`.
    pub batteries: Vec<f64>,
    /// Uplink channel gains `h_u[i][j]` (dimensionless); zero encodes
    /// out-of-range links.
    pub h_u: Vec<Vec<f64>>,
    /// Downlink channel gains `h_d[i][j]`.
    pub h_d: Vec<Vec<f64>>,
    /// Data that arrived during the previous slot (bits), already included
    /// in `queues`; kept for metrics.
    pub arrivals: Vec<f64>,
}

impl NetworkState {
    /// Cold-start state: empty queues, full batteries, given channel gains.
    pub fn initial(config: &SystemConfig, h_u: Vec<Vec<f64>>, h_d: Vec<Vec<f64>>) -> Self {
        NetworkState {
            t: 0,
            queues: vec![0.0; config.n_wd],
            batteries: config.b_max.clone(),
            h_u,
            h_d,
            arrivals: vec![0.0; config.n_wd],
        }
    }

    /// Battery shortage `B^- = b_max - B` of WD `i` (J).
    pub fn battery_shortage(&self, config: &SystemConfig, wd: usize) -> f64 {
        config.b_max[wd] - self.batteries[wd]
    }
}

/// The full control vector for one slot.
///
/// Per-WD offloading uses `offload_ap[i] = Some(j)` for "WD `i` transmits to
/// AP `j`", so the one-AP-per-WD constraint holds structurally. The per-AP
/// WPT controls are independent flags so that infeasible candidates (two
/// broadcasters) remain representable for the validator.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotDecision {
    /// WPT indicator per AP.
    pub wpt_active: Vec<bool>,
    /// WPT transmit power per AP (W).
    pub wpt_power: Vec<f64>,
    /// WPT broadcast time per AP (s).
    pub wpt_time: Vec<f64>,
    /// Offloading target per WD.
    pub offload_ap: Vec<Option<usize>>,
    /// Offloading transmit time per WD (s).
    pub offload_time: Vec<f64>,
    /// Offloading transmit power per WD (W).
    pub offload_power: Vec<f64>,
    /// Local CPU frequency per WD (Hz).
    pub cpu_freq: Vec<f64>,
    /// Local computation time per WD (s); pinned to the slot length so local
    /// processing runs in parallel with everything else.
    pub local_time: Vec<f64>,
}

impl SlotDecision {
    /// The all-idle decision: no WPT, no offloading, zero CPU frequency.
    /// Always feasible in every state.
    pub fn zero(config: &SystemConfig) -> Self {
        SlotDecision {
            wpt_active: vec![false; config.m_ap],
            wpt_power: vec![0.0; config.m_ap],
            wpt_time: vec![0.0; config.m_ap],
            offload_ap: vec![None; config.n_wd],
            offload_time: vec![0.0; config.n_wd],
            offload_power: vec![0.0; config.n_wd],
            cpu_freq: vec![0.0; config.n_wd],
            local_time: vec![config.slot_length; config.n_wd],
        }
    }

    /// Index of the broadcasting AP, if exactly one is active.
    pub fn broadcasting_ap(&self) -> Option<usize> {
        let mut found = None;
        for (j, &on) in self.wpt_active.iter().enumerate() {
            if on {
                if found.is_some() {
                    return None;
                }
                found = Some(j);
            }
        }
        found
    }
}

/// Realized energies (J) and data volumes (bits) of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    /// WPT energy spent per AP, `E^T_j = a^T_j P^T_j tau^T_j`.
    pub wpt_energy: Vec<f64>,
    /// Edge-computing energy per AP, `E^C_j = sum_i eta a_ij phi_i D^O_i`.
    pub edge_energy: Vec<f64>,
    /// Energy harvested per WD, `E^H_i`.
    pub harvested: Vec<f64>,
    /// Local-computation energy per WD, `E^L_i = kappa_i f_i^3 tau^L_i`.
    pub local_energy: Vec<f64>,
    /// Offloading transmit energy per WD, `E^O_i = P_i tau_i`.
    pub offload_energy: Vec<f64>,
    /// Bits processed locally per WD, `D^L_i = f_i tau^L_i / phi_i`.
    pub local_bits: Vec<f64>,
    /// Bits offloaded per WD, `D^O_i`.
    pub offload_bits: Vec<f64>,
}

impl SlotOutcome {
    /// Total AP-side energy of the slot (the objective's per-slot term).
    pub fn ap_energy(&self) -> f64 {
        self.wpt_energy.iter().sum::<f64>() + self.edge_energy.iter().sum::<f64>()
    }
}

/// Constraints a decision can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// At most one AP broadcasts RF energy per slot.
    SingleBroadcaster,
    /// Energy causality of WD `i`: spending cannot exceed the stored energy.
    EnergyCausality(usize),
    /// Data availability of WD `i`: processing cannot exceed the backlog.
    DataAvailability(usize),
    /// TDMA time budget of AP `j`.
    TimeBudget(usize),
    /// WPT power box of AP `j`.
    WptPowerBox(usize),
    /// WPT time box of AP `j`.
    WptTimeBox(usize),
    /// Offload time box of WD `i`.
    OffloadTimeBox(usize),
    /// Offload power box of WD `i`.
    OffloadPowerBox(usize),
    /// CPU frequency box of WD `i`.
    CpuFreqBox(usize),
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::SingleBroadcaster => write!(f, "single-broadcaster"),
            Constraint::EnergyCausality(i) => write!(f, "energy-causality[wd={i}]"),
            Constraint::DataAvailability(i) => write!(f, "data-availability[wd={i}]"),
            Constraint::TimeBudget(j) => write!(f, "time-budget[ap={j}]"),
            Constraint::WptPowerBox(j) => write!(f, "wpt-power-box[ap={j}]"),
            Constraint::WptTimeBox(j) => write!(f, "wpt-time-box[ap={j}]"),
            Constraint::OffloadTimeBox(i) => write!(f, "offload-time-box[wd={i}]"),
            Constraint::OffloadPowerBox(i) => write!(f, "offload-power-box[wd={i}]"),
            Constraint::CpuFreqBox(i) => write!(f, "cpu-freq-box[wd={i}]"),
        }
    }
}

/// A violated constraint with its signed slack `limit - value` (negative when
/// violated; the validator only reports entries beyond [`FEAS_TOL`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: Constraint,
    pub slack: f64,
}

/// Simulation-level failures.
#[derive(Debug, Error)]
pub enum SimError {
    /// A decision passed to [`step_state`] violates energy causality or data
    /// availability beyond the rounding guard.
    #[error("infeasible decision at slot {t}: {constraint} exceeded by {excess:.3e}")]
    InfeasibleDecision {
        t: usize,
        constraint: Constraint,
        excess: f64,
    },
    /// The scheduler reported an internal error (treated as a bug).
    #[error(transparent)]
    Scheduler(#[from] crate::scheduler::SchedulerError),
    /// The run could not be set up (invalid configuration or topology).
    #[error("run setup failed: {0}")]
    Setup(String),
}

/// Energy harvested by WD `wd` under `decision`:
/// `E^H = sum_j mu_i a^T_j P^T_j h^D_ij tau^T_j`.
pub fn harvested_energy(
    decision: &SlotDecision,
    state: &NetworkState,
    config: &SystemConfig,
    wd: usize,
) -> f64 {
    let mut sum = 0.0;
    for j in 0..config.m_ap {
        if decision.wpt_active[j] {
            sum += config.mu[wd] * decision.wpt_power[j] * state.h_d[wd][j] * decision.wpt_time[j];
        }
    }
    sum
}

/// Achievable offload rate of WD `wd` toward AP `ap` (bits/second):
/// `(B / v_i) log2(1 + power * gain / sigma2_j)`.
pub fn offload_rate(power: f64, gain: f64, config: &SystemConfig, wd: usize, ap: usize) -> f64 {
    let snr = power * gain / config.sigma2[ap];
    (config.bandwidth / config.v[wd]) * (1.0 + snr).log2()
}

/// Local-computation energy of WD `wd` at frequency `f` over `local_time`.
pub fn local_energy(config: &SystemConfig, wd: usize, f: f64, local_time: f64) -> f64 {
    config.kappa[wd] * f * f * f * local_time
}

/// Bits processed locally by WD `wd` at frequency `f` over `local_time`.
pub fn local_bits(config: &SystemConfig, wd: usize, f: f64, local_time: f64) -> f64 {
    f * local_time / config.phi[wd]
}

/// Evaluates every outcome formula for one decision in one state.
pub fn slot_outcome(
    decision: &SlotDecision,
    state: &NetworkState,
    config: &SystemConfig,
) -> SlotOutcome {
    let n = config.n_wd;
    let m = config.m_ap;
    let mut out = SlotOutcome {
        wpt_energy: vec![0.0; m],
        edge_energy: vec![0.0; m],
        harvested: vec![0.0; n],
        local_energy: vec![0.0; n],
        offload_energy: vec![0.0; n],
        local_bits: vec![0.0; n],
        offload_bits: vec![0.0; n],
    };
    for j in 0..m {
        if decision.wpt_active[j] {
            out.wpt_energy[j] = decision.wpt_power[j] * decision.wpt_time[j];
        }
    }
    for i in 0..n {
        out.harvested[i] = harvested_energy(decision, state, config, i);
        out.local_energy[i] = local_energy(config, i, decision.cpu_freq[i], decision.local_time[i]);
        out.local_bits[i] = local_bits(config, i, decision.cpu_freq[i], decision.local_time[i]);
        if let Some(j) = decision.offload_ap[i] {
            let rate = offload_rate(decision.offload_power[i], state.h_u[i][j], config, i, j);
            out.offload_bits[i] = rate * decision.offload_time[i];
            out.offload_energy[i] = decision.offload_power[i] * decision.offload_time[i];
            out.edge_energy[j] += config.eta * config.phi[i] * out.offload_bits[i];
        }
    }
    out
}

/// Advances the state by one slot: batteries gain harvested energy and lose
/// spent energy (capped at capacity), queues lose served bits and gain the
/// new arrivals, and the next slot's channel gains are installed.
///
/// Tiny negative residuals (within [`FEAS_TOL`]) are clamped to zero because
/// the adjust step intentionally drives energy or data constraints to exact
/// equality; anything larger is an [`SimError::InfeasibleDecision`].
pub fn step_state(
    state: &NetworkState,
    decision: &SlotDecision,
    outcome: &SlotOutcome,
    config: &SystemConfig,
    next_channels: (Vec<Vec<f64>>, Vec<Vec<f64>>),
    next_arrivals: Vec<f64>,
) -> Result<NetworkState, SimError> {
    let n = config.n_wd;
    let mut queues = vec![0.0; n];
    let mut batteries = vec![0.0; n];
    for i in 0..n {
        // The guards must mirror `validate_decision` bit-for-bit (same
        // expression shape), or a decision sitting exactly on the validator's
        // tolerance boundary would pass there and be rejected here.
        let spent = outcome.local_energy[i] + outcome.offload_energy[i];
        if spent > state.batteries[i] + FEAS_TOL {
            return Err(SimError::InfeasibleDecision {
                t: state.t,
                constraint: Constraint::EnergyCausality(i),
                excess: spent - state.batteries[i],
            });
        }
        let residual = state.batteries[i] - spent;
        batteries[i] = (residual.max(0.0) + outcome.harvested[i]).min(config.b_max[i]);

        let served = outcome.local_bits[i] + outcome.offload_bits[i];
        if served > state.queues[i] + FEAS_TOL {
            return Err(SimError::InfeasibleDecision {
                t: state.t,
                constraint: Constraint::DataAvailability(i),
                excess: served - state.queues[i],
            });
        }
        queues[i] = (state.queues[i] - served).max(0.0) + next_arrivals[i];
        debug_assert!(decision.offload_time[i] >= 0.0);
    }
    Ok(NetworkState {
        t: state.t + 1,
        queues,
        batteries,
        h_u: next_channels.0,
        h_d: next_channels.1,
        arrivals: next_arrivals,
    })
}

/// Checks every constraint and returns the violated ones with signed slack.
///
/// An empty report means the decision is feasible within [`FEAS_TOL`] in each
/// constraint's native unit. With SWIPT disabled the broadcast time is
/// excluded from every AP's communication budget, not just the
/// broadcaster's.
pub fn validate_decision(
    decision: &SlotDecision,
    state: &NetworkState,
    config: &SystemConfig,
) -> Vec<Violation> {
    let mut report = Vec::new();
    let mut check = |constraint: Constraint, value: f64, limit: f64| {
        if value > limit + FEAS_TOL {
            report.push(Violation {
                constraint,
                slack: limit - value,
            });
        }
    };

    let broadcasters = decision.wpt_active.iter().filter(|&&on| on).count();
    check(Constraint::SingleBroadcaster, broadcasters as f64, 1.0);

    for j in 0..config.m_ap {
        check(
            Constraint::WptPowerBox(j),
            decision.wpt_power[j],
            config.p_t_max[j],
        );
        check(Constraint::WptPowerBox(j), -decision.wpt_power[j], 0.0);
        check(
            Constraint::WptTimeBox(j),
            decision.wpt_time[j],
            config.slot_length,
        );
        check(Constraint::WptTimeBox(j), -decision.wpt_time[j], 0.0);
    }
    for i in 0..config.n_wd {
        check(
            Constraint::OffloadTimeBox(i),
            decision.offload_time[i],
            config.slot_length,
        );
        check(Constraint::OffloadTimeBox(i), -decision.offload_time[i], 0.0);
        check(
            Constraint::OffloadPowerBox(i),
            decision.offload_power[i],
            config.p_max[i],
        );
        check(Constraint::OffloadPowerBox(i), -decision.offload_power[i], 0.0);
        check(Constraint::CpuFreqBox(i), decision.cpu_freq[i], config.f_max[i]);
        check(Constraint::CpuFreqBox(i), -decision.cpu_freq[i], 0.0);
    }

    let outcome = slot_outcome(decision, state, config);
    for i in 0..config.n_wd {
        check(
            Constraint::EnergyCausality(i),
            outcome.local_energy[i] + outcome.offload_energy[i],
            state.batteries[i],
        );
        check(
            Constraint::DataAvailability(i),
            outcome.local_bits[i] + outcome.offload_bits[i],
            state.queues[i],
        );
    }

    let total_wpt_time: f64 = (0..config.m_ap)
        .map(|j| if decision.wpt_active[j] { decision.wpt_time[j] } else { 0.0 })
        .sum();
    for j in 0..config.m_ap {
        let own_wpt = if decision.wpt_active[j] { decision.wpt_time[j] } else { 0.0 };
        let wpt_share = if config.swipt_enabled { own_wpt } else { total_wpt_time };
        let offload: f64 = (0..config.n_wd)
            .map(|i| {
                if decision.offload_ap[i] == Some(j) {
                    decision.offload_time[i]
                } else {
                    0.0
                }
            })
            .sum();
        check(Constraint::TimeBudget(j), wpt_share + offload, config.slot_length);
    }

    report
}
