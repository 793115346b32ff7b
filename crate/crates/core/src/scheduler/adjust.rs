//! Feasibility repair for the relaxed per-slot solution.
//!
//! The relaxed subproblems ignore three couplings: energy causality, data
//! availability, and the per-AP TDMA budget shared with the WPT broadcast.
//! Repair happens in two stages:
//!
//! 1. **Time re-split** — the slot time contested between the WPT broadcast
//!    and offloading transmissions is reallocated by equalizing the
//!    offloading marginal cost (as a function of the transmission time, with
//!    the transmit power re-expressed from the binding constraint) against
//!    the WPT marginal value.
//! 2. **Per-WD control repair** — each WD whose energy or data constraint is
//!    violated has its CPU frequency and transmit power walked back along the
//!    marginal-efficiency-coupled path until the binding constraint is met
//!    with float-exact feasibility (bisection that always returns the
//!    feasible bracket end, evaluated with the same formulas the validator
//!    uses).
//!
//! The marginal cost used by stage 1 is asserted to be monotone in the
//! transmission time; a violation (or any unbracketable bisection) surfaces
//! as [`AdjustFailure`], and the caller falls back to proportionally scaling
//! the raw controls, which always terminates at the always-feasible idle
//! decision.

use super::subproblems::{coupled_frequency, wpt_marginal};
use super::VirtualState;
use crate::config::SystemConfig;
use crate::model::{
    local_bits, local_energy, offload_rate, validate_decision, NetworkState, SlotDecision,
};
use thiserror::Error;

const BISECT_ITERATIONS: usize = 100;

/// Which control groups the repair may move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjustMode {
    /// Repair both CPU frequency and offloading power (proposed scheduler).
    Full,
    /// Only the CPU frequency moves (local-computation-only scheduler).
    LocalOnly,
    /// Only offloading controls move; frequencies stay zero (fully-offloading
    /// scheduler).
    OffloadOnly,
}

/// The constraint that binds a WD's repaired controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// The raw controls were already feasible; nothing moved.
    Untouched,
    /// Energy causality binds: spending is driven to the stored energy.
    EnergyTight,
    /// Data availability binds: processing is driven to the backlog.
    DataTight,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("feasibility repair failed (wd {wd:?}, regime {regime:?}): {reason}")]
pub struct AdjustFailure {
    pub wd: Option<usize>,
    pub regime: Option<Regime>,
    pub reason: String,
}

/// Repairs a raw relaxed decision into one that passes the validator.
///
/// Expects the raw decision to satisfy the structural constraints (single
/// broadcaster, one AP per WD, box constraints); energy causality, data
/// availability, and the TDMA budgets may be violated and are restored here.
pub fn adjust(
    raw: &SlotDecision,
    state: &NetworkState,
    virt: &VirtualState,
    config: &SystemConfig,
    mode: AdjustMode,
) -> Result<SlotDecision, AdjustFailure> {
    let mut decision = raw.clone();
    if let Some(j_star) = decision.broadcasting_ap() {
        if decision.wpt_time[j_star] > 0.0 {
            if config.swipt_enabled {
                resplit_swipt(&mut decision, state, virt, config, mode, j_star)?;
            } else {
                resplit_shared(&mut decision, state, virt, config, mode, j_star)?;
            }
        }
    }
    for i in 0..config.n_wd {
        repair_wd(&mut decision, state, config, mode, i);
    }
    Ok(decision)
}

/// Last-resort repair: scale the WPT time, offloading times, and CPU
/// frequencies by a common factor in [0, 1] until the validator accepts the
/// decision. The factor 0 yields the idle decision, so the search always
/// terminates feasibly. Powers and indicators are left untouched.
pub fn proportional_fallback(
    raw: &SlotDecision,
    state: &NetworkState,
    config: &SystemConfig,
) -> SlotDecision {
    let scaled = |s: f64| -> SlotDecision {
        let mut d = raw.clone();
        for time in d.wpt_time.iter_mut() {
            *time *= s;
        }
        for time in d.offload_time.iter_mut() {
            *time *= s;
        }
        for f in d.cpu_freq.iter_mut() {
            *f *= s;
        }
        d
    };
    let feasible = |s: f64| validate_decision(&scaled(s), state, config).is_empty();
    if feasible(1.0) {
        return raw.clone();
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    for _ in 0..BISECT_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    scaled(lo)
}

/// Repairs one WD's (frequency, power) at its current offloading time and
/// writes the result back. Feasible raw controls are kept bit-for-bit.
fn repair_wd(
    decision: &mut SlotDecision,
    state: &NetworkState,
    config: &SystemConfig,
    mode: AdjustMode,
    i: usize,
) {
    let link = decision.offload_ap[i].map(|j| (j, state.h_u[i][j]));
    let (f, p, _) = repair_controls(
        state,
        config,
        mode,
        i,
        link,
        decision.offload_time[i],
        decision.cpu_freq[i],
        decision.offload_power[i],
    );
    decision.cpu_freq[i] = f;
    decision.offload_power[i] = p;
}

/// Core of the per-WD repair: returns the feasible (frequency, power) at
/// fixed offloading time `tau` and the regime that binds.
///
/// The controls walk a piecewise path from the idle point to the all-max
/// point along which the local and offloading marginal energy efficiencies
/// stay equalized (frequency coupled to power, both clamped to their boxes).
/// Energy and data are nondecreasing along the path, so a bisection for the
/// first constraint crossing — always keeping the feasible bracket end —
/// yields controls that the validator accepts without any tolerance.
#[allow(clippy::too_many_arguments)]
fn repair_controls(
    state: &NetworkState,
    config: &SystemConfig,
    mode: AdjustMode,
    i: usize,
    link: Option<(usize, f64)>,
    tau: f64,
    raw_f: f64,
    raw_p: f64,
) -> (f64, f64, Regime) {
    let battery = state.batteries[i];
    let queue = state.queues[i];
    let t_local = config.slot_length;
    let active = link.is_some() && tau > 0.0;
    let energy = |f: f64, p: f64| {
        local_energy(config, i, f, t_local) + if active { p * tau } else { 0.0 }
    };
    let data = |f: f64, p: f64| {
        let offloaded = match link {
            Some((j, gain)) if active => offload_rate(p, gain, config, i, j) * tau,
            _ => 0.0,
        };
        local_bits(config, i, f, t_local) + offloaded
    };
    let feasible = |f: f64, p: f64| energy(f, p) <= battery && data(f, p) <= queue;

    if feasible(raw_f, raw_p) {
        return (raw_f, raw_p, Regime::Untouched);
    }

    // The path as segments s in [0, 1] -> (f, p), each monotone in both
    // controls and continuous at the joints.
    let mut segments: Vec<Box<dyn Fn(f64) -> (f64, f64) + '_>> = Vec::new();
    match (mode, link) {
        (AdjustMode::OffloadOnly, Some((_, _))) if active => {
            let p_max = config.p_max[i];
            segments.push(Box::new(move |s| (0.0, s * p_max)));
        }
        (AdjustMode::Full, Some((j, gain))) if active => {
            let f_max = config.f_max[i];
            let p_max = config.p_max[i];
            let f_start = coupled_frequency(config, i, j, gain, 0.0).min(f_max);
            let f_end = coupled_frequency(config, i, j, gain, p_max).min(f_max);
            segments.push(Box::new(move |s| (s * f_start, 0.0)));
            segments.push(Box::new(move |s| {
                let p = s * p_max;
                (coupled_frequency(config, i, j, gain, p).min(f_max), p)
            }));
            if f_end < f_max {
                segments.push(Box::new(move |s| (f_end + s * (f_max - f_end), p_max)));
            }
        }
        _ => {
            // Pure local computation (unassigned WD, or LocalOnly mode).
            let f_max = config.f_max[i];
            segments.push(Box::new(move |s| (s * f_max, 0.0)));
        }
    }

    let mut best = (0.0, 0.0);
    for segment in &segments {
        let (f_end, p_end) = segment(1.0);
        if feasible(f_end, p_end) {
            best = (f_end, p_end);
            continue;
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        for _ in 0..BISECT_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let (f, p) = segment(mid);
            if feasible(f, p) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (f, p) = segment(lo);
        let (f_hi, p_hi) = segment(hi);
        let regime = if energy(f_hi, p_hi) > battery {
            Regime::EnergyTight
        } else {
            Regime::DataTight
        };
        // lo = 0 collapses to the segment start, which is feasible by
        // construction; keep it rather than `best` so the regime is honest.
        return (f, p, regime);
    }
    // Unreachable for violating raw controls (the path endpoint dominates
    // them in both coordinates); kept total so a float corner degrades into
    // the caller's validation-and-fallback instead of a panic.
    (best.0, best.1, Regime::Untouched)
}

/// Transmit power of WD `i` as a function of its transmission time, with the
/// binding constraint of `regime` re-expressed at the raw CPU frequency.
#[allow(clippy::too_many_arguments)]
fn regime_power(
    state: &NetworkState,
    config: &SystemConfig,
    i: usize,
    j: usize,
    regime: Regime,
    raw_f: f64,
    raw_p: f64,
    tau: f64,
) -> f64 {
    let t = config.slot_length;
    let p_max = config.p_max[i];
    match regime {
        Regime::Untouched => raw_p,
        Regime::EnergyTight => {
            let budget = state.batteries[i] - local_energy(config, i, raw_f, t);
            if budget <= 0.0 {
                0.0
            } else if tau <= 0.0 {
                p_max
            } else {
                (budget / tau).clamp(0.0, p_max)
            }
        }
        Regime::DataTight => {
            let gain = state.h_u[i][j];
            let remaining = state.queues[i] - local_bits(config, i, raw_f, t);
            if remaining <= 0.0 || gain <= 0.0 {
                0.0
            } else if tau <= 0.0 {
                p_max
            } else {
                let exponent = config.v[i] * remaining / (config.bandwidth * tau);
                ((config.sigma2[j] / gain) * (exponent.exp2() - 1.0)).clamp(0.0, p_max)
            }
        }
    }
}

/// Marginal surrogate cost of WD `i`'s transmission time at `tau`:
/// `(V eta phi_i - Q_i) rate(P(tau)) + B^-_i P(tau)`, with `P(tau)` from
/// [`regime_power`]. Expected monotone nondecreasing in `tau`.
#[allow(clippy::too_many_arguments)]
fn offload_time_marginal(
    virt: &VirtualState,
    state: &NetworkState,
    config: &SystemConfig,
    i: usize,
    j: usize,
    regime: Regime,
    raw_f: f64,
    raw_p: f64,
    tau: f64,
) -> f64 {
    let p = regime_power(state, config, i, j, regime, raw_f, raw_p, tau);
    let rate = offload_rate(p, state.h_u[i][j], config, i, j);
    (virt.penalty_v * config.eta * config.phi[i] - virt.queue[i]) * rate + virt.shortage[i] * p
}

/// Asserts the three-point monotonicity of a marginal-cost curve.
fn check_monotone(
    marginal: &dyn Fn(f64) -> f64,
    hi: f64,
    wd: usize,
    regime: Regime,
) -> Result<(), AdjustFailure> {
    let m0 = marginal(0.0);
    let m1 = marginal(0.5 * hi);
    let m2 = marginal(hi);
    let tol = 1e-9 * (m0.abs() + m2.abs() + 1.0);
    if m0 > m1 + tol || m1 > m2 + tol {
        return Err(AdjustFailure {
            wd: Some(wd),
            regime: Some(regime),
            reason: "offloading marginal cost is not monotone in the transmission time".into(),
        });
    }
    Ok(())
}

/// SWIPT re-split: only the broadcasting AP's budget is contested, and the
/// assignment structure leaves it at most one offloading WD. The slot is
/// split where the WD's marginal cost crosses the WPT marginal value.
fn resplit_swipt(
    decision: &mut SlotDecision,
    state: &NetworkState,
    virt: &VirtualState,
    config: &SystemConfig,
    mode: AdjustMode,
    j_star: usize,
) -> Result<(), AdjustFailure> {
    let t = config.slot_length;
    let served: Vec<usize> = (0..config.n_wd)
        .filter(|&i| decision.offload_ap[i] == Some(j_star) && decision.offload_time[i] > 0.0)
        .collect();
    let Some(&i) = served.first() else {
        return Ok(());
    };
    if served.len() > 1 {
        // The assignment step never doubles up an AP; bail out to the
        // fallback if a caller hands us such a decision anyway.
        return Err(AdjustFailure {
            wd: None,
            regime: None,
            reason: "multiple WDs assigned to the broadcasting AP".into(),
        });
    }
    let level = wpt_marginal(virt, state, config, j_star) * decision.wpt_power[j_star];
    let raw_f = decision.cpu_freq[i];
    let raw_p = decision.offload_power[i];
    let gain = state.h_u[i][j_star];
    let regime = repair_controls(
        state,
        config,
        mode,
        i,
        Some((j_star, gain)),
        decision.offload_time[i],
        raw_f,
        raw_p,
    )
    .2;
    let marginal =
        |tau: f64| offload_time_marginal(virt, state, config, i, j_star, regime, raw_f, raw_p, tau);
    check_monotone(&marginal, t, i, regime)?;

    if marginal(t) <= level {
        // Offloading outbids the broadcast over the whole slot.
        decision.offload_time[i] = t;
        decision.wpt_active[j_star] = false;
        decision.wpt_power[j_star] = 0.0;
        decision.wpt_time[j_star] = 0.0;
    } else if marginal(0.0) >= level {
        unassign(decision, i);
    } else {
        let mut lo = 0.0;
        let mut hi = t;
        for _ in 0..BISECT_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if marginal(mid) <= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo <= 0.0 {
            unassign(decision, i);
            return Ok(());
        }
        decision.offload_time[i] = lo;
        decision.wpt_time[j_star] = t - lo;
    }
    Ok(())
}

/// Non-SWIPT re-split: the broadcast time is excluded from every AP's
/// budget, so one common WPT time is chosen where its marginal value stops
/// paying for the offloading time it displaces, then each served WD takes
/// the remaining budget up to its own saturation point.
fn resplit_shared(
    decision: &mut SlotDecision,
    state: &NetworkState,
    virt: &VirtualState,
    config: &SystemConfig,
    mode: AdjustMode,
    j_star: usize,
) -> Result<(), AdjustFailure> {
    let t = config.slot_length;
    let served: Vec<usize> = (0..config.n_wd)
        .filter(|&i| decision.offload_ap[i].is_some() && decision.offload_time[i] > 0.0)
        .collect();
    if served.is_empty() {
        return Ok(());
    }
    let level = wpt_marginal(virt, state, config, j_star) * decision.wpt_power[j_star];

    struct Entry {
        wd: usize,
        ap: usize,
        regime: Regime,
        raw_f: f64,
        raw_p: f64,
    }
    let mut entries = Vec::with_capacity(served.len());
    for &i in &served {
        let j = decision.offload_ap[i].expect("served WDs are assigned");
        let raw_f = decision.cpu_freq[i];
        let raw_p = decision.offload_power[i];
        let regime = repair_controls(
            state,
            config,
            mode,
            i,
            Some((j, state.h_u[i][j])),
            decision.offload_time[i],
            raw_f,
            raw_p,
        )
        .2;
        let marginal = |tau: f64| {
            offload_time_marginal(virt, state, config, i, j, regime, raw_f, raw_p, tau)
        };
        check_monotone(&marginal, t, i, regime)?;
        entries.push(Entry {
            wd: i,
            ap: j,
            regime,
            raw_f,
            raw_p,
        });
    }
    let entry_marginal = |e: &Entry, tau: f64| {
        offload_time_marginal(
            virt, state, config, e.wd, e.ap, e.regime, e.raw_f, e.raw_p, tau,
        )
    };
    // Net marginal of growing the broadcast: its own value minus the
    // (beneficial) offloading marginals it squeezes out. Nondecreasing in
    // the broadcast time because every entry marginal is.
    let psi = |tau_t: f64| {
        level
            - entries
                .iter()
                .map(|e| entry_marginal(e, t - tau_t).min(0.0))
                .sum::<f64>()
    };

    let tau_t = if psi(0.0) >= 0.0 {
        0.0
    } else if psi(t) <= 0.0 {
        t
    } else {
        let mut lo = 0.0;
        let mut hi = t;
        for _ in 0..BISECT_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if psi(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };

    let budget = if tau_t <= 0.0 {
        decision.wpt_active[j_star] = false;
        decision.wpt_power[j_star] = 0.0;
        decision.wpt_time[j_star] = 0.0;
        t
    } else {
        decision.wpt_time[j_star] = tau_t;
        t - tau_t
    };

    for e in &entries {
        // Saturation point: the largest time at which offloading still pays.
        let saturation = if entry_marginal(e, t) <= 0.0 {
            t
        } else if entry_marginal(e, 0.0) >= 0.0 {
            0.0
        } else {
            let mut lo = 0.0;
            let mut hi = t;
            for _ in 0..BISECT_ITERATIONS {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if entry_marginal(e, mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let tau = budget.min(saturation);
        if tau <= 0.0 {
            unassign(decision, e.wd);
        } else {
            decision.offload_time[e.wd] = tau;
        }
    }
    Ok(())
}

fn unassign(decision: &mut SlotDecision, i: usize) {
    decision.offload_ap[i] = None;
    decision.offload_time[i] = 0.0;
    decision.offload_power[i] = 0.0;
}
