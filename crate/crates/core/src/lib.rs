//! Discrete-time simulator and scheduler library for wireless-powered mobile
//! edge computing (WP-MEC) networks.
//!
//! A network of `N` energy-harvesting wireless devices (WDs) and `M` access
//! points (APs) evolves in slots of length `T`. In each slot at most one AP
//! broadcasts RF energy, WDs process queued computation data locally and/or
//! offload it to an AP over TDMA, and batteries and data queues are updated.
//! The goal is to minimize the long-term AP-side energy (WPT plus edge
//! computing) while keeping every data queue stable.
//!
//! The crate provides:
//!
//! - [`model`]: the domain types ([`SystemConfig`], [`NetworkState`],
//!   [`SlotDecision`], [`SlotOutcome`]) and the pure per-slot physics —
//!   energy/data formulas, state transition, and a full feasibility validator.
//! - [`stochastic`]: seeded topology generation, Rayleigh-fading channel
//!   draws, and i.i.d. arrival processes.
//! - [`assignment`]: an exact minimum-cost assignment solver (Hungarian
//!   method) with optional non-assignment.
//! - [`scheduler`]: the online drift-plus-penalty scheduler — WPT selection,
//!   closed-form local CPU frequencies, alternating-minimization offloading,
//!   and a relax-then-adjust feasibility repair.
//! - [`benchmarks`]: the local-computation-only (LCO) and fully-offloading
//!   (FO) comparison schedulers built from the same subproblem solvers.
//! - [`engine`]: the slot loop, metrics collection, delay estimators, and a
//!   queue-stability diagnostic.
//! - [`experiment`]: parameter sweeps (V, N, M) over schedulers and seeds
//!   with deterministic CSV output; this is what the `wpmec` CLI wraps.
//!
//! All scheduling operations are pure functions of `(state, config)`; a run
//! is fully determined by `(config, scheduler, seed)`.

pub mod assignment;
pub mod benchmarks;
pub mod config;
pub mod engine;
pub mod experiment;
pub mod model;
pub mod scheduler;
pub mod stochastic;

pub use config::{parse_config, ArrivalKind, ConfigError, SystemConfig};
pub use engine::{run, MetricsRecord, RunSummary, SchedulerKind, SimError, SlotRecord};
pub use model::{NetworkState, SlotDecision, SlotOutcome, Violation};
pub use scheduler::{schedule, VirtualState};
