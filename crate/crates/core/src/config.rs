//! Static system configuration and the sectioned `key = value` config parser.
//!
//! A [`SystemConfig`] holds every static parameter of the network: slot
//! timing, bandwidth, the drift-plus-penalty weight `V`, per-WD device
//! constants, per-AP radio constants, channel-model constants, the arrival
//! process, and (optionally) explicit node positions. Unset keys fall back to
//! the documented defaults; [`SystemConfig::validate`] enforces the type
//! invariants.

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Arrival-process family; every distribution has mean `lambda` bits/slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalKind {
    /// Uniform on `[0, 2 lambda]` (bounded support, the default).
    Uniform,
    /// Exactly `lambda` bits every slot.
    Constant,
    /// Geometric on `{0, 1, 2, ...}` with success probability `1 / (1 + lambda)`.
    Geometric,
}

impl fmt::Display for ArrivalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrivalKind::Uniform => write!(f, "uniform"),
            ArrivalKind::Constant => write!(f, "constant"),
            ArrivalKind::Geometric => write!(f, "geometric"),
        }
    }
}

/// All static parameters of the simulated WP-MEC network.
///
/// Per-WD vectors have length `n_wd` and per-AP vectors length `m_ap`.
/// `wd_positions` / `ap_positions` may be empty, in which case the engine
/// generates a topology from the run seed (WDs uniform in the square region,
/// APs on a grid).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of wireless devices `N`.
    pub n_wd: usize,
    /// Number of access points `M`.
    pub m_ap: usize,
    /// Slot length `T` in seconds.
    pub slot_length: f64,
    /// Spectrum bandwidth `B` in Hz.
    pub bandwidth: f64,
    /// Drift-plus-penalty weight `V` (energy/delay tradeoff knob).
    pub penalty_v: f64,
    /// Simulation horizon `H` in slots.
    pub horizon: usize,
    /// SWIPT-capable WDs: harvesting and communication may share a slot, so
    /// only the broadcasting AP's own budget loses the WPT time. When false,
    /// the WPT time is excluded from every AP's communication budget.
    pub swipt_enabled: bool,
    /// Edge-server energy per CPU cycle (J/cycle).
    pub eta: f64,

    /// Per-WD energy-harvesting conversion efficiency, in (0, 1).
    pub mu: Vec<f64>,
    /// Per-WD effective switched-capacitance coefficient (J·s²).
    pub kappa: Vec<f64>,
    /// Per-WD computation intensity (CPU cycles per bit).
    pub phi: Vec<f64>,
    /// Per-WD communication overhead factor, > 1.
    pub v: Vec<f64>,
    /// Per-WD maximum CPU frequency (Hz).
    pub f_max: Vec<f64>,
    /// Per-WD maximum offloading transmit power (W).
    pub p_max: Vec<f64>,
    /// Per-WD battery capacity (J).
    pub b_max: Vec<f64>,
    /// Per-WD mean arrival rate (bits/slot).
    pub lambda: Vec<f64>,

    /// Per-AP maximum WPT transmit power (W).
    pub p_t_max: Vec<f64>,
    /// Per-AP receiver noise power (W).
    pub sigma2: Vec<f64>,

    /// Reference path-loss gain at 1 m.
    pub theta_u: f64,
    /// Path-loss exponent (gain scales as `d^-exponent`).
    pub path_loss_exponent: f64,
    /// Downlink gain as a multiple of the uplink gain.
    pub downlink_factor: f64,
    /// Links longer than this distance (m) have zero gain; `inf` disables.
    pub coverage_radius: f64,
    /// Side of the square deployment region (m).
    pub region_side: f64,
    /// Minimum admissible WD-AP distance (m); placements closer than this are
    /// resampled so path loss stays bounded.
    pub min_distance: f64,

    /// Arrival-process family (all WDs share the family; rates are per-WD).
    pub arrival_distribution: ArrivalKind,
    /// Fraction of the horizon excluded from summary averages as warm-up.
    pub warmup_fraction: f64,

    /// Explicit WD coordinates (m); empty means "generate from the seed".
    pub wd_positions: Vec<[f64; 2]>,
    /// Explicit AP coordinates (m); empty means "generate from the seed".
    pub ap_positions: Vec<[f64; 2]>,
}

impl Default for SystemConfig {
    /// The default network: 30 WDs, 5 APs, 1 MHz bandwidth, V = 3, and the
    /// standard device constants (f_max 0.5 GHz, battery 30 kJ, kappa 1e-28,
    /// phi 1000 cycles/bit, v 1.1, eta 8.2 nJ/cycle, sigma² 1 nW, mu 0.51,
    /// theta_u 6.25e-4 with cubic path loss and doubled downlink gain).
    /// Slot length (1 s), arrival rate (1e5 bits/slot), P^T,max (3 W),
    /// P^max (0.1 W), the 100 m region, and the 1 m minimum distance are
    /// simulator choices, not literature values.
    fn default() -> Self {
        let n = 30;
        let m = 5;
        SystemConfig {
            n_wd: n,
            m_ap: m,
            slot_length: 1.0,
            bandwidth: 1e6,
            penalty_v: 3.0,
            horizon: 10_000,
            swipt_enabled: true,
            eta: 8.2e-9,
            mu: vec![0.51; n],
            kappa: vec![1e-28; n],
            phi: vec![1000.0; n],
            v: vec![1.1; n],
            f_max: vec![5e8; n],
            p_max: vec![0.1; n],
            b_max: vec![3e4; n],
            lambda: vec![1e5; n],
            p_t_max: vec![3.0; m],
            sigma2: vec![1e-9; m],
            theta_u: 6.25e-4,
            path_loss_exponent: 3.0,
            downlink_factor: 2.0,
            coverage_radius: f64::INFINITY,
            region_side: 100.0,
            min_distance: 1.0,
            arrival_distribution: ArrivalKind::Uniform,
            warmup_fraction: 0.1,
            wd_positions: Vec::new(),
            ap_positions: Vec::new(),
        }
    }
}

impl SystemConfig {
    /// Checks every type invariant; returns the first violation found.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Invariant(msg));
        if self.n_wd == 0 {
            return err("n_wd must be >= 1".into());
        }
        if self.m_ap == 0 {
            return err("m_ap must be >= 1".into());
        }
        if !(self.slot_length > 0.0) {
            return err(format!("slot_length must be > 0, got {}", self.slot_length));
        }
        if !(self.bandwidth > 0.0) {
            return err(format!("bandwidth must be > 0, got {}", self.bandwidth));
        }
        if !(self.penalty_v >= 0.0) {
            return err(format!("penalty_v must be >= 0, got {}", self.penalty_v));
        }
        if !(self.eta >= 0.0) {
            return err(format!("eta must be >= 0, got {}", self.eta));
        }
        for (name, vec) in [
            ("mu", &self.mu),
            ("kappa", &self.kappa),
            ("phi", &self.phi),
            ("v", &self.v),
            ("f_max", &self.f_max),
            ("p_max", &self.p_max),
            ("b_max", &self.b_max),
            ("lambda", &self.lambda),
        ] {
            if vec.len() != self.n_wd {
                return err(format!(
                    "{name} has {} entries but n_wd = {}",
                    vec.len(),
                    self.n_wd
                ));
            }
            if vec.iter().any(|x| !x.is_finite()) {
                return err(format!("{name} contains a non-finite value"));
            }
        }
        for (name, vec) in [("p_t_max", &self.p_t_max), ("sigma2", &self.sigma2)] {
            if vec.len() != self.m_ap {
                return err(format!(
                    "{name} has {} entries but m_ap = {}",
                    vec.len(),
                    self.m_ap
                ));
            }
            if vec.iter().any(|x| !x.is_finite()) {
                return err(format!("{name} contains a non-finite value"));
            }
        }
        if self.mu.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
            return err("mu must lie in (0, 1)".into());
        }
        if self.v.iter().any(|&x| !(x > 1.0)) {
            return err("v must be > 1".into());
        }
        for (name, vec) in [
            ("kappa", &self.kappa),
            ("phi", &self.phi),
            ("f_max", &self.f_max),
            ("p_max", &self.p_max),
            ("b_max", &self.b_max),
            ("p_t_max", &self.p_t_max),
            ("sigma2", &self.sigma2),
        ] {
            if vec.iter().any(|&x| !(x > 0.0)) {
                return err(format!("{name} must be strictly positive"));
            }
        }
        if self.lambda.iter().any(|&x| !(x >= 0.0)) {
            return err("lambda must be >= 0".into());
        }
        if !(self.theta_u > 0.0) {
            return err(format!("theta_u must be > 0, got {}", self.theta_u));
        }
        if !(self.path_loss_exponent > 0.0) {
            return err("path_loss_exponent must be > 0".into());
        }
        if !(self.downlink_factor > 0.0) {
            return err("downlink_factor must be > 0".into());
        }
        if !(self.coverage_radius >= 0.0) {
            return err("coverage_radius must be >= 0".into());
        }
        if !(self.region_side > 0.0) {
            return err("region_side must be > 0".into());
        }
        if !(self.min_distance >= 0.0) || !self.min_distance.is_finite() {
            return err("min_distance must be finite and >= 0".into());
        }
        if !(self.warmup_fraction >= 0.0 && self.warmup_fraction < 1.0) {
            return err(format!(
                "warmup_fraction must lie in [0, 1), got {}",
                self.warmup_fraction
            ));
        }
        if !self.wd_positions.is_empty() && self.wd_positions.len() != self.n_wd {
            return err(format!(
                "wd_positions has {} entries but n_wd = {}",
                self.wd_positions.len(),
                self.n_wd
            ));
        }
        if !self.ap_positions.is_empty() && self.ap_positions.len() != self.m_ap {
            return err(format!(
                "ap_positions has {} entries but m_ap = {}",
                self.ap_positions.len(),
                self.m_ap
            ));
        }
        Ok(())
    }

    /// Returns a copy resized to `n` WDs. All per-WD parameters must be
    /// uniform (a sweep cannot invent heterogeneous values) and any explicit
    /// topology is dropped so the engine regenerates one of the right size.
    pub fn with_n_wd(&self, n: usize) -> Result<SystemConfig, ConfigError> {
        let mut out = self.clone();
        for (name, vec) in [
            ("mu", &mut out.mu),
            ("kappa", &mut out.kappa),
            ("phi", &mut out.phi),
            ("v", &mut out.v),
            ("f_max", &mut out.f_max),
            ("p_max", &mut out.p_max),
            ("b_max", &mut out.b_max),
            ("lambda", &mut out.lambda),
        ] {
            let first = vec[0];
            if vec.iter().any(|&x| x != first) {
                return Err(ConfigError::Invariant(format!(
                    "cannot sweep n_wd: per-WD parameter {name} is not uniform"
                )));
            }
            *vec = vec![first; n];
        }
        if !out.wd_positions.is_empty() || !out.ap_positions.is_empty() {
            return Err(ConfigError::Invariant(
                "cannot sweep n_wd with an explicit topology".into(),
            ));
        }
        out.n_wd = n;
        out.validate()?;
        Ok(out)
    }

    /// Returns a copy resized to `m` APs; the per-AP analogue of
    /// [`SystemConfig::with_n_wd`].
    pub fn with_m_ap(&self, m: usize) -> Result<SystemConfig, ConfigError> {
        let mut out = self.clone();
        for (name, vec) in [("p_t_max", &mut out.p_t_max), ("sigma2", &mut out.sigma2)] {
            let first = vec[0];
            if vec.iter().any(|&x| x != first) {
                return Err(ConfigError::Invariant(format!(
                    "cannot sweep m_ap: per-AP parameter {name} is not uniform"
                )));
            }
            *vec = vec![first; m];
        }
        if !out.wd_positions.is_empty() || !out.ap_positions.is_empty() {
            return Err(ConfigError::Invariant(
                "cannot sweep m_ap with an explicit topology".into(),
            ));
        }
        out.m_ap = m;
        out.validate()?;
        Ok(out)
    }
}

/// Errors from config parsing and validation.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: key `{key}` before any [section] header")]
    KeyOutsideSection { line: usize, key: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey {
        line: usize,
        section: String,
        key: String,
    },
    #[error("line {line}: invalid value for `{key}`: {reason}")]
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invariant(String),
}

/// One `key = value` occurrence, tagged with its section and line number.
struct RawEntry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

/// Parses a sectioned `key = value` config file into a [`SystemConfig`].
///
/// Recognized sections and keys:
///
/// - `[system]`: `n_wd`, `m_ap`, `slot_length`, `bandwidth`, `penalty_v`,
///   `horizon`, `swipt`, `eta`
/// - `[wd]` (scalar broadcast to all WDs, or a comma list of `n_wd` values):
///   `mu`, `kappa`, `phi`, `v`, `f_max`, `p_max`, `b_max`
/// - `[ap]` (scalar or comma list of `m_ap` values): `p_t_max`, `sigma2`
/// - `[channel]`: `theta_u`, `path_loss_exponent`, `downlink_factor`,
///   `coverage_radius` (accepts `inf`), `region_side`, `min_distance`
/// - `[arrivals]`: `lambda` (scalar or list), `distribution`
///   (`uniform` | `constant` | `geometric`)
/// - `[experiment]`: `warmup_fraction`, `topology_file` (path, relative to
///   the config file's directory)
///
/// Missing keys take the defaults of [`SystemConfig::default`]; unknown keys
/// and malformed lines are errors with line numbers; an empty file yields the
/// full default configuration. Full-line comments start with `#` or `;`.
/// When a key appears twice the last occurrence wins.
pub fn parse_config(path: &Path) -> Result<SystemConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    let entries = tokenize(&text)?;
    let mut cfg = SystemConfig::default();

    // n_wd / m_ap first: list-valued keys validate their lengths against them.
    for e in &entries {
        if e.section == "system" && (e.key == "n_wd" || e.key == "m_ap") {
            let n: usize = parse_scalar(e)?;
            if n == 0 {
                return Err(ConfigError::InvalidValue {
                    line: e.line,
                    key: e.key.clone(),
                    reason: "must be >= 1".into(),
                });
            }
            if e.key == "n_wd" {
                cfg = resize_wd(cfg, n);
            } else {
                cfg = resize_ap(cfg, n);
            }
        }
    }

    let mut topology_file: Option<(PathBuf, usize)> = None;
    for e in &entries {
        match (e.section.as_str(), e.key.as_str()) {
            ("system", "n_wd") | ("system", "m_ap") => {} // handled above
            ("system", "slot_length") => cfg.slot_length = parse_scalar(e)?,
            ("system", "bandwidth") => cfg.bandwidth = parse_scalar(e)?,
            ("system", "penalty_v") => cfg.penalty_v = parse_scalar(e)?,
            ("system", "horizon") => cfg.horizon = parse_scalar(e)?,
            ("system", "swipt") => cfg.swipt_enabled = parse_scalar(e)?,
            ("system", "eta") => cfg.eta = parse_scalar(e)?,
            ("wd", "mu") => cfg.mu = parse_list(e, cfg.n_wd)?,
            ("wd", "kappa") => cfg.kappa = parse_list(e, cfg.n_wd)?,
            ("wd", "phi") => cfg.phi = parse_list(e, cfg.n_wd)?,
            ("wd", "v") => cfg.v = parse_list(e, cfg.n_wd)?,
            ("wd", "f_max") => cfg.f_max = parse_list(e, cfg.n_wd)?,
            ("wd", "p_max") => cfg.p_max = parse_list(e, cfg.n_wd)?,
            ("wd", "b_max") => cfg.b_max = parse_list(e, cfg.n_wd)?,
            ("ap", "p_t_max") => cfg.p_t_max = parse_list(e, cfg.m_ap)?,
            ("ap", "sigma2") => cfg.sigma2 = parse_list(e, cfg.m_ap)?,
            ("channel", "theta_u") => cfg.theta_u = parse_scalar(e)?,
            ("channel", "path_loss_exponent") => cfg.path_loss_exponent = parse_scalar(e)?,
            ("channel", "downlink_factor") => cfg.downlink_factor = parse_scalar(e)?,
            ("channel", "coverage_radius") => cfg.coverage_radius = parse_scalar(e)?,
            ("channel", "region_side") => cfg.region_side = parse_scalar(e)?,
            ("channel", "min_distance") => cfg.min_distance = parse_scalar(e)?,
            ("arrivals", "lambda") => cfg.lambda = parse_list(e, cfg.n_wd)?,
            ("arrivals", "distribution") => {
                cfg.arrival_distribution = match e.value.as_str() {
                    "uniform" => ArrivalKind::Uniform,
                    "constant" => ArrivalKind::Constant,
                    "geometric" => ArrivalKind::Geometric,
                    other => {
                        return Err(ConfigError::InvalidValue {
                            line: e.line,
                            key: e.key.clone(),
                            reason: format!(
                                "expected uniform | constant | geometric, got `{other}`"
                            ),
                        })
                    }
                };
            }
            ("experiment", "warmup_fraction") => cfg.warmup_fraction = parse_scalar(e)?,
            ("experiment", "topology_file") => {
                let base = path.parent().unwrap_or_else(|| Path::new("."));
                topology_file = Some((base.join(&e.value), e.line));
            }
            (section, _) => {
                return Err(ConfigError::UnknownKey {
                    line: e.line,
                    section: section.to_string(),
                    key: e.key.clone(),
                })
            }
        }
    }

    if let Some((topo_path, line)) = topology_file {
        let text = std::fs::read_to_string(&topo_path).map_err(|err| ConfigError::InvalidValue {
            line,
            key: "topology_file".into(),
            reason: format!("{}: {err}", topo_path.display()),
        })?;
        let topo = crate::stochastic::Topology::from_text(&text).map_err(|reason| {
            ConfigError::InvalidValue {
                line,
                key: "topology_file".into(),
                reason,
            }
        })?;
        cfg.wd_positions = topo.wd_positions;
        cfg.ap_positions = topo.ap_positions;
    }

    cfg.validate()?;
    Ok(cfg)
}

/// Splits the file into section-tagged `key = value` entries.
fn tokenize(text: &str) -> Result<Vec<RawEntry>, ConfigError> {
    const SECTIONS: &[&str] = &["system", "wd", "ap", "channel", "arrivals", "experiment"];
    let mut entries = Vec::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with(';') {
            continue;
        }
        if let Some(name) = trimmed.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Malformed {
                line,
                text: trimmed.to_string(),
            })?;
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    name: name.to_string(),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| ConfigError::Malformed {
            line,
            text: trimmed.to_string(),
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Malformed {
                line,
                text: trimmed.to_string(),
            });
        }
        let section = section.clone().ok_or_else(|| ConfigError::KeyOutsideSection {
            line,
            key: key.clone(),
        })?;
        entries.push(RawEntry {
            line,
            section,
            key,
            value,
        });
    }
    Ok(entries)
}

/// Parses a single scalar value (`f64`, `usize`, or `bool`); `f64` accepts
/// `inf` for unbounded radii.
fn parse_scalar<T: std::str::FromStr>(e: &RawEntry) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    e.value.parse().map_err(|err| ConfigError::InvalidValue {
        line: e.line,
        key: e.key.clone(),
        reason: format!("{err}"),
    })
}

/// Parses a scalar (broadcast to `len` entries) or a comma list of exactly
/// `len` floats.
fn parse_list(e: &RawEntry, len: usize) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
    let mut out = Vec::with_capacity(parts.len());
    for part in &parts {
        let x: f64 = part.parse().map_err(|err| ConfigError::InvalidValue {
            line: e.line,
            key: e.key.clone(),
            reason: format!("`{part}`: {err}"),
        })?;
        out.push(x);
    }
    if out.len() == 1 {
        return Ok(vec![out[0]; len]);
    }
    if out.len() != len {
        return Err(ConfigError::InvalidValue {
            line: e.line,
            key: e.key.clone(),
            reason: format!("expected 1 or {len} comma-separated values, got {}", out.len()),
        });
    }
    Ok(out)
}

fn resize_wd(mut cfg: SystemConfig, n: usize) -> SystemConfig {
    cfg.n_wd = n;
    cfg.mu = vec![cfg.mu[0]; n];
    cfg.kappa = vec![cfg.kappa[0]; n];
    cfg.phi = vec![cfg.phi[0]; n];
    cfg.v = vec![cfg.v[0]; n];
    cfg.f_max = vec![cfg.f_max[0]; n];
    cfg.p_max = vec![cfg.p_max[0]; n];
    cfg.b_max = vec![cfg.b_max[0]; n];
    cfg.lambda = vec![cfg.lambda[0]; n];
    cfg
}

fn resize_ap(mut cfg: SystemConfig, m: usize) -> SystemConfig {
    cfg.m_ap = m;
    cfg.p_t_max = vec![cfg.p_t_max[0]; m];
    cfg.sigma2 = vec![cfg.sigma2[0]; m];
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(text: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(text.as_bytes()).unwrap();
        file.flush().unwrap();
        file
    }

    #[test]
    fn empty_file_gives_defaults() {
        let file = write_config("");
        let cfg = parse_config(file.path()).unwrap();
        assert_eq!(cfg, SystemConfig::default());
        assert_eq!(cfg.n_wd, 30);
        assert_eq!(cfg.m_ap, 5);
        assert_eq!(cfg.penalty_v, 3.0);
        assert_eq!(cfg.f_max[0], 5e8);
        assert_eq!(cfg.b_max[0], 3e4);
        assert_eq!(cfg.theta_u, 6.25e-4);
    }

    #[test]
    fn single_override() {
        let file = write_config("[system]\npenalty_v = 8\n");
        let cfg = parse_config(file.path()).unwrap();
        assert_eq!(cfg.penalty_v, 8.0);
        assert_eq!(cfg.n_wd, 30);
    }

    #[test]
    fn mu_out_of_range_rejected() {
        let file = write_config("[wd]\nmu = 1.5\n");
        let err = parse_config(file.path()).unwrap_err();
        assert!(matches!(err, ConfigError::Invariant(_)), "got {err:?}");
    }

    #[test]
    fn unknown_key_reports_line() {
        let file = write_config("[system]\nn_wd = 4\nbogus = 1\n");
        match parse_config(file.path()).unwrap_err() {
            ConfigError::UnknownKey { line, key, .. } => {
                assert_eq!(line, 3);
                assert_eq!(key, "bogus");
            }
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line() {
        let file = write_config("[system]\nnonsense\n");
        match parse_config(file.path()).unwrap_err() {
            ConfigError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("expected Malformed, got {other:?}"),
        }
    }

    #[test]
    fn unknown_section_rejected() {
        let file = write_config("[galaxy]\nx = 1\n");
        assert!(matches!(
            parse_config(file.path()).unwrap_err(),
            ConfigError::UnknownSection { line: 1, .. }
        ));
    }

    #[test]
    fn key_before_section_rejected() {
        let file = write_config("n_wd = 4\n");
        assert!(matches!(
            parse_config(file.path()).unwrap_err(),
            ConfigError::KeyOutsideSection { line: 1, .. }
        ));
    }

    #[test]
    fn list_broadcast_and_exact_length() {
        let file = write_config("[system]\nn_wd = 3\n[wd]\nkappa = 1e-27\nphi = 500, 1000, 1500\n");
        let cfg = parse_config(file.path()).unwrap();
        assert_eq!(cfg.kappa, vec![1e-27; 3]);
        assert_eq!(cfg.phi, vec![500.0, 1000.0, 1500.0]);
    }

    #[test]
    fn list_length_mismatch_rejected() {
        let file = write_config("[system]\nn_wd = 3\n[wd]\nphi = 500, 1000\n");
        assert!(matches!(
            parse_config(file.path()).unwrap_err(),
            ConfigError::InvalidValue { .. }
        ));
    }

    #[test]
    fn n_wd_after_wd_section_still_applies() {
        let file = write_config("[wd]\nmu = 0.4\n[system]\nn_wd = 7\n");
        let cfg = parse_config(file.path()).unwrap();
        assert_eq!(cfg.mu, vec![0.4; 7]);
    }

    #[test]
    fn coverage_radius_accepts_inf() {
        let file = write_config("[channel]\ncoverage_radius = inf\n");
        let cfg = parse_config(file.path()).unwrap();
        assert!(cfg.coverage_radius.is_infinite());
    }

    #[test]
    fn last_duplicate_wins() {
        let file = write_config("[system]\npenalty_v = 1\npenalty_v = 4\n");
        assert_eq!(parse_config(file.path()).unwrap().penalty_v, 4.0);
    }

    #[test]
    fn sweep_resize_requires_uniform_values() {
        let mut cfg = SystemConfig::default();
        cfg.phi[3] = 2000.0;
        assert!(cfg.with_n_wd(10).is_err());
        let uniform = SystemConfig::default();
        let resized = uniform.with_n_wd(10).unwrap();
        assert_eq!(resized.n_wd, 10);
        assert_eq!(resized.lambda.len(), 10);
    }
}
