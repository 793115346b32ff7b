//! Seeded randomness: topology generation, Rayleigh-fading channel draws,
//! and i.i.d. data arrivals.
//!
//! Reproducibility contract: a `(seed, run, purpose)` triple selects an
//! independent ChaCha12 stream whose output is identical bit-for-bit across
//! runs and platforms. The engine derives one stream per purpose so that,
//! for a fixed seed, the topology, the channel-gain sequence, and the
//! arrival sequence are each invariant under changes to the other draws.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::config::{ArrivalKind, SystemConfig};

/// What a random stream is consumed for; part of the stream id so the three
/// sequences never alias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Topology = 0,
    Channels = 1,
    Arrivals = 2,
}

/// A deterministic random stream identified by `(seed, run, purpose)`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64, run: u64, purpose: Purpose) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream((run << 8) | purpose as u64);
        RandomStream { rng }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Unit-mean exponential draw (squared magnitude of a standard complex
    /// normal — the Rayleigh-fading power gain).
    pub fn unit_exponential(&mut self) -> f64 {
        -(-self.uniform()).ln_1p()
    }
}

/// Node placement: WD and AP planar coordinates plus the WD-AP distances.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub wd_positions: Vec<[f64; 2]>,
    pub ap_positions: Vec<[f64; 2]>,
    /// `distances[i][j]` is the WD `i` to AP `j` distance in meters.
    pub distances: Vec<Vec<f64>>,
}

impl Topology {
    /// Builds a topology from explicit coordinates, rejecting coincident
    /// WD-AP pairs.
    pub fn from_positions(
        wd_positions: Vec<[f64; 2]>,
        ap_positions: Vec<[f64; 2]>,
    ) -> Result<Self, String> {
        let distances: Vec<Vec<f64>> = wd_positions
            .iter()
            .map(|w| ap_positions.iter().map(|a| dist(*w, *a)).collect())
            .collect();
        for (i, row) in distances.iter().enumerate() {
            for (j, &d) in row.iter().enumerate() {
                if !(d > 0.0) {
                    return Err(format!("WD {i} and AP {j} are coincident"));
                }
            }
        }
        Ok(Topology {
            wd_positions,
            ap_positions,
            distances,
        })
    }

    /// Serializes as a plain-text table, one row per node:
    /// `kind, index, x, y` with `kind` being `wd` or `ap`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# kind, index, x, y\n");
        for (i, p) in self.wd_positions.iter().enumerate() {
            out.push_str(&format!("wd, {i}, {}, {}\n", p[0], p[1]));
        }
        for (j, p) in self.ap_positions.iter().enumerate() {
            out.push_str(&format!("ap, {j}, {}, {}\n", p[0], p[1]));
        }
        out
    }

    /// Parses the [`Topology::to_text`] table. Rows may appear in any order
    /// but the indices of each kind must form a gapless range from 0.
    pub fn from_text(text: &str) -> Result<Self, String> {
        let mut wds: Vec<(usize, [f64; 2])> = Vec::new();
        let mut aps: Vec<(usize, [f64; 2])> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(format!(
                    "topology line {}: expected `kind, index, x, y`",
                    lineno + 1
                ));
            }
            let index: usize = fields[1]
                .parse()
                .map_err(|e| format!("topology line {}: bad index: {e}", lineno + 1))?;
            let x: f64 = fields[2]
                .parse()
                .map_err(|e| format!("topology line {}: bad x: {e}", lineno + 1))?;
            let y: f64 = fields[3]
                .parse()
                .map_err(|e| format!("topology line {}: bad y: {e}", lineno + 1))?;
            match fields[0] {
                "wd" => wds.push((index, [x, y])),
                "ap" => aps.push((index, [x, y])),
                other => {
                    return Err(format!(
                        "topology line {}: unknown kind `{other}`",
                        lineno + 1
                    ))
                }
            }
        }
        for list in [&mut wds, &mut aps] {
            list.sort_by_key(|(i, _)| *i);
            for (expect, (got, _)) in list.iter().enumerate() {
                if *got != expect {
                    return Err(format!("topology indices are not gapless (missing {expect})"));
                }
            }
        }
        Topology::from_positions(
            wds.into_iter().map(|(_, p)| p).collect(),
            aps.into_iter().map(|(_, p)| p).collect(),
        )
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Places APs on a uniform grid over the square region and WDs uniformly at
/// random, resampling WDs that land within `min_distance` of an AP (at most
/// 100 attempts each, then an error).
///
/// The grid uses `ceil(sqrt(M))` columns; a single AP sits at the region
/// center. Deterministic under a fixed stream.
pub fn generate_topology(
    config: &SystemConfig,
    stream: &mut RandomStream,
) -> Result<Topology, String> {
    let side = config.region_side;
    let m = config.m_ap;
    let cols = (m as f64).sqrt().ceil() as usize;
    let rows = m.div_ceil(cols);
    let mut ap_positions = Vec::with_capacity(m);
    for j in 0..m {
        let (r, c) = (j / cols, j % cols);
        ap_positions.push([
            (c as f64 + 0.5) * side / cols as f64,
            (r as f64 + 0.5) * side / rows as f64,
        ]);
    }

    let mut wd_positions = Vec::with_capacity(config.n_wd);
    for i in 0..config.n_wd {
        let mut placed = false;
        for _ in 0..100 {
            let p = [stream.uniform() * side, stream.uniform() * side];
            let clear = ap_positions
                .iter()
                .all(|&a| dist(p, a) > config.min_distance.max(0.0) && dist(p, a) > 0.0);
            if clear {
                wd_positions.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(format!(
                "could not place WD {i} at least {} m from every AP in 100 attempts",
                config.min_distance
            ));
        }
    }
    Topology::from_positions(wd_positions, ap_positions)
}

/// Resolves the run topology: explicit positions from the config when
/// provided, otherwise a fresh seeded placement.
pub fn resolve_topology(config: &SystemConfig, seed: u64) -> Result<Topology, String> {
    if !config.wd_positions.is_empty() && !config.ap_positions.is_empty() {
        Topology::from_positions(config.wd_positions.clone(), config.ap_positions.clone())
    } else if config.wd_positions.is_empty() && config.ap_positions.is_empty() {
        let mut stream = RandomStream::new(seed, 0, Purpose::Topology);
        generate_topology(config, &mut stream)
    } else {
        Err("wd_positions and ap_positions must both be set or both be empty".into())
    }
}

/// Deterministic part of the channel model: distance-based path loss times a
/// fading power gain `g`, with the downlink a fixed multiple of the uplink.
/// Links beyond the coverage radius have zero gain.
pub fn channel_gain(config: &SystemConfig, distance: f64, g: f64) -> (f64, f64) {
    if distance > config.coverage_radius {
        return (0.0, 0.0);
    }
    let h_u = config.theta_u * distance.powf(-config.path_loss_exponent) * g;
    (h_u, config.downlink_factor * h_u)
}

/// Draws one slot of channel gains: `h_u[i][j] = theta_u d_ij^-ple g_ij` with
/// `g_ij` i.i.d. unit-mean exponential, and `h_d = downlink_factor * h_u`.
/// Entries are drawn WD-major (all APs of WD 0, then WD 1, ...).
pub fn sample_channels(
    topology: &Topology,
    config: &SystemConfig,
    stream: &mut RandomStream,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = topology.wd_positions.len();
    let m = topology.ap_positions.len();
    let mut h_u = vec![vec![0.0; m]; n];
    let mut h_d = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let g = stream.unit_exponential();
            let (u, d) = channel_gain(config, topology.distances[i][j], g);
            h_u[i][j] = u;
            h_d[i][j] = d;
        }
    }
    (h_u, h_d)
}

/// Draws one slot of arrivals (bits per WD), independent across WDs with
/// mean `lambda_i` under the configured distribution.
pub fn sample_arrivals(config: &SystemConfig, stream: &mut RandomStream) -> Vec<f64> {
    config
        .lambda
        .iter()
        .map(|&lambda| {
            if lambda == 0.0 {
                // Consume no draw: a silent WD never shifts the sequence.
                return 0.0;
            }
            match config.arrival_distribution {
                ArrivalKind::Uniform => 2.0 * lambda * stream.uniform(),
                ArrivalKind::Constant => lambda,
                ArrivalKind::Geometric => {
                    let p = 1.0 / (1.0 + lambda);
                    let u = stream.uniform();
                    // Inverse CDF of the geometric distribution on {0,1,...}.
                    ((-u).ln_1p() / (-p).ln_1p()).floor()
                }
            }
        })
        .collect()
}
