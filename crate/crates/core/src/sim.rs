//! Single-gateway cell simulation.
//!
//! A run places nodes, measures their RSSI in an idealized bootstrap phase,
//! applies an allocator, generates Poisson uplink traffic and adjudicates
//! every frame against all frames overlapping it on the same channel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::allocation::{allocate, AllocationParams, AllocationResult, AllocatorKind, NodeSnapshot, PowerLevelSet, SfOrder};
use crate::collision::{overlaps, resolve, CirMatrix, Fate, Transmission};
use crate::error::{Error, Result};
use crate::radio::{airtime, path_loss, ChannelGain, RadioConfig, SpreadingFactor};
use crate::study::fixed_allocation;

/// Nodes closer than this are clamped to it before computing path loss.
pub const MIN_DISTANCE_M: f64 = 1.0;

const STREAM_PLACEMENT: u64 = 1;
const STREAM_TRAFFIC: u64 = 2;
const STREAM_SHADOWING: u64 = 3;
const STREAM_BOOTSTRAP: u64 = 4;

/// Independent RNG stream for one purpose of a seeded run.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub node_count: usize,
    /// Radius of the uniform-disk placement around the gateway.
    pub cell_radius_m: f64,
    pub payload_bytes: u32,
    pub mean_interval_s: f64,
    pub sim_time_s: f64,
    pub bootstrap_packets_per_node: u32,
    /// `None` means the highest power level.
    pub bootstrap_tp_dbm: Option<f64>,
    /// TP used by the fixed allocator; `None` means the highest level.
    pub fixed_tp_dbm: Option<f64>,
    pub channels: Vec<u16>,
    pub allocator: AllocatorKind,
    pub seed: u64,
    pub radio: RadioConfig,
    pub cir: CirMatrix,
    pub levels: PowerLevelSet,
    pub group_size: usize,
    pub sf_order: SfOrder,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            node_count: 100,
            cell_radius_m: 200.0,
            payload_bytes: 80,
            mean_interval_s: 60.0,
            sim_time_s: 86_400.0,
            bootstrap_packets_per_node: 1,
            bootstrap_tp_dbm: None,
            fixed_tp_dbm: None,
            channels: vec![0],
            allocator: AllocatorKind::Fadr,
            seed: 1,
            radio: RadioConfig::default(),
            cir: CirMatrix::default(),
            levels: PowerLevelSet::default(),
            group_size: 50,
            sf_order: SfOrder::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.radio.validate()?;
        if self.node_count == 0 {
            return Err(Error::config("node count must be at least 1"));
        }
        if !(self.sim_time_s > 0.0) || !self.sim_time_s.is_finite() {
            return Err(Error::config("simulation time must be positive"));
        }
        if !(self.mean_interval_s > 0.0) || !self.mean_interval_s.is_finite() {
            return Err(Error::config("mean interval must be positive"));
        }
        if !(self.cell_radius_m >= 0.0) || !self.cell_radius_m.is_finite() {
            return Err(Error::config("cell radius must be non-negative"));
        }
        if self.payload_bytes == 0 {
            return Err(Error::EmptyPayload);
        }
        if self.channels.is_empty() {
            return Err(Error::config("at least one channel is required"));
        }
        if self.group_size == 0 {
            return Err(Error::config("group size must be positive"));
        }
        if self.allocator.needs_rssi() && self.bootstrap_packets_per_node == 0 {
            return Err(Error::config(format!(
                "allocator `{}` needs bootstrap RSSI but bootstrap_packets is 0",
                self.allocator
            )));
        }
        for (name, tp) in [("bootstrap", self.bootstrap_tp_dbm), ("fixed", self.fixed_tp_dbm)] {
            if let Some(tp) = tp {
                if !self.levels.contains(tp) {
                    return Err(Error::config(format!("{name} TP {tp} dBm is not a configured level")));
                }
            }
        }
        Ok(())
    }

    pub fn bootstrap_tp(&self) -> f64 {
        self.bootstrap_tp_dbm.unwrap_or(self.levels.max())
    }

    pub fn fixed_tp(&self) -> f64 {
        self.fixed_tp_dbm.unwrap_or(self.levels.max())
    }

    pub fn allocation_params(&self) -> AllocationParams {
        AllocationParams {
            levels: self.levels.clone(),
            cir: self.cir,
            group_size: self.group_size,
            sf_order: self.sf_order,
            radio: self.radio.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub node_id: u32,
    pub x_m: f64,
    pub y_m: f64,
    pub distance_m: f64,
    pub gain: ChannelGain,
    pub sf: SpreadingFactor,
    pub tp_dbm: f64,
    pub sent: u64,
    pub received: u64,
    pub lost_collision: u64,
    pub lost_sensitivity: u64,
}

/// Uniform placement over the disk of `cell_radius_m` around the gateway.
pub fn place_nodes(cfg: &SimConfig, rng: &mut impl Rng) -> Result<Vec<NodeState>> {
    (0..cfg.node_count)
        .map(|i| {
            let r = cfg.cell_radius_m * rng.random::<f64>().sqrt();
            let theta = std::f64::consts::TAU * rng.random::<f64>();
            let distance_m = r.max(MIN_DISTANCE_M);
            let loss = path_loss(distance_m, &cfg.radio, 0.0)?;
            Ok(NodeState {
                node_id: i as u32,
                x_m: r * theta.cos(),
                y_m: r * theta.sin(),
                distance_m,
                gain: ChannelGain::from_path_loss(loss),
                sf: SpreadingFactor::MIN,
                tp_dbm: cfg.bootstrap_tp(),
                sent: 0,
                received: 0,
                lost_collision: 0,
                lost_sensitivity: 0,
            })
        })
        .collect()
}

fn shadowing(cfg: &SimConfig) -> Result<Option<Normal<f64>>> {
    let sigma = cfg.radio.shadowing_sigma_db;
    if sigma == 0.0 {
        return Ok(None);
    }
    Normal::new(0.0, sigma)
        .map(Some)
        .map_err(|e| Error::config(format!("shadowing: {e}")))
}

/// Average RSSI of each node over its bootstrap packets at the bootstrap TP.
pub fn bootstrap_rssi(nodes: &[NodeState], cfg: &SimConfig, rng: &mut impl Rng) -> Result<Vec<NodeSnapshot>> {
    if cfg.allocator.needs_rssi() && cfg.bootstrap_packets_per_node == 0 {
        return Err(Error::config("bootstrap needs at least one packet per node"));
    }
    let tp = cfg.bootstrap_tp();
    let normal = shadowing(cfg)?;
    let k = cfg.bootstrap_packets_per_node;
    Ok(nodes
        .iter()
        .map(|n| {
            let base = tp + n.gain.db();
            let measured = match (&normal, k) {
                (Some(dist), k) if k > 0 => {
                    let total: f64 = (0..k).map(|_| base - dist.sample(rng)).sum();
                    total / f64::from(k)
                }
                _ => base,
            };
            NodeSnapshot::new(n.node_id, measured, tp)
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub nodes: Vec<NodeState>,
    /// Sorted by start time, ties by node id.
    pub log: Vec<Transmission>,
    pub allocation: AllocationResult,
}

fn allocate_for(cfg: &SimConfig, nodes: &[NodeState], snapshots: &[NodeSnapshot]) -> Result<AllocationResult> {
    match cfg.allocator {
        AllocatorKind::Fixed => {
            let placed: Vec<(u32, f64)> = nodes.iter().map(|n| (n.node_id, n.distance_m)).collect();
            fixed_allocation(&placed, cfg.fixed_tp())
        }
        kind => allocate(kind, snapshots, &cfg.allocation_params()),
    }
}

/// Poisson uplink traffic: each node idles for an exponential gap with mean
/// `mean_interval_s` after every frame (and before its first one).
fn generate_traffic(cfg: &SimConfig, nodes: &[NodeState]) -> Result<Vec<Transmission>> {
    let mut traffic_rng = stream_rng(cfg.seed, STREAM_TRAFFIC);
    let mut shadow_rng = stream_rng(cfg.seed, STREAM_SHADOWING);
    let gap = Exp::new(1.0 / cfg.mean_interval_s).map_err(|e| Error::config(format!("interval: {e}")))?;
    let normal = shadowing(cfg)?;

    let mut airtimes = [0.0; 6];
    for sf in SpreadingFactor::ALL {
        airtimes[sf.index()] = airtime(sf, cfg.payload_bytes, &cfg.radio)?;
    }

    let expected = cfg.node_count as f64 * cfg.sim_time_s / cfg.mean_interval_s;
    let mut log = Vec::with_capacity((expected * 1.05) as usize + 16);
    for node in nodes {
        let duration = airtimes[node.sf.index()];
        let mut t = gap.sample(&mut traffic_rng);
        while t < cfg.sim_time_s {
            let channel = if cfg.channels.len() > 1 {
                cfg.channels[traffic_rng.random_range(0..cfg.channels.len())]
            } else {
                cfg.channels[0]
            };
            let draw = normal.as_ref().map_or(0.0, |d| d.sample(&mut shadow_rng));
            log.push(Transmission {
                node_id: node.node_id,
                sf: node.sf,
                channel,
                start_s: t,
                end_s: t + duration,
                tp_dbm: node.tp_dbm,
                rssi_dbm: node.tp_dbm + node.gain.db() - draw,
                fate: Fate::Pending,
            });
            t += duration + gap.sample(&mut traffic_rng);
        }
    }
    log.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.node_id.cmp(&b.node_id)));
    Ok(log)
}

/// Sets the fate of every frame in a start-sorted log.
pub fn adjudicate(log: &mut [Transmission], cir: &CirMatrix, radio: &RadioConfig) {
    let max_airtime = log.iter().map(|t| t.end_s - t.start_s).fold(0.0, f64::max);
    let fates: Vec<Fate> = (0..log.len())
        .map(|i| {
            let tx = &log[i];
            let earlier = log[..i]
                .iter()
                .rev()
                .take_while(|o| o.start_s + max_airtime > tx.start_s);
            let later = log[i + 1..].iter().take_while(|o| o.start_s < tx.end_s);
            let concurrent = earlier.chain(later).filter(|o| overlaps(tx, o));
            resolve(tx, concurrent, cir, radio)
        })
        .collect();
    for (tx, fate) in log.iter_mut().zip(fates) {
        tx.fate = fate;
    }
}

pub fn run(cfg: &SimConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let mut nodes = place_nodes(cfg, &mut stream_rng(cfg.seed, STREAM_PLACEMENT))?;
    let snapshots = bootstrap_rssi(&nodes, cfg, &mut stream_rng(cfg.seed, STREAM_BOOTSTRAP))?;
    let allocation = allocate_for(cfg, &nodes, &snapshots)?;
    for node in &mut nodes {
        let a = allocation
            .get(node.node_id)
            .ok_or_else(|| Error::config(format!("allocator skipped node {}", node.node_id)))?;
        node.sf = a.sf;
        node.tp_dbm = a.tp_dbm;
    }

    let mut log = generate_traffic(cfg, &nodes)?;
    adjudicate(&mut log, &cfg.cir, &cfg.radio);

    for tx in &log {
        let node = &mut nodes[tx.node_id as usize];
        node.sent += 1;
        match tx.fate {
            Fate::Received => node.received += 1,
            Fate::LostCollision => node.lost_collision += 1,
            Fate::LostSensitivity => node.lost_sensitivity += 1,
            Fate::Pending => unreachable!("adjudication leaves no pending frames"),
        }
    }
    Ok(RunOutput { nodes, log, allocation })
}
