//! Spreading-factor and transmit-power allocators.
//!
//! FADR splits the RSSI-ordered population into groups and applies the
//! equal-collision-probability SF mix inside every group, then compresses the
//! received-power spread toward the co-channel rejection margin using the
//! lowest power levels that achieve it. Two baselines are provided for
//! comparison: minimum airtime (SN5) and a network-wide SF mix with power
//! control referenced to the weakest SF8 node.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::collision::CirMatrix;
use crate::error::{Error, Result};
use crate::radio::{is_reachable, RadioConfig, SpreadingFactor};

/// Slack for floating-point comparisons against dB thresholds.
const EPS_DB: f64 = 1e-9;

/// RSSI of one node as measured during bootstrap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSnapshot {
    pub node_id: u32,
    pub measured_rssi_dbm: f64,
    /// `measured_rssi_dbm - bootstrap TP`.
    pub gain_db: f64,
}

impl NodeSnapshot {
    pub fn new(node_id: u32, measured_rssi_dbm: f64, bootstrap_tp_dbm: f64) -> Self {
        Self {
            node_id,
            measured_rssi_dbm,
            gain_db: measured_rssi_dbm - bootstrap_tp_dbm,
        }
    }
}

/// Strongest first, ties by ascending node id.
fn strength_order(a: &NodeSnapshot, b: &NodeSnapshot) -> Ordering {
    b.gain_db
        .total_cmp(&a.gain_db)
        .then_with(|| a.node_id.cmp(&b.node_id))
}

fn sorted_strongest_first(snapshots: &[NodeSnapshot], what: &'static str) -> Result<Vec<NodeSnapshot>> {
    if snapshots.is_empty() {
        return Err(Error::NoNodes(what));
    }
    if let Some(bad) = snapshots.iter().find(|s| !s.gain_db.is_finite()) {
        return Err(Error::config(format!("node {} has a non-finite RSSI", bad.node_id)));
    }
    let mut sorted = snapshots.to_vec();
    sorted.sort_by(strength_order);
    let mut ids: Vec<u32> = sorted.iter().map(|s| s.node_id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::config(format!("node {} has more than one snapshot", w[0])));
    }
    Ok(sorted)
}

/// Discrete transmit power levels, strictly ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLevelSet {
    levels_dbm: Vec<f64>,
}

impl PowerLevelSet {
    pub fn new(levels_dbm: Vec<f64>) -> Result<Self> {
        let ascending = levels_dbm.windows(2).all(|w| w[0] < w[1]);
        if levels_dbm.len() < 2 || !ascending || levels_dbm.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidPowerLevels);
        }
        Ok(Self { levels_dbm })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels_dbm
    }

    pub fn min(&self) -> f64 {
        self.levels_dbm[0]
    }

    pub fn max(&self) -> f64 {
        self.levels_dbm[self.levels_dbm.len() - 1]
    }

    pub fn contains(&self, tp_dbm: f64) -> bool {
        self.levels_dbm.contains(&tp_dbm)
    }
}

impl Default for PowerLevelSet {
    fn default() -> Self {
        Self { levels_dbm: (2..=14).map(f64::from).collect() }
    }
}

/// Fraction of nodes per SF, indexed by `SpreadingFactor::index`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfDistribution {
    pub fraction: [f64; 6],
}

impl SfDistribution {
    pub fn get(&self, sf: SpreadingFactor) -> f64 {
        self.fraction[sf.index()]
    }
}

/// SF mix giving every SF class the same collision probability: node counts
/// proportional to `sf / 2^sf`, the inverse of the symbol time per bit.
pub fn optimal_sf_distribution() -> SfDistribution {
    let weights = SpreadingFactor::ALL.map(|sf| {
        let s = f64::from(sf.value());
        s / 2f64.powi(i32::from(sf.value()))
    });
    let total: f64 = weights.iter().sum();
    SfDistribution { fraction: weights.map(|w| w / total) }
}

/// Largest-remainder apportionment of `n` items over `quotas` (which sum to
/// `n`). Ties go to the earlier entry.
fn largest_remainder(n: usize, quotas: &[f64]) -> Vec<usize> {
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &k in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

/// Integer node count per SF for a population of `n`.
///
/// With `pin_sf12` and `n >= 2`, SF12 gets exactly one node and the other
/// `n - 1` are apportioned over SF7..SF11 in proportion to the distribution.
pub fn sf_counts(n: usize, dist: &SfDistribution, pin_sf12: bool) -> [usize; 6] {
    let mut out = [0usize; 6];
    if n == 0 {
        return out;
    }
    if pin_sf12 && n >= 2 {
        let rest: f64 = dist.fraction[..5].iter().sum();
        let quotas: Vec<f64> = dist.fraction[..5]
            .iter()
            .map(|f| (n - 1) as f64 * f / rest)
            .collect();
        let counts = largest_remainder(n - 1, &quotas);
        out[..5].copy_from_slice(&counts);
        out[5] = 1;
    } else {
        let quotas: Vec<f64> = dist.fraction.iter().map(|f| n as f64 * f).collect();
        out.copy_from_slice(&largest_remainder(n, &quotas));
    }
    out
}

/// Which end of an RSSI-ordered group receives the SF7 block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SfOrder {
    #[default]
    StrongestFirst,
    WeakestFirst,
}

impl FromStr for SfOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strongest-first" => Ok(SfOrder::StrongestFirst),
            "weakest-first" => Ok(SfOrder::WeakestFirst),
            other => Err(Error::config(format!("unknown SF order `{other}`"))),
        }
    }
}

impl fmt::Display for SfOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SfOrder::StrongestFirst => "strongest-first",
            SfOrder::WeakestFirst => "weakest-first",
        })
    }
}

/// Expands per-SF counts into an SF sequence for `n` strength-ordered nodes.
fn expand_counts(counts: &[usize; 6], order: SfOrder) -> Vec<SpreadingFactor> {
    let mut seq: Vec<SpreadingFactor> = SpreadingFactor::ALL
        .iter()
        .zip(counts)
        .flat_map(|(&sf, &c)| std::iter::repeat_n(sf, c))
        .collect();
    if order == SfOrder::WeakestFirst {
        seq.reverse();
    }
    seq
}

/// Group-wise SF assignment. Returns `(node_id, sf)` strongest first.
pub fn fadr_sf_allocation(
    snapshots: &[NodeSnapshot],
    group_size: usize,
    order: SfOrder,
) -> Result<Vec<(u32, SpreadingFactor)>> {
    if group_size == 0 {
        return Err(Error::config("group size must be positive"));
    }
    let sorted = sorted_strongest_first(snapshots, "SF allocation")?;
    let dist = optimal_sf_distribution();
    let mut out = Vec::with_capacity(sorted.len());
    for group in sorted.chunks(group_size) {
        let counts = sf_counts(group.len(), &dist, true);
        let sfs = expand_counts(&counts, order);
        out.extend(group.iter().zip(sfs).map(|(s, sf)| (s.node_id, sf)));
    }
    Ok(out)
}

/// Transmit power per node from the CIR-aware power allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// `(node_id, tp_dbm)` strongest first.
    pub tp_dbm: Vec<(u32, f64)>,
    /// Received-power spread after allocation is within the CIR margin.
    pub feasible: bool,
    /// Max minus min of `gain + tp` over all nodes.
    pub spread_db: f64,
}

/// CIR-aware power allocation over the whole cell.
///
/// Nodes are ordered strongest first. The strongest nodes keep the lowest
/// level; the weakest are raised to the lowest level that brings them within
/// the CIR margin of the strongest; nodes in between take intermediate levels
/// where a level lands them inside both the floor and ceiling margins.
pub fn fadr_power_allocation(
    snapshots: &[NodeSnapshot],
    levels: &PowerLevelSet,
    cir: &CirMatrix,
) -> Result<PowerAllocation> {
    let sorted = sorted_strongest_first(snapshots, "power allocation")?;
    let gains: Vec<f64> = sorted.iter().map(|s| s.gain_db).collect();
    let tp = power_plan(&gains, levels, cir.min_threshold());
    let spread_db = spread(&gains, &tp.levels);
    Ok(PowerAllocation {
        tp_dbm: sorted.iter().map(|s| s.node_id).zip(tp.levels).collect(),
        feasible: tp.boost_found && spread_db <= cir.min_threshold() + EPS_DB,
        spread_db,
    })
}

struct PowerPlan {
    levels: Vec<f64>,
    boost_found: bool,
}

fn power_plan(gains: &[f64], levels: &PowerLevelSet, cir_min: f64) -> PowerPlan {
    let n = gains.len();
    let (strongest, weakest) = (gains[0], gains[n - 1]);
    let low = levels.min();

    // Lowest boost bringing the weakest node within the margin of the
    // strongest node at the lowest level.
    let boost = levels.levels()[1..]
        .iter()
        .copied()
        .find(|&l| (strongest + low) - (weakest + l) <= cir_min + EPS_DB);
    let boost_found = boost.is_some();
    let high = boost.unwrap_or(levels.max());

    let floor = (weakest + high).min(strongest + low);
    let ceiling = (weakest + high).max(strongest + low);

    let mut tp: Vec<Option<f64>> = vec![None; n];

    // Strong prefix at the lowest level.
    let prefix_len = gains.iter().take_while(|&&g| g + low >= floor - EPS_DB).count();
    let last_low = prefix_len - 1;
    tp[..prefix_len].fill(Some(low));

    // Last node that would overshoot the floor margin at the boost level;
    // everything after it gets the boost.
    let last_loud = (last_low + 1..n)
        .rev()
        .find(|&i| gains[i] + high - floor > cir_min + EPS_DB)
        .unwrap_or(last_low);
    tp[last_loud + 1..].fill(Some(high));

    let reference = gains[last_loud] + high;
    let intermediate = levels.levels().iter().copied().filter(|&p| p > low && p < high);
    let mut cursor = last_low + 1;
    for p in intermediate {
        if cursor > last_loud {
            break;
        }
        let rx = gains[cursor] + p;
        let near_floor = (rx - floor).abs() <= cir_min + EPS_DB;
        let near_ceiling = (rx - ceiling).abs() <= cir_min + EPS_DB;
        if near_floor && near_ceiling {
            let run_end = (cursor + 1..=last_loud)
                .rev()
                .find(|&j| (gains[j] + p - reference).abs() <= cir_min + EPS_DB)
                .unwrap_or(cursor);
            tp[cursor..=run_end].fill(Some(p));
            cursor = run_end + 1;
        }
    }

    PowerPlan {
        levels: tp.into_iter().map(|l| l.unwrap_or(high)).collect(),
        boost_found,
    }
}

fn spread(gains: &[f64], tp: &[f64]) -> f64 {
    let (lo, hi) = gains
        .iter()
        .zip(tp)
        .map(|(g, p)| g + p)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), rx| (lo.min(rx), hi.max(rx)));
    hi - lo
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    pub node_id: u32,
    pub sf: SpreadingFactor,
    pub tp_dbm: f64,
    pub feasible: bool,
}

/// Per-node SF and TP, ordered by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult {
    pub assignments: Vec<Assignment>,
    pub feasible: bool,
}

impl AllocationResult {
    pub fn new(mut assignments: Vec<Assignment>) -> Self {
        assignments.sort_by_key(|a| a.node_id);
        let feasible = assignments.iter().all(|a| a.feasible);
        Self { assignments, feasible }
    }

    pub fn get(&self, node_id: u32) -> Option<&Assignment> {
        self.assignments
            .binary_search_by_key(&node_id, |a| a.node_id)
            .ok()
            .map(|i| &self.assignments[i])
    }

    pub fn sf_counts(&self) -> [usize; 6] {
        let mut counts = [0; 6];
        for a in &self.assignments {
            counts[a.sf.index()] += 1;
        }
        counts
    }
}

/// Allocation knobs shared by every allocator.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationParams {
    pub levels: PowerLevelSet,
    pub cir: CirMatrix,
    pub group_size: usize,
    pub sf_order: SfOrder,
    pub radio: RadioConfig,
}

impl Default for AllocationParams {
    fn default() -> Self {
        Self {
            levels: PowerLevelSet::default(),
            cir: CirMatrix::default(),
            group_size: 50,
            sf_order: SfOrder::default(),
            radio: RadioConfig::default(),
        }
    }
}

/// FADR: group-wise SFs plus CIR-aware power levels.
pub fn fadr_allocation(snapshots: &[NodeSnapshot], params: &AllocationParams) -> Result<AllocationResult> {
    let sfs = fadr_sf_allocation(snapshots, params.group_size, params.sf_order)?;
    let power = fadr_power_allocation(snapshots, &params.levels, &params.cir)?;
    let mut sf_by_node = sfs;
    sf_by_node.sort_by_key(|&(id, _)| id);
    let mut tp_by_node = power.tp_dbm;
    tp_by_node.sort_by_key(|&(id, _)| id);
    let assignments = sf_by_node
        .into_iter()
        .zip(tp_by_node)
        .map(|((node_id, sf), (_, tp_dbm))| Assignment {
            node_id,
            sf,
            tp_dbm,
            feasible: power.feasible,
        })
        .collect();
    Ok(AllocationResult::new(assignments))
}

/// Minimum airtime: smallest SF, then smallest TP, that meets sensitivity.
///
/// Nodes that cannot reach the gateway at any setting are flagged infeasible
/// and left at SF12 and the highest level.
pub fn sn5_allocation(
    snapshots: &[NodeSnapshot],
    levels: &PowerLevelSet,
    radio: &RadioConfig,
) -> Result<AllocationResult> {
    let sorted = sorted_strongest_first(snapshots, "SN5 allocation")?;
    let assignments = sorted
        .iter()
        .map(|s| {
            let setting = SpreadingFactor::ALL.iter().find_map(|&sf| {
                levels
                    .levels()
                    .iter()
                    .find(|&&tp| is_reachable(s.gain_db + tp, sf, radio))
                    .map(|&tp| (sf, tp))
            });
            let (sf, tp_dbm) = setting.unwrap_or((SpreadingFactor::MAX, levels.max()));
            Assignment {
                node_id: s.node_id,
                sf,
                tp_dbm,
                feasible: setting.is_some(),
            }
        })
        .collect();
    Ok(AllocationResult::new(assignments))
}

/// Network-wide SF mix (no grouping) with power control referenced to the
/// highest-path-loss SF8 node at the highest level.
///
/// Each node takes the smallest level that puts its received power within
/// the CIR margin below the reference target, capped at the highest level.
/// The target never exceeds what the strongest node delivers at the lowest
/// level, so a cell with no spread stays at the lowest level.
pub fn reynders_allocation(
    snapshots: &[NodeSnapshot],
    levels: &PowerLevelSet,
    cir: &CirMatrix,
) -> Result<AllocationResult> {
    let sorted = sorted_strongest_first(snapshots, "Reynders allocation")?;
    let counts = sf_counts(sorted.len(), &optimal_sf_distribution(), false);
    let sfs = expand_counts(&counts, SfOrder::StrongestFirst);

    let reference = reynders_reference(&sorted, &sfs);
    let cir_min = cir.min_threshold();
    let target = (sorted[reference].gain_db + levels.max()).min(sorted[0].gain_db + levels.min());

    let tps: Vec<f64> = sorted
        .iter()
        .map(|s| {
            levels
                .levels()
                .iter()
                .copied()
                .find(|&p| s.gain_db + p >= target - cir_min - EPS_DB)
                .unwrap_or(levels.max())
        })
        .collect();
    let spread_db = spread(&sorted.iter().map(|s| s.gain_db).collect::<Vec<_>>(), &tps);
    let feasible = spread_db <= cir_min + EPS_DB;

    let assignments = sorted
        .iter()
        .zip(sfs)
        .zip(tps)
        .map(|((s, sf), tp_dbm)| Assignment {
            node_id: s.node_id,
            sf,
            tp_dbm,
            feasible,
        })
        .collect();
    Ok(AllocationResult::new(assignments))
}

/// Index (in strongest-first order) of the weakest node assigned SF8, or of
/// the weakest node overall when no node has SF8.
pub fn reynders_reference(sorted: &[NodeSnapshot], sfs: &[SpreadingFactor]) -> usize {
    let sf8 = SpreadingFactor::ALL[1];
    sfs.iter()
        .rposition(|&sf| sf == sf8)
        .unwrap_or(sorted.len() - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AllocatorKind {
    Fadr,
    Reynders,
    Sn5,
    Fixed,
}

impl AllocatorKind {
    pub const ALL: [AllocatorKind; 4] = [
        AllocatorKind::Fadr,
        AllocatorKind::Reynders,
        AllocatorKind::Sn5,
        AllocatorKind::Fixed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AllocatorKind::Fadr => "fadr",
            AllocatorKind::Reynders => "reynders",
            AllocatorKind::Sn5 => "sn5",
            AllocatorKind::Fixed => "fixed",
        }
    }

    /// Whether the allocator consumes bootstrap RSSI measurements.
    pub fn needs_rssi(self) -> bool {
        matches!(self, AllocatorKind::Fadr | AllocatorKind::Reynders)
    }
}

impl fmt::Display for AllocatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AllocatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AllocatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown allocator `{s}`")))
    }
}

/// Runs an RSSI-driven allocator. `fixed` needs node distances and is
/// handled by [`crate::study::fixed_allocation`].
pub fn allocate(
    kind: AllocatorKind,
    snapshots: &[NodeSnapshot],
    params: &AllocationParams,
) -> Result<AllocationResult> {
    match kind {
        AllocatorKind::Fadr => fadr_allocation(snapshots, params),
        AllocatorKind::Reynders => reynders_allocation(snapshots, &params.levels, &params.cir),
        AllocatorKind::Sn5 => sn5_allocation(snapshots, &params.levels, &params.radio),
        AllocatorKind::Fixed => Err(Error::config(
            "the fixed allocator orders nodes by distance and cannot run from RSSI alone",
        )),
    }
}
