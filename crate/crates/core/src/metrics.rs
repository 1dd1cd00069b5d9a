//! Delivery ratio, Jain fairness, transmit energy and DER-vs-distance.

use std::collections::BTreeMap;

use crate::collision::Transmission;
use crate::error::{Error, Result};
use crate::sim::RunOutput;

/// Data extraction rate of one node; zero when nothing was sent.
pub fn der(sent: u64, received: u64) -> Result<f64> {
    if received > sent {
        return Err(Error::ReceivedExceedsSent { sent, received });
    }
    if sent == 0 {
        return Ok(0.0);
    }
    Ok(received as f64 / sent as f64)
}

/// Jain's index `(Σx)² / (n·Σx²)`. `None` when there is no data (empty input
/// or every value zero).
pub fn jain_fairness(values: &[f64]) -> Option<f64> {
    let n = values.len() as f64;
    let sum: f64 = values.iter().sum();
    let sum_sq: f64 = values.iter().map(|x| x * x).sum();
    if values.is_empty() || sum_sq == 0.0 {
        return None;
    }
    Some(sum * sum / (n * sum_sq))
}

/// Radio supply current as a function of transmit power.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    /// `(tp_dbm, amperes)`, ascending in power.
    pub tx_current_a: Vec<(f64, f64)>,
    pub supply_voltage_v: f64,
}

impl Default for EnergyModel {
    /// SX1272 transmit currents for 2..=14 dBm at 3 V.
    fn default() -> Self {
        let ma = [24.0, 24.0, 24.0, 25.0, 25.0, 25.0, 25.0, 26.0, 31.0, 32.0, 34.0, 35.0, 44.0];
        Self {
            tx_current_a: ma
                .iter()
                .enumerate()
                .map(|(i, m)| (2.0 + i as f64, m / 1000.0))
                .collect(),
            supply_voltage_v: 3.0,
        }
    }
}

impl EnergyModel {
    pub fn new(tx_current_a: Vec<(f64, f64)>, supply_voltage_v: f64) -> Result<Self> {
        if tx_current_a.is_empty() {
            return Err(Error::config("current table is empty"));
        }
        let ascending = tx_current_a.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1);
        let positive = tx_current_a.iter().all(|&(p, a)| p.is_finite() && a > 0.0 && a.is_finite());
        if !ascending || !positive {
            return Err(Error::config(
                "current table needs ascending power levels with positive, non-decreasing currents",
            ));
        }
        if !(supply_voltage_v > 0.0) {
            return Err(Error::config("supply voltage must be positive"));
        }
        Ok(Self { tx_current_a, supply_voltage_v })
    }

    /// Linear interpolation inside the table hull.
    pub fn current_a(&self, tp_dbm: f64) -> Result<f64> {
        let table = &self.tx_current_a;
        let (lo, hi) = (table[0], table[table.len() - 1]);
        if !(tp_dbm >= lo.0 && tp_dbm <= hi.0) {
            return Err(Error::PowerOutsideTable(tp_dbm));
        }
        let k = table.partition_point(|&(p, _)| p < tp_dbm);
        let (p1, a1) = table[k];
        if p1 == tp_dbm || k == 0 {
            return Ok(a1);
        }
        let (p0, a0) = table[k - 1];
        Ok(a0 + (a1 - a0) * (tp_dbm - p0) / (p1 - p0))
    }
}

/// Transmit energy of every frame in `log`, joules.
pub fn energy(log: &[Transmission], model: &EnergyModel) -> Result<f64> {
    log.iter().try_fold(0.0, |acc, tx| {
        let current = model.current_a(tx.tp_dbm)?;
        Ok(acc + (tx.end_s - tx.start_s) * current * model.supply_voltage_v)
    })
}

/// Mean DER per distance bin of width `bin_width_m`. Empty bins are omitted.
pub fn der_vs_distance(nodes: &[(f64, f64)], bin_width_m: f64) -> Result<Vec<(f64, f64)>> {
    if !(bin_width_m > 0.0) {
        return Err(Error::config("distance bin width must be positive"));
    }
    let mut bins: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for &(distance, der) in nodes {
        let bin = (distance / bin_width_m).floor() as u64;
        let e = bins.entry(bin).or_insert((0.0, 0));
        e.0 += der;
        e.1 += 1;
    }
    Ok(bins
        .into_iter()
        .map(|(bin, (sum, count))| ((bin as f64 + 0.5) * bin_width_m, sum / count as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub der_per_node: Vec<(u32, f64)>,
    /// `None` when no node delivered anything.
    pub fairness: Option<f64>,
    pub overall_der: f64,
    pub total_energy_j: f64,
    pub der_by_distance: Vec<(f64, f64)>,
}

impl MetricsReport {
    pub fn from_run(run: &RunOutput, model: &EnergyModel, bin_width_m: f64) -> Result<Self> {
        let mut der_per_node = Vec::with_capacity(run.nodes.len());
        let mut fairness_input = Vec::with_capacity(run.nodes.len());
        let mut by_distance = Vec::with_capacity(run.nodes.len());
        let (mut sent, mut received) = (0u64, 0u64);
        for node in &run.nodes {
            let d = der(node.sent, node.received)?;
            der_per_node.push((node.node_id, d));
            by_distance.push((node.distance_m, d));
            // nodes that never transmitted carry no fairness information
            if node.sent > 0 {
                fairness_input.push(d);
            }
            sent += node.sent;
            received += node.received;
        }
        Ok(Self {
            der_per_node,
            fairness: jain_fairness(&fairness_input),
            overall_der: der(sent, received)?,
            total_energy_j: energy(&run.log, model)?,
            der_by_distance: der_vs_distance(&by_distance, bin_width_m)?,
        })
    }

    pub fn summary_line(&self) -> String {
        format!(
            "fairness={} overall_der={:.6} energy_j={:.3}",
            self.fairness.map_or_else(|| "NA".to_string(), |f| format!("{f:.6}")),
            self.overall_der,
            self.total_energy_j
        )
    }
}
