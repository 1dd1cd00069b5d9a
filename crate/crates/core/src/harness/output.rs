//! CSV artifacts.
//!
//! | file | columns |
//! |------|---------|
//! | per-node | `node_id,x_m,y_m,distance_m,sf,tp_dbm,sent,received,der` |
//! | transmission log | `node_id,start_s,sf,tp_dbm,rssi_dbm,fate` |
//! | summary | `allocator,node_count,seed,fairness,overall_der,energy_j` |
//! | aggregate | `allocator,node_count,runs,fairness_mean,fairness_std,overall_der_mean,overall_der_std,energy_j_mean,energy_j_std` |
//! | `fairness.csv`, `overall_der.csv`, `energy.csv` | `allocator,node_count,mean,stddev,runs` |
//! | `der_vs_distance.csv` | `allocator,bin_center_m,mean_der,stddev,runs` |
//!
//! A fairness value with no data is written as `NA`.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::collision::Transmission;
use crate::error::{Error, Result};
use crate::metrics::der;
use crate::sim::NodeState;

use super::{AggregateRow, ExperimentResults, RunRecord, Stat};

pub const CONFIG_FILE: &str = "config.txt";

fn create(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Output { path: path.to_path_buf(), source })?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<PathBuf> {
    w.flush()?;
    Ok(path.to_path_buf())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub fn write_nodes(path: &Path, nodes: &[NodeState]) -> Result<PathBuf> {
    let mut w = create(path)?;
    w.write_record(["node_id", "x_m", "y_m", "distance_m", "sf", "tp_dbm", "sent", "received", "der"])?;
    for n in nodes {
        w.write_record([
            n.node_id.to_string(),
            n.x_m.to_string(),
            n.y_m.to_string(),
            n.distance_m.to_string(),
            n.sf.to_string(),
            n.tp_dbm.to_string(),
            n.sent.to_string(),
            n.received.to_string(),
            der(n.sent, n.received)?.to_string(),
        ])?;
    }
    finish(w, path)
}

/// Writes the transmission log to any sink; used for files and hashing.
pub fn write_log<W: Write>(sink: W, log: &[Transmission]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["node_id", "start_s", "sf", "tp_dbm", "rssi_dbm", "fate"])?;
    for t in log {
        w.write_record([
            t.node_id.to_string(),
            t.start_s.to_string(),
            t.sf.to_string(),
            t.tp_dbm.to_string(),
            t.rssi_dbm.to_string(),
            t.fate.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, runs: &[RunRecord]) -> Result<PathBuf> {
    let mut w = create(path)?;
    w.write_record(["allocator", "node_count", "seed", "fairness", "overall_der", "energy_j"])?;
    for r in runs {
        w.write_record([
            r.allocator.to_string(),
            r.node_count.to_string(),
            r.seed.to_string(),
            opt(r.report.fairness),
            r.report.overall_der.to_string(),
            r.report.total_energy_j.to_string(),
        ])?;
    }
    finish(w, path)
}

pub fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<PathBuf> {
    let mut w = create(path)?;
    w.write_record([
        "allocator",
        "node_count",
        "runs",
        "fairness_mean",
        "fairness_std",
        "overall_der_mean",
        "overall_der_std",
        "energy_j_mean",
        "energy_j_std",
    ])?;
    for r in rows {
        w.write_record([
            r.allocator.to_string(),
            r.node_count.to_string(),
            r.runs.to_string(),
            opt(r.fairness.map(|s| s.mean)),
            opt(r.fairness.map(|s| s.stddev)),
            r.overall_der.mean.to_string(),
            r.overall_der.stddev.to_string(),
            r.energy_j.mean.to_string(),
            r.energy_j.stddev.to_string(),
        ])?;
    }
    finish(w, path)
}

fn write_metric(path: &Path, rows: &[AggregateRow], pick: impl Fn(&AggregateRow) -> Option<Stat>) -> Result<PathBuf> {
    let mut w = create(path)?;
    w.write_record(["allocator", "node_count", "mean", "stddev", "runs"])?;
    for r in rows {
        let s = pick(r);
        w.write_record([
            r.allocator.to_string(),
            r.node_count.to_string(),
            opt(s.map(|s| s.mean)),
            opt(s.map(|s| s.stddev)),
            s.map_or(0, |s| s.count).to_string(),
        ])?;
    }
    finish(w, path)
}

/// Figure data: fairness, overall DER and energy per (allocator, size), plus
/// DER-vs-distance per (allocator, bin) when `designated_size` was simulated.
pub fn emit_figure_data(results: &ExperimentResults, dir: &Path, designated_size: usize) -> Result<Vec<PathBuf>> {
    let rows = results.aggregate();
    let mut written = vec![
        write_metric(&dir.join("fairness.csv"), &rows, |r| r.fairness)?,
        write_metric(&dir.join("overall_der.csv"), &rows, |r| Some(r.overall_der))?,
        write_metric(&dir.join("energy.csv"), &rows, |r| Some(r.energy_j))?,
    ];

    let mut allocators: Vec<_> = results
        .runs
        .iter()
        .filter(|r| r.node_count == designated_size)
        .map(|r| r.allocator)
        .collect();
    allocators.dedup();
    if !allocators.is_empty() {
        let path = dir.join("der_vs_distance.csv");
        let mut w = create(&path)?;
        w.write_record(["allocator", "bin_center_m", "mean_der", "stddev", "runs"])?;
        for allocator in allocators {
            for (center, s) in results.der_by_distance(allocator, designated_size) {
                w.write_record([
                    allocator.to_string(),
                    center.to_string(),
                    s.mean.to_string(),
                    s.stddev.to_string(),
                    s.count.to_string(),
                ])?;
            }
        }
        written.push(finish(w, &path)?);
    }
    Ok(written)
}
