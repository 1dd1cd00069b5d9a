//! Experiment driver: sweeps (allocator, network size, seed) cells, aggregates
//! metrics across seeds and writes CSV artifacts.

mod config;
mod output;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::allocation::AllocatorKind;
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::sim;

pub use config::{parse_list, ExperimentSpec};
pub use output::{
    emit_figure_data, write_aggregate, write_log, write_nodes, write_summary, CONFIG_FILE,
};

/// Metrics of one simulated cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub allocator: AllocatorKind,
    pub node_count: usize,
    pub seed: u64,
    pub report: MetricsReport,
}

/// Mean and sample standard deviation across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
    pub count: usize,
}

impl Stat {
    /// `None` for an empty sample. Values are summed in the given order.
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stddev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, stddev, count: values.len() })
    }
}

/// Seed-aggregated metrics of one (allocator, size) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub allocator: AllocatorKind,
    pub node_count: usize,
    pub runs: usize,
    pub fairness: Option<Stat>,
    pub overall_der: Stat,
    pub energy_j: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResults {
    /// Ordered by (allocator, node count, seed).
    pub runs: Vec<RunRecord>,
}

impl ExperimentResults {
    pub fn new(mut runs: Vec<RunRecord>) -> Self {
        runs.sort_by_key(|r| (r.allocator, r.node_count, r.seed));
        Self { runs }
    }

    fn cells(&self) -> BTreeMap<(AllocatorKind, usize), Vec<&RunRecord>> {
        let mut cells: BTreeMap<_, Vec<&RunRecord>> = BTreeMap::new();
        for r in &self.runs {
            cells.entry((r.allocator, r.node_count)).or_default().push(r);
        }
        cells
    }

    pub fn aggregate(&self) -> Vec<AggregateRow> {
        self.cells()
            .into_iter()
            .map(|((allocator, node_count), runs)| {
                let fairness: Vec<f64> = runs.iter().filter_map(|r| r.report.fairness).collect();
                let der: Vec<f64> = runs.iter().map(|r| r.report.overall_der).collect();
                let energy: Vec<f64> = runs.iter().map(|r| r.report.total_energy_j).collect();
                AggregateRow {
                    allocator,
                    node_count,
                    runs: runs.len(),
                    fairness: Stat::of(&fairness),
                    overall_der: Stat::of(&der).expect("cell has runs"),
                    energy_j: Stat::of(&energy).expect("cell has runs"),
                }
            })
            .collect()
    }

    pub fn row(&self, allocator: AllocatorKind, node_count: usize) -> Option<AggregateRow> {
        self.aggregate()
            .into_iter()
            .find(|r| r.allocator == allocator && r.node_count == node_count)
    }

    /// Per-bin DER across the seeds of one (allocator, size) pair, keyed by
    /// bin center.
    pub fn der_by_distance(&self, allocator: AllocatorKind, node_count: usize) -> Vec<(f64, Stat)> {
        let mut bins: BTreeMap<u64, (f64, Vec<f64>)> = BTreeMap::new();
        for r in self
            .runs
            .iter()
            .filter(|r| r.allocator == allocator && r.node_count == node_count)
        {
            for &(center, der) in &r.report.der_by_distance {
                bins.entry(center.to_bits()).or_insert((center, Vec::new())).1.push(der);
            }
        }
        let mut out: Vec<(f64, Stat)> = bins
            .into_values()
            .filter_map(|(center, ders)| Stat::of(&ders).map(|s| (center, s)))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }
}

/// Creates the output directory and records the configuration in it.
fn prepare_output(spec: &ExperimentSpec, dir: &Path) -> Result<()> {
    let output_err = |source| Error::Output { path: dir.to_path_buf(), source };
    fs::create_dir_all(dir).map_err(output_err)?;
    let cfg_path = dir.join(CONFIG_FILE);
    fs::write(&cfg_path, spec.render()).map_err(|source| Error::Output { path: cfg_path, source })
}

/// One simulation plus metrics for a single cell.
pub fn run_cell(spec: &ExperimentSpec, allocator: AllocatorKind, node_count: usize, seed: u64) -> Result<RunRecord> {
    let cfg = spec.cell_config(allocator, node_count, seed);
    let out = sim::run(&cfg)?;
    let report = MetricsReport::from_run(&out, &spec.energy, spec.bin_width_m)?;
    Ok(RunRecord { allocator, node_count, seed, report })
}

/// Runs every (allocator, size, seed) cell. When an output directory is
/// configured it is created (and the config recorded) before any simulation.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    if let Some(dir) = &spec.out_dir {
        prepare_output(spec, dir)?;
    }

    let cells: Vec<(AllocatorKind, usize, u64)> = spec
        .allocators
        .iter()
        .flat_map(|&a| {
            spec.node_counts
                .iter()
                .flat_map(move |&n| spec.seeds.iter().map(move |&s| (a, n, s)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism)
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))?;
    let runs = pool.install(|| {
        cells
            .par_iter()
            .map(|&(a, n, s)| run_cell(spec, a, n, s))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ExperimentResults::new(runs))
}

/// Writes the summary, aggregate and figure files into `dir`.
pub fn write_results(results: &ExperimentResults, spec: &ExperimentSpec, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut written = vec![write_summary(&dir.join("summary.csv"), &results.runs)?];
    written.push(write_aggregate(&dir.join("aggregate.csv"), &results.aggregate())?);
    written.extend(emit_figure_data(results, dir, spec.designated_size)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stat_sample_stddev() {
        let s = Stat::of(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.stddev, 1.0);
        assert_eq!(Stat::of(&[4.0]).unwrap().stddev, 0.0);
        assert!(Stat::of(&[]).is_none());
    }

    fn tiny() -> ExperimentSpec {
        let mut spec = ExperimentSpec::default();
        spec.node_counts = vec![20];
        spec.seeds = vec![1];
        spec.allocators = vec![AllocatorKind::Sn5];
        spec.base.sim_time_s = 300.0;
        spec.parallelism = 1;
        spec
    }

    #[test]
    fn single_cell_single_row() {
        let results = run_experiment(&tiny()).unwrap();
        assert_eq!(results.runs.len(), 1);
        assert_eq!(results.aggregate().len(), 1);
    }

    #[test]
    fn empty_sweep_rejected() {
        let mut spec = tiny();
        spec.seeds.clear();
        assert!(run_experiment(&spec).is_err());
    }
}
