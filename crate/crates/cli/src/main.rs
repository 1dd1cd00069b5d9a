use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fadr_core::allocation::{allocate, AllocationParams, AllocatorKind, NodeSnapshot, PowerLevelSet};
use fadr_core::harness::{self, parse_list, ExperimentSpec};
use fadr_core::{sim, CirMatrix, MetricsReport};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "fadr", version, about = "LoRaWAN fair adaptive data rate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Allocate SF and TP from a node RSSI table (CSV: node_id,rssi_dbm).
    Allocate(AllocateArgs),
    /// Run a single simulation and write per-node, log and summary CSVs.
    Simulate(SweepArgs),
    /// Sweep allocators, network sizes and seeds; write aggregate and figure CSVs.
    Experiment(SweepArgs),
}

#[derive(Args)]
struct AllocateArgs {
    /// Input CSV with columns node_id,rssi_dbm
    #[arg(long)]
    input: PathBuf,
    /// Output CSV (node_id,sf,tp_dbm,feasible); stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "fadr")]
    allocator: AllocatorKind,
    /// TP at which the RSSI values were measured; defaults to the highest level
    #[arg(long)]
    bootstrap_tp: Option<f64>,
    #[arg(long, default_value_t = 50)]
    group_size: usize,
    /// Comma list or a..b range, e.g. 2..14
    #[arg(long, default_value = "2..14")]
    power_levels: String,
    /// One threshold, or 36 row-major values
    #[arg(long, default_value = "6")]
    cir_db: String,
    #[arg(long, default_value = "strongest-first")]
    sf_order: fadr_core::SfOrder,
}

#[derive(Args)]
struct SweepArgs {
    /// Key-value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Start from the full protocol (100..4000 nodes, one day, 10 seeds)
    #[arg(long)]
    full: bool,
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    allocator: Option<String>,
    #[arg(long)]
    sim_time: Option<String>,
    #[arg(long)]
    payload: Option<String>,
    #[arg(long)]
    interval: Option<String>,
    #[arg(long)]
    cir_db: Option<String>,
    #[arg(long)]
    group_size: Option<String>,
    #[arg(long)]
    power_levels: Option<String>,
    #[arg(long)]
    radius: Option<String>,
    /// aloha, capture or full
    #[arg(long)]
    regime: Option<String>,
    #[arg(long)]
    parallelism: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Any other configuration key, as KEY=VALUE (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    extra: Vec<String>,
}

impl SweepArgs {
    /// `base`, then the full preset, then the file, then flags.
    fn spec(&self, base: ExperimentSpec) -> Result<ExperimentSpec> {
        let mut spec = if self.full {
            ExperimentSpec { out_dir: base.out_dir.clone(), ..ExperimentSpec::full_protocol() }
        } else {
            base
        };
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            spec.apply_text(&text, &path.display().to_string())?;
        }
        let flags = [
            ("nodes", &self.nodes),
            ("seeds", &self.seeds),
            ("allocators", &self.allocator),
            ("sim_time", &self.sim_time),
            ("payload", &self.payload),
            ("interval", &self.interval),
            ("cir_db", &self.cir_db),
            ("group_size", &self.group_size),
            ("power_levels", &self.power_levels),
            ("radius", &self.radius),
            ("regime", &self.regime),
            ("parallelism", &self.parallelism),
            ("out", &self.out),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                spec.set(key, v).map_err(|e| anyhow::anyhow!("--{}: {e}", key.replace('_', "-")))?;
            }
        }
        for kv in &self.extra {
            let (k, v) = kv.split_once('=').with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            spec.set(k.trim(), v.trim()).map_err(|e| anyhow::anyhow!("--set {k}: {e}"))?;
        }
        Ok(spec)
    }
}

#[derive(Deserialize)]
struct SnapshotRow {
    node_id: u32,
    rssi_dbm: f64,
}

fn cmd_allocate(args: &AllocateArgs) -> Result<()> {
    let levels = PowerLevelSet::new(parse_list(&args.power_levels).map_err(anyhow::Error::msg)?)?;
    let cir = CirMatrix::from_values(&parse_list::<f64>(&args.cir_db).map_err(anyhow::Error::msg)?)?;
    let bootstrap_tp = args.bootstrap_tp.unwrap_or(levels.max());

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))?;
    let snapshots = reader
        .deserialize::<SnapshotRow>()
        .map(|row| row.map(|r| NodeSnapshot::new(r.node_id, r.rssi_dbm, bootstrap_tp)))
        .collect::<Result<Vec<_>, _>>()
        .with_context(|| format!("parsing {}", args.input.display()))?;

    let params = AllocationParams {
        levels,
        cir,
        group_size: args.group_size,
        sf_order: args.sf_order,
        ..AllocationParams::default()
    };
    let result = allocate(args.allocator, &snapshots, &params)?;

    let sink: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(BufWriter::new(
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["node_id", "sf", "tp_dbm", "feasible"])?;
    for a in &result.assignments {
        w.write_record([
            a.node_id.to_string(),
            a.sf.to_string(),
            a.tp_dbm.to_string(),
            a.feasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn single<T: Copy + std::fmt::Display>(what: &str, values: &[T]) -> Result<T> {
    match values {
        [v] => Ok(*v),
        _ => bail!("simulate runs one cell; got {} values for {what}", values.len()),
    }
}

fn cmd_simulate(args: &SweepArgs) -> Result<()> {
    let spec = args.spec(ExperimentSpec {
        node_counts: vec![1000],
        seeds: vec![1],
        allocators: vec![AllocatorKind::Fadr],
        ..ExperimentSpec::default()
    })?;
    let allocator = single("allocator", &spec.allocators)?;
    let nodes = single("nodes", &spec.node_counts)?;
    let seed = single("seeds", &spec.seeds)?;
    let cfg = spec.cell_config(allocator, nodes, seed);

    let out_dir = spec.out_dir.as_deref();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        fs::write(dir.join(harness::CONFIG_FILE), spec.render())?;
    }
    let run = sim::run(&cfg)?;
    let report = MetricsReport::from_run(&run, &spec.energy, spec.bin_width_m)?;
    println!("allocator={allocator} nodes={nodes} seed={seed} {}", report.summary_line());

    if let Some(dir) = out_dir {
        harness::write_nodes(&dir.join("nodes.csv"), &run.nodes)?;
        let log = fs::File::create(dir.join("log.csv"))?;
        harness::write_log(BufWriter::new(log), &run.log)?;
        let record = fadr_core::RunRecord { allocator, node_count: nodes, seed, report };
        harness::write_summary(&dir.join("summary.csv"), &[record])?;
    }
    Ok(())
}

fn cmd_experiment(args: &SweepArgs) -> Result<()> {
    let spec = args.spec(ExperimentSpec::default())?;
    let results = harness::run_experiment(&spec)?;
    for row in results.aggregate() {
        let fairness = row.fairness.map_or("NA".to_string(), |s| format!("{:.4}±{:.4}", s.mean, s.stddev));
        println!(
            "{:<9} nodes={:<5} runs={:<3} fairness={fairness} overall_der={:.4}±{:.4} energy_j={:.1}±{:.1}",
            row.allocator,
            row.node_count,
            row.runs,
            row.overall_der.mean,
            row.overall_der.stddev,
            row.energy_j.mean,
            row.energy_j.stddev,
        );
    }
    if let Some(dir) = &spec.out_dir {
        for path in harness::write_results(&results, &spec, dir)? {
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Allocate(args) => cmd_allocate(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}
