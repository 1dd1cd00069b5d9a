//! Flat `key = value` experiment configuration.
//!
//! Lists are comma separated; an item `a..b` expands to the inclusive integer
//! range. `#` starts a comment. The same keys are accepted from files and from
//! command-line overrides, and [`ExperimentSpec::render`] emits a file that
//! parses back to an identical spec.

use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use crate::allocation::{AllocatorKind, PowerLevelSet};
use crate::collision::CirMatrix;
use crate::error::{Error, Result};
use crate::metrics::EnergyModel;
use crate::radio::SpreadingFactor;
use crate::sim::SimConfig;
use crate::study::Regime;

/// Short sweep by default; [`ExperimentSpec::full_protocol`] gives the
/// long one (4000 nodes, one simulated day).
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub node_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub allocators: Vec<AllocatorKind>,
    pub regime: Regime,
    /// Per-cell settings; `node_count`, `seed` and `allocator` are
    /// overwritten for each run.
    pub base: SimConfig,
    pub energy: EnergyModel,
    pub bin_width_m: f64,
    /// Network size whose runs feed the DER-vs-distance output.
    pub designated_size: usize,
    /// Worker threads; 0 uses every core.
    pub parallelism: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            node_counts: vec![100, 500, 1000],
            seeds: (1..=5).collect(),
            allocators: vec![AllocatorKind::Fadr, AllocatorKind::Reynders, AllocatorKind::Sn5],
            regime: Regime::Full,
            base: SimConfig { sim_time_s: 7200.0, ..SimConfig::default() },
            energy: EnergyModel::default(),
            bin_width_m: 20.0,
            designated_size: 1000,
            parallelism: 0,
            out_dir: None,
        }
    }
}

impl ExperimentSpec {
    /// 100 to 4000 nodes, one simulated day, ten seeds.
    pub fn full_protocol() -> Self {
        let mut spec = Self {
            node_counts: vec![100, 500, 1000, 2000, 3000, 4000],
            seeds: (1..=10).collect(),
            ..Self::default()
        };
        spec.base.sim_time_s = 86_400.0;
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.node_counts.is_empty() || self.seeds.is_empty() || self.allocators.is_empty() {
            return Err(Error::config("node counts, seeds and allocators must be non-empty"));
        }
        if self.node_counts.contains(&0) {
            return Err(Error::config("node counts must be positive"));
        }
        if !(self.bin_width_m > 0.0) {
            return Err(Error::config("bin width must be positive"));
        }
        for &allocator in &self.allocators {
            self.cell_config(allocator, self.node_counts[0], self.seeds[0]).validate()?;
        }
        Ok(())
    }

    /// Simulation config of one (allocator, size, seed) cell.
    pub fn cell_config(&self, allocator: AllocatorKind, node_count: usize, seed: u64) -> SimConfig {
        SimConfig {
            allocator,
            node_count,
            seed,
            cir: self.regime.apply(&self.base.cir),
            ..self.base.clone()
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let b = &mut self.base;
        match key {
            "nodes" => self.node_counts = parse_list(value)?,
            "seeds" => self.seeds = parse_list(value)?,
            "allocator" | "allocators" => self.allocators = parse_list(value)?,
            "regime" => self.regime = parse_one(value)?,
            "out" => self.out_dir = Some(PathBuf::from(value)),
            "sim_time" => b.sim_time_s = parse_one(value)?,
            "payload" => b.payload_bytes = parse_one(value)?,
            "interval" => b.mean_interval_s = parse_one(value)?,
            "radius" => b.cell_radius_m = parse_one(value)?,
            "cir_db" => {
                b.cir = CirMatrix::from_values(&parse_list::<f64>(value)?).map_err(|e| e.to_string())?
            }
            "group_size" => b.group_size = parse_one(value)?,
            "power_levels" => {
                b.levels = PowerLevelSet::new(parse_list(value)?).map_err(|e| e.to_string())?
            }
            "sf_order" => b.sf_order = parse_one(value)?,
            "bootstrap_packets" => b.bootstrap_packets_per_node = parse_one(value)?,
            "bootstrap_tp" => b.bootstrap_tp_dbm = parse_level(value)?,
            "fixed_tp" => b.fixed_tp_dbm = parse_level(value)?,
            "channels" => b.channels = parse_list(value)?,
            "bandwidth" => b.radio.bandwidth_hz = parse_one(value)?,
            "coding_rate" => b.radio.coding_rate = parse_one(value)?,
            "preamble" => b.radio.preamble_symbols = parse_one(value)?,
            "explicit_header" => b.radio.explicit_header = parse_one(value)?,
            "crc" => b.radio.crc_enabled = parse_one(value)?,
            "low_dr_optimize" => b.radio.low_dr_optimize = parse_sf_set(value)?,
            "sensitivity" => b.radio.sensitivity_dbm = parse_per_sf(value)?,
            "pathloss_d0" => b.radio.pathloss_d0_m = parse_one(value)?,
            "pathloss_l0" => b.radio.pathloss_l0_db = parse_one(value)?,
            "pathloss_exponent" => b.radio.pathloss_exponent = parse_one(value)?,
            "shadowing_sigma" => b.radio.shadowing_sigma_db = parse_one(value)?,
            "voltage" => {
                self.energy = EnergyModel::new(self.energy.tx_current_a.clone(), parse_one(value)?)
                    .map_err(|e| e.to_string())?
            }
            "tx_current" => {
                self.energy = EnergyModel::new(parse_current_table(value)?, self.energy.supply_voltage_v)
                    .map_err(|e| e.to_string())?
            }
            "bin_width" => self.bin_width_m = parse_one(value)?,
            "designated_size" => self.designated_size = parse_one(value)?,
            "parallelism" => self.parallelism = parse_one(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Applies every setting in a configuration file body.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: source.to_string(),
                line: idx + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err("expected `key = value`".to_string()))?;
            self.set(key.trim(), value.trim()).map_err(parse_err)?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        spec.apply_text(text, "<config>")?;
        Ok(spec)
    }

    /// Every setting as `(key, value)`, in a stable order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let b = &self.base;
        let r = &b.radio;
        let mut pairs = vec![
            ("nodes", join(&self.node_counts)),
            ("seeds", join(&self.seeds)),
            ("allocators", join(&self.allocators)),
            ("regime", self.regime.to_string()),
            ("sim_time", b.sim_time_s.to_string()),
            ("payload", b.payload_bytes.to_string()),
            ("interval", b.mean_interval_s.to_string()),
            ("radius", b.cell_radius_m.to_string()),
            ("cir_db", join(&b.cir.to_values())),
            ("group_size", b.group_size.to_string()),
            ("power_levels", join(b.levels.levels())),
            ("sf_order", b.sf_order.to_string()),
            ("bootstrap_packets", b.bootstrap_packets_per_node.to_string()),
            ("bootstrap_tp", render_level(b.bootstrap_tp_dbm)),
            ("fixed_tp", render_level(b.fixed_tp_dbm)),
            ("channels", join(&b.channels)),
            ("bandwidth", r.bandwidth_hz.to_string()),
            ("coding_rate", r.coding_rate.to_string()),
            ("preamble", r.preamble_symbols.to_string()),
            ("explicit_header", r.explicit_header.to_string()),
            ("crc", r.crc_enabled.to_string()),
            ("low_dr_optimize", render_sf_set(&r.low_dr_optimize)),
            ("sensitivity", join(&r.sensitivity_dbm)),
            ("pathloss_d0", r.pathloss_d0_m.to_string()),
            ("pathloss_l0", r.pathloss_l0_db.to_string()),
            ("pathloss_exponent", r.pathloss_exponent.to_string()),
            ("shadowing_sigma", r.shadowing_sigma_db.to_string()),
            ("voltage", self.energy.supply_voltage_v.to_string()),
            ("tx_current", render_current_table(&self.energy.tx_current_a)),
            ("bin_width", self.bin_width_m.to_string()),
            ("designated_size", self.designated_size.to_string()),
            ("parallelism", self.parallelism.to_string()),
        ];
        if let Some(out) = &self.out_dir {
            pairs.push(("out", out.display().to_string()));
        }
        pairs
    }

    pub fn render(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

fn parse_one<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| format!("invalid value `{value}`: {e}"))
}

/// Comma list with inclusive `a..b` integer ranges.
pub fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: Display,
{
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((lo, hi)) => {
                let lo: i64 = parse_one(lo)?;
                let hi: i64 = parse_one(hi)?;
                if lo > hi {
                    return Err(format!("empty range `{item}`"));
                }
                for k in lo..=hi {
                    out.push(parse_one(&k.to_string())?);
                }
            }
            None => out.push(parse_one(item)?),
        }
    }
    if out.is_empty() {
        return Err("empty list".to_string());
    }
    Ok(out)
}

fn join<T: Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_level(value: &str) -> std::result::Result<Option<f64>, String> {
    if value == "max" {
        Ok(None)
    } else {
        parse_one(value).map(Some)
    }
}

fn render_level(level: Option<f64>) -> String {
    level.map_or_else(|| "max".to_string(), |l| l.to_string())
}

fn parse_per_sf(value: &str) -> std::result::Result<[f64; 6], String> {
    match parse_list::<f64>(value)?.as_slice() {
        [v] => Ok([*v; 6]),
        vs if vs.len() == 6 => Ok([vs[0], vs[1], vs[2], vs[3], vs[4], vs[5]]),
        vs => Err(format!("expected 1 or 6 values, got {}", vs.len())),
    }
}

/// SFs with the flag set, e.g. `11,12`, or `none`.
fn parse_sf_set(value: &str) -> std::result::Result<[bool; 6], String> {
    let mut flags = [false; 6];
    if value == "none" {
        return Ok(flags);
    }
    for sf in parse_list::<u8>(value)? {
        flags[SpreadingFactor::new(sf).map_err(|e| e.to_string())?.index()] = true;
    }
    Ok(flags)
}

fn render_sf_set(flags: &[bool; 6]) -> String {
    let on: Vec<u8> = SpreadingFactor::ALL
        .iter()
        .filter(|sf| flags[sf.index()])
        .map(|sf| sf.value())
        .collect();
    if on.is_empty() {
        "none".to_string()
    } else {
        join(&on)
    }
}

/// `dbm:amperes` pairs, e.g. `2:0.024,14:0.044`.
fn parse_current_table(value: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    value
        .split(',')
        .map(|item| {
            let (p, a) = item
                .split_once(':')
                .ok_or_else(|| format!("expected `dbm:amperes`, got `{item}`"))?;
            Ok((parse_one(p)?, parse_one(a)?))
        })
        .collect()
}

fn render_current_table(table: &[(f64, f64)]) -> String {
    table
        .iter()
        .map(|(p, a)| format!("{p}:{a}"))
        .collect::<Vec<_>>()
        .join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list::<u64>("1..3, 7").unwrap(), vec![1, 2, 3, 7]);
        assert_eq!(parse_list::<f64>("2..4").unwrap(), vec![2.0, 3.0, 4.0]);
        assert!(parse_list::<u64>("").is_err());
        assert!(parse_list::<u64>("5..1").is_err());
        assert!(parse_list::<u64>("x").is_err());
    }

    #[test]
    fn file_with_comments() {
        let spec = ExperimentSpec::parse(
            "# sweep\nnodes = 100, 200\nseeds = 1..3\nallocator = fadr\nsim_time = 600 # short\n",
        )
        .unwrap();
        assert_eq!(spec.node_counts, vec![100, 200]);
        assert_eq!(spec.seeds, vec![1, 2, 3]);
        assert_eq!(spec.allocators, vec![AllocatorKind::Fadr]);
        assert_eq!(spec.base.sim_time_s, 600.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = ExperimentSpec::parse("nodes = 10\n\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(ExperimentSpec::parse("nodes 10").is_err());
        assert!(ExperimentSpec::parse("power_levels = 3,2").is_err());
    }

    #[test]
    fn default_render_round_trips() {
        let spec = ExperimentSpec::default();
        assert_eq!(ExperimentSpec::parse(&spec.render()).unwrap(), spec);
        let full = ExperimentSpec::full_protocol();
        assert_eq!(ExperimentSpec::parse(&full.render()).unwrap(), full);
    }

    #[test]
    fn full_protocol_scale() {
        let full = ExperimentSpec::full_protocol();
        assert_eq!(full.seeds.len(), 10);
        assert_eq!(*full.node_counts.last().unwrap(), 4000);
        assert_eq!(full.base.sim_time_s, 86_400.0);
    }
}
