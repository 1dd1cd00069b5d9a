//! Fixed allocation and the three interference regimes used to isolate the
//! contributions of capture and imperfect SF orthogonality.

use std::fmt;
use std::str::FromStr;

use crate::allocation::{AllocationResult, Assignment};
use crate::collision::CirMatrix;
use crate::error::{Error, Result};
use crate::radio::SpreadingFactor;
use crate::sim::SimConfig;

/// Equal-count SF blocks in distance order (nearest gets SF7), every node at
/// `tp_dbm`. The `n % 6` leftover nodes go to the lowest SFs.
///
/// `nodes` holds `(node_id, distance_m)`.
pub fn fixed_allocation(nodes: &[(u32, f64)], tp_dbm: f64) -> Result<AllocationResult> {
    if nodes.is_empty() {
        return Err(Error::NoNodes("fixed allocation"));
    }
    let mut order = nodes.to_vec();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let n = order.len();
    let (base, extra) = (n / 6, n % 6);
    let sfs = SpreadingFactor::ALL
        .iter()
        .enumerate()
        .flat_map(|(i, &sf)| std::iter::repeat_n(sf, base + usize::from(i < extra)));

    let assignments = order
        .iter()
        .zip(sfs)
        .map(|(&(node_id, _), sf)| Assignment {
            node_id,
            sf,
            tp_dbm,
            feasible: true,
        })
        .collect();
    Ok(AllocationResult::new(assignments))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Regime {
    /// Any same-SF overlap destroys both frames; SFs perfectly orthogonal.
    Aloha,
    /// Same-SF capture; SFs perfectly orthogonal.
    Capture,
    /// Capture plus cross-SF rejection thresholds.
    #[default]
    Full,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Aloha, Regime::Capture, Regime::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Aloha => "aloha",
            Regime::Capture => "capture",
            Regime::Full => "full",
        }
    }

    /// Derives this regime's interference matrix from a full-model matrix.
    pub fn apply(self, full: &CirMatrix) -> CirMatrix {
        let mut cir = *full;
        for signal in SpreadingFactor::ALL {
            for interferer in SpreadingFactor::ALL {
                let keep = match self {
                    Regime::Full => true,
                    Regime::Capture => signal == interferer,
                    Regime::Aloha => false,
                };
                if !keep {
                    cir.set(signal, interferer, f64::INFINITY);
                }
            }
        }
        cir
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Regime::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown regime `{s}`")))
    }
}

/// The three regime variants of `cfg`, in `Regime::ALL` order.
pub fn effect_toggles(cfg: &SimConfig) -> [(Regime, SimConfig); 3] {
    Regime::ALL.map(|regime| {
        let mut c = cfg.clone();
        c.cir = regime.apply(&cfg.cir);
        (regime, c)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{pairwise_fate, Fate, Transmission};

    fn counts(n: usize) -> [usize; 6] {
        let nodes: Vec<(u32, f64)> = (0..n).map(|i| (i as u32, 10.0 * (n - i) as f64)).collect();
        fixed_allocation(&nodes, 14.0).unwrap().sf_counts()
    }

    #[test]
    fn fixed_counts() {
        assert_eq!(counts(6), [1; 6]);
        assert_eq!(counts(8), [2, 2, 1, 1, 1, 1]);
        assert_eq!(counts(1), [1, 0, 0, 0, 0, 0]);
    }

    #[test]
    fn fixed_nearest_gets_sf7() {
        let nodes = [(0, 500.0), (1, 5.0), (2, 80.0), (3, 40.0), (4, 300.0), (5, 150.0)];
        let r = fixed_allocation(&nodes, 9.0).unwrap();
        assert_eq!(r.get(1).unwrap().sf.value(), 7);
        assert_eq!(r.get(0).unwrap().sf.value(), 12);
        assert!(r.assignments.iter().all(|a| a.tp_dbm == 9.0));
        assert!(fixed_allocation(&[], 14.0).is_err());
    }

    fn tx(sf: u8, rssi: f64) -> Transmission {
        Transmission {
            node_id: 0,
            sf: SpreadingFactor::new(sf).unwrap(),
            channel: 0,
            start_s: 0.0,
            end_s: 1.0,
            tp_dbm: 14.0,
            rssi_dbm: rssi,
            fate: Fate::Pending,
        }
    }

    #[test]
    fn regimes_change_semantics() {
        let full = CirMatrix::default();
        let aloha = Regime::Aloha.apply(&full);
        let capture = Regime::Capture.apply(&full);
        // cross SF, far apart in power
        assert_eq!(pairwise_fate(&tx(7, -80.0), &tx(9, -120.0), &aloha).unwrap(), (true, true));
        assert_eq!(pairwise_fate(&tx(7, -80.0), &tx(9, -120.0), &capture).unwrap(), (true, true));
        assert_eq!(pairwise_fate(&tx(7, -80.0), &tx(9, -120.0), &full).unwrap(), (true, false));
        // same SF
        assert_eq!(pairwise_fate(&tx(7, -80.0), &tx(7, -120.0), &aloha).unwrap(), (false, false));
        assert_eq!(pairwise_fate(&tx(7, -80.0), &tx(7, -120.0), &capture).unwrap(), (true, false));
    }

    #[test]
    fn capture_equals_full_with_orthogonal_cross_sf() {
        let mut full = CirMatrix::default();
        for s in SpreadingFactor::ALL {
            for i in SpreadingFactor::ALL {
                if s != i {
                    full.set(s, i, f64::INFINITY);
                }
            }
        }
        assert_eq!(Regime::Capture.apply(&full), Regime::Full.apply(&full));
    }

    #[test]
    fn toggles_cover_all_regimes() {
        let toggles = effect_toggles(&SimConfig::default());
        assert_eq!(toggles.clone().map(|(r, _)| r), Regime::ALL);
        assert_eq!(toggles[2].1, SimConfig::default());
        assert!(toggles[0].1.cir.capture_threshold(SpreadingFactor::MIN).is_infinite());
    }

    #[test]
    fn regime_names_round_trip() {
        for r in Regime::ALL {
            assert_eq!(r.as_str().parse::<Regime>().unwrap(), r);
        }
        assert!("none".parse::<Regime>().is_err());
    }
}
