//! Fate of overlapping uplinks at the gateway.
//!
//! Same-SF pairs follow capture semantics: the stronger frame survives only if
//! it leads by at least the capture threshold, otherwise both are lost.
//! Cross-SF pairs follow imperfect orthogonality: a frame is destroyed only by
//! an interferer that exceeds it by the co-channel rejection threshold.

use crate::error::{Error, Result};
use crate::radio::{is_reachable, RadioConfig, SpreadingFactor};

/// Interference thresholds in dB, indexed `[signal SF][interferer SF]`.
///
/// The diagonal holds the same-SF capture threshold. `f64::INFINITY` is a
/// valid entry: on the diagonal it disables capture (pure Aloha), off the
/// diagonal it makes the pair perfectly orthogonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CirMatrix {
    threshold_db: [[f64; 6]; 6],
}

impl CirMatrix {
    pub const DEFAULT_THRESHOLD_DB: f64 = 6.0;

    pub fn uniform(threshold_db: f64) -> Result<Self> {
        Self::from_rows([[threshold_db; 6]; 6])
    }

    pub fn from_rows(threshold_db: [[f64; 6]; 6]) -> Result<Self> {
        for (i, row) in threshold_db.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v.is_nan() || v == f64::NEG_INFINITY {
                    return Err(Error::config(format!("CIR entry [{i}][{j}] is not a threshold")));
                }
                if i == j && !(v > 0.0) {
                    return Err(Error::config(format!(
                        "capture threshold for SF{} must be positive, got {v}",
                        i + 7
                    )));
                }
            }
        }
        Ok(Self { threshold_db })
    }

    /// Builds a matrix from either one value (applied everywhere) or 36
    /// row-major values.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        match values.len() {
            1 => Self::uniform(values[0]),
            36 => {
                let mut rows = [[0.0; 6]; 6];
                for (k, &v) in values.iter().enumerate() {
                    rows[k / 6][k % 6] = v;
                }
                Self::from_rows(rows)
            }
            n => Err(Error::config(format!("CIR matrix needs 1 or 36 values, got {n}"))),
        }
    }

    /// Row-major values, collapsed to one value when the matrix is uniform.
    pub fn to_values(&self) -> Vec<f64> {
        let first = self.threshold_db[0][0];
        if self.threshold_db.iter().flatten().all(|&v| v == first) {
            vec![first]
        } else {
            self.threshold_db.iter().flatten().copied().collect()
        }
    }

    pub fn get(&self, signal: SpreadingFactor, interferer: SpreadingFactor) -> f64 {
        self.threshold_db[signal.index()][interferer.index()]
    }

    pub fn set(&mut self, signal: SpreadingFactor, interferer: SpreadingFactor, db: f64) {
        self.threshold_db[signal.index()][interferer.index()] = db;
    }

    pub fn capture_threshold(&self, sf: SpreadingFactor) -> f64 {
        self.get(sf, sf)
    }

    /// Smallest entry, the rejection margin the allocators design against.
    pub fn min_threshold(&self) -> f64 {
        self.threshold_db
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

impl Default for CirMatrix {
    fn default() -> Self {
        Self { threshold_db: [[Self::DEFAULT_THRESHOLD_DB; 6]; 6] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Fate {
    Pending,
    Received,
    LostCollision,
    LostSensitivity,
}

impl Fate {
    pub fn as_str(self) -> &'static str {
        match self {
            Fate::Pending => "pending",
            Fate::Received => "received",
            Fate::LostCollision => "lost_collision",
            Fate::LostSensitivity => "lost_sensitivity",
        }
    }
}

/// One uplink frame on the air.
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub node_id: u32,
    pub sf: SpreadingFactor,
    pub channel: u16,
    pub start_s: f64,
    pub end_s: f64,
    pub tp_dbm: f64,
    pub rssi_dbm: f64,
    pub fate: Fate,
}

/// Same channel and intersecting half-open intervals `[start, end)`.
pub fn overlaps(a: &Transmission, b: &Transmission) -> bool {
    a.channel == b.channel && a.start_s < b.end_s && b.start_s < a.end_s
}

/// Survival of each frame of an overlapping pair, considering only that pair.
pub fn pairwise_fate(a: &Transmission, b: &Transmission, cir: &CirMatrix) -> Result<(bool, bool)> {
    if !overlaps(a, b) {
        return Err(Error::NotOverlapping);
    }
    Ok(pair_survival(a, b, cir))
}

fn pair_survival(a: &Transmission, b: &Transmission, cir: &CirMatrix) -> (bool, bool) {
    if a.sf == b.sf {
        let threshold = cir.capture_threshold(a.sf);
        let lead = a.rssi_dbm - b.rssi_dbm;
        if lead >= threshold {
            (true, false)
        } else if -lead >= threshold {
            (false, true)
        } else {
            (false, false)
        }
    } else {
        let a_lost = b.rssi_dbm - a.rssi_dbm >= cir.get(a.sf, b.sf);
        let b_lost = a.rssi_dbm - b.rssi_dbm >= cir.get(b.sf, a.sf);
        (!a_lost, !b_lost)
    }
}

/// Final fate of `tx` given every transmission that overlaps it.
///
/// A frame below sensitivity is lost regardless of interference; otherwise it
/// is received only if it survives each overlapping frame pairwise.
pub fn resolve<'a, I>(tx: &Transmission, concurrent: I, cir: &CirMatrix, radio: &RadioConfig) -> Fate
where
    I: IntoIterator<Item = &'a Transmission>,
{
    if !is_reachable(tx.rssi_dbm, tx.sf, radio) {
        return Fate::LostSensitivity;
    }
    for other in concurrent {
        debug_assert!(overlaps(tx, other), "resolve called with a non-overlapping frame");
        if !pair_survival(tx, other, cir).0 {
            return Fate::LostCollision;
        }
    }
    Fate::Received
}
