//! Link-level physics: log-distance path loss, received power, LoRa
//! time-on-air and gateway reachability.

use std::fmt;

use crate::error::{Error, Result};

/// A LoRa spreading factor in `7..=12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpreadingFactor(u8);

impl SpreadingFactor {
    pub const MIN: SpreadingFactor = SpreadingFactor(7);
    pub const MAX: SpreadingFactor = SpreadingFactor(12);

    pub const ALL: [SpreadingFactor; 6] = [
        SpreadingFactor(7),
        SpreadingFactor(8),
        SpreadingFactor(9),
        SpreadingFactor(10),
        SpreadingFactor(11),
        SpreadingFactor(12),
    ];

    pub fn new(sf: u8) -> Result<Self> {
        if (7..=12).contains(&sf) {
            Ok(SpreadingFactor(sf))
        } else {
            Err(Error::InvalidSpreadingFactor(sf))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Position in per-SF tables (`SF7 -> 0`, ..., `SF12 -> 5`).
    pub fn index(self) -> usize {
        usize::from(self.0 - 7)
    }

    pub fn from_index(idx: usize) -> Self {
        Self::ALL[idx]
    }
}

impl fmt::Display for SpreadingFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u8> for SpreadingFactor {
    type Error = Error;

    fn try_from(sf: u8) -> Result<Self> {
        SpreadingFactor::new(sf)
    }
}

/// Radio and propagation parameters shared by every node in the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioConfig {
    pub bandwidth_hz: u32,
    /// Coding rate `4/(4 + coding_rate)`, in `1..=4`.
    pub coding_rate: u8,
    pub preamble_symbols: u32,
    pub explicit_header: bool,
    pub crc_enabled: bool,
    /// Low data rate optimization, indexed by `SpreadingFactor::index`.
    pub low_dr_optimize: [bool; 6],
    /// Gateway sensitivity floor per SF, dBm.
    pub sensitivity_dbm: [f64; 6],
    pub pathloss_d0_m: f64,
    pub pathloss_l0_db: f64,
    pub pathloss_exponent: f64,
    pub shadowing_sigma_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            bandwidth_hz: 125_000,
            coding_rate: 1,
            preamble_symbols: 8,
            explicit_header: true,
            crc_enabled: true,
            low_dr_optimize: [false, false, false, false, true, true],
            sensitivity_dbm: [-140.0; 6],
            pathloss_d0_m: 40.0,
            pathloss_l0_db: 127.41,
            pathloss_exponent: 2.08,
            shadowing_sigma_db: 0.0,
        }
    }
}

impl RadioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bandwidth_hz == 0 {
            return Err(Error::config("bandwidth must be positive"));
        }
        if !(1..=4).contains(&self.coding_rate) {
            return Err(Error::config(format!(
                "coding rate must be in 1..=4, got {}",
                self.coding_rate
            )));
        }
        if !(self.pathloss_exponent > 0.0) {
            return Err(Error::config("path-loss exponent must be positive"));
        }
        if !(self.pathloss_d0_m > 0.0) || !self.pathloss_l0_db.is_finite() {
            return Err(Error::config("path-loss reference must be finite and positive"));
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return Err(Error::config("shadowing sigma must be non-negative"));
        }
        if self.sensitivity_dbm.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("sensitivity must be finite for every SF"));
        }
        Ok(())
    }

    pub fn sensitivity(&self, sf: SpreadingFactor) -> f64 {
        self.sensitivity_dbm[sf.index()]
    }

    /// Distance at which deterministic path loss reaches `loss_db`.
    pub fn distance_for_loss(&self, loss_db: f64) -> f64 {
        self.pathloss_d0_m
            * 10f64.powf((loss_db - self.pathloss_l0_db) / (10.0 * self.pathloss_exponent))
    }
}

/// Received power minus transmit power, in dB (negative for real links).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ChannelGain(pub f64);

impl ChannelGain {
    pub fn from_path_loss(loss_db: f64) -> Self {
        ChannelGain(-loss_db)
    }

    pub fn db(self) -> f64 {
        self.0
    }
}

/// Log-distance path loss `L0 + 10·γ·log10(d/d0) + shadowing`, in dB.
pub fn path_loss(distance_m: f64, cfg: &RadioConfig, shadowing_draw_db: f64) -> Result<f64> {
    if !(distance_m > 0.0) {
        return Err(Error::NonPositiveDistance(distance_m));
    }
    Ok(cfg.pathloss_l0_db
        + 10.0 * cfg.pathloss_exponent * (distance_m / cfg.pathloss_d0_m).log10()
        + shadowing_draw_db)
}

/// Semtech time-on-air of one uplink frame, in seconds.
pub fn airtime(sf: SpreadingFactor, payload_bytes: u32, cfg: &RadioConfig) -> Result<f64> {
    if payload_bytes == 0 {
        return Err(Error::EmptyPayload);
    }
    let sf_val = f64::from(sf.value());
    let t_sym = 2f64.powi(i32::from(sf.value())) / f64::from(cfg.bandwidth_hz);
    let preamble = (f64::from(cfg.preamble_symbols) + 4.25) * t_sym;

    let crc = if cfg.crc_enabled { 1.0 } else { 0.0 };
    let implicit = if cfg.explicit_header { 0.0 } else { 1.0 };
    let de = if cfg.low_dr_optimize[sf.index()] { 1.0 } else { 0.0 };
    let numerator = 8.0 * f64::from(payload_bytes) - 4.0 * sf_val + 28.0 + 16.0 * crc - 20.0 * implicit;
    let denominator = 4.0 * (sf_val - 2.0 * de);
    let coded = (numerator / denominator).ceil() * (f64::from(cfg.coding_rate) + 4.0);
    let payload_symbols = 8.0 + coded.max(0.0);

    Ok(preamble + payload_symbols * t_sym)
}

pub fn received_power(tp_dbm: f64, gain: ChannelGain) -> f64 {
    tp_dbm + gain.db()
}

pub fn is_reachable(rssi_dbm: f64, sf: SpreadingFactor, cfg: &RadioConfig) -> bool {
    rssi_dbm >= cfg.sensitivity(sf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sf(v: u8) -> SpreadingFactor {
        SpreadingFactor::new(v).unwrap()
    }

    #[test]
    fn path_loss_at_reference_distance() {
        let cfg = RadioConfig::default();
        assert!((path_loss(40.0, &cfg, 0.0).unwrap() - 127.41).abs() < 1e-12);
        assert!((path_loss(400.0, &cfg, 0.0).unwrap() - 148.21).abs() < 1e-9);
    }

    #[test]
    fn path_loss_rejects_non_positive_distance() {
        let cfg = RadioConfig::default();
        assert!(matches!(path_loss(0.0, &cfg, 0.0), Err(Error::NonPositiveDistance(_))));
        assert!(path_loss(-3.0, &cfg, 0.0).is_err());
        assert!(path_loss(f64::NAN, &cfg, 0.0).is_err());
    }

    #[test]
    fn shadowing_adds_linearly() {
        let cfg = RadioConfig::default();
        let base = path_loss(250.0, &cfg, 0.0).unwrap();
        assert!((path_loss(250.0, &cfg, 3.5).unwrap() - base - 3.5).abs() < 1e-12);
    }

    #[test]
    fn distance_for_loss_inverts_path_loss() {
        let cfg = RadioConfig::default();
        let d = cfg.distance_for_loss(142.0);
        assert!((path_loss(d, &cfg, 0.0).unwrap() - 142.0).abs() < 1e-9);
    }

    #[test]
    fn spreading_factor_bounds() {
        assert!(SpreadingFactor::new(6).is_err());
        assert!(SpreadingFactor::new(13).is_err());
        assert_eq!(sf(9).index(), 2);
        assert_eq!(SpreadingFactor::from_index(5), SpreadingFactor::MAX);
    }

    #[test]
    fn airtime_sf7_80_bytes() {
        let cfg = RadioConfig::default();
        let t = airtime(sf(7), 80, &cfg).unwrap();
        assert!((t - 0.143616).abs() < 1e-12, "{t}");
    }

    #[test]
    fn airtime_rejects_empty_payload() {
        assert!(matches!(
            airtime(sf(7), 0, &RadioConfig::default()),
            Err(Error::EmptyPayload)
        ));
    }

    #[test]
    fn airtime_grows_with_sf() {
        let cfg = RadioConfig::default();
        let times: Vec<f64> = SpreadingFactor::ALL
            .iter()
            .map(|&s| airtime(s, 80, &cfg).unwrap())
            .collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]), "{times:?}");
    }

    #[test]
    fn received_power_is_additive() {
        assert_eq!(received_power(14.0, ChannelGain(-120.0)), -106.0);
        assert_eq!(received_power(2.0, ChannelGain(-120.0)), -118.0);
        assert_eq!(received_power(7.0, ChannelGain(0.0)), 7.0);
    }

    #[test]
    fn reachability_boundary() {
        let cfg = RadioConfig::default();
        assert!(is_reachable(-139.9, sf(7), &cfg));
        for s in SpreadingFactor::ALL {
            assert!(is_reachable(-140.0, s, &cfg));
            assert!(!is_reachable(-141.0, s, &cfg));
        }
    }

    #[test]
    fn validate_catches_bad_fields() {
        let mut cfg = RadioConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.coding_rate = 5;
        assert!(cfg.validate().is_err());
        cfg = RadioConfig { bandwidth_hz: 0, ..RadioConfig::default() };
        assert!(cfg.validate().is_err());
        cfg = RadioConfig { pathloss_exponent: 0.0, ..RadioConfig::default() };
        assert!(cfg.validate().is_err());
    }
}
