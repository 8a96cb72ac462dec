use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::netsim::antenna::AntennaPattern;
use crate::netsim::channel::{Band, ChannelModel};
use crate::netsim::{db_to_linear, SimError};

/// Radio and deployment parameters for one band. Densities and bandwidth are
/// the values at network size `n = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// GHz
    pub carrier_freq: f64,
    /// Hz, `W_max`
    pub max_bandwidth: f64,
    pub reuse_factor: u32,
    /// BS per km^2
    pub max_bs_density: f64,
    /// UE per km^2
    pub max_ue_density: f64,
    /// dBm
    pub tx_power: f64,
    pub bs_pattern: AntennaPattern,
    pub ue_pattern: AntennaPattern,
    /// km^2, square region
    pub area: f64,
    /// rate-model overhead factor
    pub overhead: f64,
    /// rate-model loss factor
    pub loss: f64,
    /// dB
    pub noise_figure: f64,
    /// dBm/Hz
    pub noise_psd: f64,
    pub channel: ChannelModel,
}

impl ScenarioConfig {
    pub fn mmwave() -> Self {
        Self {
            carrier_freq: 73.0,
            max_bandwidth: 1e9,
            reuse_factor: 1,
            max_bs_density: 100.0,
            max_ue_density: 500.0,
            tx_power: 30.0,
            bs_pattern: AntennaPattern::new(20.0, -10.0, 5.0),
            ue_pattern: AntennaPattern::new(10.0, -10.0, 30.0),
            area: 1.0,
            overhead: 0.2,
            loss: 0.5,
            noise_figure: 7.0,
            noise_psd: -174.0,
            channel: ChannelModel::mmwave_73ghz(),
        }
    }

    pub fn microwave() -> Self {
        Self {
            carrier_freq: 2.5,
            max_bandwidth: 300e6,
            reuse_factor: 3,
            max_bs_density: 100.0,
            max_ue_density: 500.0,
            tx_power: 30.0,
            bs_pattern: AntennaPattern::new(0.0, -20.0, 70.0),
            ue_pattern: AntennaPattern::new(0.0, 0.0, 360.0),
            area: 1.0,
            overhead: 0.2,
            loss: 0.5,
            noise_figure: 7.0,
            noise_psd: -174.0,
            channel: ChannelModel::umi(2.5),
        }
    }

    pub fn preset(band: Band) -> Self {
        match band {
            Band::Mmwave => Self::mmwave(),
            Band::Microwave => Self::microwave(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self, SimError> {
        let cfg: Self = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("carrier_freq", self.carrier_freq),
            ("max_bandwidth", self.max_bandwidth),
            ("max_bs_density", self.max_bs_density),
            ("max_ue_density", self.max_ue_density),
            ("area", self.area),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.reuse_factor < 1 {
            return Err(SimError::InvalidConfig("reuse_factor must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.overhead) {
            return Err(SimError::InvalidConfig("overhead must be in [0, 1)".into()));
        }
        if !(self.loss > 0.0 && self.loss <= 1.0) {
            return Err(SimError::InvalidConfig("loss must be in (0, 1]".into()));
        }
        if !self.bs_pattern.is_valid() || !self.ue_pattern.is_valid() {
            return Err(SimError::InvalidConfig("antenna pattern invariant violated".into()));
        }
        if !self.channel.is_valid() {
            return Err(SimError::InvalidConfig("channel model invariant violated".into()));
        }
        Ok(())
    }

    /// Side of the square simulation region in meters.
    pub fn side_m(&self) -> f64 {
        (self.area * 1e6).sqrt()
    }

    /// Per-cell bandwidth `n * W_max / reuse` in Hz.
    pub fn effective_bandwidth(&self, n: f64) -> f64 {
        n * self.max_bandwidth / self.reuse_factor as f64
    }

    pub fn tx_power_mw(&self) -> f64 {
        db_to_linear(self.tx_power)
    }

    /// `N_f * N_0 * W` in mW.
    pub fn noise_power_mw(&self, bandwidth_hz: f64) -> f64 {
        db_to_linear(self.noise_figure + self.noise_psd) * bandwidth_hz
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_network_parameter_table() {
        let mm = ScenarioConfig::mmwave();
        assert_eq!(mm.carrier_freq, 73.0);
        assert_eq!(mm.max_bandwidth, 1e9);
        assert_eq!(mm.reuse_factor, 1);
        assert_eq!((mm.max_bs_density, mm.max_ue_density), (100.0, 500.0));
        assert_eq!(mm.tx_power, 30.0);
        assert_eq!(mm.bs_pattern, AntennaPattern::new(20.0, -10.0, 5.0));
        assert_eq!(mm.ue_pattern, AntennaPattern::new(10.0, -10.0, 30.0));
        assert_eq!((mm.overhead, mm.loss), (0.2, 0.5));
        assert_eq!((mm.noise_figure, mm.noise_psd, mm.area), (7.0, -174.0, 1.0));

        let mw = ScenarioConfig::microwave();
        assert_eq!(mw.carrier_freq, 2.5);
        assert_eq!(mw.max_bandwidth, 300e6);
        assert_eq!(mw.reuse_factor, 3);
        assert_eq!(mw.bs_pattern, AntennaPattern::new(0.0, -20.0, 70.0));
        assert_eq!(mw.ue_pattern, AntennaPattern::new(0.0, 0.0, 360.0));
        assert_eq!((mw.overhead, mw.loss), (0.2, 0.5));
        mm.validate().unwrap();
        mw.validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let cfg = ScenarioConfig::microwave();
        let s = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json_str(&s).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ScenarioConfig::mmwave();
        cfg.area = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::mmwave();
        cfg.overhead = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ScenarioConfig::mmwave();
        cfg.bs_pattern.back_lobe_gain_db = 30.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn noise_power_at_one_ghz() {
        // -174 + 7 + 90 = -77 dBm
        let cfg = ScenarioConfig::mmwave();
        let expected = 10f64.powf(-7.7);
        assert!((cfg.noise_power_mw(1e9) / expected - 1.0).abs() < 1e-12);
    }
}
