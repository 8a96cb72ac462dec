//! Link-state and propagation laws for the two bands.
//!
//! mmWave uses a three-state (LOS / NLOS / outage) model with exponential
//! blockage; microwave uses the UMi LOS-probability form with no outage.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Distances below this are clamped before evaluating log-distance path loss.
pub const MIN_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    Mmwave,
    Microwave,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkState {
    Los,
    Nlos,
    Outage,
}

/// `PL(d) = intercept + slope * log10(d)` with log-normal shadowing of
/// standard deviation `shadow_sigma_db`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossLaw {
    pub intercept_db: f64,
    pub slope_db_per_decade: f64,
    pub shadow_sigma_db: f64,
}

impl PathLossLaw {
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        self.intercept_db + self.slope_db_per_decade * distance_m.max(MIN_DISTANCE_M).log10()
    }
}

/// `p_out(d) = max(0, 1 - exp(-a_out * d + b_out))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageParams {
    pub a_out_per_m: f64,
    pub b_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LosProbability {
    /// `p_los(d) = (1 - p_out(d)) * exp(-a_los * d)`
    Exponential { a_los_per_m: f64 },
    /// `p_los(d) = min(d1/d, 1) * (1 - exp(-d/d2)) + exp(-d/d2)`
    Umi { d1_m: f64, d2_m: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub band: Band,
    pub los_pl: PathLossLaw,
    pub nlos_pl: PathLossLaw,
    pub outage: Option<OutageParams>,
    pub los_probability: LosProbability,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkStateProbs {
    pub los: f64,
    pub nlos: f64,
    pub outage: f64,
}

impl ChannelModel {
    /// 73 GHz three-state model.
    pub fn mmwave_73ghz() -> Self {
        Self {
            band: Band::Mmwave,
            los_pl: PathLossLaw {
                intercept_db: 69.8,
                slope_db_per_decade: 20.0,
                shadow_sigma_db: 5.8,
            },
            nlos_pl: PathLossLaw {
                intercept_db: 82.7,
                slope_db_per_decade: 26.9,
                shadow_sigma_db: 7.7,
            },
            outage: Some(OutageParams {
                a_out_per_m: 1.0 / 30.0,
                b_out: 5.2,
            }),
            los_probability: LosProbability::Exponential {
                a_los_per_m: 1.0 / 67.1,
            },
        }
    }

    /// UMi street-canyon model; the carrier-frequency term is folded into the
    /// intercepts.
    pub fn umi(carrier_ghz: f64) -> Self {
        let f = carrier_ghz.log10();
        Self {
            band: Band::Microwave,
            los_pl: PathLossLaw {
                intercept_db: 28.0 + 20.0 * f,
                slope_db_per_decade: 22.0,
                shadow_sigma_db: 3.0,
            },
            nlos_pl: PathLossLaw {
                intercept_db: 22.7 + 26.0 * f,
                slope_db_per_decade: 36.7,
                shadow_sigma_db: 4.0,
            },
            outage: None,
            los_probability: LosProbability::Umi {
                d1_m: 18.0,
                d2_m: 36.0,
            },
        }
    }

    pub fn link_state_probs(&self, distance_m: f64) -> LinkStateProbs {
        let d = distance_m.max(0.0);
        let outage = match self.outage {
            Some(o) => (1.0 - (-o.a_out_per_m * d + o.b_out).exp()).max(0.0),
            None => 0.0,
        };
        let not_out = 1.0 - outage;
        let los_given_not_out = match self.los_probability {
            LosProbability::Exponential { a_los_per_m } => (-a_los_per_m * d).exp(),
            LosProbability::Umi { d1_m, d2_m } => {
                let e = (-d / d2_m).exp();
                let near = if d > 0.0 { (d1_m / d).min(1.0) } else { 1.0 };
                (near * (1.0 - e) + e).min(1.0)
            }
        };
        let los = not_out * los_given_not_out;
        LinkStateProbs {
            los,
            nlos: not_out - los,
            outage,
        }
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, distance_m: f64, rng: &mut R) -> LinkState {
        let p = self.link_state_probs(distance_m);
        let u: f64 = rng.random();
        if u < p.los {
            LinkState::Los
        } else if u < p.los + p.nlos {
            LinkState::Nlos
        } else {
            LinkState::Outage
        }
    }

    pub fn law(&self, state: LinkState) -> Option<&PathLossLaw> {
        match state {
            LinkState::Los => Some(&self.los_pl),
            LinkState::Nlos => Some(&self.nlos_pl),
            LinkState::Outage => None,
        }
    }

    /// Total loss `PL(d) + X` in dB, `None` in outage.
    pub fn loss_db(&self, state: LinkState, distance_m: f64, shadowing_db: f64) -> Option<f64> {
        self.law(state)
            .map(|law| law.path_loss_db(distance_m) + shadowing_db)
    }

    /// Linear channel power gain `H = 10^(-(PL+X)/10) * F`; zero in outage.
    pub fn channel_power_gain(
        &self,
        state: LinkState,
        distance_m: f64,
        shadowing_db: f64,
        fading: f64,
    ) -> f64 {
        match self.loss_db(state, distance_m, shadowing_db) {
            Some(loss) => 10f64.powf(-loss / 10.0) * fading,
            None => 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        let laws_ok = [self.los_pl, self.nlos_pl]
            .iter()
            .all(|l| l.shadow_sigma_db >= 0.0 && l.intercept_db.is_finite());
        let los_ok = match self.los_probability {
            LosProbability::Exponential { a_los_per_m } => a_los_per_m >= 0.0,
            LosProbability::Umi { d1_m, d2_m } => d1_m > 0.0 && d2_m > 0.0,
        };
        let out_ok = self.outage.map_or(true, |o| o.a_out_per_m >= 0.0);
        laws_ok && los_ok && out_ok
    }
}
