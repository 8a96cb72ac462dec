use serde::{Deserialize, Serialize};

use crate::netsim::db_to_linear;

/// Two-level sectored antenna pattern: main lobe gain inside the beamwidth,
/// back lobe gain everywhere else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub main_lobe_gain_db: f64,
    pub back_lobe_gain_db: f64,
    pub beamwidth_deg: f64,
}

impl AntennaPattern {
    pub fn new(main_lobe_gain_db: f64, back_lobe_gain_db: f64, beamwidth_deg: f64) -> Self {
        Self {
            main_lobe_gain_db,
            back_lobe_gain_db,
            beamwidth_deg,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.main_lobe_gain_db >= self.back_lobe_gain_db
            && self.beamwidth_deg > 0.0
            && self.beamwidth_deg <= 360.0
    }

    pub fn main_lobe_linear(&self) -> f64 {
        db_to_linear(self.main_lobe_gain_db)
    }

    pub fn back_lobe_linear(&self) -> f64 {
        db_to_linear(self.back_lobe_gain_db)
    }

    /// Linear power gain at `angle_deg` off boresight. The main-lobe edge
    /// `|angle| == beamwidth/2` counts as main lobe.
    pub fn gain(&self, angle_deg: f64) -> f64 {
        if normalize_angle_deg(angle_deg).abs() <= self.beamwidth_deg / 2.0 {
            self.main_lobe_linear()
        } else {
            self.back_lobe_linear()
        }
    }
}

/// Maps any angle onto (-180, 180].
pub fn normalize_angle_deg(angle: f64) -> f64 {
    let mut a = angle % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}
