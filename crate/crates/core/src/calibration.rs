//! Frozen decision thresholds, shipped in `config/calibration.toml`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const CALIBRATION_TOML: &str = include_str!("../config/calibration.toml");

/// Cut points of the Wolfram-class decision tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassThresholds {
    pub attractor_homogeneous: f64,
    pub ratio_periodic: f64,
    pub ratio_random: f64,
    pub variability_ceiling: f64,
}

/// Cut points of the variability/controllability labelling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssessmentThresholds {
    pub variability_floor: f64,
    pub controllability_floor: f64,
    pub diagonal_band: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub classification: ClassThresholds,
    pub assessment: AssessmentThresholds,
}

impl Calibration {
    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// The calibration compiled into the crate.
pub fn frozen() -> &'static Calibration {
    static FROZEN: OnceLock<Calibration> = OnceLock::new();
    FROZEN.get_or_init(|| Calibration::parse(CALIBRATION_TOML).expect("bundled calibration parses"))
}
