//! JSON experiment configuration.
//!
//! Angles are in degrees, pump powers in mW and the measurement frequency in
//! Hz at this boundary; [`ExperimentConfig::resolve`] converts to radians,
//! watts and rad/s and validates every field.

use std::path::Path;

use opo_squeezing::model::gain_from_pump;
use opo_squeezing::{
    cavity_decay_rate, detection_efficiency, detuning, escape_efficiency, from_db, pump_parameter,
    Cavity, Detection, ModelError, PhaseNoise, Pump, Sideband,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cavity: CavityConfig,
    pub detection: DetectionConfig,
    pub pump: PumpConfig,
    pub noise: NoiseConfig,
    pub measurement: MeasurementConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    #[serde(rename = "T")]
    pub transmission: f64,
    #[serde(rename = "L")]
    pub loss: f64,
    pub round_trip_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionConfig {
    pub zeta: f64,
    pub eta: f64,
    pub xi: f64,
    /// Detector circuit noise relative to shot noise, dB.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dark_clearance_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PumpMode {
    Gain,
    X,
    Power,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpConfig {
    pub mode: PumpMode,
    /// Gain, pump parameter, or pump power in mW, depending on `mode`.
    pub value: f64,
    #[serde(
        rename = "threshold_mW",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub threshold_mw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub theta_rms_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub frequency_hz: f64,
}

/// A validated configuration with all derived model quantities.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub cavity: Cavity,
    pub detection: Detection,
    pub pump: Pump,
    pub noise: PhaseNoise,
    pub sideband: Sideband,
    pub alpha: f64,
    pub rho: f64,
    pub x: f64,
    pub gain: f64,
    pub gamma: f64,
    pub detuning: f64,
    /// Threshold in W when the config provides one.
    pub threshold: Option<f64>,
}

fn at(path: &str) -> impl Fn(ModelError) -> CliError + '_ {
    move |e| CliError::Validation {
        path: path.to_string(),
        message: e.to_string(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Validation {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let c = &self.cavity;
        let cavity = match Cavity::new(c.transmission, c.loss, c.round_trip_m) {
            Ok(cav) => cav,
            Err(e @ ModelError::OutOfRange { field, .. }) => {
                let key = match field {
                    "transmission" => "cavity.T",
                    "loss" => "cavity.L",
                    _ => "cavity.round_trip_m",
                };
                return Err(at(key)(e));
            }
            Err(e) => return Err(at("cavity")(e)),
        };

        let d = &self.detection;
        let mut detection = Detection::new(d.zeta, d.eta, d.xi).map_err(|e| {
            let key = match &e {
                ModelError::OutOfRange { field, .. } => format!("detection.{field}"),
                _ => "detection".to_string(),
            };
            CliError::Validation {
                path: key,
                message: e.to_string(),
            }
        })?;
        if let Some(db) = d.dark_clearance_db {
            detection = detection
                .with_dark_clearance(from_db(db))
                .map_err(at("detection.dark_clearance_db"))?;
        }

        let threshold = match self.pump.threshold_mw {
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(CliError::Validation {
                    path: "pump.threshold_mW".into(),
                    message: format!("threshold must be > 0 mW, got {t}"),
                })
            }
            Some(t) => Some(t * 1e-3),
            None => None,
        };
        let pump = match self.pump.mode {
            PumpMode::Gain => Pump::Gain(self.pump.value),
            PumpMode::X => Pump::Parameter(self.pump.value),
            PumpMode::Power => Pump::Power {
                power: self.pump.value * 1e-3,
                threshold: threshold.ok_or_else(|| CliError::Validation {
                    path: "pump.threshold_mW".into(),
                    message: "power mode requires threshold_mW".into(),
                })?,
            },
        };
        let x = pump_parameter(&pump).map_err(at("pump.value"))?;

        let noise = PhaseNoise::from_degrees(self.noise.theta_rms_deg)
            .map_err(at("noise.theta_rms_deg"))?;
        let sideband = Sideband::from_hz(self.measurement.frequency_hz)
            .map_err(at("measurement.frequency_hz"))?;

        Ok(Resolved {
            alpha: detection_efficiency(&detection),
            rho: escape_efficiency(&cavity),
            gamma: cavity_decay_rate(&cavity),
            detuning: detuning(&sideband, &cavity),
            gain: gain_from_pump(x),
            x,
            cavity,
            detection,
            pump,
            noise,
            sideband,
            threshold,
        })
    }
}
