//! Embedded reference dataset of the published operating point, and the
//! reproduction check run by `opo-squeeze paper --check`.

use std::path::Path;

use opo_squeezing::{
    cavity_decay_rate, degrade_exact, detection_efficiency, escape_efficiency, fit_theta,
    forward_variances, from_db, pump_parameter, Cavity, Detection, FitOptions, Measured,
    PhaseNoise, Pump, Sideband,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const EMBEDDED: &str = include_str!("../data/paper_dataset.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Setup {
    #[serde(rename = "T")]
    pub transmission: f64,
    #[serde(rename = "L")]
    pub loss: f64,
    pub round_trip_m: f64,
    pub zeta: f64,
    pub eta: f64,
    pub xi: f64,
    pub frequency_hz: f64,
    #[serde(rename = "pump_mW")]
    pub pump_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub name: String,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<f64>,
    pub anchor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalRecords {
    pub crystal: String,
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dataset {
    pub setup: Setup,
    pub crystals: Vec<CrystalRecords>,
}

impl Dataset {
    pub fn embedded() -> Self {
        Self::from_json(EMBEDDED).expect("embedded dataset parses")
    }

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

    fn record(&self, name: &str, arity: usize) -> Result<&Record, CliError> {
        let rec = self
            .crystals
            .first()
            .and_then(|c| c.records.iter().find(|r| r.name == name))
            .ok_or_else(|| CliError::Validation {
                path: format!("crystals[0].records.{name}"),
                message: "record missing".into(),
            })?;
        if rec.values.len() != arity {
            return Err(CliError::Validation {
                path: format!("crystals[0].records.{name}.values"),
                message: format!("expected {arity} values, got {}", rec.values.len()),
            });
        }
        Ok(rec)
    }

    pub fn listing(&self) -> String {
        let s = &self.setup;
        let mut out = format!(
            "setup: T={} L={} round_trip_m={} zeta={} eta={} xi={} frequency_hz={} pump_mW={}\n",
            s.transmission, s.loss, s.round_trip_m, s.zeta, s.eta, s.xi, s.frequency_hz, s.pump_mw
        );
        out.push_str(&format!("crystals: {}\n", self.crystals.len()));
        for c in &self.crystals {
            out.push_str(&format!("[{}]\n", c.crystal));
            for r in &c.records {
                let vals: Vec<String> = r.values.iter().map(|v| v.to_string()).collect();
                let unc = r.uncertainty.map(|u| format!(" ± {u}")).unwrap_or_default();
                out.push_str(&format!(
                    "  {:<22} {}{}  ({})\n",
                    r.name,
                    vals.join(" / "),
                    unc,
                    r.anchor
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} criterion {}: {} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn line(id: u32, name: &'static str, pass: bool, detail: String) -> CheckLine {
    CheckLine {
        id,
        name,
        pass,
        detail,
    }
}

fn model_err(e: impl std::fmt::Display) -> CliError {
    CliError::Validation {
        path: "dataset".into(),
        message: e.to_string(),
    }
}

/// Runs the reproduction pipeline against the dataset: efficiencies,
/// detuning, the forward-model point, the phase-noise corrected point and
/// the jitter fit.
pub fn check(ds: &Dataset) -> Result<Vec<CheckLine>, CliError> {
    let s = &ds.setup;
    let cavity = Cavity::new(s.transmission, s.loss, s.round_trip_m).map_err(model_err)?;
    let chain = Detection::new(s.zeta, s.eta, s.xi).map_err(model_err)?;
    let sideband = Sideband::from_hz(s.frequency_hz).map_err(model_err)?;
    let mut lines = Vec::new();

    let want = ds.record("escape_efficiency", 1)?.values[0];
    let got = escape_efficiency(&cavity);
    lines.push(line(
        1,
        "escape efficiency",
        (got - want).abs() <= 1e-3,
        format!("rho = {got:.5}, expected {want} ± 0.001"),
    ));

    let want = ds.record("detection_efficiency", 1)?.values[0];
    let got = detection_efficiency(&chain);
    lines.push(line(
        2,
        "detection efficiency",
        (got - want).abs() <= 1e-3,
        format!("alpha = {got:.5}, expected {want} ± 0.001"),
    ));

    let want = ds.record("detuning", 1)?.values[0];
    let got = sideband.omega() / cavity_decay_rate(&cavity);
    lines.push(line(
        3,
        "detuning",
        (got - want).abs() <= 1e-3,
        format!("Omega = {got:.5}, expected {want} ± 0.001"),
    ));

    let alpha = ds.record("detection_efficiency", 1)?.values[0];
    let rho = ds.record("escape_efficiency", 1)?.values[0];
    let omega = ds.record("detuning", 1)?.values[0];
    let gain = ds.record("gain", 1)?.values[0];
    let x = pump_parameter(&Pump::Gain(gain)).map_err(model_err)?;
    let theory = forward_variances(alpha, rho, x, omega).map_err(model_err)?;
    let want = &ds.record("theory_db", 2)?.values;
    let (sq, asq) = (theory.minus_db(), theory.plus_db());
    lines.push(line(
        4,
        "theory point",
        (sq - want[0]).abs() <= 0.10 && (asq - want[1]).abs() <= 0.05,
        format!(
            "{sq:+.3} / {asq:+.3} dB, expected {} ± 0.10 / {} ± 0.05",
            want[0], want[1]
        ),
    ));

    let jitter = ds.record("phase_jitter_deg", 1)?;
    let theta_deg = jitter.values[0];
    let theta_unc = jitter.uncertainty.unwrap_or(0.0);
    let noise = PhaseNoise::from_degrees(theta_deg).map_err(model_err)?;
    let corrected = degrade_exact(&theory, &noise);
    let want = &ds.record("corrected_theory_db", 2)?.values;
    let (sq, asq) = (corrected.minus_db(), corrected.plus_db());
    lines.push(line(
        5,
        "phase-noise corrected point",
        (sq - want[0]).abs() <= 0.10 && (asq - want[1]).abs() <= 0.05,
        format!(
            "{sq:+.3} / {asq:+.3} dB, expected {} ± 0.10 / {} ± 0.05",
            want[0], want[1]
        ),
    ));

    let inferred = &ds.record("inferred_db", 2)?.values;
    let measured = Measured::squeezing_only(inferred[0]).map_err(model_err)?;
    let (pass, detail) = match fit_theta(&measured, &theory, &FitOptions::default()) {
        Ok(fit) => {
            let deg = fit.theta_rms_deg();
            (
                (deg - theta_deg).abs() <= theta_unc,
                format!("fitted {deg:.3}°, expected {theta_deg} ± {theta_unc}°"),
            )
        }
        Err(e) => (false, e.to_string()),
    };
    lines.push(line(6, "phase-jitter fit", pass, detail));
    Ok(lines)
}

/// Dark-noise clearance (linear) implied by a raw/corrected level pair.
pub fn implied_clearance(raw_db: f64, corrected_db: f64) -> f64 {
    let (p, c) = (from_db(raw_db), from_db(corrected_db));
    (p - c) / (1.0 - c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_passes() {
        let lines = check(&Dataset::embedded()).unwrap();
        assert_eq!(lines.len(), 6);
        for l in &lines {
            assert!(l.pass, "{l}");
        }
    }

    #[test]
    fn corrupted_fails() {
        let mut ds = Dataset::embedded();
        ds.crystals[0]
            .records
            .iter_mut()
            .find(|r| r.name == "escape_efficiency")
            .unwrap()
            .values[0] = 0.95;
        let lines = check(&ds).unwrap();
        assert!(!lines[0].pass);
    }

    #[test]
    fn two_crystals_listed() {
        let ds = Dataset::embedded();
        assert_eq!(ds.crystals.len(), 2);
        assert!(ds.listing().contains("crystals: 2"));
    }

    #[test]
    fn implied_clearances_disagree() {
        let ds = Dataset::embedded();
        let m = &ds.record("measured_db", 2).unwrap().values;
        let i = &ds.record("inferred_db", 2).unwrap().values;
        let sq = implied_clearance(m[0], i[0]);
        let asq = implied_clearance(m[1], i[1]);
        assert!((sq - 0.0168).abs() < 5e-4, "{sq}");
        assert!((asq - 0.0049).abs() < 5e-4, "{asq}");
    }
}
