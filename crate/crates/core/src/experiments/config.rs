use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ExperimentError;
use crate::geometry::MAX_SPACING;
use crate::parallel::ExecMode;

/// Which allocation schemes a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PaMode {
    Proposed,
    Fixed,
    Both,
}

/// One power-allocation scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    Proposed,
    Fixed(f64),
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::Proposed => "proposed".to_string(),
            Scheme::Fixed(f) => format!("fixed={f}"),
        }
    }
}

/// Full description of a run. Every key is flat so configs diff cleanly;
/// positions are in meters and spacings in wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub alice_elements: [usize; 2],
    pub bob_elements: [usize; 2],
    pub eve_elements: [usize; 2],
    pub alice_position: [f64; 3],
    pub bob_positions: Vec<[f64; 3]>,
    pub eve_position: [f64; 3],
    pub spacing: f64,
    pub path_loss_exponent: f64,
    pub array_gain: f64,
    pub total_power: f64,
    pub snr_db: Vec<f64>,
    pub csi_error: f64,
    pub trials: usize,
    pub seed: u64,
    pub pa: PaMode,
    pub fixed_fraction: f64,
    pub sca_tolerance: f64,
    pub sca_max_iterations: usize,
    pub exec: ExecMode,

    pub spacing_list: Vec<f64>,
    pub csi_list: Vec<f64>,
    /// Square Eve array sizes for the Eve sweep.
    pub eve_sizes: Vec<usize>,

    pub heatmap_bob_positions: Vec<[f64; 3]>,
    pub heatmap_x: [f64; 2],
    pub heatmap_y: [f64; 2],
    pub heatmap_resolution: usize,
    /// Spacing for the heat map; four Bobs need a larger aperture than the
    /// two-Bob default to leave a null space.
    pub heatmap_spacing: f64,
    pub heatmap_snr_db: f64,
    pub heatmap_power_per_bob: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            alice_elements: [20, 20],
            bob_elements: [10, 10],
            eve_elements: [10, 10],
            alice_position: [0.0, 0.0, 0.0],
            bob_positions: vec![[40.0, -20.0, 0.0], [60.0, 30.0, 0.0]],
            eve_position: [60.0, 25.0, 0.0],
            spacing: 0.25,
            path_loss_exponent: 2.7,
            array_gain: 1000.0,
            total_power: 2.0,
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            csi_error: 0.0,
            trials: 1000,
            seed: 1,
            pa: PaMode::Both,
            fixed_fraction: 0.5,
            sca_tolerance: 1e-4,
            sca_max_iterations: 50,
            exec: ExecMode::Parallel,
            spacing_list: vec![0.125, 0.25, 0.5],
            csi_list: vec![0.0, 0.1, 0.2],
            eve_sizes: vec![6, 10, 16],
            heatmap_bob_positions: vec![
                [40.0, -20.0, 0.0],
                [60.0, 30.0, 0.0],
                [40.0, 30.0, 0.0],
                [60.0, -20.0, 0.0],
            ],
            heatmap_x: [30.0, 70.0],
            heatmap_y: [-30.0, 40.0],
            heatmap_resolution: 8,
            heatmap_spacing: 0.5,
            heatmap_snr_db: -10.0,
            heatmap_power_per_bob: 1.0,
        }
    }
}

fn finite_point(param: &str, p: &[f64; 3]) -> Result<(), ExperimentError> {
    if p.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ExperimentError::config(param, format!("non-finite position {p:?}")))
    }
}

fn elements(param: &str, e: &[usize; 2]) -> Result<(), ExperimentError> {
    if e[0] == 0 || e[1] == 0 {
        return Err(ExperimentError::config(param, format!("empty array {}x{}", e[0], e[1])));
    }
    Ok(())
}

fn spacing(param: &str, s: f64) -> Result<(), ExperimentError> {
    if !(s > 0.0 && s <= MAX_SPACING) {
        return Err(ExperimentError::config(
            param,
            format!("spacing {s} outside (0, {MAX_SPACING}] wavelengths"),
        ));
    }
    Ok(())
}

fn csi(param: &str, xi: f64) -> Result<(), ExperimentError> {
    if !(0.0..=1.0).contains(&xi) {
        return Err(ExperimentError::config(param, format!("{xi} outside [0, 1]")));
    }
    Ok(())
}

fn positive(param: &str, v: f64) -> Result<(), ExperimentError> {
    if !(v.is_finite() && v > 0.0) {
        return Err(ExperimentError::config(param, format!("must be positive, got {v}")));
    }
    Ok(())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            ExperimentError::config("config", e.to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn schemes(&self) -> Vec<Scheme> {
        match self.pa {
            PaMode::Proposed => vec![Scheme::Proposed],
            PaMode::Fixed => vec![Scheme::Fixed(self.fixed_fraction)],
            PaMode::Both => vec![Scheme::Proposed, Scheme::Fixed(self.fixed_fraction)],
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        elements("alice_elements", &self.alice_elements)?;
        elements("bob_elements", &self.bob_elements)?;
        elements("eve_elements", &self.eve_elements)?;
        finite_point("alice_position", &self.alice_position)?;
        finite_point("eve_position", &self.eve_position)?;
        if self.bob_positions.is_empty() {
            return Err(ExperimentError::config("bob_positions", "at least one Bob is required"));
        }
        for p in &self.bob_positions {
            finite_point("bob_positions", p)?;
            if *p == self.alice_position {
                return Err(ExperimentError::config("bob_positions", "Bob coincides with Alice"));
            }
        }
        if self.eve_position == self.alice_position {
            return Err(ExperimentError::config("eve_position", "Eve coincides with Alice"));
        }
        spacing("spacing", self.spacing)?;
        positive("path_loss_exponent", self.path_loss_exponent)?;
        positive("array_gain", self.array_gain)?;
        positive("total_power", self.total_power)?;
        if self.snr_db.is_empty() || self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(ExperimentError::config("snr_db", "needs at least one finite value"));
        }
        csi("csi_error", self.csi_error)?;
        if self.trials == 0 {
            return Err(ExperimentError::config("trials", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.fixed_fraction) {
            return Err(ExperimentError::config(
                "fixed_fraction",
                format!("{} outside [0, 1]", self.fixed_fraction),
            ));
        }
        positive("sca_tolerance", self.sca_tolerance)?;
        if self.sca_max_iterations == 0 {
            return Err(ExperimentError::config("sca_max_iterations", "must be at least 1"));
        }
        for &s in &self.spacing_list {
            spacing("spacing_list", s)?;
        }
        for &xi in &self.csi_list {
            csi("csi_list", xi)?;
        }
        if self.eve_sizes.contains(&0) {
            return Err(ExperimentError::config("eve_sizes", "array sizes must be positive"));
        }
        if self.heatmap_bob_positions.is_empty() {
            return Err(ExperimentError::config(
                "heatmap_bob_positions",
                "at least one Bob is required",
            ));
        }
        for p in &self.heatmap_bob_positions {
            finite_point("heatmap_bob_positions", p)?;
        }
        for (name, r) in [("heatmap_x", self.heatmap_x), ("heatmap_y", self.heatmap_y)] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(ExperimentError::config(name, format!("invalid range {r:?}")));
            }
        }
        if self.heatmap_resolution == 0 {
            return Err(ExperimentError::config("heatmap_resolution", "must be at least 1"));
        }
        spacing("heatmap_spacing", self.heatmap_spacing)?;
        if !self.heatmap_snr_db.is_finite() {
            return Err(ExperimentError::config("heatmap_snr_db", "must be finite"));
        }
        positive("heatmap_power_per_bob", self.heatmap_power_per_bob)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_round_trip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = ScenarioConfig::from_json(r#"{"trials": 5, "pa": "fixed"}"#).unwrap();
        assert_eq!(cfg.trials, 5);
        assert_eq!(cfg.schemes(), vec![Scheme::Fixed(0.5)]);
        assert_eq!(cfg.bob_positions.len(), 2);
    }

    #[test]
    fn errors_name_the_parameter() {
        let err = ScenarioConfig::from_json(r#"{"spacing": 0.7}"#).unwrap_err();
        assert!(err.to_string().contains("`spacing`"));
        let err = ScenarioConfig::from_json(r#"{"csi_list": [0.1, 1.5]}"#).unwrap_err();
        assert!(err.to_string().contains("`csi_list`"));
        let err = ScenarioConfig::from_json(r#"{"bogus": 1}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}
