//! TOML run configuration. Keys mirror [`SimConfig`] and [`GridSpec`]
//! field names; unknown keys are rejected.
//!
//! ```toml
//! horizon = 40.0
//! step = 0.001
//! recording_step = 0.05
//! seed = 1
//!
//! [params]
//! sigma = 0.32
//! c = 1.0
//! carrying_capacity = 250
//!
//! [mode]
//! kind = "interacting"        # or kind = "frozen", lambda = 0.34
//!
//! [init]
//! kind = "stationary_sample"  # or "point_mass" (x0, n0) or "explicit" (traits)
//!
//! [grid]                      # optional, used by the pde and spine exports
//! half_width = 5.5
//! n_cells = 2048
//! dt = 1e-4
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytics::ModelParams;
use crate::engine::{InitialCondition, Mode, SimConfig, DEFAULT_RECORDING_STEP, DEFAULT_STEP};
use crate::error::{Error, Result};
use crate::pde::GridSpec;

fn default_step() -> f64 {
    DEFAULT_STEP
}

fn default_recording_step() -> f64 {
    DEFAULT_RECORDING_STEP
}

fn default_mode() -> Mode {
    Mode::Interacting
}

fn default_init() -> InitialCondition {
    InitialCondition::StationarySample
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub params: ModelParams,
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_recording_step")]
    pub recording_step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_init")]
    pub init: InitialCondition,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text)?;
        cfg.sim_config().validate()?;
        if let Some(g) = &cfg.grid {
            g.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn from_sim_config(config: &SimConfig, grid: Option<GridSpec>) -> Self {
        Self {
            params: config.params,
            horizon: config.horizon,
            step: config.step,
            recording_step: config.recording_step,
            seed: config.seed,
            mode: config.mode,
            init: config.init.clone(),
            grid,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            params: self.params,
            horizon: self.horizon,
            step: self.step,
            recording_step: self.recording_step,
            mode: self.mode,
            init: self.init.clone(),
            seed: self.seed,
        }
    }

    /// The configured grid, or the default grid for these parameters.
    pub fn grid_or_default(&self) -> GridSpec {
        self.grid.unwrap_or_else(|| GridSpec::default_for(&self.params))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Malformed(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        horizon = 0.1
        [params]
        sigma = 0.32
        c = 1.0
        carrying_capacity = 250
        [init]
        kind = "point_mass"
        x0 = 0.0
        n0 = 1
    "#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ConfigFile::parse(MINIMAL).unwrap();
        let sim = cfg.sim_config();
        assert_eq!(sim.step, 1e-3);
        assert_eq!(sim.recording_step, 0.05);
        assert_eq!(sim.mode, Mode::Interacting);
        assert_eq!(sim.init, InitialCondition::PointMass { x0: 0.0, n0: 1 });
        assert!(cfg.grid.is_none());
    }

    #[test]
    fn unknown_keys_are_errors() {
        let bad = MINIMAL.replace("sigma = 0.32", "sigma = 0.32\nsigam = 0.3");
        let err = ConfigFile::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("sigam"), "{err}");
        let bad = format!("{MINIMAL}\n[grid]\nhalf_width = 5.0\nn_cells = 64\ndt = 1e-3\nextra = 1\n");
        assert!(ConfigFile::parse(&bad).is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let bad = MINIMAL.replace("horizon = 0.1", "horizon = 0.1\nstep = 0.03");
        let err = ConfigFile::parse(&bad).unwrap_err().to_string();
        assert!(err.contains("recording_step"), "{err}");
        let bad = MINIMAL.replace("sigma = 0.32", "sigma = -1.0");
        assert!(ConfigFile::parse(&bad).unwrap_err().to_string().contains("sigma"));
    }

    #[test]
    fn frozen_mode_and_grid_parse() {
        let text = MINIMAL.replace(
            "[init]",
            "[mode]\nkind = \"frozen\"\nlambda = 0.34\n[grid]\nhalf_width = 5.0\nn_cells = 64\ndt = 1e-3\n[init]",
        );
        let cfg = ConfigFile::parse(&text).unwrap();
        assert_eq!(cfg.mode, Mode::Frozen { lambda: 0.34 });
        assert_eq!(cfg.grid_or_default().n_cells, 64);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ConfigFile::parse(MINIMAL).unwrap();
        assert_eq!(ConfigFile::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }
}
