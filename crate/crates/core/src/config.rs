//! JSON run configuration. Speeds are given in knots and angles in degrees;
//! the accessors convert to SI.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airframe::AircraftParams;
use crate::guidance::{HorizonParams, OptimizerParams, SurrogateParams};
use crate::primitives::ManeuverGrid;
use crate::sim::DEFAULT_DT_S;
use crate::units::knots_to_ms;
use crate::viability::{AirspeedEnvelope, GammaInterval};
use crate::windframe::WindVector;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridName {
    Default,
    Ci,
}

/// A named grid or an explicit one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Named(GridName),
    Explicit(ManeuverGrid),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Named(GridName::Default)
    }
}

impl GridSpec {
    pub fn grid(&self) -> ManeuverGrid {
        match self {
            GridSpec::Named(GridName::Default) => ManeuverGrid::default(),
            GridSpec::Named(GridName::Ci) => ManeuverGrid::ci(),
            GridSpec::Explicit(g) => g.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceConfig {
    pub turn_rate_dps: f64,
    pub tau_s: f64,
    pub horizon_cap_s: Option<f64>,
    pub dt_s: f64,
    pub half_window: usize,
    pub sim_dt_s: f64,
    pub grid_points: usize,
    pub margin_lo: f64,
    pub margin_hi: f64,
    pub gamma_box_deg: [f64; 2],
    pub refine_tol_rad: f64,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        let h = HorizonParams::default();
        let s = SurrogateParams::default();
        let o = OptimizerParams::default();
        Self {
            turn_rate_dps: 3.0,
            tau_s: h.tau_s,
            horizon_cap_s: h.cap_s,
            dt_s: s.dt_s,
            half_window: s.half_window,
            sim_dt_s: s.sim_dt_s,
            grid_points: o.grid_points,
            margin_lo: o.margin_lo,
            margin_hi: o.margin_hi,
            gamma_box_deg: [-10.0, 0.0],
            refine_tol_rad: o.refine_tol_rad,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindConfig {
    pub speed_kts: f64,
    /// Bearing the wind blows from.
    pub direction_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Outputs {
    pub table: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub plan: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Aircraft parameter file. Relative paths here and in `outputs` are
    /// taken from the configuration file's directory. The built-in
    /// light-aircraft parameters are used when absent.
    pub aircraft: Option<PathBuf>,
    pub envelope_kts: [f64; 2],
    pub grid: GridSpec,
    pub guidance: GuidanceConfig,
    pub wind: WindConfig,
    pub sim_dt_s: f64,
    pub seed: u64,
    pub outputs: Outputs,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            aircraft: None,
            envelope_kts: [80.0, 100.0],
            grid: GridSpec::default(),
            guidance: GuidanceConfig::default(),
            wind: WindConfig::default(),
            sim_dt_s: DEFAULT_DT_S,
            seed: 0,
            outputs: Outputs::default(),
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

impl RunConfig {
    /// Reads and validates a configuration. Relative paths inside it are
    /// resolved against the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig =
            serde_json::from_str(&read(path)?).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let o = &mut cfg.outputs;
        for path in [
            &mut cfg.aircraft,
            &mut o.table,
            &mut o.trajectory,
            &mut o.plan,
            &mut o.report,
        ] {
            if let Some(p) = path.take() {
                *path = Some(if p.is_relative() { base.join(p) } else { p });
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if let Some(path) = &self.aircraft {
            if !path.is_file() {
                return Err(ConfigError::Io {
                    path: path.clone(),
                    message: "aircraft file not found".into(),
                });
            }
        }
        self.envelope()?;
        self.aircraft_params()?;
        self.grid()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let g = &self.guidance;
        if !(g.turn_rate_dps > 0.0) || !(g.tau_s > 0.0) {
            return Err(ConfigError::Invalid(
                "turn rate and straight duration must be positive".into(),
            ));
        }
        if !(g.dt_s > 0.0) || !(g.sim_dt_s > 0.0) || !(self.sim_dt_s > 0.0) {
            return Err(ConfigError::Invalid("time steps must be positive".into()));
        }
        if g.grid_points < 2 {
            return Err(ConfigError::Invalid("grid_points must be at least 2".into()));
        }
        if !(g.gamma_box_deg[0] < g.gamma_box_deg[1]) {
            return Err(ConfigError::Invalid("gamma_box_deg must be increasing".into()));
        }
        if !(self.wind.speed_kts >= 0.0) {
            return Err(ConfigError::Invalid("wind speed must be non-negative".into()));
        }
        Ok(())
    }

    pub fn envelope(&self) -> Result<AirspeedEnvelope, ConfigError> {
        let [lo, hi] = self.envelope_kts;
        AirspeedEnvelope::from_knots(lo, hi).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn aircraft_params(&self) -> Result<AircraftParams, ConfigError> {
        let params = match &self.aircraft {
            None => AircraftParams::default(),
            Some(path) => serde_json::from_str(&read(path)?)
                .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?,
        };
        params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(params)
    }

    pub fn grid(&self) -> ManeuverGrid {
        self.grid.grid()
    }

    pub fn horizon(&self) -> HorizonParams {
        HorizonParams {
            turn_rate_rad_s: self.guidance.turn_rate_dps.to_radians(),
            tau_s: self.guidance.tau_s,
            cap_s: self.guidance.horizon_cap_s,
        }
    }

    pub fn surrogate(&self) -> SurrogateParams {
        SurrogateParams {
            dt_s: self.guidance.dt_s,
            half_window: self.guidance.half_window,
            sim_dt_s: self.guidance.sim_dt_s,
        }
    }

    pub fn optimizer(&self) -> OptimizerParams {
        let [lo, hi] = self.guidance.gamma_box_deg;
        OptimizerParams {
            gamma_box: GammaInterval::from_degrees(lo, hi),
            grid_points: self.guidance.grid_points,
            margin_lo: self.guidance.margin_lo,
            margin_hi: self.guidance.margin_hi,
            refine_tol_rad: self.guidance.refine_tol_rad,
        }
    }

    pub fn wind(&self) -> WindVector {
        WindVector::from_speed_direction(knots_to_ms(self.wind.speed_kts), self.wind.direction_deg.to_radians())
    }
}
