//! Run configuration: TOML documents with explicit unit-suffixed fields.
//!
//! Every section except `[scenario]`, `[container]` and `[effector]` is
//! optional; omitted fields fall back to the shipped calibration. Unknown
//! keys are rejected so typos surface as parse errors with line numbers.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::capture::CoverageModel;
use crate::cone::{self, ConeConfig};
use crate::engine::SimParams;
use crate::scene::{ContainerSpec, GranularSpec, SheetSpec};
use crate::trajectory::TrajectoryParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("unknown {kind} preset \"{name}\"; available: {options}")]
    UnknownPreset {
        kind: &'static str,
        name: String,
        options: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cone geometry: {0}")]
    Cone(#[from] cone::ConeError),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub container: ContainerSection,
    pub effector: EffectorSection,
    #[serde(default)]
    pub granular: GranularSection,
    #[serde(default)]
    pub trajectory: TrajectorySection,
    #[serde(default)]
    pub capture: CaptureSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default = "default_trials")]
    pub trials: u32,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
}

fn default_trials() -> u32 {
    10
}

fn default_base_seed() -> u64 {
    40961
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerSection {
    pub inner_diameter_mm: f64,
    #[serde(default = "default_tilt")]
    pub tilt_deg: f64,
    /// Defaults to the inner radius (hemispherical bowl).
    pub rim_depth_mm: Option<f64>,
}

fn default_tilt() -> f64 {
    45.0
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum EffectorKind {
    Cone,
    Ladle,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectorSection {
    pub kind: EffectorKind,
    /// Sheet material preset; defaults to pp_sheet for cones and
    /// silicone_ladle for ladles.
    pub preset: Option<String>,
    #[serde(default = "default_sheet_radius")]
    pub sheet_radius_mm: f64,
    /// Cone setting; exactly one of this and slide_angle_deg for cones.
    pub bottom_diameter_mm: Option<f64>,
    pub slide_angle_deg: Option<f64>,
    #[serde(default = "default_segments")]
    pub segments: u32,
    /// Ladle working length (handle + cup), mm.
    #[serde(default = "default_ladle_length")]
    pub ladle_length_mm: f64,
}

fn default_sheet_radius() -> f64 {
    50.0
}

fn default_segments() -> u32 {
    24
}

fn default_ladle_length() -> f64 {
    73.0
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GranularSection {
    pub preset: Option<String>,
    pub total_mass_g: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySection {
    /// Commanded tip interference with the wall; defaults by effector
    /// compliance (positive press for flexible sheets, small clearance for
    /// rigid ones).
    pub press_depth_mm: Option<f64>,
    pub sweep_speed_mm_s: Option<f64>,
    pub approach_speed_mm_s: Option<f64>,
    pub carry_speed_mm_s: Option<f64>,
    pub mount_attack_deg: Option<f64>,
    pub carry_attitude_deg: Option<f64>,
    pub dump_angle_deg: Option<f64>,
    pub dump_duration_s: Option<f64>,
    pub wiggle_amplitude_deg: Option<f64>,
    pub wiggle_hz: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureSection {
    pub widening_gain: Option<f64>,
    pub coverage_exponent: Option<f64>,
    pub oversize_exponent: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    #[serde(default = "default_max_settle")]
    pub max_settle_s: f64,
    #[serde(default = "default_settle_threshold")]
    pub settle_threshold_mm_s: f64,
    #[serde(default = "default_max_particles")]
    pub max_particles: u32,
    /// Quiet time simulated after the dump before measuring.
    #[serde(default = "default_post_settle")]
    pub post_dump_settle_s: f64,
}

fn default_dt() -> f64 {
    2.0e-5
}

fn default_max_settle() -> f64 {
    1.4
}

fn default_settle_threshold() -> f64 {
    8.0
}

fn default_max_particles() -> u32 {
    5000
}

fn default_post_settle() -> f64 {
    0.35
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            dt_s: default_dt(),
            max_settle_s: default_max_settle(),
            settle_threshold_mm_s: default_settle_threshold(),
            max_particles: default_max_particles(),
            post_dump_settle_s: default_post_settle(),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn from_toml(text: &str, label: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: label.to_string(),
            source: Box::new(source),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.scenario.trials < 1 {
            return Err(ConfigError::Invalid("trials must be >= 1".into()));
        }
        self.container_spec()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        match self.effector.kind {
            EffectorKind::Cone => {
                match (
                    self.effector.bottom_diameter_mm,
                    self.effector.slide_angle_deg,
                ) {
                    (Some(_), Some(_)) => {
                        return Err(ConfigError::Invalid(
                            "give either bottom_diameter_mm or slide_angle_deg, not both".into(),
                        ))
                    }
                    (None, None) => {
                        return Err(ConfigError::Invalid(
                            "cone effector needs bottom_diameter_mm or slide_angle_deg".into(),
                        ))
                    }
                    _ => {}
                }
                self.cone_config()?;
            }
            EffectorKind::Ladle => {
                if self.effector.ladle_length_mm <= 0.0 {
                    return Err(ConfigError::Invalid("ladle_length_mm must be > 0".into()));
                }
            }
        }
        if self.effector.segments < 8 {
            return Err(ConfigError::Invalid("segments must be >= 8".into()));
        }
        self.sheet_spec()?;
        self.granular_spec()?;
        if self.simulation.dt_s <= 0.0 {
            return Err(ConfigError::Invalid("dt_s must be > 0".into()));
        }
        Ok(())
    }

    pub fn container_spec(&self) -> ContainerSpec {
        let mut c =
            ContainerSpec::hemisphere(self.container.inner_diameter_mm, self.container.tilt_deg);
        if let Some(depth) = self.container.rim_depth_mm {
            c.rim_depth = depth;
        }
        c
    }

    pub fn granular_spec(&self) -> Result<GranularSpec, ConfigError> {
        let name = self.granular.preset.as_deref().unwrap_or("flour");
        let mut g = GranularSpec::preset(name).ok_or_else(|| ConfigError::UnknownPreset {
            kind: "granular",
            name: name.to_string(),
            options: GranularSpec::PRESET_NAMES.join(", "),
        })?;
        if let Some(mass) = self.granular.total_mass_g {
            g.total_mass = mass;
        }
        Ok(g)
    }

    pub fn sheet_spec(&self) -> Result<SheetSpec, ConfigError> {
        let name = self.effector.preset.as_deref().unwrap_or(match self.effector.kind {
            EffectorKind::Cone => "pp_sheet",
            EffectorKind::Ladle => "silicone_ladle",
        });
        SheetSpec::preset(name).ok_or_else(|| ConfigError::UnknownPreset {
            kind: "sheet",
            name: name.to_string(),
            options: SheetSpec::PRESET_NAMES.join(", "),
        })
    }

    /// Cone setting, if this run drives a cone. `None` for ladles.
    pub fn cone_config(&self) -> Result<Option<ConeConfig>, ConfigError> {
        match self.effector.kind {
            EffectorKind::Ladle => Ok(None),
            EffectorKind::Cone => {
                let r = self.effector.sheet_radius_mm;
                let cfg = if let Some(d) = self.effector.bottom_diameter_mm {
                    ConeConfig::from_bottom_diameter(r, d)?
                } else {
                    let th = self
                        .effector
                        .slide_angle_deg
                        .expect("validated")
                        .to_radians();
                    ConeConfig::from_slide_angle(r, th)?
                };
                Ok(Some(cfg))
            }
        }
    }

    pub fn trajectory_params(&self) -> Result<TrajectoryParams, ConfigError> {
        let sheet = self.sheet_spec()?;
        let mut p = TrajectoryParams::default();
        if sheet.rigid {
            // A rigid blade cannot hug the wall, so it runs with a standoff
            // covering curvature mismatch plus positioning slack; the film
            // it leaves behind is the price of stiffness.
            p.press_depth = -1.6;
        }
        let t = &self.trajectory;
        if let Some(v) = t.press_depth_mm {
            p.press_depth = v;
        }
        if let Some(v) = t.sweep_speed_mm_s {
            p.sweep_speed = v;
        }
        if let Some(v) = t.approach_speed_mm_s {
            p.approach_speed = v;
        }
        if let Some(v) = t.carry_speed_mm_s {
            p.carry_speed = v;
        }
        if let Some(v) = t.mount_attack_deg {
            p.mount_attack_deg = v;
        }
        if let Some(v) = t.carry_attitude_deg {
            p.carry_attitude_deg = v;
        }
        if let Some(v) = t.dump_angle_deg {
            p.dump_angle_deg = v;
        }
        if let Some(v) = t.dump_duration_s {
            p.dump_duration_s = v;
        }
        if let Some(v) = t.wiggle_amplitude_deg {
            p.wiggle_amp_deg = v;
        }
        if let Some(v) = t.wiggle_hz {
            p.wiggle_freq_hz = v;
        }
        Ok(p)
    }

    pub fn coverage_model(&self) -> CoverageModel {
        let mut m = CoverageModel::default();
        if let Some(v) = self.capture.widening_gain {
            m.widening_gain = v;
        }
        if let Some(v) = self.capture.coverage_exponent {
            m.coverage_exponent = v;
        }
        if let Some(v) = self.capture.oversize_exponent {
            m.oversize_exponent = v;
        }
        m
    }

    pub fn sim_params(&self) -> SimParams {
        SimParams {
            dt: self.simulation.dt_s,
            max_settle_s: self.simulation.max_settle_s,
            settle_threshold: self.simulation.settle_threshold_mm_s,
            max_particles: self.simulation.max_particles as usize,
            ..SimParams::default()
        }
    }

    /// Effector label for result rows: the sheet preset's short name for
    /// cones, "ladle" otherwise.
    pub fn effector_label(&self) -> String {
        match self.effector.kind {
            EffectorKind::Ladle => "ladle".to_string(),
            EffectorKind::Cone => {
                match self.effector.preset.as_deref().unwrap_or("pp_sheet") {
                    "pp_sheet" => "pp".to_string(),
                    "sus304_sheet" => "sus304".to_string(),
                    other => other.to_string(),
                }
            }
        }
    }

    /// Numeric effector size for result rows; 0 for the ladle, which has no
    /// bottom-diameter setting.
    pub fn effector_d(&self) -> f64 {
        match self.effector.kind {
            EffectorKind::Ladle => 0.0,
            EffectorKind::Cone => self
                .cone_config()
                .ok()
                .flatten()
                .map(|c| c.bottom_diameter)
                .unwrap_or(0.0),
        }
    }
}
