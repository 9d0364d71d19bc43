//! Scenario configuration (TOML) and its resolution into typed parameters.

use std::path::{Path, PathBuf};

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::aci::{AciParams, ControllerMode};
use crate::error::{Error, Result};
use crate::human::{HumanParams, MotionScript, Segment};
use crate::kinematics::{ChainDescription, KinematicModel};
use crate::objects::{ObjectModel, PRESET_NAMES};
use crate::wbc::WbcParams;

/// Partial WBC block; missing entries take the defaults for the robot.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WbcConfig {
    pub gain: Option<[f64; 6]>,
    pub task_weight: Option<[f64; 6]>,
    pub damping_weight: Option<Vec<f64>>,
    pub posture_weight: Option<Vec<f64>>,
    pub q_def: Option<Vec<f64>>,
    pub posture_gain: Option<f64>,
    pub velocity_limits: Option<Vec<f64>>,
}

/// Object preset plus optional per-field overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectConfig {
    pub preset: String,
    pub rest_vector: Option<[f64; 3]>,
    pub axial_stiffness_tension: Option<f64>,
    pub axial_stiffness_compression: Option<f64>,
    pub lateral_stiffness: Option<f64>,
    pub vertical_stiffness: Option<f64>,
    pub damping: Option<f64>,
    pub slack_length: Option<f64>,
}

impl Default for ObjectConfig {
    fn default() -> Self {
        Self {
            preset: "rigid_rod".into(),
            rest_vector: None,
            axial_stiffness_tension: None,
            axial_stiffness_compression: None,
            lateral_stiffness: None,
            vertical_stiffness: None,
            damping: None,
            slack_length: None,
        }
    }
}

impl ObjectConfig {
    pub fn resolve(&self) -> Option<ObjectModel> {
        let mut m = ObjectModel::preset(&self.preset)?;
        if let Some(v) = self.rest_vector {
            m.rest_vector = v;
        }
        if let Some(v) = self.axial_stiffness_tension {
            m.axial_stiffness_tension = v;
        }
        if let Some(v) = self.axial_stiffness_compression {
            m.axial_stiffness_compression = v;
        }
        if let Some(v) = self.lateral_stiffness {
            m.lateral_stiffness = v;
        }
        if let Some(v) = self.vertical_stiffness {
            m.vertical_stiffness = Some(v);
        }
        if let Some(v) = self.damping {
            m.damping = v;
        }
        if let Some(v) = self.slack_length {
            m.slack_length = v;
        }
        Some(m)
    }
}

/// Target for the EE, relative to its initial position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointConfig {
    pub offset: [f64; 3],
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalConfig {
    pub name: String,
    pub start: f64,
    pub end: f64,
}

/// Marker positions in the EE and hand frames used by the alignment metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttachmentOffsets {
    pub robot: [f64; 3],
    pub human: [f64; 3],
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub trace: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
}

fn default_dt() -> f64 {
    0.001
}
fn default_tolerance() -> f64 {
    0.02
}
fn default_settle_speed() -> f64 {
    0.05
}
fn default_motion_speed() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}
fn default_name() -> String {
    "scenario".into()
}

/// Whole scenario as written in the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub controller: ControllerMode,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub duration: f64,
    #[serde(default)]
    pub seed: u64,
    /// Arm description; the UR16e-like default when absent.
    pub robot: Option<ChainDescription>,
    /// Initial whole-body configuration; defaults to the built-in posture.
    pub initial_q: Option<Vec<f64>>,
    #[serde(default)]
    pub wbc: WbcConfig,
    #[serde(default)]
    pub aci: AciParams,
    #[serde(default)]
    pub human: HumanParams,
    /// Recorded human trace replayed instead of the scripted human.
    pub human_trace: Option<PathBuf>,
    #[serde(default)]
    pub object: ObjectConfig,
    #[serde(default)]
    pub script: Vec<Segment>,
    /// Explicit waypoints; derived from the translate segments when absent.
    pub waypoints: Option<Vec<WaypointConfig>>,
    #[serde(default = "default_tolerance")]
    pub waypoint_tolerance: f64,
    /// EE speed under which a waypoint counts as reached [m/s].
    #[serde(default = "default_settle_speed")]
    pub waypoint_speed: f64,
    /// Hand speed above which a sample counts as steady motion [m/s].
    #[serde(default = "default_motion_speed")]
    pub motion_speed: f64,
    #[serde(default)]
    pub intervals: Vec<IntervalConfig>,
    #[serde(default = "default_true")]
    pub stop_on_completion: bool,
    /// The scripted human waits before each move until the robot has
    /// reached the previous waypoint.
    #[serde(default)]
    pub wait_for_robot: bool,
    #[serde(default)]
    pub attachments: AttachmentOffsets,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Waypoint {
    pub offset: Vector3<f64>,
    pub tolerance: f64,
}

/// Scenario with every default applied and every invariant checked.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: KinematicModel,
    pub initial_q: DVector<f64>,
    pub wbc: WbcParams,
    pub object: ObjectModel,
    pub script: MotionScript,
    pub waypoints: Vec<Waypoint>,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.message().to_string()]))
    }

    /// Reads and parses a scenario file; relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msgs) => Error::Config(msgs.into_iter().map(|m| format!("{}: {m}", path.display())).collect()),
            other => other,
        })?;
        if let (Some(trace), Some(dir)) = (&cfg.human_trace, path.parent()) {
            if trace.is_relative() {
                cfg.human_trace = Some(dir.join(trace));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    fn model(&self) -> Result<KinematicModel> {
        match &self.robot {
            Some(desc) => KinematicModel::new(desc.clone()),
            None => Ok(KinematicModel::ur16e_on_omni_base()),
        }
    }

    fn initial_configuration(&self, model: &KinematicModel) -> DVector<f64> {
        match &self.initial_q {
            Some(q) => DVector::from_column_slice(q),
            None if self.robot.is_none() => KinematicModel::ur16e_default_configuration(),
            None => DVector::zeros(model.dofs()),
        }
    }

    fn wbc_params(&self, q_def: &DVector<f64>) -> WbcParams {
        let mut p = WbcParams::defaults(q_def.len(), q_def.iter().copied().collect());
        let c = &self.wbc;
        if let Some(v) = c.gain {
            p.gain = v;
        }
        if let Some(v) = c.task_weight {
            p.task_weight = v;
        }
        if let Some(v) = &c.damping_weight {
            p.damping_weight = v.clone();
        }
        if let Some(v) = &c.posture_weight {
            p.posture_weight = v.clone();
        }
        if let Some(v) = &c.q_def {
            p.q_def = v.clone();
        }
        if let Some(v) = c.posture_gain {
            p.posture_gain = v;
        }
        if let Some(v) = &c.velocity_limits {
            p.velocity_limits = v.clone();
        }
        p
    }

    /// Every violated invariant, as `field: reason` lines.
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            out.push("dt: must be positive".into());
        }
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            out.push("duration: must be positive".into());
        }
        if !(self.waypoint_tolerance > 0.0) {
            out.push("waypoint_tolerance: must be positive".into());
        }
        if !(self.waypoint_speed > 0.0) {
            out.push("waypoint_speed: must be positive".into());
        }
        if !(self.motion_speed >= 0.0) {
            out.push("motion_speed: must be non-negative".into());
        }
        match self.model() {
            Ok(model) => {
                let q = self.initial_configuration(&model);
                if q.len() != model.dofs() {
                    out.push(format!("initial_q: expected {} entries, got {}", model.dofs(), q.len()));
                } else {
                    out.extend(self.wbc_params(&q).issues(model.dofs()));
                }
            }
            Err(e) => out.push(e.to_string()),
        }
        out.extend(self.aci.issues());
        out.extend(self.human.issues());
        match self.object.resolve() {
            Some(obj) => out.extend(obj.issues()),
            None => out.push(format!(
                "object.preset: unknown preset `{}` (expected one of {})",
                self.object.preset,
                PRESET_NAMES.join(", ")
            )),
        }
        out.extend(MotionScript::new(self.script.clone()).issues());
        if let Some(wps) = &self.waypoints {
            for (i, w) in wps.iter().enumerate() {
                if w.tolerance.is_some_and(|t| !(t > 0.0)) {
                    out.push(format!("waypoints[{i}].tolerance: must be positive"));
                }
            }
        }
        for (i, iv) in self.intervals.iter().enumerate() {
            if !(iv.end > iv.start) {
                out.push(format!("intervals[{i}]: end must be after start"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let issues = self.issues();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }

    pub fn resolve(&self) -> Result<Scenario> {
        self.validate()?;
        let model = self.model()?;
        let initial_q = self.initial_configuration(&model);
        let wbc = self.wbc_params(&initial_q);
        let object = self.object.resolve().expect("validated preset");
        let script = MotionScript::new(self.script.clone());
        let waypoints = match &self.waypoints {
            Some(wps) => wps
                .iter()
                .map(|w| Waypoint {
                    offset: Vector3::from(w.offset),
                    tolerance: w.tolerance.unwrap_or(self.waypoint_tolerance),
                })
                .collect(),
            None => script
                .translation_endpoints()
                .into_iter()
                .map(|offset| Waypoint {
                    offset,
                    tolerance: self.waypoint_tolerance,
                })
                .collect(),
        };
        Ok(Scenario {
            config: self.clone(),
            model,
            initial_q,
            wbc,
            object,
            script,
            waypoints,
        })
    }
}
