//! Adaptive collaborative interface.
//!
//! Per control tick the interface turns the measured interaction force and the
//! human motion into the reference pose and twist of the end effector:
//! admittance velocity, adaptive blending with the hand velocity, torso-led
//! rotation detection and planning, and integration of the result.

pub mod admittance;
pub mod reference;
pub mod rotation;
pub mod translation;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

pub use admittance::{admittance_step, Admittance, AdmittanceParams};
pub use reference::{ControllerMode, ReferenceGenerator};
pub use rotation::{
    desired_rotation_pose, CubicTrajectory, IntentionDetector, IntentionOutput, IntentionParams, YawRateFilter,
    YawSample,
};
pub use translation::{object_translation, AdaptiveIndex, AdaptiveIndexParams};

use crate::error::Result;
use crate::kinematics::{Pose, Twist};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AciParams {
    pub admittance: AdmittanceParams,
    pub index: AdaptiveIndexParams,
    pub rotation: IntentionParams,
}

impl AciParams {
    pub fn issues(&self) -> Vec<String> {
        let mut out = self.admittance.issues();
        out.extend(self.index.issues());
        out.extend(self.rotation.issues());
        out
    }
}

/// Measurements consumed by one interface tick.
#[derive(Clone, Copy, Debug)]
pub struct AciInput {
    pub t: f64,
    /// Force part of the wrench measured at the EE [N].
    pub force: Vector3<f64>,
    /// Measured hand linear velocity `v_h` [m/s].
    pub hand_velocity: Vector3<f64>,
    pub yaw: YawSample,
    pub torso: Pose,
}

#[derive(Clone, Copy, Debug)]
pub struct AciOutput {
    /// Reference pose at the start of the tick (what the WBC tracks now).
    pub x_d: Pose,
    pub xdot_d: Twist,
    pub v_adm: Vector3<f64>,
    pub v_h: Vector3<f64>,
    pub v_trans: Vector3<f64>,
    pub alpha: f64,
    pub zeta: bool,
    pub detection: Option<Pose>,
}

/// One interface instance; advance it once per control tick.
#[derive(Clone, Debug)]
pub struct Aci {
    mode: ControllerMode,
    admittance: Admittance,
    index: AdaptiveIndex,
    detector: IntentionDetector,
    reference: ReferenceGenerator,
    ee_in_torso: Pose,
    trajectory: Option<CubicTrajectory>,
    last_trajectory: Option<CubicTrajectory>,
}

impl Aci {
    /// `initial_ee` seeds the reference; together with `initial_torso` it
    /// fixes the EE-in-torso transform preserved by rotations.
    pub fn new(params: &AciParams, mode: ControllerMode, initial_ee: Pose, initial_torso: Pose) -> Self {
        Self {
            mode,
            admittance: Admittance::new(params.admittance),
            index: AdaptiveIndex::new(params.index),
            detector: IntentionDetector::new(params.rotation),
            reference: ReferenceGenerator::new(initial_ee),
            ee_in_torso: initial_torso.inverse().compose(&initial_ee),
            trajectory: None,
            last_trajectory: None,
        }
    }

    pub fn mode(&self) -> ControllerMode {
        self.mode
    }

    pub fn reference(&self) -> &ReferenceGenerator {
        &self.reference
    }

    pub fn alpha(&self) -> f64 {
        self.index.alpha()
    }

    pub fn ee_in_torso(&self) -> &Pose {
        &self.ee_in_torso
    }

    pub fn detector(&self) -> &IntentionDetector {
        &self.detector
    }

    /// Rotation trajectory in progress, if any.
    pub fn active_trajectory(&self) -> Option<&CubicTrajectory> {
        self.trajectory.as_ref()
    }

    /// Most recently planned rotation trajectory.
    pub fn last_trajectory(&self) -> Option<&CubicTrajectory> {
        self.last_trajectory.as_ref()
    }

    pub fn step(&mut self, input: &AciInput, dt: f64) -> Result<AciOutput> {
        let v_adm = self.admittance.step(&input.force, dt)?;
        let v_h = input.hand_velocity;
        let alpha = self.index.update(input.t, v_adm, v_h);
        let v_trans = match self.mode {
            ControllerMode::Aci => object_translation(&v_adm, &v_h, alpha),
            ControllerMode::AdmittanceOnly => v_adm,
            ControllerMode::Teleop => v_h,
        };

        let mut detection = None;
        let mut xdot_rot = Twist::zero();
        if self.mode == ControllerMode::Aci {
            if self.trajectory.is_some_and(|tr| tr.is_complete(input.t)) {
                self.trajectory = None;
                self.detector.finish_rotation();
            }
            let out = self.detector.step(&input.yaw, &input.torso);
            if let (Some(torso), None) = (out.detection, self.trajectory) {
                let goal = desired_rotation_pose(&torso, &self.ee_in_torso);
                let start = *self.reference.pose();
                let duration = self.detector.params().rotation_duration(&start, &goal);
                let traj = CubicTrajectory::plan(start, goal, input.t, duration);
                self.trajectory = Some(traj);
                self.last_trajectory = Some(traj);
                detection = Some(torso);
            }
            if let Some(traj) = &self.trajectory {
                xdot_rot = traj.twist(input.t);
            }
        }
        let zeta = self.trajectory.is_some();

        let x_d = *self.reference.pose();
        let (_, xdot_d) = self.reference.step(zeta, &xdot_rot, &v_trans, dt);
        Ok(AciOutput {
            x_d,
            xdot_d,
            v_adm,
            v_h,
            v_trans,
            alpha,
            zeta,
            detection,
        })
    }
}
