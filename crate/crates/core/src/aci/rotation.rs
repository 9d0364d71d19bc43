//! Object rotation unit: torso-led rotation intention detection and the
//! point-to-point cubic trajectory towards the intended pose.

use std::f64::consts::PI;

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::kinematics::{Pose, Twist};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntentionParams {
    /// Relative hand-in-torso yaw that opens a candidate rotation [rad].
    pub lower_angle_thr: f64,
    /// Relative yaw required to accept the rotation [rad].
    pub upper_angle_thr: f64,
    /// Torso yaw rate under which the turn is considered finished [rad/s].
    pub velocity_thr: f64,
    /// Hold ζ until the planned rotation completes and re-arm only after the
    /// relative yaw drops under the lower threshold.
    pub latching: bool,
    /// Shortest rotation trajectory [s].
    pub min_duration: f64,
    /// Nominal rotation rate used to stretch long rotations [rad/s].
    pub nominal_rate: f64,
}

impl Default for IntentionParams {
    fn default() -> Self {
        Self {
            lower_angle_thr: 0.2,
            upper_angle_thr: 0.4,
            velocity_thr: 0.05,
            latching: true,
            min_duration: 2.0,
            nominal_rate: 0.3,
        }
    }
}

impl IntentionParams {
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.lower_angle_thr > 0.0) || !(self.upper_angle_thr > 0.0) {
            out.push("aci.rotation: angle thresholds must be positive".into());
        }
        if !(self.lower_angle_thr < self.upper_angle_thr) {
            out.push("aci.rotation.lower_angle_thr: must be below upper_angle_thr".into());
        }
        if !(self.velocity_thr > 0.0) {
            out.push("aci.rotation.velocity_thr: must be positive".into());
        }
        if !(self.min_duration > 0.0) || !(self.nominal_rate > 0.0) {
            out.push("aci.rotation: min_duration and nominal_rate must be positive".into());
        }
        out
    }

    /// `max(min_duration, |Δangle| / nominal_rate)`.
    pub fn rotation_duration(&self, start: &Pose, goal: &Pose) -> f64 {
        let angle = start.orientation.angle_to(&goal.orientation);
        self.min_duration.max(angle / self.nominal_rate)
    }
}

/// Yaw measurements consumed by the detector. Angles must be unwrapped.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct YawSample {
    /// Hand yaw relative to the torso.
    pub hand_in_torso: f64,
    /// Hand yaw in the world frame.
    pub hand_world: f64,
    /// Torso yaw in the world frame.
    pub torso_world: f64,
    /// Filtered torso yaw rate.
    pub torso_rate: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntentionOutput {
    pub zeta: bool,
    /// Torso pose recorded on this tick, if the acceptance test fired.
    pub detection: Option<Pose>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Latch {
    Idle,
    Rotating,
    Rearming,
}

/// Streaming rotation-intention detector.
///
/// While `|θ_h^t|` stays above the lower threshold the detector tracks how far
/// the hand and the torso turned (in the world) since the threshold was
/// crossed; a rotation is accepted when the relative yaw exceeds the upper
/// threshold, the torso turned more than the hand, and the torso has stopped.
#[derive(Clone, Debug)]
pub struct IntentionDetector {
    params: IntentionParams,
    inside: bool,
    hand_lower: f64,
    hand_upper: f64,
    torso_lower: f64,
    torso_upper: f64,
    zeta: bool,
    detected_torso: Option<Pose>,
    latch: Latch,
}

impl IntentionDetector {
    pub fn new(params: IntentionParams) -> Self {
        Self {
            params,
            inside: false,
            hand_lower: 0.0,
            hand_upper: 0.0,
            torso_lower: 0.0,
            torso_upper: 0.0,
            zeta: false,
            detected_torso: None,
            latch: Latch::Idle,
        }
    }

    pub fn params(&self) -> &IntentionParams {
        &self.params
    }

    pub fn zeta(&self) -> bool {
        self.zeta
    }

    pub fn detected_torso(&self) -> Option<Pose> {
        self.detected_torso
    }

    /// `(Δθ_h, Δθ_t)` of the current above-threshold episode.
    pub fn excursions(&self) -> (f64, f64) {
        (
            (self.hand_upper - self.hand_lower).abs(),
            (self.torso_upper - self.torso_lower).abs(),
        )
    }

    /// Marks the planned rotation as finished; the detector re-arms once the
    /// relative yaw is back under the lower threshold.
    pub fn finish_rotation(&mut self) {
        if self.latch == Latch::Rotating {
            self.latch = Latch::Rearming;
            self.zeta = false;
        }
    }

    pub fn is_rotating(&self) -> bool {
        self.latch == Latch::Rotating
    }

    pub fn step(&mut self, yaw: &YawSample, torso: &Pose) -> IntentionOutput {
        let relative = yaw.hand_in_torso.abs();
        match self.latch {
            Latch::Rotating => {
                return IntentionOutput {
                    zeta: true,
                    detection: None,
                }
            }
            Latch::Rearming => {
                if relative < self.params.lower_angle_thr {
                    self.latch = Latch::Idle;
                    self.inside = false;
                } else {
                    self.zeta = false;
                    return IntentionOutput {
                        zeta: false,
                        detection: None,
                    };
                }
            }
            Latch::Idle => {}
        }

        let mut detection = None;
        if relative > self.params.lower_angle_thr {
            if !self.inside {
                self.inside = true;
                self.hand_lower = yaw.hand_world;
                self.torso_lower = yaw.torso_world;
            }
            self.hand_upper = yaw.hand_world;
            self.torso_upper = yaw.torso_world;
            let (d_hand, d_torso) = self.excursions();
            if relative > self.params.upper_angle_thr
                && d_torso > d_hand
                && yaw.torso_rate.abs() < self.params.velocity_thr
            {
                self.zeta = true;
                self.detected_torso = Some(*torso);
                detection = Some(*torso);
                if self.params.latching {
                    self.latch = Latch::Rotating;
                }
            } else {
                self.zeta = false;
            }
        } else {
            self.inside = false;
            self.zeta = false;
        }
        IntentionOutput {
            zeta: self.zeta,
            detection,
        }
    }
}

/// Goal EE pose: the EE pose held in the torso frame at the start of the
/// turn, re-expressed in the torso frame at detection.
pub fn desired_rotation_pose(torso_detected: &Pose, ee_in_torso: &Pose) -> Pose {
    torso_detected.compose(ee_in_torso)
}

/// Finite-differenced yaw rate through a first-order low-pass filter.
#[derive(Clone, Debug)]
pub struct YawRateFilter {
    cutoff_hz: f64,
    previous: Option<f64>,
    rate: f64,
}

impl YawRateFilter {
    pub fn new(cutoff_hz: f64) -> Self {
        Self {
            cutoff_hz,
            previous: None,
            rate: 0.0,
        }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn update(&mut self, yaw: f64, dt: f64) -> f64 {
        if let Some(prev) = self.previous {
            let raw = (yaw - prev) / dt;
            let tau = 1.0 / (2.0 * PI * self.cutoff_hz);
            let gain = dt / (dt + tau);
            self.rate += gain * (raw - self.rate);
        }
        self.previous = Some(yaw);
        self.rate
    }
}

/// Point-to-point trajectory timed by `s(τ) = 3τ² - 2τ³`: straight line in
/// position, shortest arc in orientation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubicTrajectory {
    start: Pose,
    goal: Pose,
    t0: f64,
    duration: f64,
    displacement: Vector3<f64>,
    rotation: Vector3<f64>,
}

impl CubicTrajectory {
    /// Panics if `duration` is not positive.
    pub fn plan(start: Pose, goal: Pose, t0: f64, duration: f64) -> Self {
        assert!(duration > 0.0, "trajectory duration must be positive");
        let mut delta = goal.orientation * start.orientation.inverse();
        if delta.w < 0.0 {
            delta = UnitQuaternion::new_unchecked(-delta.into_inner());
        }
        Self {
            start,
            goal,
            t0,
            duration,
            displacement: goal.position - start.position,
            rotation: delta.scaled_axis(),
        }
    }

    pub fn start(&self) -> &Pose {
        &self.start
    }

    pub fn goal(&self) -> &Pose {
        &self.goal
    }

    pub fn start_time(&self) -> f64 {
        self.t0
    }

    pub fn end_time(&self) -> f64 {
        self.t0 + self.duration
    }

    pub fn is_complete(&self, t: f64) -> bool {
        t >= self.end_time()
    }

    /// `(s, ṡ)` at absolute time `t`.
    pub fn scaling(&self, t: f64) -> (f64, f64) {
        if t >= self.end_time() {
            return (1.0, 0.0);
        }
        let tau = ((t - self.t0) / self.duration).clamp(0.0, 1.0);
        let s = tau * tau * (3.0 - 2.0 * tau);
        let sdot = 6.0 * tau * (1.0 - tau) / self.duration;
        (s, sdot)
    }

    pub fn sample(&self, t: f64) -> (Pose, Twist) {
        if t <= self.t0 {
            return (self.start, Twist::zero());
        }
        if t >= self.end_time() {
            return (self.goal, Twist::zero());
        }
        let (s, sdot) = self.scaling(t);
        let orientation = UnitQuaternion::from_scaled_axis(self.rotation * s) * self.start.orientation;
        let pose = Pose::new(self.start.position + self.displacement * s, orientation);
        (pose, Twist::new(self.displacement * sdot, self.rotation * sdot))
    }

    pub fn twist(&self, t: f64) -> Twist {
        self.sample(t).1
    }
}
