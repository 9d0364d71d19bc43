//! Simulated human partner standing in for the motion-capture stream.
//!
//! The hand is an impedance (mass-spring-damper) tracking a scripted desired
//! position while the carried object pushes on it; the torso follows its
//! scripted yaw kinematically. Emitted angles and the hand velocity pass
//! through the same measurement path the controller would see: optional
//! Gaussian noise, a velocity noise floor, and a filtered torso yaw rate.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::aci::{YawRateFilter, YawSample};
use crate::error::{Error, Result};
use crate::kinematics::{Pose, Twist};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HumanParams {
    pub hand_mass: f64,
    pub hand_stiffness: f64,
    pub hand_damping: f64,
    /// Std-dev of the noise added to each emitted yaw angle [rad].
    pub angle_noise_std: f64,
    /// Std-dev of the noise added to each emitted hand velocity component [m/s].
    pub velocity_noise_std: f64,
    /// Emitted hand velocities with a smaller norm read as zero [m/s].
    pub velocity_floor: f64,
    /// Cut-off of the torso yaw-rate low-pass filter [Hz].
    pub yaw_rate_cutoff_hz: f64,
    /// Torso position relative to the hand at the start [m].
    pub torso_offset: [f64; 3],
    /// Initial torso and hand heading [rad]; the human faces the robot.
    pub initial_yaw: f64,
}

impl Default for HumanParams {
    fn default() -> Self {
        Self {
            hand_mass: 2.0,
            hand_stiffness: 600.0,
            hand_damping: 40.0,
            angle_noise_std: 0.0,
            velocity_noise_std: 0.0,
            velocity_floor: 0.02,
            yaw_rate_cutoff_hz: 5.0,
            torso_offset: [0.4, 0.0, 0.3],
            initial_yaw: PI,
        }
    }
}

impl HumanParams {
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.hand_mass > 0.0) {
            out.push("human.hand_mass: must be positive".into());
        }
        for (name, v) in [
            ("hand_stiffness", self.hand_stiffness),
            ("hand_damping", self.hand_damping),
            ("angle_noise_std", self.angle_noise_std),
            ("velocity_noise_std", self.velocity_noise_std),
            ("velocity_floor", self.velocity_floor),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                out.push(format!("human.{name}: must be non-negative and finite"));
            }
        }
        if !(self.yaw_rate_cutoff_hz > 0.0) {
            out.push("human.yaw_rate_cutoff_hz: must be positive".into());
        }
        out
    }
}

/// One scripted motion segment; every segment is timed by a cubic blend.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Move the hand (and the torso, horizontally) by `offset`.
    Translate { offset: [f64; 3], duration: f64 },
    Hold { duration: f64 },
    /// Turn the torso by `angle`; the hand position swings with it.
    TorsoYaw { angle: f64, duration: f64 },
    /// Turn only the hand by `angle`.
    HandYaw { angle: f64, duration: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Translate { duration, .. }
            | Segment::Hold { duration }
            | Segment::TorsoYaw { duration, .. }
            | Segment::HandYaw { duration, .. } => duration,
        }
    }
}

/// Script state at one instant, relative to the start of the script.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScriptSample {
    pub offset: Vector3<f64>,
    pub offset_rate: Vector3<f64>,
    pub torso_yaw: f64,
    pub torso_rate: f64,
    pub hand_yaw: f64,
    pub hand_rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MotionScript {
    pub segments: Vec<Segment>,
}

fn cubic(tau: f64) -> (f64, f64) {
    let tau = tau.clamp(0.0, 1.0);
    (tau * tau * (3.0 - 2.0 * tau), 6.0 * tau * (1.0 - tau))
}

impl MotionScript {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.duration() > 0.0) || !seg.duration().is_finite() {
                out.push(format!("script[{i}].duration: must be positive"));
            }
            let finite = match seg {
                Segment::Translate { offset, .. } => offset.iter().all(|v| v.is_finite()),
                Segment::TorsoYaw { angle, .. } | Segment::HandYaw { angle, .. } => angle.is_finite(),
                Segment::Hold { .. } => true,
            };
            if !finite {
                out.push(format!("script[{i}]: values must be finite"));
            }
        }
        out
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    /// Start time of the first segment that moves anything.
    pub fn first_motion_time(&self) -> Option<f64> {
        let mut t = 0.0;
        for seg in &self.segments {
            if !matches!(seg, Segment::Hold { .. }) {
                return Some(t);
            }
            t += seg.duration();
        }
        None
    }

    /// Cumulative hand offsets at the end of each translate segment.
    pub fn translation_endpoints(&self) -> Vec<Vector3<f64>> {
        let mut acc = Vector3::zeros();
        let mut out = Vec::new();
        for seg in &self.segments {
            if let Segment::Translate { offset, .. } = seg {
                acc += Vector3::from(*offset);
                out.push(acc);
            }
        }
        out
    }

    /// Start time of each translate segment.
    pub fn translation_start_times(&self) -> Vec<f64> {
        let mut t = 0.0;
        let mut out = Vec::new();
        for seg in &self.segments {
            if matches!(seg, Segment::Translate { .. }) {
                out.push(t);
            }
            t += seg.duration();
        }
        out
    }

    /// Largest commanded excursion from the start position.
    pub fn max_excursion(&self) -> f64 {
        self.translation_endpoints()
            .iter()
            .map(|p| p.norm())
            .fold(0.0, f64::max)
    }

    pub fn sample(&self, t: f64) -> ScriptSample {
        let mut out = ScriptSample::default();
        let mut start = 0.0;
        for seg in &self.segments {
            let duration = seg.duration();
            let (s, sdot) = cubic((t - start) / duration);
            let sdot = if t >= start && t < start + duration {
                sdot / duration
            } else {
                0.0
            };
            match seg {
                Segment::Translate { offset, .. } => {
                    let offset = Vector3::from(*offset);
                    out.offset += offset * s;
                    out.offset_rate += offset * sdot;
                }
                Segment::TorsoYaw { angle, .. } => {
                    out.torso_yaw += angle * s;
                    out.torso_rate += angle * sdot;
                }
                Segment::HandYaw { angle, .. } => {
                    out.hand_yaw += angle * s;
                    out.hand_rate += angle * sdot;
                }
                Segment::Hold { .. } => {}
            }
            start += duration;
            if start > t {
                break;
            }
        }
        out
    }
}

/// Human state as seen by the controller, plus the true hand kinematics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HumanState {
    pub t: f64,
    pub hand_pose: Pose,
    /// True hand twist (drives the object dynamics).
    pub hand_twist: Twist,
    pub torso_pose: Pose,
    /// Measured hand velocity `v_h`.
    pub hand_velocity: Vector3<f64>,
    pub theta_h_w: f64,
    pub theta_t_w: f64,
    pub theta_h_t: f64,
    pub thetadot_t_w: f64,
}

impl HumanState {
    pub fn yaw_sample(&self) -> YawSample {
        YawSample {
            hand_in_torso: self.theta_h_t,
            hand_world: self.theta_h_w,
            torso_world: self.theta_t_w,
            torso_rate: self.thetadot_t_w,
        }
    }
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

/// Scripted human partner.
#[derive(Clone, Debug)]
pub struct Human {
    params: HumanParams,
    script: MotionScript,
    torso_start: Vector3<f64>,
    hand_start: Vector3<f64>,
    hand_in_torso_start: Vector3<f64>,
    state: HumanState,
    script_time: f64,
    filter: YawRateFilter,
    rng: ChaCha8Rng,
}

impl Human {
    pub fn new(params: HumanParams, script: MotionScript, hand_start: Vector3<f64>, seed: u64) -> Self {
        let torso_start = hand_start + Vector3::from(params.torso_offset);
        let yaw = params.initial_yaw;
        let state = HumanState {
            t: 0.0,
            hand_pose: Pose::from_position_yaw(hand_start, yaw),
            hand_twist: Twist::zero(),
            torso_pose: Pose::from_position_yaw(torso_start, yaw),
            hand_velocity: Vector3::zeros(),
            theta_h_w: yaw,
            theta_t_w: yaw,
            theta_h_t: 0.0,
            thetadot_t_w: 0.0,
        };
        let mut filter = YawRateFilter::new(params.yaw_rate_cutoff_hz);
        filter.update(yaw, 1.0);
        Self {
            params,
            script,
            torso_start,
            hand_start,
            hand_in_torso_start: hand_start - torso_start,
            state,
            script_time: 0.0,
            filter,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn state(&self) -> &HumanState {
        &self.state
    }

    pub fn params(&self) -> &HumanParams {
        &self.params
    }

    pub fn script(&self) -> &MotionScript {
        &self.script
    }

    /// Position on the script clock, which lags the wall clock by every
    /// pause taken.
    pub fn script_time(&self) -> f64 {
        self.script_time
    }

    /// Desired hand position and velocity at time `t`.
    pub fn desired_hand(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        let s = self.script.sample(t);
        let turn = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), s.torso_yaw);
        let arm = turn * self.hand_in_torso_start;
        let position = self.hand_start + s.offset + (arm - self.hand_in_torso_start);
        let velocity = s.offset_rate + Vector3::z().cross(&arm) * s.torso_rate;
        (position, velocity)
    }

    fn noise(&mut self, std: f64) -> f64 {
        if std > 0.0 {
            Normal::new(0.0, std).expect("valid std").sample(&mut self.rng)
        } else {
            0.0
        }
    }

    /// Advances the human by `dt` under the force the object applies to the
    /// hand. `object_yaw` is how far the carried object has turned since the
    /// start; the gripping hand turns with it.
    pub fn step(&mut self, force_on_hand: &Vector3<f64>, object_yaw: f64, dt: f64) -> Result<&HumanState> {
        self.step_paced(force_on_hand, object_yaw, dt, true)
    }

    /// As [`Human::step`]; with `advance` false the script clock stands
    /// still and the hand holds its scripted target.
    pub fn step_paced(
        &mut self,
        force_on_hand: &Vector3<f64>,
        object_yaw: f64,
        dt: f64,
        advance: bool,
    ) -> Result<&HumanState> {
        if !force_on_hand.iter().all(|f| f.is_finite()) {
            return Err(Error::NonFiniteForce([force_on_hand.x, force_on_hand.y, force_on_hand.z]));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", "must be positive"));
        }
        let t = self.state.t + dt;
        if advance {
            self.script_time += dt;
        }
        let st = self.script_time;
        let (x_des, v_des) = self.desired_hand(st);
        let p = &self.params;
        let x = self.state.hand_pose.position;
        let v = self.state.hand_twist.linear;
        let accel = (p.hand_stiffness * (x_des - x) + p.hand_damping * (v_des - v) + force_on_hand) / p.hand_mass;
        let v = v + accel * dt;
        let x = x + v * dt;

        let script = self.script.sample(st);
        let torso_yaw = p.initial_yaw + script.torso_yaw;
        let hand_yaw = p.initial_yaw + script.hand_yaw + object_yaw;
        let torso_position = self.torso_start + Vector3::new(script.offset.x, script.offset.y, 0.0);

        let (angle_std, vel_std, floor) = (p.angle_noise_std, p.velocity_noise_std, p.velocity_floor);
        let measured_torso = torso_yaw + self.noise(angle_std);
        let measured_hand = hand_yaw + self.noise(angle_std);
        let mut measured_velocity = v + Vector3::new(self.noise(vel_std), self.noise(vel_std), self.noise(vel_std));
        if measured_velocity.norm() < floor {
            measured_velocity = Vector3::zeros();
        }
        let rate = self.filter.update(measured_torso, dt);

        self.state = HumanState {
            t,
            hand_pose: Pose::from_position_yaw(x, hand_yaw),
            hand_twist: Twist::new(v, Vector3::new(0.0, 0.0, script.hand_rate)),
            torso_pose: Pose::from_position_yaw(torso_position, torso_yaw),
            hand_velocity: measured_velocity,
            theta_h_w: measured_hand,
            theta_t_w: measured_torso,
            theta_h_t: wrap_angle(measured_hand - measured_torso),
            thetadot_t_w: rate,
        };
        Ok(&self.state)
    }
}

const TRACE_COLUMNS: [&str; 14] = [
    "t",
    "hand_x",
    "hand_y",
    "hand_z",
    "hand_qw",
    "hand_qx",
    "hand_qy",
    "hand_qz",
    "hand_vx",
    "hand_vy",
    "hand_vz",
    "torso_yaw",
    "torso_yaw_rate",
    "hand_yaw",
];

/// Writes human states as a recorded motion-capture trace.
pub fn write_trace(path: &Path, states: &[HumanState]) -> Result<()> {
    let io = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(TRACE_COLUMNS).map_err(io)?;
    for s in states {
        let p = s.hand_pose.to_array();
        let v = s.hand_velocity;
        let row = [
            s.t, p[0], p[1], p[2], p[3], p[4], p[5], p[6], v.x, v.y, v.z, s.theta_t_w, s.thetadot_t_w, s.theta_h_w,
        ];
        w.write_record(row.iter().map(|x| x.to_string())).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a recorded trace. A header row is optional; timestamps must
/// strictly increase. Torso positions are not recorded and are set to the
/// hand position.
pub fn load_trace(path: &Path) -> Result<Vec<HumanState>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut out: Vec<HumanState> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 1;
        let record = record.map_err(|e| Error::TraceFormat {
            line,
            reason: e.to_string(),
        })?;
        if line == 1 && record.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if record.len() != TRACE_COLUMNS.len() {
            return Err(Error::TraceFormat {
                line,
                reason: format!("expected {} fields, found {}", TRACE_COLUMNS.len(), record.len()),
            });
        }
        let mut vals = [0.0; 14];
        for (slot, field) in vals.iter_mut().zip(record.iter()) {
            *slot = field.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::TraceFormat {
                line,
                reason: format!("`{field}` is not a finite number"),
            })?;
        }
        if let Some(prev) = out.last() {
            if !(vals[0] > prev.t) {
                return Err(Error::TraceFormat {
                    line,
                    reason: format!("timestamp {} does not increase (previous {})", vals[0], prev.t),
                });
            }
        }
        let position = Vector3::new(vals[1], vals[2], vals[3]);
        let orientation = UnitQuaternion::new_normalize(Quaternion::new(vals[4], vals[5], vals[6], vals[7]));
        let velocity = Vector3::new(vals[8], vals[9], vals[10]);
        let (torso_yaw, torso_rate, hand_yaw) = (vals[11], vals[12], vals[13]);
        out.push(HumanState {
            t: vals[0],
            hand_pose: Pose::new(position, orientation),
            hand_twist: Twist::linear(velocity),
            torso_pose: Pose::from_position_yaw(position, torso_yaw),
            hand_velocity: velocity,
            theta_h_w: hand_yaw,
            theta_t_w: torso_yaw,
            theta_h_t: wrap_angle(hand_yaw - torso_yaw),
            thetadot_t_w: torso_rate,
        });
    }
    Ok(out)
}
