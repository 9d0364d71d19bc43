//! Closed-loop co-transportation simulation.
//!
//! Each tick runs, in order: human, object, interface, whole-body controller,
//! joint integration, record.

pub mod config;
pub mod metrics;
pub mod trace;

use nalgebra::{DVector, Vector3};

pub use config::{
    AttachmentOffsets, IntervalConfig, ObjectConfig, OutputConfig, Scenario, ScenarioConfig, WaypointConfig,
    Waypoint, WbcConfig,
};
pub use metrics::{
    alignment_metric, alignment_metric_with_reference, interval_stats, max_ee_displacement, moving_mean_alpha,
    IntervalStats, Metrics,
};
pub use trace::{Trace, TraceRecord};

use crate::aci::{Aci, AciInput};
use crate::error::{Error, Result};
use crate::human::{load_trace, Human, HumanState};
use crate::kinematics::{Pose, Twist};
use crate::objects::{ObjectModel, ObjectWrench};
use crate::wbc;

/// Step index consumed by each stage during the last tick.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepStamps {
    pub human: u64,
    pub object: u64,
    pub aci: u64,
    pub wbc: u64,
    pub integrate: u64,
}

impl StepStamps {
    pub fn consistent(&self) -> bool {
        let s = self.human;
        self.object == s && self.aci == s && self.wbc == s && self.integrate == s
    }
}

#[derive(Clone, Debug)]
enum HumanSource {
    Scripted(Box<Human>),
    Replay { states: Vec<HumanState>, cursor: usize },
}

impl HumanSource {
    fn initial(&self) -> HumanState {
        match self {
            HumanSource::Scripted(h) => *h.state(),
            HumanSource::Replay { states, .. } => states[0],
        }
    }

    fn script_time(&self, t: f64) -> f64 {
        match self {
            HumanSource::Scripted(h) => h.script_time(),
            HumanSource::Replay { .. } => t,
        }
    }

    fn step(&mut self, force: &Vector3<f64>, object_yaw: f64, t: f64, dt: f64, advance: bool) -> Result<HumanState> {
        match self {
            HumanSource::Scripted(h) => h.step_paced(force, object_yaw, dt, advance).copied(),
            HumanSource::Replay { states, cursor } => {
                while *cursor + 1 < states.len() && states[*cursor + 1].t <= t + 1e-12 {
                    *cursor += 1;
                }
                let mut s = states[*cursor];
                s.t = t;
                Ok(s)
            }
        }
    }
}

/// Simulation state for one scenario run.
#[derive(Clone, Debug)]
pub struct Simulation {
    scenario: Scenario,
    object: ObjectModel,
    human: HumanSource,
    aci: Aci,
    q: DVector<f64>,
    qdot: DVector<f64>,
    ee_pose: Pose,
    ee_twist: Twist,
    ee_start: Pose,
    wrench: ObjectWrench,
    step_index: u64,
    stamps: StepStamps,
    next_waypoint: usize,
    waypoint_times: Vec<f64>,
    rotations: usize,
    translation_starts: Vec<f64>,
    trace: Trace,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        let cfg = &scenario.config;
        let model = &scenario.model;
        let q = scenario.initial_q.clone();
        let ee_start = model.forward_kinematics(&q)?;
        let object = scenario.object.clone().anchored(ee_start.orientation);
        let human = match &cfg.human_trace {
            Some(path) => {
                let states = load_trace(path)?;
                if states.is_empty() {
                    return Err(Error::TraceFormat {
                        line: 0,
                        reason: "trace has no samples".into(),
                    });
                }
                HumanSource::Replay { states, cursor: 0 }
            }
            None => {
                let hand_start = ee_start.position + object.rest_in_world(&ee_start.orientation);
                HumanSource::Scripted(Box::new(Human::new(cfg.human.clone(), scenario.script.clone(), hand_start, cfg.seed)))
            }
        };
        let h0 = human.initial();
        let aci = Aci::new(&cfg.aci, cfg.controller, ee_start, h0.torso_pose);
        let m = model.dofs();
        let mut sim = Self {
            object,
            human,
            aci,
            qdot: DVector::zeros(m),
            q,
            ee_pose: ee_start,
            ee_twist: Twist::zero(),
            ee_start,
            wrench: ObjectWrench::default(),
            step_index: 0,
            stamps: StepStamps::default(),
            next_waypoint: 0,
            waypoint_times: Vec::new(),
            rotations: 0,
            translation_starts: scenario.script.translation_start_times(),
            trace: Trace::default(),
            scenario,
        };
        let k = sim.scenario.model.damping_factor(sim.scenario.model.manipulability(&sim.q)?);
        sim.trace.records.push(TraceRecord {
            t: 0.0,
            script_t: 0.0,
            q: sim.q.clone(),
            qdot: sim.qdot.clone(),
            ee_pose: ee_start,
            ee_twist: Twist::zero(),
            x_d: ee_start,
            xdot_d: Twist::zero(),
            force: Vector3::zeros(),
            hand_pose: h0.hand_pose,
            hand_velocity: h0.hand_velocity,
            v_adm: Vector3::zeros(),
            v_trans: Vector3::zeros(),
            alpha: sim.aci.alpha(),
            zeta: false,
            torso_yaw: h0.theta_t_w,
            torso_rate: h0.thetadot_t_w,
            manipulability: sim.scenario.model.manipulability(&sim.q)?,
            damping: k,
        });
        Ok(sim)
    }

    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        Self::new(config.resolve()?)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn time(&self) -> f64 {
        self.step_index as f64 * self.scenario.config.dt
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn ee_pose(&self) -> &Pose {
        &self.ee_pose
    }

    pub fn aci(&self) -> &Aci {
        &self.aci
    }

    pub fn stamps(&self) -> StepStamps {
        self.stamps
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn into_trace(self) -> Trace {
        self.trace
    }

    pub fn completed(&self) -> bool {
        self.next_waypoint >= self.scenario.waypoints.len() && !self.scenario.waypoints.is_empty()
    }

    /// Rotation of the EE about the vertical since the start.
    fn object_yaw(&self) -> f64 {
        (self.ee_pose.orientation * self.ee_start.orientation.inverse()).euler_angles().2
    }

    /// True when the next translate segment is due but the robot has not
    /// yet reached every earlier waypoint.
    fn waiting_for_robot(&self, dt: f64) -> bool {
        if !self.scenario.config.wait_for_robot {
            return false;
        }
        let st = self.human.script_time(self.time());
        let starts = &self.translation_starts;
        let next = starts.partition_point(|s| *s < st - 1e-9);
        next < starts.len() && st + dt > starts[next] + 1e-9 && self.next_waypoint < next
    }

    /// Advances one control tick.
    pub fn step(&mut self) -> Result<&TraceRecord> {
        let k = self.step_index;
        self.tick().map_err(|e| Error::Step {
            step: k as usize,
            source: Box::new(e),
        })?;
        Ok(self.trace.last().expect("record pushed"))
    }

    fn tick(&mut self) -> Result<()> {
        let dt = self.scenario.config.dt;
        let k = self.step_index;
        let t = (k + 1) as f64 * dt;

        let advance = !self.waiting_for_robot(dt);
        let hs = self.human.step(&self.wrench.on_hand, self.object_yaw(), t, dt, advance)?;
        self.stamps.human = k;

        self.wrench = self.object.wrench(&hs.hand_pose, &hs.hand_twist, &self.ee_pose, &self.ee_twist);
        if !self.wrench.on_ee.iter().all(|v| v.is_finite()) {
            let f = self.wrench.on_ee;
            return Err(Error::NonFiniteForce([f.x, f.y, f.z]));
        }
        self.stamps.object = k;

        let input = AciInput {
            t,
            force: self.wrench.on_ee,
            hand_velocity: hs.hand_velocity,
            yaw: hs.yaw_sample(),
            torso: hs.torso_pose,
        };
        let out = self.aci.step(&input, dt)?;
        if out.detection.is_some() {
            self.rotations += 1;
        }
        self.stamps.aci = k;

        let model = &self.scenario.model;
        let w = wbc::compute(model, &self.q, &out.x_d, &out.xdot_d, &self.scenario.wbc)?;
        self.stamps.wbc = k;

        self.qdot = w.qdot.clone();
        self.ee_twist = Twist::from_vector(&(&w.jacobian * &self.qdot).fixed_rows::<6>(0).into_owned());
        self.q += &self.qdot * dt;
        self.ee_pose = model.forward_kinematics(&self.q)?;
        self.step_index += 1;
        self.stamps.integrate = k;

        if let Some(wp) = self.scenario.waypoints.get(self.next_waypoint) {
            let target = self.ee_start.position + wp.offset;
            if (self.ee_pose.position - target).norm() < wp.tolerance
                && self.ee_twist.linear.norm() < self.scenario.config.waypoint_speed
            {
                self.waypoint_times.push(t);
                self.next_waypoint += 1;
            }
        }

        let script_t = self.human.script_time(t);
        self.trace.records.push(TraceRecord {
            t,
            script_t,
            q: self.q.clone(),
            qdot: self.qdot.clone(),
            ee_pose: self.ee_pose,
            ee_twist: self.ee_twist,
            x_d: out.x_d,
            xdot_d: out.xdot_d,
            force: self.wrench.on_ee,
            hand_pose: hs.hand_pose,
            hand_velocity: hs.hand_velocity,
            v_adm: out.v_adm,
            v_trans: out.v_trans,
            alpha: out.alpha,
            zeta: out.zeta,
            torso_yaw: hs.theta_t_w,
            torso_rate: hs.thetadot_t_w,
            manipulability: w.manipulability,
            damping: w.damping,
        });
        Ok(())
    }

    /// Runs until the duration elapses or, when configured, every waypoint
    /// has been reached.
    pub fn run_to_end(&mut self) -> Result<()> {
        let cfg = &self.scenario.config;
        let steps = (cfg.duration / cfg.dt).round() as u64;
        let stop = cfg.stop_on_completion;
        while self.step_index < steps {
            self.step()?;
            if stop && self.completed() {
                break;
            }
        }
        Ok(())
    }

    pub fn metrics(&self) -> Result<Metrics> {
        let cfg = &self.scenario.config;
        let records = &self.trace.records;
        let t_s = self.scenario.script.first_motion_time().unwrap_or(0.0);
        let final_time = self.time();
        let completed = self.completed();
        let t_end = if completed {
            *self.waypoint_times.last().expect("completed")
        } else {
            final_time
        };
        let window = self.trace.window(t_s, t_end);
        let d_am = if window.len() >= 2 {
            alignment_metric(window, &cfg.attachments)?
        } else {
            alignment_metric(records, &cfg.attachments)?
        };
        // intervals the script clock never reached are left out
        let reached = records.last().map_or(0.0, |r| r.script_t);
        let spans: Vec<IntervalConfig> = cfg.intervals.iter().filter(|iv| iv.start < reached).cloned().collect();
        let intervals = interval_stats(records, &spans)?;
        Ok(Metrics {
            scenario: cfg.name.clone(),
            controller: self.aci.mode().to_string(),
            completed,
            t_c: completed.then_some(t_end - t_s),
            d_am,
            mean_alpha: moving_mean_alpha(window, cfg.motion_speed),
            max_ee_displacement: max_ee_displacement(records),
            final_time,
            waypoint_times: self.waypoint_times.clone(),
            rotations: self.rotations,
            intervals,
        })
    }
}

/// Outcome of a full scenario run.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub trace: Trace,
    pub metrics: Metrics,
}

/// Resolves, runs and measures a scenario, writing the configured outputs.
pub fn run(config: &ScenarioConfig) -> Result<RunResult> {
    let mut sim = Simulation::from_config(config)?;
    sim.run_to_end()?;
    let metrics = sim.metrics()?;
    let trace = sim.into_trace();
    if let Some(path) = &config.output.trace {
        trace.write(path)?;
    }
    if let Some(path) = &config.output.metrics {
        metrics.write(path)?;
    }
    Ok(RunResult { trace, metrics })
}
