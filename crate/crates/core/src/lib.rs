//! Whole-body control and adaptive collaborative interface for human-robot
//! co-transportation with a mobile manipulator.
//!
//! The crate covers the robot kinematics, a weighted damped whole-body
//! controller, the adaptive interface that turns interaction forces and human
//! motion into EE references, compliant object models, a scripted human
//! partner, and a closed-loop simulator that ties them together.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aci;
pub mod error;
pub mod human;
pub mod kinematics;
pub mod objects;
pub mod sim;
pub mod wbc;

pub use aci::{Aci, AciInput, AciOutput, AciParams, ControllerMode};
pub use error::{Error, Result};
pub use human::{Human, HumanParams, HumanState, MotionScript, Segment};
pub use kinematics::{KinematicModel, Pose, Twist};
pub use objects::{ObjectModel, ObjectWrench};
pub use sim::{run, Metrics, RunResult, ScenarioConfig, Simulation, Trace};
pub use wbc::{WbcOutput, WbcParams};
