//! Compliant coupling between the human hand and the robot end effector.
//!
//! The carried object is a spring-damper on the hand-to-EE vector. Its
//! deviation from the rest vector splits into an axial part (along the rest
//! vector) and a lateral part; the axial spring is tension/compression
//! asymmetric with an optional slack zone, and the lateral spring can be
//! softer vertically than horizontally.

use nalgebra::{UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::kinematics::{Pose, Twist};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub label: String,
    /// Nominal vector from the EE attachment to the hand attachment [m],
    /// expressed in the world frame at the grasp configuration.
    pub rest_vector: [f64; 3],
    pub axial_stiffness_tension: f64,
    pub axial_stiffness_compression: f64,
    /// Horizontal lateral stiffness [N/m].
    pub lateral_stiffness: f64,
    /// Vertical lateral stiffness [N/m]; equals `lateral_stiffness` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertical_stiffness: Option<f64>,
    pub damping: f64,
    /// Extension below which the axial spring carries no tension [m].
    #[serde(default)]
    pub slack_length: f64,
    /// EE orientation at which `rest_vector` was captured; the rest vector
    /// turns with the EE from there.
    #[serde(skip)]
    grasp_orientation: UnitQuaternion<f64>,
}

/// Forces exchanged through the object (torques are not modelled).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ObjectWrench {
    /// Force the object applies to the robot EE.
    pub on_ee: Vector3<f64>,
    /// Force the object applies to the hand, `-on_ee`.
    pub on_hand: Vector3<f64>,
}

/// Decomposed spring deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Deviation {
    axis: Vector3<f64>,
    axial: f64,
    horizontal: Vector3<f64>,
    vertical: Vector3<f64>,
}

pub const PRESET_NAMES: [&str; 3] = ["rigid_rod", "slack_rope", "peanut_bag"];

impl ObjectModel {
    pub fn rigid_rod() -> Self {
        Self {
            label: "rigid_rod".into(),
            rest_vector: [0.8, 0.0, 0.0],
            axial_stiffness_tension: 1e4,
            axial_stiffness_compression: 1e4,
            lateral_stiffness: 1e4,
            vertical_stiffness: None,
            damping: 50.0,
            slack_length: 0.0,
            grasp_orientation: UnitQuaternion::identity(),
        }
    }

    /// Tension-only rope whose slack is never taken up in the workspace.
    pub fn slack_rope() -> Self {
        Self {
            label: "slack_rope".into(),
            rest_vector: [0.8, 0.0, 0.0],
            axial_stiffness_tension: 1e4,
            axial_stiffness_compression: 0.0,
            lateral_stiffness: 0.0,
            vertical_stiffness: None,
            damping: 0.0,
            slack_length: 1.0,
            grasp_orientation: UnitQuaternion::identity(),
        }
    }

    /// Stiff when pulled along its length, soft when pushed, sheared or bent.
    pub fn peanut_bag() -> Self {
        Self {
            label: "peanut_bag".into(),
            rest_vector: [0.44, 0.0, 0.0],
            axial_stiffness_tension: 5e3,
            axial_stiffness_compression: 600.0,
            lateral_stiffness: 150.0,
            vertical_stiffness: Some(30.0),
            damping: 20.0,
            slack_length: 0.0,
            grasp_orientation: UnitQuaternion::identity(),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "rigid_rod" => Some(Self::rigid_rod()),
            "slack_rope" => Some(Self::slack_rope()),
            "peanut_bag" => Some(Self::peanut_bag()),
            _ => None,
        }
    }

    pub fn presets() -> Vec<Self> {
        PRESET_NAMES.iter().filter_map(|n| Self::preset(n)).collect()
    }

    /// Rest vector follows the EE orientation relative to `ee_orientation`.
    pub fn anchored(mut self, ee_orientation: UnitQuaternion<f64>) -> Self {
        self.grasp_orientation = ee_orientation;
        self
    }

    pub fn vertical(&self) -> f64 {
        self.vertical_stiffness.unwrap_or(self.lateral_stiffness)
    }

    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        let fields = [
            ("axial_stiffness_tension", self.axial_stiffness_tension),
            ("axial_stiffness_compression", self.axial_stiffness_compression),
            ("lateral_stiffness", self.lateral_stiffness),
            ("vertical_stiffness", self.vertical()),
            ("damping", self.damping),
            ("slack_length", self.slack_length),
        ];
        for (name, value) in fields {
            if !(value >= 0.0) || !value.is_finite() {
                out.push(format!("object.{name}: must be non-negative and finite"));
            }
        }
        let rest = Vector3::from(self.rest_vector);
        if !(rest.norm() > 0.0) || !rest.iter().all(|v| v.is_finite()) {
            out.push("object.rest_vector: must be a finite non-zero vector".into());
        }
        out
    }

    /// Rest vector in the world for the current EE orientation.
    pub fn rest_in_world(&self, ee_orientation: &UnitQuaternion<f64>) -> Vector3<f64> {
        ee_orientation * (self.grasp_orientation.inverse() * Vector3::from(self.rest_vector))
    }

    fn deviation(&self, hand: &Vector3<f64>, ee_pose: &Pose) -> Deviation {
        let rest = self.rest_in_world(&ee_pose.orientation);
        let axis = rest.normalize();
        let e = hand - ee_pose.position - rest;
        let axial = e.dot(&axis);
        let lateral = e - axis * axial;
        // vertical direction orthogonal to the axis
        let up = Vector3::z() - axis * axis.z;
        let vertical = if up.norm() > 1e-9 {
            let up = up.normalize();
            up * lateral.dot(&up)
        } else {
            Vector3::zeros()
        };
        Deviation {
            axis,
            axial,
            horizontal: lateral - vertical,
            vertical,
        }
    }

    /// Signed axial spring force along the rest axis (positive pulls the EE
    /// towards the hand).
    fn axial_force(&self, extension: f64) -> f64 {
        if extension > self.slack_length {
            self.axial_stiffness_tension * (extension - self.slack_length)
        } else if extension < 0.0 {
            self.axial_stiffness_compression * extension
        } else {
            0.0
        }
    }

    /// Stored elastic energy [J].
    pub fn elastic_energy(&self, hand_pose: &Pose, ee_pose: &Pose) -> f64 {
        let d = self.deviation(&hand_pose.position, ee_pose);
        let axial = if d.axial > self.slack_length {
            0.5 * self.axial_stiffness_tension * (d.axial - self.slack_length).powi(2)
        } else if d.axial < 0.0 {
            0.5 * self.axial_stiffness_compression * d.axial * d.axial
        } else {
            0.0
        };
        axial
            + 0.5 * self.lateral_stiffness * d.horizontal.norm_squared()
            + 0.5 * self.vertical() * d.vertical.norm_squared()
    }

    /// Force pair produced by the current hand and EE states.
    pub fn wrench(&self, hand_pose: &Pose, hand_twist: &Twist, ee_pose: &Pose, ee_twist: &Twist) -> ObjectWrench {
        let d = self.deviation(&hand_pose.position, ee_pose);
        let spring = d.axis * self.axial_force(d.axial)
            + d.horizontal * self.lateral_stiffness
            + d.vertical * self.vertical();
        let on_ee = spring + (hand_twist.linear - ee_twist.linear) * self.damping;
        ObjectWrench { on_ee, on_hand: -on_ee }
    }
}

/// Free-function form of [`ObjectModel::wrench`].
pub fn object_wrench(
    model: &ObjectModel,
    hand_pose: &Pose,
    hand_twist: &Twist,
    ee_pose: &Pose,
    ee_twist: &Twist,
) -> ObjectWrench {
    model.wrench(hand_pose, hand_twist, ee_pose, ee_twist)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(p: [f64; 3]) -> Pose {
        Pose::new(Vector3::from(p), UnitQuaternion::identity())
    }

    fn static_wrench(model: &ObjectModel, hand: [f64; 3]) -> Vector3<f64> {
        model.wrench(&at(hand), &Twist::zero(), &Pose::identity(), &Twist::zero()).on_ee
    }

    #[test]
    fn rest_state_is_force_free() {
        for model in ObjectModel::presets() {
            let f = static_wrench(&model, model.rest_vector);
            assert_eq!(f, Vector3::zeros(), "{}", model.label);
        }
    }

    #[test]
    fn rigid_rod_axial_stretch() {
        let rod = ObjectModel::rigid_rod();
        let f = static_wrench(&rod, [0.81, 0.0, 0.0]);
        assert!((f - Vector3::new(100.0, 0.0, 0.0)).norm() < 1e-9);
        // under 10 N the rod deflects by 1 mm
        let f = static_wrench(&rod, [0.8, 0.001, 0.0]);
        assert!((f.norm() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn rope_is_slack_and_tension_only() {
        let rope = ObjectModel::slack_rope();
        for hand in [[1.2, 0.0, 0.0], [0.8, 0.5, -0.3], [0.2, 0.0, 0.0], [1.7, 0.4, 0.1]] {
            let w = rope.wrench(
                &at(hand),
                &Twist::linear(Vector3::new(0.3, -0.2, 0.1)),
                &Pose::identity(),
                &Twist::zero(),
            );
            assert_eq!(w.on_ee, Vector3::zeros());
        }
        // slack exhausted: 0.1 m beyond the slack length
        let f = static_wrench(&rope, [1.9, 0.0, 0.0]);
        assert!((f.x - 1000.0).abs() < 1e-6);
    }

    #[test]
    fn bag_pull_versus_push() {
        let bag = ObjectModel::peanut_bag();
        let pull = static_wrench(&bag, [0.46, 0.0, 0.0]);
        let push = static_wrench(&bag, [0.42, 0.0, 0.0]);
        assert!((pull.x - 100.0).abs() < 1e-9);
        assert!((push.x + 12.0).abs() < 1e-9);
        let side = static_wrench(&bag, [0.44, 0.02, 0.0]);
        let up = static_wrench(&bag, [0.44, 0.0, 0.02]);
        assert!((side.y - 3.0).abs() < 1e-9);
        assert!((up.z - 0.6).abs() < 1e-9);
    }

    #[test]
    fn rest_vector_turns_with_the_ee() {
        let bag = ObjectModel::peanut_bag().anchored(UnitQuaternion::identity());
        let yawed = Pose::from_position_yaw(Vector3::zeros(), std::f64::consts::FRAC_PI_2);
        let hand = Pose::new(Vector3::new(0.0, 0.44, 0.0), UnitQuaternion::identity());
        let w = bag.wrench(&hand, &Twist::zero(), &yawed, &Twist::zero());
        assert!(w.on_ee.norm() < 1e-9);
    }

    #[test]
    fn static_deflection_of_rod_under_load() {
        // 10 N along the rod -> 1e-3 m
        let rod = ObjectModel::rigid_rod();
        let stretch = 10.0 / rod.axial_stiffness_tension;
        assert!((stretch - 1e-3).abs() < 1e-15);
        let f = static_wrench(&rod, [0.8 + stretch, 0.0, 0.0]);
        assert!((f.x - 10.0).abs() < 1e-9);
    }
}
