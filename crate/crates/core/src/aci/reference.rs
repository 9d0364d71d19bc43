use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::kinematics::{Pose, Twist};

/// Source of the translational reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerMode {
    /// Admittance and hand velocity blended by the adaptive index, plus rotation.
    #[default]
    Aci,
    /// `v_trans = v_adm`, translation only.
    #[serde(alias = "admittance")]
    AdmittanceOnly,
    /// `v_trans = v_h`, translation only.
    Teleop,
}

impl ControllerMode {
    pub const ALL: [ControllerMode; 3] = [
        ControllerMode::Aci,
        ControllerMode::AdmittanceOnly,
        ControllerMode::Teleop,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ControllerMode::Aci => "aci",
            ControllerMode::AdmittanceOnly => "admittance",
            ControllerMode::Teleop => "teleop",
        }
    }
}

impl std::fmt::Display for ControllerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ControllerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "aci" => Ok(ControllerMode::Aci),
            "admittance" | "admittance_only" => Ok(ControllerMode::AdmittanceOnly),
            "teleop" => Ok(ControllerMode::Teleop),
            other => Err(format!("unknown controller `{other}` (expected aci, admittance or teleop)")),
        }
    }
}

/// Integrates the blended twist into the reference pose sent to the WBC.
#[derive(Clone, Debug)]
pub struct ReferenceGenerator {
    pose: Pose,
    twist: Twist,
}

impl ReferenceGenerator {
    pub fn new(initial: Pose) -> Self {
        Self {
            pose: initial,
            twist: Twist::zero(),
        }
    }

    pub fn pose(&self) -> &Pose {
        &self.pose
    }

    pub fn twist(&self) -> &Twist {
        &self.twist
    }

    /// Selects `ẋ_d = ζ ẋ_rot + (1 - ζ) [v_trans; 0]` and advances `x_d` by
    /// one step. Returns the new `(x_d, ẋ_d)`.
    pub fn step(&mut self, zeta: bool, xdot_rot: &Twist, v_trans: &Vector3<f64>, dt: f64) -> (Pose, Twist) {
        self.twist = if zeta { *xdot_rot } else { Twist::linear(*v_trans) };
        self.pose = self.pose.integrate(&self.twist, dt);
        (self.pose, self.twist)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selects_translation_or_rotation() {
        let mut r = ReferenceGenerator::new(Pose::identity());
        let rot = Twist::new(Vector3::new(0.0, 0.1, 0.0), Vector3::new(0.0, 0.0, 0.2));
        let v = Vector3::new(0.3, 0.0, 0.0);
        assert_eq!(r.step(false, &rot, &v, 0.001).1, Twist::linear(v));
        assert_eq!(r.step(true, &rot, &v, 0.001).1, rot);
    }

    #[test]
    fn constant_twist_integrates_linearly() {
        let mut r = ReferenceGenerator::new(Pose::identity());
        let v = Vector3::new(0.1, 0.0, 0.0);
        for _ in 0..2000 {
            r.step(false, &Twist::zero(), &v, 0.001);
        }
        assert!((r.pose().position - Vector3::new(0.2, 0.0, 0.0)).norm() < 1e-12);
        assert_eq!(r.pose().orientation, Pose::identity().orientation);
    }

    #[test]
    fn mode_names_roundtrip() {
        for mode in ControllerMode::ALL {
            assert_eq!(mode.name().parse::<ControllerMode>().unwrap(), mode);
        }
        assert!("impedance".parse::<ControllerMode>().is_err());
    }
}
