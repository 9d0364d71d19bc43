//! Kinematics of an omni-directional base carrying a revolute serial arm.
//!
//! The whole-body configuration is `q = [x, y, yaw, q_arm...]`. The base moves
//! in the world plane, the arm is mounted on it through the origin transform of
//! its first joint, and every arm joint is a fixed origin transform followed by
//! a rotation about a unit axis in the resulting frame.

use nalgebra::{
    DMatrix, DVector, Isometry3, Matrix6, Translation3, Unit, UnitQuaternion, Vector3, Vector6,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planar base degrees of freedom: x [m], y [m], yaw [rad].
pub const BASE_DOFS: usize = 3;

const UNIT_TOLERANCE: f64 = 1e-9;

/// Rigid transform in the world (or a parent) frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

/// World origin and axis of one arm joint.
type JointAxis = (Vector3<f64>, Vector3<f64>);

impl Pose {
    pub fn new(position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), UnitQuaternion::identity())
    }

    pub fn from_position_yaw(position: Vector3<f64>, yaw: f64) -> Self {
        Self::new(position, UnitQuaternion::from_axis_angle(&Vector3::z_axis(), yaw))
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        Self::new(iso.translation.vector, iso.rotation)
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.position), self.orientation)
    }

    /// `self * other`: `other` expressed in `self`'s frame, mapped to the parent frame.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.position + self.orientation * other.position,
            self.orientation * other.orientation,
        )
    }

    pub fn inverse(&self) -> Pose {
        let inv = self.orientation.inverse();
        Pose::new(-(inv * self.position), inv)
    }

    /// Heading of the frame's x axis projected on the world plane.
    pub fn yaw(&self) -> f64 {
        self.orientation.euler_angles().2
    }

    /// `[x, y, z, qw, qx, qy, qz]`
    pub fn to_array(&self) -> [f64; 7] {
        let q = self.orientation.quaternion();
        [
            self.position.x,
            self.position.y,
            self.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
        ]
    }

    /// Advances the pose by a world-frame twist held constant over `dt`.
    pub fn integrate(&self, twist: &Twist, dt: f64) -> Pose {
        let rotation = UnitQuaternion::from_scaled_axis(twist.angular * dt);
        let mut orientation = rotation * self.orientation;
        orientation.renormalize();
        Pose::new(self.position + twist.linear * dt, orientation)
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

/// 6-D velocity: linear [m/s] and angular [rad/s], both in the world frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Twist {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
}

impl Twist {
    pub fn new(linear: Vector3<f64>, angular: Vector3<f64>) -> Self {
        Self { linear, angular }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn linear(linear: Vector3<f64>) -> Self {
        Self::new(linear, Vector3::zeros())
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self::new(v.fixed_rows::<3>(0).into(), v.fixed_rows::<3>(3).into())
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut v = Vector6::zeros();
        v.fixed_rows_mut::<3>(0).copy_from(&self.linear);
        v.fixed_rows_mut::<3>(3).copy_from(&self.angular);
        v
    }

    pub fn scale(&self, s: f64) -> Twist {
        Twist::new(self.linear * s, self.angular * s)
    }

    pub fn is_finite(&self) -> bool {
        self.linear.iter().chain(self.angular.iter()).all(|v| v.is_finite())
    }
}

/// Pose error `[p_d - p; axis-angle(R_d R^T)]`, all in the world frame.
pub fn pose_error(desired: &Pose, current: &Pose) -> Vector6<f64> {
    let dp = desired.position - current.position;
    let dr = (desired.orientation * current.orientation.inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, dr.x, dr.y, dr.z)
}

/// Fixed transform as translation plus roll-pitch-yaw (applied as `Rz(yaw) Ry(pitch) Rx(roll)`).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FixedTransform {
    #[serde(default)]
    pub translation: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl FixedTransform {
    pub fn new(translation: [f64; 3], rpy: [f64; 3]) -> Self {
        Self { translation, rpy }
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.translation[0], self.translation[1], self.translation[2]),
            UnitQuaternion::from_euler_angles(self.rpy[0], self.rpy[1], self.rpy[2]),
        )
    }
}

/// Revolute joint: fixed origin relative to the previous frame, then rotation about `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmJoint {
    pub origin: FixedTransform,
    #[serde(default = "default_axis")]
    pub axis: [f64; 3],
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

/// Serializable description of the chain; [`KinematicModel`] is built from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDescription {
    pub joints: Vec<ArmJoint>,
    #[serde(default)]
    pub ee_offset: FixedTransform,
    #[serde(default = "default_w_threshold")]
    pub w_threshold: f64,
    #[serde(default = "default_k_max")]
    pub k_max: f64,
}

fn default_w_threshold() -> f64 {
    0.05
}

fn default_k_max() -> f64 {
    0.1
}

#[derive(Clone, Debug)]
struct Joint {
    origin: Isometry3<f64>,
    axis: Unit<Vector3<f64>>,
}

/// Omni base (x, y, yaw) plus an `n_a`-joint revolute arm.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ChainDescription", into = "ChainDescription")]
pub struct KinematicModel {
    description: ChainDescription,
    joints: Vec<Joint>,
    ee_offset: Isometry3<f64>,
}

impl TryFrom<ChainDescription> for KinematicModel {
    type Error = Error;

    fn try_from(description: ChainDescription) -> Result<Self> {
        KinematicModel::new(description)
    }
}

impl From<KinematicModel> for ChainDescription {
    fn from(model: KinematicModel) -> Self {
        model.description
    }
}

impl PartialEq for KinematicModel {
    fn eq(&self, other: &Self) -> bool {
        self.description == other.description
    }
}

impl KinematicModel {
    pub fn new(description: ChainDescription) -> Result<Self> {
        let n_a = description.joints.len();
        if n_a == 0 {
            return Err(Error::invalid("robot.joints", "arm needs at least one joint"));
        }
        if BASE_DOFS + n_a <= 6 {
            return Err(Error::invalid(
                "robot.joints",
                format!("whole body must be redundant (m = {} must exceed 6)", BASE_DOFS + n_a),
            ));
        }
        let mut joints = Vec::with_capacity(n_a);
        for (i, j) in description.joints.iter().enumerate() {
            let axis = Vector3::from(j.axis);
            if !axis.iter().all(|v| v.is_finite()) || (axis.norm() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(Error::invalid(
                    format!("robot.joints[{i}].axis"),
                    "axis must be a unit vector",
                ));
            }
            check_transform(&j.origin, &format!("robot.joints[{i}].origin"))?;
            joints.push(Joint {
                origin: j.origin.to_isometry(),
                axis: Unit::new_unchecked(axis),
            });
        }
        check_transform(&description.ee_offset, "robot.ee_offset")?;
        if !(description.w_threshold > 0.0) {
            return Err(Error::invalid("robot.w_threshold", "must be positive"));
        }
        if !(description.k_max >= 0.0) {
            return Err(Error::invalid("robot.k_max", "must be non-negative"));
        }
        let ee_offset = description.ee_offset.to_isometry();
        Ok(Self {
            description,
            joints,
            ee_offset,
        })
    }

    /// UR16e-like 6-DoF arm mounted on an omni base (standard DH parameters,
    /// arm base 0.2 m ahead of the base centre at 0.6 m height).
    pub fn ur16e_on_omni_base() -> Self {
        use std::f64::consts::FRAC_PI_2;
        let alpha = [FRAC_PI_2, 0.0, 0.0, FRAC_PI_2, -FRAC_PI_2, 0.0];
        let a = [0.0, -0.4784, -0.36, 0.0, 0.0, 0.0];
        let d = [0.1807, 0.0, 0.0, 0.17415, 0.11985, 0.11655];
        // DH link i: Rz(theta_i) Tz(d_i) Tx(a_i) Rx(alpha_i); the fixed part becomes
        // the origin of joint i+1 (or the EE offset for the last link).
        let link = |i: usize| FixedTransform::new([a[i], 0.0, d[i]], [alpha[i], 0.0, 0.0]);
        let mut joints = vec![ArmJoint {
            origin: FixedTransform::new([0.2, 0.0, 0.6], [0.0; 3]),
            axis: default_axis(),
        }];
        for i in 0..5 {
            joints.push(ArmJoint {
                origin: link(i),
                axis: default_axis(),
            });
        }
        Self::new(ChainDescription {
            joints,
            ee_offset: link(5),
            w_threshold: default_w_threshold(),
            k_max: default_k_max(),
        })
        .expect("built-in chain is valid")
    }

    /// Comfortable forward-reaching posture of [`Self::ur16e_on_omni_base`]:
    /// tool z axis along world +x, EE about 0.75 m ahead at 1 m height.
    pub fn ur16e_default_configuration() -> DVector<f64> {
        DVector::from_vec(vec![
            0.0, 0.0, 0.0, 0.4111, -1.7058, -1.8192, -2.7586, -1.1614, -1.5706,
        ])
    }

    pub fn description(&self) -> &ChainDescription {
        &self.description
    }

    pub fn arm_joints(&self) -> usize {
        self.joints.len()
    }

    /// Total whole-body DoFs `m = n_b + n_a`.
    pub fn dofs(&self) -> usize {
        BASE_DOFS + self.joints.len()
    }

    pub fn w_threshold(&self) -> f64 {
        self.description.w_threshold
    }

    pub fn k_max(&self) -> f64 {
        self.description.k_max
    }

    fn check(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.dofs() {
            return Err(Error::DimensionMismatch {
                expected: self.dofs(),
                actual: q.len(),
            });
        }
        Ok(())
    }

    fn base_transform(q: &DVector<f64>) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(q[0], q[1], 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q[2]),
        )
    }

    /// Walks the chain, returning the EE transform and each joint's world
    /// (origin, axis) pair.
    fn walk(&self, q: &DVector<f64>) -> (Isometry3<f64>, Vec<JointAxis>) {
        let mut frame = Self::base_transform(q);
        let mut joint_frames = Vec::with_capacity(self.joints.len());
        for (joint, &angle) in self.joints.iter().zip(q.iter().skip(BASE_DOFS)) {
            frame *= joint.origin;
            joint_frames.push((frame.translation.vector, frame.rotation * joint.axis.into_inner()));
            frame *= UnitQuaternion::from_axis_angle(&joint.axis, angle);
        }
        frame *= self.ee_offset;
        (frame, joint_frames)
    }

    pub fn forward_kinematics(&self, q: &DVector<f64>) -> Result<Pose> {
        self.check(q)?;
        let (ee, _) = self.walk(q);
        let mut pose = Pose::from_isometry(&ee);
        pose.orientation.renormalize();
        Ok(pose)
    }

    /// 6×m Jacobian mapping `q̇` to the world-frame EE twist `[v; ω]`.
    pub fn jacobian(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check(q)?;
        let (ee, joint_frames) = self.walk(q);
        let p = ee.translation.vector;
        let mut jac = DMatrix::zeros(6, self.dofs());
        jac[(0, 0)] = 1.0;
        jac[(1, 1)] = 1.0;
        // base yaw rotates the whole arm about the world z axis through the base origin
        let r = p - Vector3::new(q[0], q[1], 0.0);
        jac[(0, 2)] = -r.y;
        jac[(1, 2)] = r.x;
        jac[(5, 2)] = 1.0;
        for (i, (origin, axis)) in joint_frames.iter().enumerate() {
            let lin = axis.cross(&(p - origin));
            let col = BASE_DOFS + i;
            jac.fixed_view_mut::<3, 1>(0, col).copy_from(&lin);
            jac.fixed_view_mut::<3, 1>(3, col).copy_from(axis);
        }
        Ok(jac)
    }

    /// Arm manipulability `sqrt(det(J_a J_aᵀ))` using the 6×n_a arm columns.
    pub fn manipulability(&self, q: &DVector<f64>) -> Result<f64> {
        let jac = self.jacobian(q)?;
        Ok(manipulability_of(&jac.columns(BASE_DOFS, self.arm_joints()).into_owned()))
    }

    pub fn damping_factor(&self, w: f64) -> f64 {
        damping_factor(w, self.w_threshold(), self.k_max())
    }
}

fn check_transform(t: &FixedTransform, field: &str) -> Result<()> {
    if !t.translation.iter().chain(t.rpy.iter()).all(|v| v.is_finite()) {
        return Err(Error::invalid(field, "transform entries must be finite"));
    }
    Ok(())
}

/// `sqrt(det(J Jᵀ))` for a 6×n arm Jacobian; negative round-off is clamped to 0.
pub fn manipulability_of(arm_jacobian: &DMatrix<f64>) -> f64 {
    let jjt = arm_jacobian * arm_jacobian.transpose();
    let jjt = Matrix6::from_iterator(jjt.iter().copied());
    jjt.determinant().max(0.0).sqrt()
}

/// Quadratic damping schedule: `k_max (1 - w/w_t)^2` below the threshold, zero above.
pub fn damping_factor(w: f64, w_threshold: f64, k_max: f64) -> f64 {
    if w >= w_threshold {
        0.0
    } else {
        let r = 1.0 - w.max(0.0) / w_threshold;
        k_max * r * r
    }
}

/// Whole-body joint positions and velocities.
#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
}

impl JointState {
    pub fn at_rest(q: DVector<f64>) -> Self {
        let qdot = DVector::zeros(q.len());
        Self { q, qdot }
    }

    pub fn new(q: DVector<f64>, qdot: DVector<f64>) -> Result<Self> {
        if q.len() != qdot.len() {
            return Err(Error::DimensionMismatch {
                expected: q.len(),
                actual: qdot.len(),
            });
        }
        Ok(Self { q, qdot })
    }
}
