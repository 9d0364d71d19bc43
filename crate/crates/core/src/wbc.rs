//! Two-level whole-body controller.
//!
//! The primary task tracks the EE reference through a weighted, damped
//! least-squares problem
//!
//! ```text
//! min  ||ẋ_d + K (x_d ⊖ x) - J q̇||²_W1 + ||k q̇||²_W2
//! ```
//!
//! and a posture task pulling the arm towards `q_def` runs in the nullspace of
//! the primary one.

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{pose_error, KinematicModel, Pose, Twist, BASE_DOFS};

/// Relative pivot below which the 6×6 task system is treated as singular.
const SINGULAR_PIVOT: f64 = 1e-12;

/// Gains and weights of the whole-body controller. All matrices are diagonal
/// and stored by their diagonals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WbcParams {
    /// `K`, task-space feedback gain.
    pub gain: [f64; 6],
    /// `W1`, task weight.
    pub task_weight: [f64; 6],
    /// `W2`, joint-velocity damping weight (length m).
    pub damping_weight: Vec<f64>,
    /// `W3`, posture weight (length m).
    pub posture_weight: Vec<f64>,
    /// Default configuration the posture task pulls towards (length m).
    pub q_def: Vec<f64>,
    /// Step gain of the posture velocity [1/s].
    pub posture_gain: f64,
    /// Per-joint velocity limits (length m).
    pub velocity_limits: Vec<f64>,
}

impl WbcParams {
    /// Defaults for an `m`-DoF whole body: `K = diag{1,1,1,0.1,0.1,0.1}`,
    /// `W1 = 100 diag{10,10,10,5,5,5}`, `W2 = 3 I`, `W3 = diag{0, 1}`.
    pub fn defaults(m: usize, q_def: Vec<f64>) -> Self {
        let arm = m.saturating_sub(BASE_DOFS);
        let mut posture_weight = vec![0.0; BASE_DOFS.min(m)];
        posture_weight.extend(std::iter::repeat_n(1.0, arm));
        let mut velocity_limits = vec![1.0; BASE_DOFS.min(m)];
        velocity_limits.extend(std::iter::repeat_n(1.5, arm));
        Self {
            gain: [1.0, 1.0, 1.0, 0.1, 0.1, 0.1],
            task_weight: [1000.0, 1000.0, 1000.0, 500.0, 500.0, 500.0],
            damping_weight: vec![3.0; m],
            posture_weight,
            q_def,
            posture_gain: 0.5,
            velocity_limits,
        }
    }

    pub fn for_model(model: &KinematicModel, q_def: &DVector<f64>) -> Self {
        Self::defaults(model.dofs(), q_def.iter().copied().collect())
    }

    pub fn dofs(&self) -> usize {
        self.q_def.len()
    }

    /// Field-level issues; empty when the parameters are usable for an `m`-DoF robot.
    pub fn issues(&self, m: usize) -> Vec<String> {
        let mut out = Vec::new();
        let positive = |name: &str, v: &[f64], out: &mut Vec<String>| {
            if v.iter().any(|x| !(*x > 0.0) || !x.is_finite()) {
                out.push(format!("wbc.{name}: entries must be positive and finite"));
            }
        };
        positive("gain", &self.gain, &mut out);
        positive("task_weight", &self.task_weight, &mut out);
        positive("damping_weight", &self.damping_weight, &mut out);
        positive("velocity_limits", &self.velocity_limits, &mut out);
        if self.posture_weight.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            out.push("wbc.posture_weight: entries must be non-negative and finite".into());
        }
        for (name, len) in [
            ("damping_weight", self.damping_weight.len()),
            ("posture_weight", self.posture_weight.len()),
            ("q_def", self.q_def.len()),
            ("velocity_limits", self.velocity_limits.len()),
        ] {
            if len != m {
                out.push(format!("wbc.{name}: expected {m} entries, got {len}"));
            }
        }
        if !(self.posture_gain >= 0.0) {
            out.push("wbc.posture_gain: must be non-negative".into());
        }
        out
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let issues = self.issues(m);
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }
}

/// Task velocity `b = ẋ_d + K (x_d ⊖ x)`.
pub fn task_velocity(current: &Pose, desired: &Pose, desired_twist: &Twist, gain: &[f64; 6]) -> Vector6<f64> {
    let err = pose_error(desired, current);
    desired_twist.to_vector() + Vector6::from_column_slice(gain).component_mul(&err)
}

/// Minimizer of `||b - J q̇||²_W1 + ||k q̇||²_W2`.
///
/// Evaluated in the 6×6 task space as `W2⁻¹ Jᵀ (J W2⁻¹ Jᵀ + k² W1⁻¹)⁻¹ b`,
/// which equals `(Jᵀ W1 J + k² W2)⁻¹ Jᵀ W1 b` for `k > 0` and is its
/// minimum-W2-norm limit for `k = 0`.
pub fn solve_primary(
    jacobian: &DMatrix<f64>,
    b: &Vector6<f64>,
    k: f64,
    task_weight: &[f64; 6],
    damping_weight: &[f64],
) -> Result<DVector<f64>> {
    let m = jacobian.ncols();
    if damping_weight.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: damping_weight.len(),
        });
    }
    // J W2⁻¹
    let mut jw = jacobian.clone();
    for (c, w) in damping_weight.iter().enumerate() {
        jw.column_mut(c).scale_mut(1.0 / w);
    }
    let mut system = Matrix6::from_iterator((&jw * jacobian.transpose()).iter().copied());
    for i in 0..6 {
        system[(i, i)] += k * k / task_weight[i];
    }
    let scale = system.diagonal().max().max(f64::MIN_POSITIVE);
    let chol = system.cholesky().ok_or(Error::SingularTask)?;
    if chol.l_dirty().diagonal().min().powi(2) < SINGULAR_PIVOT * scale {
        return Err(Error::SingularTask);
    }
    let y = chol.solve(b);
    Ok(jw.transpose() * DVector::from_column_slice(y.as_slice()))
}

/// `N = I - J⁺ J` with the damped pseudoinverse `J⁺ = Jᵀ (J Jᵀ + k² I)⁻¹`.
pub fn nullspace_projector(jacobian: &DMatrix<f64>, k: f64) -> DMatrix<f64> {
    let m = jacobian.ncols();
    let mut jjt = Matrix6::from_iterator((jacobian * jacobian.transpose()).iter().copied());
    for i in 0..6 {
        jjt[(i, i)] += k * k;
    }
    // Rank-deficient J with k = 0 falls back to the SVD pseudoinverse.
    let inv = jjt
        .cholesky()
        .map(|c| c.inverse())
        .unwrap_or_else(|| jjt.pseudo_inverse(1e-12).expect("svd pseudoinverse"));
    let inv = DMatrix::from_iterator(6, 6, inv.iter().copied());
    let pinv = jacobian.transpose() * inv;
    DMatrix::identity(m, m) - pinv * jacobian
}

/// Negative-gradient posture velocity `posture_gain · W3 (q_def - q)`.
pub fn solve_secondary(q: &DVector<f64>, params: &WbcParams) -> DVector<f64> {
    DVector::from_iterator(
        q.len(),
        q.iter()
            .zip(&params.q_def)
            .zip(&params.posture_weight)
            .map(|((q, qd), w)| params.posture_gain * w * (qd - q)),
    )
}

/// Everything produced by one controller evaluation.
#[derive(Clone, Debug)]
pub struct WbcOutput {
    /// Desired joint velocities before saturation.
    pub qdot_unsaturated: DVector<f64>,
    /// Desired joint velocities after the per-joint clamp.
    pub qdot: DVector<f64>,
    pub qdot_primary: DVector<f64>,
    pub task_velocity: Vector6<f64>,
    pub manipulability: f64,
    pub damping: f64,
    pub jacobian: DMatrix<f64>,
}

/// Full evaluation: damping from manipulability, primary solve, projected
/// posture velocity, then saturation.
pub fn compute(
    model: &KinematicModel,
    q: &DVector<f64>,
    x_d: &Pose,
    xdot_d: &Twist,
    params: &WbcParams,
) -> Result<WbcOutput> {
    let jacobian = model.jacobian(q)?;
    let current = model.forward_kinematics(q)?;
    let manipulability =
        crate::kinematics::manipulability_of(&jacobian.columns(BASE_DOFS, model.arm_joints()).into_owned());
    let damping = model.damping_factor(manipulability);
    let b = task_velocity(&current, x_d, xdot_d, &params.gain);
    let qdot_primary = solve_primary(&jacobian, &b, damping, &params.task_weight, &params.damping_weight)?;
    let secondary = solve_secondary(q, params);
    let qdot_unsaturated = if secondary.iter().all(|v| *v == 0.0) {
        qdot_primary.clone()
    } else {
        &qdot_primary + nullspace_projector(&jacobian, damping) * secondary
    };
    let qdot = saturate(&qdot_unsaturated, &params.velocity_limits);
    Ok(WbcOutput {
        qdot_unsaturated,
        qdot,
        qdot_primary,
        task_velocity: b,
        manipulability,
        damping,
        jacobian,
    })
}

/// Component-wise clamp to `±limits`.
pub fn saturate(qdot: &DVector<f64>, limits: &[f64]) -> DVector<f64> {
    DVector::from_iterator(
        qdot.len(),
        qdot.iter().zip(limits).map(|(v, l)| v.clamp(-l, *l)),
    )
}
