//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use cotransport::aci::{IntentionParams, YawSample};
use cotransport::kinematics::Pose;
use nalgebra::{DMatrix, DVector, Matrix4, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rot_z(t: f64) -> Matrix4<f64> {
    let (s, c) = t.sin_cos();
    Matrix4::new(c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0)
}

fn rot_x(t: f64) -> Matrix4<f64> {
    let (s, c) = t.sin_cos();
    Matrix4::new(1.0, 0.0, 0.0, 0.0, 0.0, c, -s, 0.0, 0.0, s, c, 0.0, 0.0, 0.0, 0.0, 1.0)
}

fn trans(x: f64, y: f64, z: f64) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m[(0, 3)] = x;
    m[(1, 3)] = y;
    m[(2, 3)] = z;
    m
}

/// Default mobile manipulator written out as plain DH matrix products.
pub fn dh_forward_kinematics(q: &[f64]) -> Matrix4<f64> {
    use std::f64::consts::FRAC_PI_2;
    let alpha = [FRAC_PI_2, 0.0, 0.0, FRAC_PI_2, -FRAC_PI_2, 0.0];
    let a = [0.0, -0.4784, -0.36, 0.0, 0.0, 0.0];
    let d = [0.1807, 0.0, 0.0, 0.17415, 0.11985, 0.11655];
    let mut t = trans(q[0], q[1], 0.0) * rot_z(q[2]) * trans(0.2, 0.0, 0.6);
    for i in 0..6 {
        t = t * rot_z(q[3 + i]) * trans(0.0, 0.0, d[i]) * trans(a[i], 0.0, 0.0) * rot_x(alpha[i]);
    }
    t
}

/// Homogeneous matrix of a pose, built from the rotation-matrix formula of a quaternion.
pub fn pose_matrix(p: &Pose) -> Matrix4<f64> {
    let q = p.orientation.quaternion();
    let (w, x, y, z) = (q.w, q.i, q.j, q.k);
    Matrix4::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        p.position.x,
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        p.position.y,
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
        p.position.z,
        0.0,
        0.0,
        0.0,
        1.0,
    )
}

pub fn random_pose(r: &mut impl Rng) -> Pose {
    let p = Vector3::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
    let axis = Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
    let angle = r.random_range(-3.0..3.0);
    let rot = nalgebra::UnitQuaternion::from_scaled_axis(axis.normalize() * angle);
    Pose::new(p, rot)
}

pub fn random_q(r: &mut impl Rng) -> DVector<f64> {
    let mut q = cotransport::KinematicModel::ur16e_default_configuration();
    q[0] = r.random_range(-2.0..2.0);
    q[1] = r.random_range(-2.0..2.0);
    q[2] = r.random_range(-3.0..3.0);
    for i in 3..9 {
        q[i] += r.random_range(-0.8..0.8);
    }
    q
}

/// Minimizer of `||b - J x||²_W1 + k²||x||²_W2`. For `k > 0` the stacked
/// least-squares system `[W1^½ J; k W2^½] x = [W1^½ b; 0]` is solved by QR;
/// for `k = 0` the minimum-W2-norm solution comes from an SVD pseudoinverse
/// of the weighted Jacobian.
pub fn primary_oracle(j: &DMatrix<f64>, b: &Vector6<f64>, k: f64, w1: &[f64; 6], w2: &[f64]) -> DVector<f64> {
    let m = j.ncols();
    let s1 = DMatrix::from_diagonal(&DVector::from_iterator(6, w1.iter().map(|w| w.sqrt())));
    let b = DVector::from_column_slice(b.as_slice());
    if k > 0.0 {
        let mut a = DMatrix::zeros(6 + m, m);
        a.rows_mut(0, 6).copy_from(&(&s1 * j));
        for (i, w) in w2.iter().enumerate() {
            a[(6 + i, i)] = k * w.sqrt();
        }
        let mut rhs = DVector::zeros(6 + m);
        rhs.rows_mut(0, 6).copy_from(&(&s1 * b));
        let qr = a.qr();
        let qtb = qr.q().transpose() * rhs;
        qr.r().solve_upper_triangular(&qtb).expect("full column rank")
    } else {
        let s2inv = DMatrix::from_diagonal(&DVector::from_iterator(m, w2.iter().map(|w| 1.0 / w.sqrt())));
        let jt = &s1 * j * &s2inv;
        let pinv = jt.svd(true, true).pseudo_inverse(1e-12).expect("svd");
        s2inv * pinv * s1 * b
    }
}

/// Direct transcription of the rotation-intention conditions over a whole
/// yaw trace, without latching.
pub fn intention_oracle(trace: &[YawSample], p: &IntentionParams) -> Vec<bool> {
    let mut out = Vec::with_capacity(trace.len());
    let mut bounds: Option<(f64, f64)> = None;
    for s in trace {
        if s.hand_in_torso.abs() <= p.lower_angle_thr {
            bounds = None;
            out.push(false);
            continue;
        }
        let (h_l, t_l) = *bounds.get_or_insert((s.hand_world, s.torso_world));
        let dh = (s.hand_world - h_l).abs();
        let dt = (s.torso_world - t_l).abs();
        out.push(s.hand_in_torso.abs() > p.upper_angle_thr && dt > dh && s.torso_rate.abs() < p.velocity_thr);
    }
    out
}

/// Random smooth-ish hand and torso yaw trace with finite-differenced torso rate.
pub fn random_yaw_trace(r: &mut impl Rng, n: usize, dt: f64) -> Vec<YawSample> {
    let mut hand = r.random_range(-1.0..1.0);
    let mut torso = hand + r.random_range(-0.1..0.1);
    let (mut vh, mut vt) = (0.0, 0.0);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        // piecewise-constant rates with random switches
        if r.random_bool(0.02) {
            vh = if r.random_bool(0.5) { 0.0 } else { r.random_range(-0.6..0.6) };
        }
        if r.random_bool(0.02) {
            vt = if r.random_bool(0.4) { 0.0 } else { r.random_range(-0.6..0.6) };
        }
        hand += vh * dt;
        torso += vt * dt;
        out.push(YawSample {
            hand_in_torso: hand - torso,
            hand_world: hand,
            torso_world: torso,
            torso_rate: vt + r.random_range(-0.01..0.01),
        });
    }
    out
}

/// Mean of `values[i]` over indices whose time lies in `[start, end)`,
/// accumulated with a second pass (Welford update).
pub fn streaming_mean(times: &[f64], values: &[f64], start: f64, end: f64) -> f64 {
    let mut mean = 0.0;
    let mut n = 0.0;
    for (t, v) in times.iter().zip(values) {
        if *t >= start && *t < end {
            n += 1.0;
            mean += (v - mean) / n;
        }
    }
    mean
}
