mod common;

use common::{intention_oracle, pose_matrix, random_pose, random_yaw_trace, rng};
use cotransport::aci::translation::index_from_displacements;
use cotransport::aci::{
    admittance_step, desired_rotation_pose, AdaptiveIndex, AdaptiveIndexParams, Admittance, AdmittanceParams,
    CubicTrajectory, IntentionDetector, IntentionParams, ReferenceGenerator, YawSample,
};
use cotransport::kinematics::{Pose, Twist};
use nalgebra::{UnitQuaternion, Vector3};
use rand::Rng;

#[test]
fn admittance_follows_the_continuous_step_response() {
    let params = AdmittanceParams::default();
    let mut adm = Admittance::new(params);
    let force = Vector3::new(30.0, -15.0, 6.0);
    let dt = 1e-3;
    for i in 1..=2000 {
        let v = adm.step(&force, dt).unwrap();
        let t = i as f64 * dt;
        for axis in 0..3 {
            let d = params.damping[axis];
            let exact = force[axis] / d * (1.0 - (-d / params.mass[axis] * t).exp());
            assert!((v[axis] - exact).abs() <= 1e-3 * exact.abs(), "t={t} axis={axis}");
        }
        if i == 200 {
            assert!((v.x - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
        }
    }
    assert!((adm.velocity().x - 1.0).abs() < 1e-4);
}

#[test]
fn single_admittance_step_value() {
    let v = admittance_step(&Vector3::new(6.0, 0.0, 0.0), &Vector3::zeros(), 0.01, &AdmittanceParams::default())
        .unwrap();
    assert!((v.x - 0.009_754_115_099_857_198).abs() < 1e-14);
    assert!(admittance_step(&Vector3::new(f64::NAN, 0.0, 0.0), &Vector3::zeros(), 0.01, &Default::default()).is_err());
}

#[test]
fn index_examples() {
    assert!((index_from_displacements(0.0, 0.1, 1e-4) - 1.0).abs() < 2e-3);
    assert!(index_from_displacements(0.1, 0.1, 1e-4) < 1e-3);
    assert!((index_from_displacements(0.3, 0.6, 1e-4) - (1.0 - 0.3 / 0.6001)).abs() < 1e-15);
    assert_eq!(index_from_displacements(0.6, 0.3, 1e-4), 0.0);
}

#[test]
fn index_depends_only_on_the_window() {
    let params = AdaptiveIndexParams::default();
    let mut r = rng(20);
    for _ in 0..50 {
        let mut a = AdaptiveIndex::new(params);
        let mut b = AdaptiveIndex::new(params);
        let dt = 1e-3;
        let n = 2000;
        let shared_from = n - 400; // 0.4 s of identical input, longer than the window
        for i in 0..n {
            let t = i as f64 * dt;
            let va = Vector3::from_fn(|_, _| r.random_range(-0.3..0.3));
            let vh = Vector3::from_fn(|_, _| r.random_range(-0.3..0.3));
            let (vb, vhb) = if i >= shared_from {
                (va, vh)
            } else {
                (Vector3::from_fn(|_, _| r.random_range(-0.3..0.3)), Vector3::zeros())
            };
            a.update(t, va, vh);
            b.update(t, vb, vhb);
            if i > shared_from + 300 {
                assert_eq!(a.alpha(), b.alpha());
            }
        }
    }
}

#[test]
fn detector_matches_direct_evaluation_on_random_traces() {
    let params = IntentionParams {
        latching: false,
        ..Default::default()
    };
    let mut r = rng(21);
    let mut triggered = 0;
    for _ in 0..100 {
        let trace = random_yaw_trace(&mut r, 4000, 1e-2);
        let expected = intention_oracle(&trace, &params);
        let mut det = IntentionDetector::new(params);
        for (i, s) in trace.iter().enumerate() {
            let out = det.step(s, &Pose::identity());
            assert_eq!(out.zeta, expected[i], "sample {i}");
            assert_eq!(out.detection.is_some(), expected[i]);
        }
        triggered += expected.iter().filter(|z| **z).count();
    }
    assert!(triggered > 100, "traces should exercise the trigger branch");
}

fn torso_turn(angle: f64, hand_turns: bool) -> Vec<YawSample> {
    let dt = 1e-2;
    let mut out = Vec::new();
    for i in 0..600 {
        let t = i as f64 * dt;
        let tau = ((t - 1.0) / 3.0).clamp(0.0, 1.0);
        let s = tau * tau * (3.0 - 2.0 * tau);
        let rate = if (0.0..1.0).contains(&tau) { angle * 6.0 * tau * (1.0 - tau) / 3.0 } else { 0.0 };
        let (hand, torso, torso_rate) = if hand_turns { (angle * s, 0.0, 0.0) } else { (0.0, angle * s, rate) };
        out.push(YawSample {
            hand_in_torso: hand - torso,
            hand_world: hand,
            torso_world: torso,
            torso_rate,
        });
    }
    out
}

#[test]
fn torso_turn_triggers_once_it_slows_down() {
    let trace = torso_turn(0.5, false);
    let mut det = IntentionDetector::new(IntentionParams::default());
    let first = trace.iter().position(|s| det.step(s, &Pose::identity()).zeta).expect("rotation detected");
    let p = IntentionParams::default();
    let expected = trace
        .iter()
        .position(|s| s.hand_in_torso.abs() > p.upper_angle_thr && s.torso_rate.abs() < p.velocity_thr)
        .unwrap();
    assert_eq!(first, expected);
}

#[test]
fn hand_only_turn_never_triggers() {
    let mut det = IntentionDetector::new(IntentionParams::default());
    for s in torso_turn(0.5, true) {
        assert!(!det.step(&s, &Pose::identity()).zeta);
    }
}

#[test]
fn latch_holds_until_rotation_finishes_and_rearms_below_lower_threshold() {
    let p = IntentionParams::default();
    let mut det = IntentionDetector::new(p);
    let trace = torso_turn(0.5, false);
    let mut detections = 0;
    for s in &trace {
        detections += det.step(s, &Pose::identity()).detection.is_some() as usize;
    }
    assert_eq!(detections, 1);
    assert!(det.zeta() && det.is_rotating());
    det.finish_rotation();
    // still above the lower threshold: no re-trigger
    let still = trace.last().unwrap();
    assert!(!det.step(still, &Pose::identity()).zeta);
    // hand catches up, relative yaw drops, then a new turn triggers again
    let caught_up = YawSample {
        hand_in_torso: 0.0,
        hand_world: 0.5,
        torso_world: 0.5,
        torso_rate: 0.0,
    };
    assert!(!det.step(&caught_up, &Pose::identity()).zeta);
    let mut again = 0;
    for s in torso_turn(0.5, false) {
        let shifted = YawSample {
            hand_world: s.hand_world + 0.5,
            torso_world: s.torso_world + 0.5,
            ..s
        };
        again += det.step(&shifted, &Pose::identity()).detection.is_some() as usize;
    }
    assert_eq!(again, 1);
}

#[test]
fn rotation_goal_matches_matrix_products() {
    let mut r = rng(22);
    for _ in 0..1000 {
        let (a, b) = (random_pose(&mut r), random_pose(&mut r));
        let got = pose_matrix(&desired_rotation_pose(&a, &b));
        let expected = pose_matrix(&a) * pose_matrix(&b);
        assert!((got - expected).amax() < 1e-12);
    }
    let rel = random_pose(&mut r);
    assert_eq!(desired_rotation_pose(&Pose::identity(), &rel), rel);
}

#[test]
fn torso_yaw_swings_the_goal_about_the_torso() {
    let torso0 = Pose::from_position_yaw(Vector3::new(1.0, 0.0, 1.3), std::f64::consts::PI);
    let ee = Pose::from_position_yaw(Vector3::new(0.5, 0.0, 1.0), 0.0);
    let rel = torso0.inverse().compose(&ee);
    let phi = 0.4;
    let torso = Pose::from_position_yaw(torso0.position, std::f64::consts::PI + phi);
    let goal = desired_rotation_pose(&torso, &rel);
    let arm = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), phi) * (ee.position - torso0.position);
    assert!((goal.position - (torso0.position + arm)).norm() < 1e-12);
    assert!((goal.yaw() - phi).abs() < 1e-12);
}

#[test]
fn cubic_boundaries_and_midpoint() {
    let start = Pose::from_position_yaw(Vector3::new(0.1, 0.2, 0.3), 0.3);
    let goal = Pose::from_position_yaw(Vector3::new(0.5, -0.2, 0.3), 1.1);
    let tr = CubicTrajectory::plan(start, goal, 2.0, 4.0);
    let (p0, v0) = tr.sample(2.0);
    let (p1, v1) = tr.sample(6.0);
    assert_eq!(p0, start);
    assert_eq!(p1, goal);
    assert_eq!(v0, Twist::zero());
    assert_eq!(v1, Twist::zero());
    let (mid, vmid) = tr.sample(4.0);
    let dp = goal.position - start.position;
    assert!((mid.position - (start.position + dp * 0.5)).norm() < 1e-12);
    assert!((vmid.linear.norm() - 1.5 * dp.norm() / 4.0).abs() < 1e-12);
    assert!((mid.yaw() - 0.7).abs() < 1e-12);
}

#[test]
fn reference_pose_is_the_integral_of_its_twist() {
    let dt = 1e-3;
    let mut gen = ReferenceGenerator::new(Pose::identity());
    let tr = CubicTrajectory::plan(
        Pose::identity(),
        Pose::from_position_yaw(Vector3::new(0.2, 0.1, 0.0), 0.6),
        0.5,
        2.0,
    );
    let mut prev = *gen.pose();
    for i in 0..3000 {
        let t = i as f64 * dt;
        let zeta = (0.5..2.5).contains(&t);
        let v = Vector3::new(0.1 * (t * 3.0).sin(), 0.05, -0.02);
        let (pose, twist) = gen.step(zeta, &tr.twist(t), &v, dt);
        let dv = (pose.position - prev.position) / dt;
        let dw = (pose.orientation * prev.orientation.inverse()).scaled_axis() / dt;
        assert!((dv - twist.linear).norm() < 1e-9);
        assert!((dw - twist.angular).norm() < 1e-6);
        prev = pose;
    }
}
