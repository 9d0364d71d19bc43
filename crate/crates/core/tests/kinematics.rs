mod common;

use common::{dh_forward_kinematics, random_q, rng};
use cotransport::kinematics::{pose_error, KinematicModel, Pose};
use nalgebra::{DVector, Vector3};

#[test]
fn forward_kinematics_matches_dh_products() {
    let model = KinematicModel::ur16e_on_omni_base();
    let mut r = rng(1);
    for _ in 0..500 {
        let q = random_q(&mut r);
        let pose = model.forward_kinematics(&q).unwrap();
        let oracle = dh_forward_kinematics(q.as_slice());
        let m = pose.to_isometry().to_homogeneous();
        assert!((m - oracle).amax() < 1e-12, "{m} vs {oracle}");
    }
}

#[test]
fn default_posture_reaches_forward() {
    let model = KinematicModel::ur16e_on_omni_base();
    let q = KinematicModel::ur16e_default_configuration();
    let pose = model.forward_kinematics(&q).unwrap();
    assert!((pose.position - Vector3::new(0.751, 0.0, 1.0)).norm() < 2e-3);
    let tool_z = pose.orientation * Vector3::z();
    assert!((tool_z - Vector3::x()).norm() < 5e-3, "{tool_z}");
    assert!(model.manipulability(&q).unwrap() > model.w_threshold());
}

#[test]
fn jacobian_matches_central_differences() {
    let model = KinematicModel::ur16e_on_omni_base();
    let mut r = rng(2);
    let h = 1e-6;
    for _ in 0..100 {
        let q = random_q(&mut r);
        let jac = model.jacobian(&q).unwrap();
        for c in 0..model.dofs() {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[c] += h;
            qm[c] -= h;
            let pp = model.forward_kinematics(&qp).unwrap();
            let pm = model.forward_kinematics(&qm).unwrap();
            let dv = (pp.position - pm.position) / (2.0 * h);
            let dw = (pp.orientation * pm.orientation.inverse()).scaled_axis() / (2.0 * h);
            for i in 0..3 {
                assert!((jac[(i, c)] - dv[i]).abs() < 1e-5, "col {c} row {i}");
                assert!((jac[(3 + i, c)] - dw[i]).abs() < 1e-5, "col {c} row {}", 3 + i);
            }
        }
    }
}

#[test]
fn first_order_residual_is_quadratic() {
    let model = KinematicModel::ur16e_on_omni_base();
    let mut r = rng(3);
    for _ in 0..50 {
        let q = random_q(&mut r);
        let dir = DVector::from_fn(9, |_, _| rand::Rng::random_range(&mut r, -1.0..1.0)).normalize();
        let residual = |eps: f64| {
            let dq = &dir * eps;
            let x0 = model.forward_kinematics(&q).unwrap();
            let x1 = model.forward_kinematics(&(&q + &dq)).unwrap();
            let predicted = model.jacobian(&q).unwrap() * &dq;
            let actual = pose_error(&x1, &x0);
            (actual - predicted.fixed_rows::<6>(0)).norm()
        };
        let (r1, r2) = (residual(1e-4), residual(5e-5));
        assert!(r1 < 1e-6, "residual {r1}");
        // halving the step quarters a quadratic residual
        assert!(r2 < 0.3 * r1 + 1e-12, "{r1} {r2}");
    }
}

#[test]
fn manipulability_ignores_the_base() {
    let model = KinematicModel::ur16e_on_omni_base();
    let mut r = rng(4);
    for _ in 0..200 {
        let q = random_q(&mut r);
        let w = model.manipulability(&q).unwrap();
        let mut moved = q.clone();
        moved[0] = rand::Rng::random_range(&mut r, -5.0..5.0);
        moved[1] = rand::Rng::random_range(&mut r, -5.0..5.0);
        moved[2] = rand::Rng::random_range(&mut r, -3.0..3.0);
        assert!((model.manipulability(&moved).unwrap() - w).abs() < 1e-9);
    }
}

#[test]
fn zero_joint_rates_give_zero_twist() {
    let model = KinematicModel::ur16e_on_omni_base();
    let q = KinematicModel::ur16e_default_configuration();
    let twist = model.jacobian(&q).unwrap() * DVector::zeros(9);
    assert_eq!(twist.norm(), 0.0);
}

#[test]
fn chain_description_roundtrips_through_toml() {
    let model = KinematicModel::ur16e_on_omni_base();
    let text = toml::to_string(model.description()).unwrap();
    let back: KinematicModel = toml::from_str(&text).unwrap();
    let q = KinematicModel::ur16e_default_configuration();
    let (a, b) = (model.forward_kinematics(&q).unwrap(), back.forward_kinematics(&q).unwrap());
    assert!((a.position - b.position).norm() < 1e-12);
    assert_eq!(model, back);
}

#[test]
fn pose_integration_keeps_unit_quaternions() {
    let mut p = Pose::identity();
    let twist = cotransport::Twist::new(Vector3::new(0.1, 0.0, 0.0), Vector3::new(0.3, -0.2, 0.7));
    for _ in 0..100_000 {
        p = p.integrate(&twist, 1e-3);
    }
    assert!((p.orientation.quaternion().norm() - 1.0).abs() < 1e-9);
}
