//! Per-tick simulation records and their CSV form.

use std::io::Write;
use std::path::Path;

use nalgebra::{DVector, Vector3};

use crate::error::{Error, Result};
use crate::kinematics::{Pose, Twist};

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    /// Position on the human's script clock.
    pub script_t: f64,
    pub q: DVector<f64>,
    pub qdot: DVector<f64>,
    pub ee_pose: Pose,
    pub ee_twist: Twist,
    pub x_d: Pose,
    pub xdot_d: Twist,
    /// Force the object applies to the EE.
    pub force: Vector3<f64>,
    pub hand_pose: Pose,
    /// Measured hand velocity.
    pub hand_velocity: Vector3<f64>,
    pub v_adm: Vector3<f64>,
    pub v_trans: Vector3<f64>,
    pub alpha: f64,
    pub zeta: bool,
    pub torso_yaw: f64,
    pub torso_rate: f64,
    pub manipulability: f64,
    pub damping: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

fn pose_columns(prefix: &str, out: &mut Vec<String>) {
    for c in ["x", "y", "z", "qw", "qx", "qy", "qz"] {
        out.push(format!("{prefix}_{c}"));
    }
}

fn vec_columns(prefix: &str, axes: &[&str], out: &mut Vec<String>) {
    for c in axes {
        out.push(format!("{prefix}_{c}"));
    }
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Records with `start <= t <= end`.
    pub fn window(&self, start: f64, end: f64) -> &[TraceRecord] {
        let lo = self.records.partition_point(|r| r.t < start);
        let hi = self.records.partition_point(|r| r.t <= end);
        &self.records[lo..hi.max(lo)]
    }

    pub fn header(dofs: usize) -> Vec<String> {
        let mut h = vec!["t".to_string(), "script_t".to_string()];
        for i in 0..dofs {
            h.push(format!("q{i}"));
        }
        for i in 0..dofs {
            h.push(format!("qdot{i}"));
        }
        pose_columns("ee", &mut h);
        vec_columns("ee_v", &["x", "y", "z"], &mut h);
        vec_columns("ee_w", &["x", "y", "z"], &mut h);
        pose_columns("xd", &mut h);
        vec_columns("xd_v", &["x", "y", "z"], &mut h);
        vec_columns("xd_w", &["x", "y", "z"], &mut h);
        vec_columns("f", &["x", "y", "z"], &mut h);
        pose_columns("hand", &mut h);
        vec_columns("vh", &["x", "y", "z"], &mut h);
        vec_columns("vadm", &["x", "y", "z"], &mut h);
        vec_columns("vtrans", &["x", "y", "z"], &mut h);
        for c in ["alpha", "zeta", "torso_yaw", "torso_rate", "manipulability", "damping"] {
            h.push(c.to_string());
        }
        h
    }

    fn row(r: &TraceRecord) -> Vec<f64> {
        let mut row = vec![r.t, r.script_t];
        row.extend(r.q.iter());
        row.extend(r.qdot.iter());
        row.extend(r.ee_pose.to_array());
        row.extend(r.ee_twist.to_vector().iter());
        row.extend(r.x_d.to_array());
        row.extend(r.xdot_d.to_vector().iter());
        row.extend(r.force.iter());
        row.extend(r.hand_pose.to_array());
        row.extend(r.hand_velocity.iter());
        row.extend(r.v_adm.iter());
        row.extend(r.v_trans.iter());
        row.extend([
            r.alpha,
            if r.zeta { 1.0 } else { 0.0 },
            r.torso_yaw,
            r.torso_rate,
            r.manipulability,
            r.damping,
        ]);
        row
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let dofs = self.records.first().map_or(0, |r| r.q.len());
        w.write_record(Self::header(dofs))?;
        for r in &self.records {
            w.write_record(Self::row(r).iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, std::io::Error::other(e)))
    }
}
