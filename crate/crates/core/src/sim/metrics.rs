//! Task metrics computed from a simulation trace.

use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::config::{AttachmentOffsets, IntervalConfig};
use super::trace::TraceRecord;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub name: String,
    pub start: f64,
    pub end: f64,
    pub samples: usize,
    pub mean_alpha: f64,
    pub mean_force: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: String,
    pub controller: String,
    pub completed: bool,
    /// Time from the first human motion to the last waypoint [s].
    pub t_c: Option<f64>,
    /// Mean relative displacement between the attachment points [m].
    pub d_am: f64,
    /// Mean adaptive index over samples where the hand moves.
    pub mean_alpha: f64,
    pub max_ee_displacement: f64,
    pub final_time: f64,
    pub waypoint_times: Vec<f64>,
    pub rotations: usize,
    pub intervals: Vec<IntervalStats>,
}

impl Metrics {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("metrics serialize")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    /// One-line summary.
    pub fn summary(&self) -> String {
        let t_c = self.t_c.map_or("none".to_string(), |t| format!("{t:.3}"));
        format!(
            "completed={} t_c={} d_am={:.5} mean_alpha={:.4}",
            self.completed, t_c, self.d_am, self.mean_alpha
        )
    }
}

fn marker_gap(r: &TraceRecord, att: &AttachmentOffsets) -> Vector3<f64> {
    let robot = r.ee_pose.position + r.ee_pose.orientation * Vector3::from(att.robot);
    let human = r.hand_pose.position + r.hand_pose.orientation * Vector3::from(att.human);
    robot - human
}

/// Time-averaged deviation of the robot-to-human marker vector from its
/// value in the first record.
pub fn alignment_metric(records: &[TraceRecord], attachments: &AttachmentOffsets) -> Result<f64> {
    let first = records
        .first()
        .ok_or_else(|| Error::Metrics("alignment metric needs at least two samples".into()))?;
    alignment_metric_with_reference(records, attachments, marker_gap(first, attachments))
}

/// As [`alignment_metric`] with an explicit reference marker vector.
pub fn alignment_metric_with_reference(
    records: &[TraceRecord],
    attachments: &AttachmentOffsets,
    reference: Vector3<f64>,
) -> Result<f64> {
    if records.len() < 2 {
        return Err(Error::Metrics("alignment metric needs at least two samples".into()));
    }
    let span = records[records.len() - 1].t - records[0].t;
    if !(span > 0.0) {
        return Err(Error::Metrics("alignment metric needs a positive time span".into()));
    }
    let dev: Vec<f64> = records.iter().map(|r| (marker_gap(r, attachments) - reference).norm()).collect();
    let area: f64 = records
        .windows(2)
        .zip(dev.windows(2))
        .map(|(r, d)| 0.5 * (d[0] + d[1]) * (r[1].t - r[0].t))
        .sum();
    Ok(area / span)
}

/// Mean adaptive index and mean force magnitude per interval name, over the
/// union of that name's `[start, end)` spans on the script clock.
pub fn interval_stats(records: &[TraceRecord], intervals: &[IntervalConfig]) -> Result<Vec<IntervalStats>> {
    let mut names: Vec<&str> = Vec::new();
    for iv in intervals {
        if !names.contains(&iv.name.as_str()) {
            names.push(&iv.name);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let spans: Vec<&IntervalConfig> = intervals.iter().filter(|iv| iv.name == name).collect();
            let inside = |t: f64| spans.iter().any(|iv| t >= iv.start && t < iv.end);
            let (mut n, mut alpha, mut force) = (0usize, 0.0, 0.0);
            for r in records.iter().filter(|r| inside(r.script_t)) {
                n += 1;
                alpha += r.alpha;
                force += r.force.norm();
            }
            if n == 0 {
                return Err(Error::Metrics(format!("interval `{name}` contains no samples")));
            }
            Ok(IntervalStats {
                name: name.to_string(),
                start: spans.iter().map(|iv| iv.start).fold(f64::INFINITY, f64::min),
                end: spans.iter().map(|iv| iv.end).fold(f64::NEG_INFINITY, f64::max),
                samples: n,
                mean_alpha: alpha / n as f64,
                mean_force: force / n as f64,
            })
        })
        .collect()
}

/// Mean adaptive index over records whose measured hand speed exceeds
/// `speed`; zero when there are none.
pub fn moving_mean_alpha(records: &[TraceRecord], speed: f64) -> f64 {
    let (n, sum) = records
        .iter()
        .filter(|r| r.hand_velocity.norm() > speed)
        .fold((0usize, 0.0), |(n, s), r| (n + 1, s + r.alpha));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn max_ee_displacement(records: &[TraceRecord]) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    records
        .iter()
        .map(|r| (r.ee_pose.position - first.ee_pose.position).norm())
        .fold(0.0, f64::max)
}
