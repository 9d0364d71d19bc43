//! Object translation unit: the adaptive index `α` and the blended velocity.

use std::collections::VecDeque;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdaptiveIndexParams {
    /// Sliding window length `W_l` [s].
    pub window: f64,
    /// Regularizer in the denominator [m].
    pub epsilon: f64,
    /// Window displacement below which both signals count as "at rest" [m].
    pub deadband: f64,
    /// Index before the first informative window.
    pub initial_alpha: f64,
}

impl Default for AdaptiveIndexParams {
    fn default() -> Self {
        Self {
            window: 0.25,
            epsilon: 1e-4,
            deadband: 1e-4,
            initial_alpha: 0.0,
        }
    }
}

impl AdaptiveIndexParams {
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.window > 0.0) {
            out.push("aci.index.window: must be positive".into());
        }
        if !(self.epsilon > 0.0) {
            out.push("aci.index.epsilon: must be positive".into());
        }
        if !(self.deadband >= 0.0) {
            out.push("aci.index.deadband: must be non-negative".into());
        }
        if !(0.0..=1.0).contains(&self.initial_alpha) {
            out.push("aci.index.initial_alpha: must lie in [0, 1]".into());
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Sample {
    t: f64,
    v_adm: Vector3<f64>,
    v_h: Vector3<f64>,
}

/// `α = clamp(1 - ||∫v_adm|| / (||∫v_h|| + ε), 0, 1)` over the trailing window.
#[derive(Clone, Debug)]
pub struct AdaptiveIndex {
    params: AdaptiveIndexParams,
    window: VecDeque<Sample>,
    alpha: f64,
}

impl AdaptiveIndex {
    pub fn new(params: AdaptiveIndexParams) -> Self {
        Self {
            alpha: params.initial_alpha,
            params,
            window: VecDeque::new(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn params(&self) -> &AdaptiveIndexParams {
        &self.params
    }

    /// Window displacements `(d_adm, d_h)` by trapezoidal integration.
    pub fn displacements(&self) -> (f64, f64) {
        let mut adm = Vector3::zeros();
        let mut hand = Vector3::zeros();
        for (a, b) in self.window.iter().zip(self.window.iter().skip(1)) {
            let h = 0.5 * (b.t - a.t);
            adm += (a.v_adm + b.v_adm) * h;
            hand += (a.v_h + b.v_h) * h;
        }
        (adm.norm(), hand.norm())
    }

    /// Pushes the sample taken at `t`, drops samples older than `t - W_l`
    /// and returns the updated index. Samples must arrive in time order.
    pub fn update(&mut self, t: f64, v_adm: Vector3<f64>, v_h: Vector3<f64>) -> f64 {
        debug_assert!(self.window.back().is_none_or(|s| s.t <= t), "samples out of order");
        self.window.push_back(Sample { t, v_adm, v_h });
        let horizon = t - self.params.window;
        while self.window.front().is_some_and(|s| s.t < horizon) {
            self.window.pop_front();
        }
        let (d_adm, d_h) = self.displacements();
        if d_adm < self.params.deadband && d_h < self.params.deadband {
            return self.alpha;
        }
        self.alpha = index_from_displacements(d_adm, d_h, self.params.epsilon);
        self.alpha
    }
}

/// Saturated index for given window displacements.
pub fn index_from_displacements(d_adm: f64, d_h: f64, epsilon: f64) -> f64 {
    (1.0 - d_adm / (d_h + epsilon)).clamp(0.0, 1.0)
}

/// `v_trans = v_adm + α v_h`.
pub fn object_translation(v_adm: &Vector3<f64>, v_h: &Vector3<f64>, alpha: f64) -> Vector3<f64> {
    v_adm + v_h * alpha
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regimes_from_displacements() {
        let eps = 1e-4;
        // rope: no admittance displacement
        assert!((index_from_displacements(0.0, 0.1, eps) - 1.0).abs() < 1e-15);
        // rigid: equal displacements
        let a = index_from_displacements(0.1, 0.1, eps);
        assert!((a - eps / (0.1 + eps)).abs() < 1e-15 && a < 1e-3);
        let a = index_from_displacements(0.3, 0.6, eps);
        assert!((a - (1.0 - 0.3 / 0.6001)).abs() < 1e-15);
        assert!((a - 0.5001).abs() < 1e-4);
        assert_eq!(index_from_displacements(0.6, 0.3, eps), 0.0);
    }

    #[test]
    fn blend() {
        let v_adm = Vector3::new(0.1, 0.0, 0.0);
        let v_h = Vector3::new(0.2, 0.0, 0.0);
        assert_eq!(object_translation(&v_adm, &v_h, 0.0), v_adm);
        assert_eq!(object_translation(&v_adm, &v_h, 0.5), Vector3::new(0.2, 0.0, 0.0));
        assert_eq!(object_translation(&Vector3::zeros(), &v_h, 1.0), v_h);
    }

    #[test]
    fn window_evicts_old_samples() {
        let mut idx = AdaptiveIndex::new(AdaptiveIndexParams::default());
        // hand moves alone for 1 s, then both move together
        for i in 0..=1000 {
            idx.update(i as f64 * 1e-3, Vector3::zeros(), Vector3::new(0.2, 0.0, 0.0));
        }
        assert!((idx.alpha() - 1.0).abs() < 1e-2);
        for i in 1001..=1400 {
            let v = Vector3::new(0.2, 0.0, 0.0);
            idx.update(i as f64 * 1e-3, v, v);
        }
        assert!(idx.alpha() < 1e-2);
        let (d_adm, d_h) = idx.displacements();
        assert!((d_adm - 0.05).abs() < 1e-9 && (d_h - 0.05).abs() < 1e-9);
    }

    #[test]
    fn alpha_holds_at_rest() {
        let mut idx = AdaptiveIndex::new(AdaptiveIndexParams::default());
        for i in 0..500 {
            idx.update(i as f64 * 1e-3, Vector3::zeros(), Vector3::new(0.0, 0.1, 0.0));
        }
        let before = idx.alpha();
        assert!(before > 0.99);
        for i in 500..1500 {
            idx.update(i as f64 * 1e-3, Vector3::zeros(), Vector3::zeros());
        }
        assert_eq!(idx.alpha(), before);
    }
}
