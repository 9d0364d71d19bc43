use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal virtual mass [kg] and damping [Ns/m] per translational axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmittanceParams {
    pub mass: [f64; 3],
    pub damping: [f64; 3],
}

impl Default for AdmittanceParams {
    fn default() -> Self {
        Self {
            mass: [6.0; 3],
            damping: [30.0; 3],
        }
    }
}

impl AdmittanceParams {
    pub fn issues(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.mass.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
            out.push("admittance.mass: diagonal entries must be positive".into());
        }
        if self.damping.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            out.push("admittance.damping: diagonal entries must be positive".into());
        }
        out
    }
}

/// One zero-order-hold step of `M v̇ + D v = F` per axis:
/// `v⁺ = e^{-(D/M) dt} v + (1 - e^{-(D/M) dt}) F / D`.
pub fn admittance_step(
    force: &Vector3<f64>,
    v_prev: &Vector3<f64>,
    dt: f64,
    params: &AdmittanceParams,
) -> Result<Vector3<f64>> {
    if !force.iter().all(|f| f.is_finite()) {
        return Err(Error::NonFiniteForce([force.x, force.y, force.z]));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    Ok(Vector3::from_fn(|i, _| {
        let decay = (-params.damping[i] / params.mass[i] * dt).exp();
        decay * v_prev[i] + (1.0 - decay) * force[i] / params.damping[i]
    }))
}

/// Stateful admittance filter producing `v_adm` from the measured force.
#[derive(Clone, Debug)]
pub struct Admittance {
    params: AdmittanceParams,
    velocity: Vector3<f64>,
}

impl Admittance {
    pub fn new(params: AdmittanceParams) -> Self {
        Self {
            params,
            velocity: Vector3::zeros(),
        }
    }

    pub fn velocity(&self) -> Vector3<f64> {
        self.velocity
    }

    pub fn step(&mut self, force: &Vector3<f64>, dt: f64) -> Result<Vector3<f64>> {
        self.velocity = admittance_step(force, &self.velocity, dt, &self.params)?;
        Ok(self.velocity)
    }
}
