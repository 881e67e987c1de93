//! Slow structural dynamics of `theta = (theta1, theta2)`.
//!
//! The stabilizing potential is radial, `U = k/2 (rho - rho0)^2`, and the
//! rotational component is `omega * (-theta2, theta1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this radius the potential gradient is taken to be zero.
pub const RHO_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StructParams {
    pub theta1: f64,
    pub theta2: f64,
}

impl StructParams {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        StructParams { theta1, theta2 }
    }

    pub fn from_polar(rho: f64, phi: f64) -> Self {
        StructParams::new(rho * phi.cos(), rho * phi.sin())
    }

    pub fn rho(&self) -> f64 {
        self.theta1.hypot(self.theta2)
    }

    /// Angle in `(-pi, pi]`.
    pub fn phi(&self) -> f64 {
        self.theta2.atan2(self.theta1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlasticityMode {
    GradientOnly,
    CurlAugmented,
    ExternalSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    Hard,
    Smooth { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticityConfig {
    pub mode: PlasticityMode,
    pub eta: f64,
    pub omega: f64,
    pub k: f64,
    pub rho0: f64,
    pub s_c: f64,
    pub gate_kind: GateKind,
    pub omega_sweep: f64,
}

impl PlasticityConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0) {
            return Err(Error::config("rho0", "must be positive"));
        }
        if !(self.k > 0.0) {
            return Err(Error::config("k", "must be positive"));
        }
        if !(self.eta > 0.0) {
            return Err(Error::config("eta", "must be positive"));
        }
        if !(self.s_c > 0.0) {
            return Err(Error::config("s_c", "must be positive"));
        }
        if !self.omega.is_finite() || !self.omega_sweep.is_finite() {
            return Err(Error::config("omega", "must be finite"));
        }
        if let GateKind::Smooth { beta } = self.gate_kind {
            if !(beta > 0.0) {
                return Err(Error::config("gate_beta", "must be positive"));
            }
        }
        Ok(())
    }
}

pub fn potential_u(t: StructParams, k: f64, rho0: f64) -> f64 {
    let d = t.rho() - rho0;
    0.5 * k * d * d
}

pub fn grad_u(t: StructParams, k: f64, rho0: f64) -> [f64; 2] {
    let rho = t.rho();
    if rho < RHO_EPS {
        return [0.0, 0.0];
    }
    let s = k * (rho - rho0) / rho;
    [s * t.theta1, s * t.theta2]
}

pub fn curl_field(t: StructParams, omega: f64) -> [f64; 2] {
    [-omega * t.theta2, omega * t.theta1]
}

/// Hard gates are closed at `s == s_c`.
pub fn gate(s: f64, cfg: &PlasticityConfig) -> f64 {
    match cfg.gate_kind {
        GateKind::Hard => {
            if s > cfg.s_c {
                1.0
            } else {
                0.0
            }
        }
        GateKind::Smooth { beta } => 1.0 / (1.0 + (-beta * (s - cfg.s_c)).exp()),
    }
}

/// `theta` velocity for an already evaluated gate value. ExternalSweep
/// ignores the gate.
pub fn plasticity_rhs_gated(t: StructParams, gate_value: f64, cfg: &PlasticityConfig) -> [f64; 2] {
    let g = grad_u(t, cfg.k, cfg.rho0);
    match cfg.mode {
        PlasticityMode::GradientOnly => {
            [-gate_value * cfg.eta * g[0], -gate_value * cfg.eta * g[1]]
        }
        PlasticityMode::CurlAugmented => {
            let r = curl_field(t, cfg.omega);
            [
                gate_value * (-cfg.eta * g[0] + r[0]),
                gate_value * (-cfg.eta * g[1] + r[1]),
            ]
        }
        PlasticityMode::ExternalSweep => {
            let r = curl_field(t, cfg.omega_sweep);
            [-cfg.eta * g[0] + r[0], -cfg.eta * g[1] + r[1]]
        }
    }
}

pub fn plasticity_rhs(t: StructParams, s: f64, cfg: &PlasticityConfig) -> [f64; 2] {
    plasticity_rhs_gated(t, gate(s, cfg), cfg)
}
