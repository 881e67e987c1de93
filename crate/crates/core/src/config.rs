//! Flat run configuration with defaults for every field.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fast_layer::{ClassifierConfig, FastState, FhnParams};
use crate::health::{BadnessWeights, HealthConfig};
use crate::plasticity::{GateKind, PlasticityConfig, PlasticityMode, StructParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Reducible,
    Irreducible,
    Swept,
}

impl Scenario {
    pub fn mode(self) -> PlasticityMode {
        match self {
            Scenario::Reducible => PlasticityMode::GradientOnly,
            Scenario::Irreducible => PlasticityMode::CurlAugmented,
            Scenario::Swept => PlasticityMode::ExternalSweep,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Reducible => "reducible",
            Scenario::Irreducible => "irreducible",
            Scenario::Swept => "swept",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reducible" => Ok(Scenario::Reducible),
            "irreducible" => Ok(Scenario::Irreducible),
            "swept" => Ok(Scenario::Swept),
            other => Err(Error::config(
                "scenario",
                format!("unknown scenario {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateChoice {
    Hard,
    Smooth,
}

/// Every tunable constant of a run. Times are in model time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub horizon: f64,
    pub dt: f64,
    pub dt_sample: f64,
    pub dt_out: f64,

    pub a: f64,
    pub b: f64,
    pub epsilon: f64,

    pub t_r: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub lag_min: f64,
    pub lag_max: f64,
    pub w_f: f64,
    pub w_c: f64,
    pub w_m: f64,
    pub tau_s: f64,
    pub s_c: f64,

    pub eta: f64,
    pub omega: f64,
    pub k: f64,
    pub rho0: f64,
    pub gate: GateChoice,
    pub gate_beta: f64,
    pub omega_sweep: f64,

    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub dwell_min: f64,

    pub u0: f64,
    pub v0: f64,
    pub theta1_0: f64,
    pub theta2_0: f64,
    pub s0: f64,

    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: Scenario::Irreducible,
            horizon: 20_000.0,
            dt: 0.02,
            dt_sample: 0.5,
            dt_out: 0.5,

            a: 0.7,
            b: 0.8,
            epsilon: 0.08,

            t_r: 100.0,
            gamma: 1.0,
            kappa: 4.0,
            lag_min: 5.0,
            lag_max: 50.0,
            w_f: 0.5,
            w_c: 2.0,
            w_m: 0.5,
            tau_s: 50.0,
            s_c: 0.98,

            eta: 0.05,
            omega: 0.01,
            k: 1.0,
            rho0: 0.8,
            gate: GateChoice::Hard,
            gate_beta: 20.0,
            omega_sweep: 0.0007,

            sigma_lo: 0.15,
            sigma_hi: 0.35,
            dwell_min: 300.0,

            u0: 0.0,
            v0: 0.0,
            theta1_0: 0.2,
            theta2_0: 0.0,
            s0: 0.0,

            output_dir: PathBuf::from("out"),
        }
    }
}

/// `x / unit` when it is (numerically) a positive integer.
fn ratio(field: &str, x: f64, unit: f64) -> Result<usize> {
    let r = x / unit;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::config(
            field,
            format!("{x} must be a positive multiple of {unit}"),
        ));
    }
    Ok(n as usize)
}

impl RunConfig {
    pub fn for_scenario(scenario: Scenario) -> Self {
        RunConfig {
            scenario,
            ..Default::default()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    pub fn fhn(&self) -> FhnParams {
        FhnParams {
            a: self.a,
            b: self.b,
            epsilon: self.epsilon,
            theta1: self.theta1_0,
        }
    }

    pub fn weights(&self) -> BadnessWeights {
        BadnessWeights {
            w_f: self.w_f,
            w_c: self.w_c,
            w_m: self.w_m,
        }
    }

    pub fn health(&self) -> HealthConfig {
        HealthConfig {
            gamma: self.gamma,
            kappa: self.kappa,
            lag_min: (self.lag_min / self.dt_sample).round() as usize,
            lag_max: (self.lag_max / self.dt_sample).round() as usize,
            ..Default::default()
        }
    }

    pub fn classifier(&self) -> ClassifierConfig {
        ClassifierConfig {
            sigma_lo: self.sigma_lo,
            sigma_hi: self.sigma_hi,
            min_samples: self.window_capacity(),
        }
    }

    pub fn window_capacity(&self) -> usize {
        ((self.t_r / self.dt_sample) - 1e-9).ceil() as usize
    }

    pub fn plasticity(&self) -> PlasticityConfig {
        PlasticityConfig {
            mode: self.scenario.mode(),
            eta: self.eta,
            omega: self.omega,
            k: self.k,
            rho0: self.rho0,
            s_c: self.s_c,
            gate_kind: match self.gate {
                GateChoice::Hard => GateKind::Hard,
                GateChoice::Smooth => GateKind::Smooth {
                    beta: self.gate_beta,
                },
            },
            omega_sweep: self.omega_sweep,
        }
    }

    pub fn initial_fast(&self) -> FastState {
        FastState::new(self.u0, self.v0)
    }

    pub fn initial_theta(&self) -> StructParams {
        StructParams::new(self.theta1_0, self.theta2_0)
    }

    pub fn steps_per_sample(&self) -> usize {
        ratio("dt_sample", self.dt_sample, self.dt).unwrap_or(1)
    }

    pub fn steps_per_output(&self) -> usize {
        ratio("dt_out", self.dt_out, self.dt).unwrap_or(1)
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Field-level checks; runs before any integration.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("horizon", self.horizon),
            ("dt", self.dt),
            ("u0", self.u0),
            ("v0", self.v0),
            ("theta1_0", self.theta1_0),
            ("theta2_0", self.theta2_0),
            ("s0", self.s0),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
        ];
        for (name, x) in finite {
            if !x.is_finite() {
                return Err(Error::config(name, "must be finite"));
            }
        }
        if !(self.horizon > 0.0) {
            return Err(Error::config("horizon", "must be positive"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::config("dt", "must be positive"));
        }
        ratio("dt_sample", self.dt_sample, self.dt)?;
        ratio("dt_out", self.dt_out, self.dt)?;
        ratio("horizon", self.horizon, self.dt)?;
        if !(self.dt_sample < self.tau_s) {
            return Err(Error::config(
                "tau_s",
                format!("must exceed dt_sample = {}", self.dt_sample),
            ));
        }
        if !(self.dt < self.tau_s) {
            return Err(Error::config(
                "dt",
                format!("must be below tau_s = {}", self.tau_s),
            ));
        }
        if !(self.t_r >= self.dt_sample) {
            return Err(Error::config("t_r", "must be at least dt_sample"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::config("gamma", "must be positive"));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::config("kappa", "must be positive"));
        }
        let h = self.health();
        if h.lag_min < 1 || h.lag_min > h.lag_max {
            return Err(Error::config(
                "lag_min/lag_max",
                "need dt_sample <= lag_min <= lag_max",
            ));
        }
        if 2 * h.lag_max > self.window_capacity() {
            return Err(Error::config(
                "lag_max",
                "window must hold at least 2 * lag_max samples",
            ));
        }
        if !(self.dwell_min >= 0.0) {
            return Err(Error::config("dwell_min", "must be nonnegative"));
        }
        if !(self.s0 >= 0.0) {
            return Err(Error::config("s0", "must be nonnegative"));
        }
        self.fhn().validate()?;
        self.weights().validate()?;
        self.classifier().validate()?;
        self.plasticity().validate()?;
        Ok(())
    }
}
