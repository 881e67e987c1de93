//! Simulation and analysis of a slow-fast learning model: a FitzHugh–Nagumo
//! fast layer whose drive `theta1` is moved by stress-gated plasticity,
//! where stress is a smoothed "badness" of the fast dynamics.
//!
//! Three plasticity modes are available: pure gradient descent on a radial
//! potential, the same gradient plus a rotational (curl) term, and an
//! externally imposed constant-rate sweep.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod config;
pub mod coupled_system;
pub mod error;
pub mod fast_layer;
pub mod health;
pub mod integrator;
pub mod output;
pub mod plasticity;
pub mod reducibility;

pub use config::{GateChoice, RunConfig, Scenario};
pub use coupled_system::{
    detect_switches, run_scenario, RunResult, RunSummary, Simulation, SwitchEvent, SystemState,
    TrajectoryRow,
};
pub use error::{Error, Result};
pub use fast_layer::{bifurcation_scan, FastState, FhnParams, RegimeLabel, ScanConfig, ScanResult};
pub use health::{BadnessWeights, HealthWindow, Indicators, StressState};
pub use integrator::{integrate, rk4_step, StateVector};
pub use plasticity::{GateKind, PlasticityConfig, PlasticityMode, StructParams};
