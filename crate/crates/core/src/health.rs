//! Windowed dynamical-health indicators, badness and smoothed stress.
//!
//! Indicators live in `[0, 1]`:
//! - freeze: `exp(-kappa * mean |dx/dt|)`
//! - cycle: peak lagged autocorrelation of `u`, scaled by `1 - freeze`
//! - monotony: `exp(-gamma * R)` with `R` the summed population variance
//!   of `(u, v)` over the window

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fast_layer::{std_dev, FastState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub state: FastState,
    pub deriv: FastState,
}

/// Fixed-capacity ring buffer of uniformly spaced samples.
#[derive(Debug, Clone)]
pub struct HealthWindow {
    buf: VecDeque<Sample>,
    capacity: usize,
    dt_sample: f64,
}

impl HealthWindow {
    /// Capacity is `ceil(t_r / dt_sample)`.
    pub fn new(t_r: f64, dt_sample: f64) -> Result<Self> {
        if !(dt_sample > 0.0) || !(t_r >= dt_sample) {
            return Err(Error::config(
                "t_r/dt_sample",
                format!("need 0 < dt_sample <= t_r, got {dt_sample} / {t_r}"),
            ));
        }
        // guard against 100/0.5 = 200.00000000000003 style round-up
        let capacity = ((t_r / dt_sample) - 1e-9).ceil() as usize;
        Ok(Self::with_capacity(capacity, dt_sample))
    }

    pub fn with_capacity(capacity: usize, dt_sample: f64) -> Self {
        HealthWindow {
            buf: VecDeque::with_capacity(capacity),
            capacity,
            dt_sample,
        }
    }

    pub fn push(&mut self, sample: Sample) {
        if self.buf.len() == self.capacity {
            self.buf.pop_front();
        }
        self.buf.push_back(sample);
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.buf.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn dt_sample(&self) -> f64 {
        self.dt_sample
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &Sample> + Clone {
        self.buf.iter()
    }

    pub fn states(&self) -> Vec<FastState> {
        self.buf.iter().map(|s| s.state).collect()
    }

    pub fn std_u(&self) -> f64 {
        std_dev(self.buf.iter().map(|s| s.state.u))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Indicators {
    pub m_freeze: f64,
    pub m_cycle: f64,
    pub m_mono: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BadnessWeights {
    pub w_f: f64,
    pub w_c: f64,
    pub w_m: f64,
}

impl BadnessWeights {
    pub fn total(&self) -> f64 {
        self.w_f + self.w_c + self.w_m
    }

    pub fn validate(&self) -> Result<()> {
        if self.w_f < 0.0 || self.w_c < 0.0 || self.w_m < 0.0 || !(self.total() > 0.0) {
            return Err(Error::config(
                "weights",
                "must be nonnegative with positive sum",
            ));
        }
        Ok(())
    }
}

/// Window statistics settings. Lags are in samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HealthConfig {
    pub gamma: f64,
    pub kappa: f64,
    pub lag_min: usize,
    pub lag_max: usize,
    /// Variance of `u` below which the cycle score is zero.
    pub var_eps: f64,
}

impl Default for HealthConfig {
    fn default() -> Self {
        HealthConfig {
            gamma: 1.0,
            kappa: 4.0,
            lag_min: 10,
            lag_max: 100,
            var_eps: 1e-8,
        }
    }
}

/// Summed population variance of `u` and `v` over the window.
pub fn activity_variance(w: &HealthWindow) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let su = std_dev(w.samples().map(|s| s.state.u));
    let sv = std_dev(w.samples().map(|s| s.state.v));
    Ok(su * su + sv * sv)
}

pub fn monotony(r: f64, gamma: f64) -> f64 {
    (-gamma * r).exp()
}

pub fn mean_speed(w: &HealthWindow) -> Result<f64> {
    if w.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(w.samples().map(|s| s.deriv.norm()).sum::<f64>() / w.len() as f64)
}

pub fn freeze_indicator(w: &HealthWindow, kappa: f64) -> Result<f64> {
    Ok((-kappa * mean_speed(w)?).exp())
}

/// Largest lagged correlation of the mean-removed series over
/// `lag_min..=lag_max`. Each lag compares `x[..n-lag]` with `x[lag..]`,
/// normalized by the energies of both overlapping segments.
pub fn peak_autocorrelation(xs: &[f64], lag_min: usize, lag_max: usize) -> f64 {
    let n = xs.len();
    if n == 0 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = xs.iter().map(|x| x - mean).collect();
    let mut best = f64::NEG_INFINITY;
    for lag in lag_min.max(1)..=lag_max.min(n - 1) {
        let a = &c[..n - lag];
        let b = &c[lag..];
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(b) {
            ab += x * y;
            aa += x * x;
            bb += y * y;
        }
        let denom = (aa * bb).sqrt();
        if denom > 0.0 {
            best = best.max(ab / denom);
        }
    }
    if best.is_finite() {
        best
    } else {
        0.0
    }
}

/// `clamp(peak autocorrelation of u, 0, 1) * (1 - m_freeze)`. Windows with
/// fewer than `2 * lag_max` samples or near-constant `u` score zero.
pub fn cycle_indicator(w: &HealthWindow, cfg: &HealthConfig) -> Result<f64> {
    if w.len() < 2 * cfg.lag_max {
        return Ok(0.0);
    }
    let u: Vec<f64> = w.samples().map(|s| s.state.u).collect();
    let sd = std_dev(u.iter().copied());
    if sd * sd < cfg.var_eps {
        return Ok(0.0);
    }
    let m_freeze = freeze_indicator(w, cfg.kappa)?;
    let c = peak_autocorrelation(&u, cfg.lag_min, cfg.lag_max).clamp(0.0, 1.0);
    Ok(c * (1.0 - m_freeze))
}

/// Indicators plus the activity variance they were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HealthReport {
    pub indicators: Indicators,
    pub activity: f64,
}

pub fn evaluate(w: &HealthWindow, cfg: &HealthConfig) -> Result<HealthReport> {
    let activity = activity_variance(w)?;
    let indicators = Indicators {
        m_freeze: freeze_indicator(w, cfg.kappa)?,
        m_cycle: cycle_indicator(w, cfg)?,
        m_mono: monotony(activity, cfg.gamma),
    };
    Ok(HealthReport {
        indicators,
        activity,
    })
}

pub fn badness(m: &Indicators, w: &BadnessWeights) -> f64 {
    w.w_f * m.m_freeze + w.w_c * m.m_cycle + w.w_m * m.m_mono
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressState {
    pub s: f64,
    pub tau_s: f64,
    pub s_c: f64,
}

impl StressState {
    pub fn new(s: f64, tau_s: f64, s_c: f64) -> Result<Self> {
        if !(tau_s > 0.0) {
            return Err(Error::config("tau_s", "must be positive"));
        }
        if !(s_c > 0.0) {
            return Err(Error::config("s_c", "must be positive"));
        }
        if !(s >= 0.0) {
            return Err(Error::config("s0", "must be nonnegative"));
        }
        Ok(StressState { s, tau_s, s_c })
    }
}

/// Exact update of `dS/dt = (B - S) / tau_s` over `dt` with `B` held.
pub fn stress_step(st: StressState, b: f64, dt: f64) -> Result<StressState> {
    if !(dt > 0.0 && dt < st.tau_s) {
        return Err(Error::config(
            "dt_sample",
            format!(
                "stress step {dt} must satisfy 0 < dt < tau_s = {}",
                st.tau_s
            ),
        ));
    }
    let decay = (-dt / st.tau_s).exp();
    Ok(StressState {
        s: b + (st.s - b) * decay,
        ..st
    })
}
