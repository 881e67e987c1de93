//! FitzHugh–Nagumo fast subsystem, windowed regime labels, and an offline
//! amplitude-based bifurcation scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Rk4;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FastState {
    pub u: f64,
    pub v: f64,
}

impl FastState {
    pub fn new(u: f64, v: f64) -> Self {
        FastState { u, v }
    }

    pub fn norm(&self) -> f64 {
        self.u.hypot(self.v)
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

/// Shape parameters `a`, `b`, `epsilon` plus the external drive `theta1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhnParams {
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub theta1: f64,
}

impl Default for FhnParams {
    fn default() -> Self {
        FhnParams {
            a: 0.7,
            b: 0.8,
            epsilon: 0.08,
            theta1: 0.0,
        }
    }
}

impl FhnParams {
    pub const EPSILON_MAX: f64 = 0.2;

    pub fn with_theta1(self, theta1: f64) -> Self {
        FhnParams { theta1, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= Self::EPSILON_MAX) {
            return Err(Error::config(
                "epsilon",
                format!(
                    "must lie in (0, {}], got {}",
                    Self::EPSILON_MAX,
                    self.epsilon
                ),
            ));
        }
        if !(self.b > 0.0) {
            return Err(Error::config(
                "b",
                format!("must be positive, got {}", self.b),
            ));
        }
        if !(self.a.is_finite() && self.theta1.is_finite()) {
            return Err(Error::config("a/theta1", "must be finite"));
        }
        Ok(())
    }
}

/// `(u - u^3/3 - v + theta1, epsilon (u + a - b v))`
#[inline]
pub fn fhn_rhs(s: FastState, p: &FhnParams) -> FastState {
    FastState {
        u: s.u - s.u * s.u * s.u / 3.0 - s.v + p.theta1,
        v: p.epsilon * (s.u + p.a - p.b * s.v),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    Quiescent,
    Oscillatory,
    Transitional,
}

impl RegimeLabel {
    /// Single-letter code used in CSV and event output.
    pub fn code(self) -> char {
        match self {
            RegimeLabel::Quiescent => 'Q',
            RegimeLabel::Oscillatory => 'O',
            RegimeLabel::Transitional => 'T',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'Q' => Some(RegimeLabel::Quiescent),
            'O' => Some(RegimeLabel::Oscillatory),
            'T' => Some(RegimeLabel::Transitional),
            _ => None,
        }
    }

    /// Quiescent and Oscillatory are regimes; Transitional is not.
    pub fn is_regime(self) -> bool {
        !matches!(self, RegimeLabel::Transitional)
    }
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// Thresholds on the windowed standard deviation of `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierConfig {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// Windows with fewer samples classify as Transitional.
    pub min_samples: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            sigma_lo: 0.15,
            sigma_hi: 0.35,
            min_samples: 200,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_lo >= 0.0 && self.sigma_lo < self.sigma_hi) {
            return Err(Error::config(
                "sigma_lo/sigma_hi",
                format!(
                    "need 0 <= sigma_lo < sigma_hi, got {} / {}",
                    self.sigma_lo, self.sigma_hi
                ),
            ));
        }
        Ok(())
    }
}

/// Population standard deviation. Values are shifted by the first sample
/// first, so a constant series gives exactly zero.
pub(crate) fn std_dev<I: ExactSizeIterator<Item = f64> + Clone>(xs: I) -> f64 {
    let n = xs.len();
    let Some(x0) = xs.clone().next() else {
        return 0.0;
    };
    let mean = xs.clone().map(|x| x - x0).sum::<f64>() / n as f64;
    let ss: f64 = xs.map(|x| (x - x0 - mean) * (x - x0 - mean)).sum();
    (ss / n as f64).sqrt()
}

/// Label from a standard deviation of `u`. The band `[sigma_lo, sigma_hi]`
/// separates the regimes: a Quiescent/Oscillatory flip needs the whole band
/// crossed, and values inside the band are Transitional.
pub fn classify_std(std_u: f64, cfg: &ClassifierConfig) -> RegimeLabel {
    if std_u < cfg.sigma_lo {
        RegimeLabel::Quiescent
    } else if std_u > cfg.sigma_hi {
        RegimeLabel::Oscillatory
    } else {
        RegimeLabel::Transitional
    }
}

pub fn classify_regime(window: &[FastState], cfg: &ClassifierConfig) -> RegimeLabel {
    if window.len() < cfg.min_samples.max(1) {
        return RegimeLabel::Transitional;
    }
    classify_std(std_dev(window.iter().map(|s| s.u)), cfg)
}

/// Settings for the offline amplitude scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    pub burn_in: f64,
    pub measure: f64,
    pub dt: f64,
    pub amp_threshold: f64,
    pub initial: FastState,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            burn_in: 500.0,
            measure: 500.0,
            dt: 0.02,
            amp_threshold: 1.0,
            initial: FastState::new(0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub theta1: f64,
    pub label: RegimeLabel,
    /// Peak-to-peak `u` over the measurement interval.
    pub amplitude: f64,
}

/// Adjacent grid points whose labels differ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub lo: f64,
    pub hi: f64,
    pub from: RegimeLabel,
    pub to: RegimeLabel,
}

impl Boundary {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub points: Vec<ScanPoint>,
    pub boundaries: Vec<Boundary>,
}

impl ScanResult {
    /// All Quiescent→Oscillatory boundaries, in increasing `theta1`.
    pub fn onsets(&self) -> Vec<Boundary> {
        self.boundaries
            .iter()
            .filter(|b| b.from == RegimeLabel::Quiescent && b.to == RegimeLabel::Oscillatory)
            .copied()
            .collect()
    }
}

/// Peak-to-peak `u` after burn-in at fixed `theta1`.
pub fn asymptotic_amplitude(p: &FhnParams, cfg: &ScanConfig) -> Result<f64> {
    let burn = (cfg.burn_in / cfg.dt).round() as usize;
    let meas = (cfg.measure / cfg.dt).round() as usize;
    let mut rk = Rk4::new(2);
    let mut x = [cfg.initial.u, cfg.initial.v];
    let mut field = |s: &[f64], d: &mut [f64]| {
        let r = fhn_rhs(FastState::new(s[0], s[1]), p);
        d[0] = r.u;
        d[1] = r.v;
    };
    for k in 0..burn {
        rk.step_in_place(&mut field, &mut x, cfg.dt, k + 1)?;
    }
    let (mut lo, mut hi) = (x[0], x[0]);
    for k in 0..meas {
        rk.step_in_place(&mut field, &mut x, cfg.dt, burn + k + 1)?;
        lo = lo.min(x[0]);
        hi = hi.max(x[0]);
    }
    Ok(hi - lo)
}

/// Classify `n_points` evenly spaced `theta1` values in `[lo, hi]` by
/// asymptotic amplitude. Grid points are evaluated in parallel.
pub fn bifurcation_scan(
    lo: f64,
    hi: f64,
    n_points: usize,
    base: &FhnParams,
    cfg: &ScanConfig,
) -> Result<ScanResult> {
    if n_points < 2 {
        return Err(Error::config("n_points", "need at least 2 grid points"));
    }
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::config(
            "range",
            format!("need finite min < max, got [{lo}, {hi}]"),
        ));
    }
    if !(cfg.dt > 0.0) || cfg.burn_in < 0.0 || !(cfg.measure > 0.0) {
        return Err(Error::config(
            "scan",
            "dt and measure must be positive, burn_in nonnegative",
        ));
    }
    base.validate()?;

    let step = (hi - lo) / (n_points - 1) as f64;
    let points = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let theta1 = if i + 1 == n_points {
                hi
            } else {
                lo + step * i as f64
            };
            let amplitude = asymptotic_amplitude(&base.with_theta1(theta1), cfg)?;
            let label = if amplitude > cfg.amp_threshold {
                RegimeLabel::Oscillatory
            } else {
                RegimeLabel::Quiescent
            };
            Ok(ScanPoint {
                theta1,
                label,
                amplitude,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let boundaries = points
        .windows(2)
        .filter(|w| w[0].label != w[1].label)
        .map(|w| Boundary {
            lo: w[0].theta1,
            hi: w[1].theta1,
            from: w[0].label,
            to: w[1].label,
        })
        .collect();
    Ok(ScanResult { points, boundaries })
}
