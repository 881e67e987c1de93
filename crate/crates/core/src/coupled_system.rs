//! Closed loop: fast layer → window health → stress → gated plasticity → fast layer.

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::Result;
use crate::fast_layer::{
    classify_regime, fhn_rhs, ClassifierConfig, FastState, FhnParams, RegimeLabel,
};
use crate::health::{
    badness, evaluate, stress_step, BadnessWeights, HealthConfig, HealthReport, HealthWindow,
    Indicators, Sample, StressState,
};
use crate::integrator::Rk4;
use crate::plasticity::{
    gate, plasticity_rhs_gated, potential_u, PlasticityConfig, PlasticityMode, StructParams,
};

/// Extended state of the coupled model.
#[derive(Debug, Clone)]
pub struct SystemState {
    pub fast: FastState,
    pub theta: StructParams,
    pub stress: StressState,
    pub window: HealthWindow,
    pub label: RegimeLabel,
    pub t: f64,
    pub health: HealthReport,
    pub badness: f64,
    /// Gate value held until the next sampling tick.
    pub gate: f64,
}

/// One output row; field order matches the run CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub rho: f64,
    pub phi: f64,
    pub r: f64,
    pub m_freeze: f64,
    pub m_cycle: f64,
    pub m_mono: f64,
    pub b: f64,
    pub s: f64,
    pub gate: f64,
    pub label: RegimeLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub t_minus: f64,
    pub t_plus: f64,
    pub from: RegimeLabel,
    pub to: RegimeLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub n_switches: usize,
    pub n_switches_final_third: usize,
    pub mean_b_post_burnin: f64,
    pub final_theta_speed: f64,
    /// Absent with fewer than three events.
    pub inter_switch_cv: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub samples: Vec<TrajectoryRow>,
    pub events: Vec<SwitchEvent>,
    pub summary: RunSummary,
    /// Labels at every sampling tick.
    pub labels: Vec<(f64, RegimeLabel)>,
    /// Badness at every sampling tick.
    pub badness: Vec<(f64, f64)>,
}

impl RunResult {
    /// `U(theta)` along the logged trajectory.
    pub fn potential_series(&self, k: f64, rho0: f64) -> Vec<f64> {
        self.samples
            .iter()
            .map(|r| potential_u(StructParams::new(r.theta1, r.theta2), k, rho0))
            .collect()
    }
}

/// Stepper for the coupled model.
pub struct Simulation {
    state: SystemState,
    fhn: FhnParams,
    health_cfg: HealthConfig,
    classifier: ClassifierConfig,
    weights: BadnessWeights,
    plasticity: PlasticityConfig,
    dt: f64,
    dt_sample: f64,
    steps_per_sample: usize,
    step_count: usize,
    rk: Rk4,
    buf: [f64; 4],
}

impl Simulation {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        let fhn = cfg.fhn();
        let theta = cfg.initial_theta();
        let fast = cfg.initial_fast();
        let mut window = HealthWindow::new(cfg.t_r, cfg.dt_sample)?;
        window.push(Sample {
            t: 0.0,
            state: fast,
            deriv: fhn_rhs(fast, &fhn.with_theta1(theta.theta1)),
        });
        let health_cfg = cfg.health();
        let weights = cfg.weights();
        let health = evaluate(&window, &health_cfg)?;
        let state = SystemState {
            fast,
            theta,
            stress: StressState::new(cfg.s0, cfg.tau_s, cfg.s_c)?,
            label: RegimeLabel::Transitional,
            t: 0.0,
            badness: badness(&health.indicators, &weights),
            health,
            window,
            gate: 0.0,
        };
        Ok(Simulation {
            state,
            fhn,
            health_cfg,
            classifier: cfg.classifier(),
            weights,
            plasticity: cfg.plasticity(),
            dt: cfg.dt,
            dt_sample: cfg.dt_sample,
            steps_per_sample: cfg.steps_per_sample(),
            step_count: 0,
            rk: Rk4::new(4),
            buf: [fast.u, fast.v, theta.theta1, theta.theta2],
        })
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    /// Current structural velocity under the held gate.
    pub fn theta_velocity(&self) -> [f64; 2] {
        plasticity_rhs_gated(self.state.theta, self.state.gate, &self.plasticity)
    }

    /// Advance one `dt`. Returns true when a sampling tick happened.
    pub fn step(&mut self) -> Result<bool> {
        let held = self.state.gate;
        let fhn = self.fhn;
        let pc = self.plasticity;
        let mut field = |x: &[f64], dx: &mut [f64]| {
            let d = fhn_rhs(FastState::new(x[0], x[1]), &fhn.with_theta1(x[2]));
            let p = plasticity_rhs_gated(StructParams::new(x[2], x[3]), held, &pc);
            dx[0] = d.u;
            dx[1] = d.v;
            dx[2] = p[0];
            dx[3] = p[1];
        };
        self.step_count += 1;
        self.rk
            .step_in_place(&mut field, &mut self.buf, self.dt, self.step_count)?;

        let st = &mut self.state;
        st.fast = FastState::new(self.buf[0], self.buf[1]);
        st.theta = StructParams::new(self.buf[2], self.buf[3]);
        st.t = self.step_count as f64 * self.dt;

        if !self.step_count.is_multiple_of(self.steps_per_sample) {
            return Ok(false);
        }
        st.window.push(Sample {
            t: st.t,
            state: st.fast,
            deriv: fhn_rhs(st.fast, &fhn.with_theta1(st.theta.theta1)),
        });
        st.health = evaluate(&st.window, &self.health_cfg)?;
        st.badness = badness(&st.health.indicators, &self.weights);
        st.stress = stress_step(st.stress, st.badness, self.dt_sample)?;
        st.label = classify_regime(&st.window.states(), &self.classifier);
        st.gate = if st.window.is_full() {
            gate(st.stress.s, &pc)
        } else {
            0.0
        };
        Ok(true)
    }

    pub fn row(&self) -> TrajectoryRow {
        let st = &self.state;
        let Indicators {
            m_freeze,
            m_cycle,
            m_mono,
        } = st.health.indicators;
        TrajectoryRow {
            t: st.t,
            u: st.fast.u,
            v: st.fast.v,
            theta1: st.theta.theta1,
            theta2: st.theta.theta2,
            rho: st.theta.rho(),
            phi: st.theta.phi(),
            r: st.health.activity,
            m_freeze,
            m_cycle,
            m_mono,
            b: st.badness,
            s: st.stress.s,
            gate: st.gate,
            label: st.label,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Run {
    label: RegimeLabel,
    start: f64,
    last: f64,
    /// Start of the following run, or the last sample time.
    end: f64,
}

impl Run {
    fn span(&self) -> f64 {
        self.end - self.start
    }
}

fn run_lengths(labels: &[(f64, RegimeLabel)]) -> Vec<Run> {
    let mut runs: Vec<Run> = Vec::new();
    for &(t, l) in labels {
        match runs.last_mut() {
            Some(r) if r.label == l => r.last = t,
            Some(r) => {
                r.end = t;
                runs.push(Run {
                    label: l,
                    start: t,
                    last: t,
                    end: t,
                });
            }
            None => runs.push(Run {
                label: l,
                start: t,
                last: t,
                end: t,
            }),
        }
    }
    if let Some(r) = runs.last_mut() {
        r.end = r.last;
    }
    runs
}

/// Regime switches in a time-ordered label series.
///
/// A Transitional excursion that returns to the regime it left is folded
/// into that regime. A switch is a regime `A` held for at least `dwell_min`,
/// a Transitional stretch starting at `t_minus`, then a different regime `B`
/// entered at `t_plus` and held for at least `dwell_min`. If `A` is followed
/// directly by `B` with no Transitional sample, `t_minus` is the last `A`
/// sample.
pub fn detect_switches(labels: &[(f64, RegimeLabel)], dwell_min: f64) -> Vec<SwitchEvent> {
    let mut eps: Vec<Run> = Vec::new();
    for run in run_lengths(labels) {
        eps.push(run);
        let n = eps.len();
        if n >= 3
            && run.label.is_regime()
            && eps[n - 2].label == RegimeLabel::Transitional
            && eps[n - 3].label == run.label
        {
            let merged = Run {
                label: run.label,
                start: eps[n - 3].start,
                last: run.last,
                end: run.end,
            };
            eps.truncate(n - 3);
            eps.push(merged);
        }
    }

    let mut events = Vec::new();
    for i in 0..eps.len() {
        let a = eps[i];
        if !a.label.is_regime() || a.span() < dwell_min {
            continue;
        }
        let (t_minus, b) = match (eps.get(i + 1), eps.get(i + 2)) {
            (Some(t), Some(b)) if t.label == RegimeLabel::Transitional => (t.start, *b),
            (Some(b), _) if b.label.is_regime() => (a.last, *b),
            _ => continue,
        };
        if b.label.is_regime() && b.label != a.label && b.span() >= dwell_min {
            events.push(SwitchEvent {
                t_minus,
                t_plus: b.start,
                from: a.label,
                to: b.label,
            });
        }
    }
    events
}

/// Coefficient of variation of the intervals between successive events of
/// the same direction, pooled over both directions.
pub fn inter_switch_cv(events: &[SwitchEvent]) -> Option<f64> {
    if events.len() < 3 {
        return None;
    }
    let mut intervals = Vec::new();
    for dir in [
        (RegimeLabel::Quiescent, RegimeLabel::Oscillatory),
        (RegimeLabel::Oscillatory, RegimeLabel::Quiescent),
    ] {
        let times: Vec<f64> = events
            .iter()
            .filter(|e| (e.from, e.to) == dir)
            .map(|e| e.t_plus)
            .collect();
        intervals.extend(times.windows(2).map(|w| w[1] - w[0]));
    }
    if intervals.is_empty() {
        return None;
    }
    let n = intervals.len() as f64;
    let mean = intervals.iter().sum::<f64>() / n;
    let var = intervals
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / n;
    Some(var.sqrt() / mean)
}

/// Times at which `theta1 = rho0 cos(phi0 + omega t)` crosses `onset` in
/// `[0, horizon]`, labelled by the direction of the regime change.
pub fn predicted_crossings(
    rho0: f64,
    phi0: f64,
    omega: f64,
    onset: f64,
    horizon: f64,
) -> Vec<(f64, RegimeLabel, RegimeLabel)> {
    use std::f64::consts::TAU;
    if omega == 0.0 || onset.abs() >= rho0 {
        return Vec::new();
    }
    let alpha = (onset / rho0).acos();
    let mut out = Vec::new();
    // rising through onset at phase -alpha (omega > 0), falling at +alpha
    let (rise, fall) = if omega > 0.0 {
        (-alpha, alpha)
    } else {
        (alpha, -alpha)
    };
    for (target, from, to) in [
        (rise, RegimeLabel::Quiescent, RegimeLabel::Oscillatory),
        (fall, RegimeLabel::Oscillatory, RegimeLabel::Quiescent),
    ] {
        // phi0 + omega t = target + 2 pi n
        let n_lo = ((phi0 - target) / TAU).floor() as i64 - 1;
        let n_hi = ((phi0 + omega.abs() * horizon - target) / TAU).ceil() as i64 + 1;
        for n in n_lo.min(-n_hi)..=n_hi.max(-n_lo) {
            let t = (target + TAU * n as f64 - phi0) / omega;
            if (0.0..=horizon).contains(&t) {
                out.push((t, from, to));
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

pub fn summarize(
    events: &[SwitchEvent],
    badness: &[(f64, f64)],
    horizon: f64,
    final_theta_speed: f64,
) -> RunSummary {
    let burn = 0.1 * horizon;
    let post: Vec<f64> = badness
        .iter()
        .filter(|(t, _)| *t >= burn)
        .map(|(_, b)| *b)
        .collect();
    let mean_b_post_burnin = if post.is_empty() {
        f64::NAN
    } else {
        post.iter().sum::<f64>() / post.len() as f64
    };
    RunSummary {
        n_switches: events.len(),
        n_switches_final_third: events
            .iter()
            .filter(|e| e.t_plus >= 2.0 * horizon / 3.0)
            .count(),
        mean_b_post_burnin,
        final_theta_speed,
        inter_switch_cv: inter_switch_cv(events),
    }
}

/// Run one scenario to its horizon.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunResult> {
    let mut sim = Simulation::new(cfg)?;
    let n_steps = cfg.n_steps();
    let per_out = cfg.steps_per_output();

    let mut samples = Vec::with_capacity(n_steps / per_out + 1);
    let mut labels = Vec::with_capacity(n_steps / cfg.steps_per_sample() + 1);
    let mut bad = Vec::with_capacity(labels.capacity());
    samples.push(sim.row());

    for _ in 0..n_steps {
        if sim.step()? {
            let st = sim.state();
            labels.push((st.t, st.label));
            bad.push((st.t, st.badness));
        }
        if sim.step_count() % per_out == 0 {
            samples.push(sim.row());
        }
    }

    let events = detect_switches(&labels, cfg.dwell_min);
    let v = sim.theta_velocity();
    let summary = summarize(&events, &bad, cfg.horizon, v[0].hypot(v[1]));
    Ok(RunResult {
        samples,
        events,
        summary,
        labels,
        badness: bad,
    })
}

/// Whether the mode responds to the stress gate.
pub fn is_gated(mode: PlasticityMode) -> bool {
    !matches!(mode, PlasticityMode::ExternalSweep)
}
