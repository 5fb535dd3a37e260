//! Embedded Dormand–Prince 5(4) pair with a free 4th-order dense interpolant.
//!
//! Step acceptance uses the mixed error norm
//! `err = max_i |e_i| / (atol + rtol * max(|y0_i|, |y1_i|))`, accepting when
//! `err <= 1`. Stage-evaluation failures (out-of-domain points) reject the
//! step and halve it, so approaching a singularity surfaces as a step-size
//! underflow rather than a NaN state.

use serde::Serialize;
use thiserror::Error;

use crate::expr::DomainError;

use super::PhaseState;

pub type State = [f64; 4];

// Dormand & Prince (1980) coefficients. The system is autonomous, so the
// stage abscissae never enter the right-hand side.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights (row 7 of A extended by the FSAL stage) and the embedded
// 4th-order weights.
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
// Dense-output contraction coefficients of the 4th-order interpolant.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

/// Adaptive step control settings.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Automatic selection when `None`.
    pub initial_step: Option<f64>,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            initial_step: None,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), IntegrateError> {
        let tol_ok = |t: f64| t > 0.0 && t < 1.0;
        if !tol_ok(self.rtol) || !tol_ok(self.atol) {
            return Err(IntegrateError::InvalidConfig(
                "tolerances must lie in (0, 1)".to_string(),
            ));
        }
        if self.max_steps < 1 {
            return Err(IntegrateError::InvalidConfig("max_steps must be >= 1".to_string()));
        }
        if let Some(h0) = self.initial_step {
            if !(h0 > 0.0 && h0.is_finite()) {
                return Err(IntegrateError::InvalidConfig(
                    "initial_step must be positive".to_string(),
                ));
            }
        }
        if !(self.max_step > 0.0) {
            return Err(IntegrateError::InvalidConfig("max_step must be positive".to_string()));
        }
        Ok(())
    }

    /// Returns a copy with both tolerances tightened by `factor`.
    pub fn tightened(&self, factor: f64) -> IntegratorConfig {
        IntegratorConfig {
            rtol: self.rtol * factor,
            atol: self.atol * factor,
            ..*self
        }
    }
}

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("domain error at t = {t}: {source}")]
    Domain { t: f64, source: DomainError },
    #[error("maximum step count {max_steps} exceeded at t = {t}")]
    MaxStepsExceeded { t: f64, max_steps: usize },
    #[error("step size underflow at t = {t} (likely near a singularity)")]
    StepSizeUnderflow { t: f64 },
    #[error("non-finite state encountered at t = {t}")]
    NonFiniteState { t: f64 },
}

/// One accepted step with its dense-output contraction.
#[derive(Debug, Clone)]
pub struct Step {
    pub t0: f64,
    pub t1: f64,
    pub y0: State,
    pub y1: State,
    rcont: [State; 5],
}

impl Step {
    fn h(&self) -> f64 {
        self.t1 - self.t0
    }

    /// Quartic interpolant, 4th-order accurate anywhere inside the step.
    pub fn interpolate(&self, t: f64) -> State {
        let theta = (t - self.t0) / self.h();
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.rcont;
        let mut out = [0.0; 4];
        for i in 0..4 {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
        out
    }
}

/// Integrator work counters.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Dense-output solution over `[t_start, t_end]` with strictly increasing
/// accepted steps. Immutable and shareable across threads.
#[derive(Debug, Clone)]
pub struct Trajectory {
    steps: Vec<Step>,
    stats: IntegratorStats,
}

impl Trajectory {
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn stats(&self) -> IntegratorStats {
        self.stats
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn t_start(&self) -> f64 {
        self.steps.first().map(|s| s.t0).unwrap_or(0.0)
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map(|s| s.t1).unwrap_or(0.0)
    }

    pub fn start_state(&self) -> PhaseState {
        let s = self.steps.first().expect("empty trajectory");
        PhaseState::from_array(s.y0, s.t0)
    }

    pub fn end_state(&self) -> PhaseState {
        let s = self.steps.last().expect("empty trajectory");
        PhaseState::from_array(s.y1, s.t1)
    }

    /// Interpolated state at `t`.
    ///
    /// Panics when `t` lies outside the covered span (beyond a relative
    /// slack of 1e-9); callers own range checking.
    pub fn sample(&self, t: f64) -> PhaseState {
        let (t0, t1) = (self.t_start(), self.t_end());
        let slack = 1e-9 * (t1 - t0).abs().max(1e-12);
        assert!(
            t >= t0 - slack && t <= t1 + slack,
            "sample time {t} outside trajectory span [{t0}, {t1}]"
        );
        let t = t.clamp(t0, t1);
        let idx = self.steps.partition_point(|s| s.t1 < t).min(self.steps.len() - 1);
        let step = &self.steps[idx];
        PhaseState::from_array(step.interpolate(t), t)
    }
}

/// Integrates `dy/dt = f(y)` forward from `(t0, y0)` to `t_end`.
///
/// `f` reports out-of-domain points as errors; inside a step these reject
/// and halve the step rather than aborting.
pub fn integrate_ode<F>(
    mut f: F,
    t0: f64,
    y0: State,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(&State) -> Result<State, DomainError>,
{
    cfg.validate()?;
    if !(t_end > t0) {
        return Err(IntegrateError::InvalidConfig(format!(
            "t_end ({t_end}) must exceed the initial time ({t0})"
        )));
    }
    if !y0.iter().all(|v| v.is_finite()) {
        return Err(IntegrateError::NonFiniteState { t: t0 });
    }

    let mut stats = IntegratorStats::default();
    let mut eval = |y: &State, stats: &mut IntegratorStats| -> Result<State, DomainError> {
        stats.evaluations += 1;
        f(y)
    };

    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut k1 = eval(&y, &mut stats).map_err(|source| IntegrateError::Domain { t: t0, source })?;

    let mut h = match cfg.initial_step {
        Some(h0) => h0.min(cfg.max_step).min(span),
        None => initial_step(&mut |s| eval(s, &mut stats), &y, &k1, cfg)
            .min(cfg.max_step)
            .min(span),
    };

    let mut steps: Vec<Step> = Vec::new();
    let mut rejected_last = false;

    while t < t_end {
        if steps.len() + stats.rejected >= cfg.max_steps {
            return Err(IntegrateError::MaxStepsExceeded { t, max_steps: cfg.max_steps });
        }
        let h_min = 16.0 * f64::EPSILON * t.abs().max(1.0);
        if h < h_min {
            return Err(IntegrateError::StepSizeUnderflow { t });
        }
        if t + h > t_end {
            h = t_end - t;
        }

        // Stages k2..k7; k7 = f(y1) is the FSAL stage and feeds both the
        // embedded error estimate and the dense output.
        let mut k = [[0.0; 4]; 7];
        k[0] = k1;
        let mut stage_failed = false;
        let mut y1 = [0.0; 4];
        for s in 1..7 {
            let mut ys = y;
            for i in 0..4 {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                ys[i] += h * acc;
            }
            if s == 6 {
                y1 = ys;
                if !y1.iter().all(|v| v.is_finite()) {
                    return Err(IntegrateError::NonFiniteState { t });
                }
            }
            match eval(&ys, &mut stats) {
                Ok(ks) => k[s] = ks,
                Err(_) => {
                    stage_failed = true;
                    break;
                }
            }
        }
        if stage_failed {
            stats.rejected += 1;
            rejected_last = true;
            h *= 0.5;
            continue;
        }

        // err = max_i |e_i| / (atol + rtol * max(|y0_i|, |y1_i|))
        let mut err: f64 = 0.0;
        for i in 0..4 {
            let mut e = 0.0;
            for j in 0..7 {
                e += (B5[j] - B4[j]) * k[j][i];
            }
            let scale = cfg.atol + cfg.rtol * y[i].abs().max(y1[i].abs());
            err = err.max((h * e).abs() / scale);
        }

        if !err.is_finite() {
            stats.rejected += 1;
            rejected_last = true;
            h *= 0.5;
            continue;
        }

        if err <= 1.0 {
            // Accept: build the dense-output contraction.
            let mut rcont = [[0.0; 4]; 5];
            for i in 0..4 {
                let dy = y1[i] - y[i];
                let bspl = h * k[0][i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - h * k[6][i] - bspl;
                let mut d = 0.0;
                for j in 0..7 {
                    d += D[j] * k[j][i];
                }
                rcont[4][i] = h * d;
            }
            let t1 = if t_end - (t + h) < h_min { t_end } else { t + h };
            steps.push(Step { t0: t, t1, y0: y, y1, rcont });
            stats.accepted += 1;

            t = t1;
            y = y1;
            k1 = k[6];

            let fac_max = if rejected_last { 1.0 } else { FAC_MAX };
            let fac = if err == 0.0 {
                fac_max
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, fac_max)
            };
            h = (h * fac).min(cfg.max_step);
            rejected_last = false;
        } else {
            stats.rejected += 1;
            rejected_last = true;
            h *= (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 0.9);
        }
    }

    Ok(Trajectory { steps, stats })
}

/// Automatic initial step along the lines of Hairer–Nørsett–Wanner.
fn initial_step<F>(eval: &mut F, y0: &State, f0: &State, cfg: &IntegratorConfig) -> f64
where
    F: FnMut(&State) -> Result<State, DomainError>,
{
    let scale = |y: &State, i: usize| cfg.atol + cfg.rtol * y[i].abs();
    let d0 = (0..4).map(|i| (y0[i] / scale(y0, i)).abs()).fold(0.0, f64::max);
    let d1 = (0..4).map(|i| (f0[i] / scale(y0, i)).abs()).fold(0.0, f64::max);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };

    let mut y1 = *y0;
    for i in 0..4 {
        y1[i] += h0 * f0[i];
    }
    let d2 = match eval(&y1) {
        Ok(f1) => {
            (0..4)
                .map(|i| ((f1[i] - f0[i]) / scale(y0, i)).abs())
                .fold(0.0, f64::max)
                / h0
        }
        Err(_) => return (h0 * 1e-3).max(1e-10),
    };

    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}
