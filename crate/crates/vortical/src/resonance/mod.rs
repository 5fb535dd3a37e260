//! Resonance detection: Poincaré-section crossings, spectral frequency
//! estimation, rational classification of the frequency ratio, and shooting
//! refinement of periodic orbits.
//!
//! A trajectory with angular frequencies `f1` (in `x`) and `f2` (in `y`) is
//! resonant when `f2/f1` is rational. Writing `f2/f1 = m/n` in lowest terms,
//! the orbit closes after `n` oscillations of `x` and `m` of `y`, with common
//! period `T = n*T1 = m*T2`; the label below displays this as `n:m`.

mod shooting;
mod spectrum;

pub use shooting::{refine_orbit, PeriodicOrbit};
pub use spectrum::{dominant_frequency, estimate_frequencies, FrequencyEstimate};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{IntegrateError, PhaseState, Trajectory};
use crate::invariants::CurveError;

#[derive(Debug, Error)]
pub enum ResonanceError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("integration failed: {0}")]
    Integration(#[from] IntegrateError),
    #[error("no convergence to a periodic orbit: {reason} (best closure residual {best_residual:e})")]
    NoConvergence { best_residual: f64, reason: String },
    #[error("degenerate projected curve: {0}")]
    DegenerateCurve(#[from] CurveError),
}

/// Coordinate axis defining a Poincaré section plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionCoord {
    X,
    Y,
}

/// Poincaré section `coord = offset`, crossed with the given velocity sign.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectionSpec {
    pub coordinate: SectionCoord,
    pub offset: f64,
    /// +1 or -1: required sign of the section-normal velocity at a crossing.
    pub direction: i8,
}

impl Default for SectionSpec {
    fn default() -> Self {
        SectionSpec { coordinate: SectionCoord::Y, offset: 0.0, direction: 1 }
    }
}

impl SectionSpec {
    pub fn validate(&self) -> Result<(), ResonanceError> {
        if self.direction != 1 && self.direction != -1 {
            return Err(ResonanceError::InvalidInput(
                "section direction must be +1 or -1".to_string(),
            ));
        }
        if !self.offset.is_finite() {
            return Err(ResonanceError::InvalidInput("section offset must be finite".to_string()));
        }
        Ok(())
    }

    fn value(&self, s: &PhaseState) -> f64 {
        match self.coordinate {
            SectionCoord::X => s.x - self.offset,
            SectionCoord::Y => s.y - self.offset,
        }
    }

    fn velocity(&self, s: &PhaseState) -> f64 {
        match self.coordinate {
            SectionCoord::X => s.p,
            SectionCoord::Y => s.r,
        }
    }

    fn matches_direction(&self, s: &PhaseState) -> bool {
        let v = self.velocity(s);
        // Grazing (near-tangential) contacts are not crossings.
        v.abs() > 1e-12 && (v > 0.0) == (self.direction > 0)
    }
}

/// All transversal crossings of the section with matching direction, located
/// on the dense output to `|value| <= 1e-10`. The interval is half-open: a
/// crossing at the start time is reported, one at the final time is not.
pub fn find_crossings(traj: &Trajectory, section: &SectionSpec) -> Vec<PhaseState> {
    let mut out: Vec<PhaseState> = Vec::new();
    if traj.is_empty() {
        return out;
    }
    let span = traj.t_end() - traj.t_start();
    let t_last = traj.t_end() - 1e-9 * span.max(1e-12);
    let dedup_gap = 1e-7 * span.max(1e-12);
    let ztol = 1e-12 * (1.0 + section.offset.abs());

    let push = |state: PhaseState, out: &mut Vec<PhaseState>| {
        if state.t >= t_last || !section.matches_direction(&state) {
            return;
        }
        if let Some(prev) = out.last() {
            if state.t - prev.t < dedup_gap {
                return;
            }
        }
        out.push(state);
    };

    const SUBS: usize = 8;
    for step in traj.steps() {
        let h = step.t1 - step.t0;
        let ts: Vec<f64> = (0..=SUBS).map(|i| step.t0 + h * i as f64 / SUBS as f64).collect();
        let gs: Vec<f64> = ts.iter().map(|&t| section.value(&traj.sample(t))).collect();
        for i in 0..SUBS {
            let (ta, tb) = (ts[i], ts[i + 1]);
            let (ga, gb) = (gs[i], gs[i + 1]);
            if ga.abs() <= ztol {
                // Exactly on the section at a sample point (e.g. the seed).
                if i == 0 || gs[i - 1].abs() > ztol {
                    push(traj.sample(ta), &mut out);
                }
                continue;
            }
            if ga * gb < 0.0 {
                let t = polish_crossing(traj, section, ta, tb);
                push(traj.sample(t), &mut out);
            }
        }
    }
    // The very last sample point of the final step is never bracketed above;
    // it is excluded anyway by the half-open convention.
    out
}

/// Bisection plus Newton polish on the dense output.
fn polish_crossing(traj: &Trajectory, section: &SectionSpec, mut ta: f64, mut tb: f64) -> f64 {
    let mut ga = section.value(&traj.sample(ta));
    for _ in 0..80 {
        let tm = 0.5 * (ta + tb);
        let gm = section.value(&traj.sample(tm));
        if gm == 0.0 {
            return tm;
        }
        if (ga > 0.0) == (gm > 0.0) {
            ta = tm;
            ga = gm;
        } else {
            tb = tm;
        }
        if (tb - ta).abs() < 1e-15 * tb.abs().max(1.0) {
            break;
        }
    }
    let mut t = 0.5 * (ta + tb);
    for _ in 0..3 {
        let s = traj.sample(t);
        let g = section.value(&s);
        let v = section.velocity(&s);
        if v.abs() < 1e-12 {
            break;
        }
        let t_next = (t - g / v).clamp(ta.min(tb), ta.max(tb));
        if (t_next - t).abs() < 1e-16 * t.abs().max(1.0) {
            t = t_next;
            break;
        }
        t = t_next;
    }
    t
}

/// Classification of a frequency pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResonanceLabel {
    /// `f2/f1 = m/n` in lowest terms; the orbit closes after `n`
    /// oscillations of `x` and `m` of `y` with period `T = n*T1 = m*T2`.
    Periodic { m: u32, n: u32, period: f64 },
    QuasiPeriodic,
}

impl std::fmt::Display for ResonanceLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ResonanceLabel::Periodic { m, n, period } => {
                write!(f, "{n}:{m} resonance, T = {period}")
            }
            ResonanceLabel::QuasiPeriodic => write!(f, "quasi-periodic"),
        }
    }
}

/// Searches the continued-fraction convergents of `f2/f1` up to denominator
/// `max_den`; the first (lowest-order) convergent within `tol` wins. Pairs
/// with zero confidence classify as quasi-periodic.
pub fn classify(freqs: &FrequencyEstimate, max_den: u32, tol: f64) -> ResonanceLabel {
    if freqs.confidence() <= 0.0 || !(freqs.f1 > 0.0) || !(freqs.f2 > 0.0) {
        return ResonanceLabel::QuasiPeriodic;
    }
    let ratio = freqs.f2 / freqs.f1;
    for (m, n) in convergents(ratio, max_den as u64) {
        if m == 0 {
            continue;
        }
        if (ratio - m as f64 / n as f64).abs() <= tol {
            let period = n as f64 * 2.0 * std::f64::consts::PI / freqs.f1;
            return ResonanceLabel::Periodic { m: m as u32, n: n as u32, period };
        }
    }
    ResonanceLabel::QuasiPeriodic
}

/// Continued-fraction convergents `p/q` of `x` with `q <= max_den`,
/// in order of increasing denominator. Convergents are automatically in
/// lowest terms.
fn convergents(x: f64, max_den: u64) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let (mut p_prev, mut q_prev) = (0u64, 1u64);
    let (mut p, mut q) = (1u64, 0u64);
    let mut frac = x;
    for _ in 0..64 {
        if !frac.is_finite() || frac > u64::MAX as f64 / 2.0 {
            break;
        }
        let a = frac.floor();
        let a_int = a as u64;
        let p_next = match a_int.checked_mul(p).and_then(|v| v.checked_add(p_prev)) {
            Some(v) => v,
            None => break,
        };
        let q_next = match a_int.checked_mul(q).and_then(|v| v.checked_add(q_prev)) {
            Some(v) => v,
            None => break,
        };
        if q_next > max_den {
            break;
        }
        p_prev = p;
        q_prev = q;
        p = p_next;
        q = q_next;
        out.push((p, q));
        let rem = frac - a;
        if rem < 1e-12 {
            break;
        }
        frac = 1.0 / rem;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig, SystemSpec};
    use crate::expr::ScalarField;
    use std::f64::consts::PI;

    fn spec(u: &str, psi: &str) -> SystemSpec {
        SystemSpec::new(
            "test",
            ScalarField::parse_simple(u).unwrap(),
            ScalarField::parse_simple(psi).unwrap(),
        )
    }

    fn harmonic_circle(t_end: f64) -> (SystemSpec, Trajectory) {
        let s = spec("0.5*(x^2+y^2)", "0");
        let traj = integrate(
            &s,
            PhaseState::new(1.0, 0.0, 0.0, 1.0, 0.0),
            t_end,
            &IntegratorConfig::default(),
        )
        .unwrap();
        (s, traj)
    }

    #[test]
    fn crossings_on_harmonic_circle() {
        // x = cos t, y = sin t; upward crossings of y = 0 at t = 0, 2pi; the
        // final endpoint 4pi is excluded by the half-open convention.
        let (_, traj) = harmonic_circle(4.0 * PI);
        let xs = find_crossings(&traj, &SectionSpec::default());
        assert_eq!(xs.len(), 2);
        assert!(xs[0].t.abs() < 1e-9);
        assert!((xs[1].t - 2.0 * PI).abs() < 1e-9);
        assert!(xs.iter().all(|s| s.y.abs() <= 1e-10 && s.r > 0.0));
    }

    #[test]
    fn grazing_trajectory_has_no_crossings() {
        // y stays identically at the section offset: non-transversal.
        let s = spec("0.5*x^2", "0");
        let traj = integrate(
            &s,
            PhaseState::new(1.0, 0.25, 0.0, 0.0, 0.0),
            10.0,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let section = SectionSpec { offset: 0.25, ..Default::default() };
        assert!(find_crossings(&traj, &section).is_empty());
    }

    #[test]
    fn crossings_on_lissajous() {
        // y = sin 2t: upward zero crossings at t = 0 and pi within [0, 2pi).
        let s = spec("(2*x^2+3*y^2)/2", "x*y");
        let traj = integrate(
            &s,
            PhaseState::new(1.0, 0.0, 0.0, 2.0, 0.0),
            2.0 * PI,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let xs = find_crossings(&traj, &SectionSpec::default());
        assert_eq!(xs.len(), 2);
        assert!(xs[0].t.abs() < 1e-9);
        assert!((xs[1].t - PI).abs() < 1e-9);
    }

    #[test]
    fn frequency_estimates_on_pure_tones() {
        let (_, traj) = harmonic_circle(64.0 * 2.0 * PI);
        let est = estimate_frequencies(&traj, 4096).unwrap();
        assert!((est.f1 - 1.0).abs() < 1e-4, "f1 = {}", est.f1);
        assert!((est.f2 - 1.0).abs() < 1e-4);
        assert!(est.confidence() > 0.5);

        let s = spec("(2*x^2+3*y^2)/2", "x*y");
        let traj = integrate(
            &s,
            PhaseState::new(1.0, 0.0, 0.0, 2.0, 0.0),
            64.0 * 2.0 * PI,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let est = estimate_frequencies(&traj, 4096).unwrap();
        assert!((est.f1 - 1.0).abs() < 1e-4);
        assert!((est.f2 - 2.0).abs() < 1e-4);
    }

    #[test]
    fn degenerate_coordinate_has_zero_confidence() {
        let s = spec("0.5*x^2", "0");
        let traj = integrate(
            &s,
            PhaseState::new(1.0, 0.0, 0.0, 0.0, 0.0),
            50.0 * 2.0 * PI,
            &IntegratorConfig::default(),
        )
        .unwrap();
        let est = estimate_frequencies(&traj, 2048).unwrap();
        assert_eq!(est.confidence_y, 0.0);
        assert_eq!(est.f2, 0.0);
        assert!((est.f1 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn sample_count_preconditions() {
        let (_, traj) = harmonic_circle(10.0);
        assert!(estimate_frequencies(&traj, 1000).is_err());
        assert!(estimate_frequencies(&traj, 1536).is_err());
    }

    fn est(f1: f64, f2: f64) -> FrequencyEstimate {
        FrequencyEstimate { f1, f2, confidence_x: 0.9, confidence_y: 0.9 }
    }

    #[test]
    fn classify_tones() {
        // cos t with sin 2t share the period 2pi.
        match classify(&est(1.0, 2.0), 10, 1e-4) {
            ResonanceLabel::Periodic { m, n, period } => {
                assert_eq!((m, n), (2, 1));
                assert!((period - 2.0 * PI).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
        // Equal frequencies: 1:1 with T = pi.
        match classify(&est(2.0, 2.0), 10, 1e-4) {
            ResonanceLabel::Periodic { m, n, period } => {
                assert_eq!((m, n), (1, 1));
                assert!((period - PI).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classify_sqrt3_is_quasi_periodic() {
        let ratio = 3.0f64.sqrt();
        assert_eq!(classify(&est(1.0, ratio), 10, 1e-4), ResonanceLabel::QuasiPeriodic);
        // Brute-force oracle: no m/n with n <= 10 approximates sqrt(3)
        // within 1e-4.
        let mut best = f64::INFINITY;
        for n in 1..=10u32 {
            for m in 1..=40u32 {
                best = best.min((ratio - m as f64 / n as f64).abs());
            }
        }
        assert!(best > 1e-4, "best rational error {best}");
        // The best convergent with denominator <= 10 is 7/4, off by ~1.8e-2.
        assert!((ratio - 7.0 / 4.0).abs() > 1e-4);
    }

    #[test]
    fn classify_is_scale_invariant() {
        for alpha in [0.1, 1.0, 7.3] {
            match classify(&est(alpha, 2.0 * alpha), 10, 1e-4) {
                ResonanceLabel::Periodic { m, n, .. } => assert_eq!((m, n), (2, 1)),
                other => panic!("alpha {alpha}: {other:?}"),
            }
        }
    }

    #[test]
    fn classify_zero_confidence_is_quasi_periodic() {
        let e = FrequencyEstimate { f1: 1.0, f2: 2.0, confidence_x: 0.9, confidence_y: 0.0 };
        assert_eq!(classify(&e, 10, 1e-4), ResonanceLabel::QuasiPeriodic);
    }
}
