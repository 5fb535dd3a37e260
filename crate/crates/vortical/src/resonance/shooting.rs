//! Periodic-orbit refinement by Newton shooting on a section return map.
//!
//! The period is not a Newton unknown: the seed pins a Poincaré section
//! through its own state, and each iterate's period is the (polished) time
//! of its k-th section return, where k is chosen once so the return time
//! matches the seed period. The remaining unknowns are the in-section state
//! components; the Newton step uses a truncated-SVD pseudo-inverse so the
//! rank-deficient Jacobians of orbit families (linear resonant systems have
//! a whole continuum of periodic orbits) still converge to the nearest
//! family member.
//!
//! Iterates that collapse onto a zero-amplitude oscillation are rejected:
//! for quasi-periodic dynamics the only nearby "fixed points" of the return
//! map are degenerate single-axis motions, and accepting one would fake a
//! closed orbit where none exists near the seed.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{integrate, IntegratorConfig, PhaseState, SystemSpec, Trajectory};
use crate::invariants::ClosedCurve;

use super::{find_crossings, ResonanceError, SectionCoord, SectionSpec};

const MAX_ITER: usize = 30;
const MAX_STALL: usize = 8;
const CURVE_SAMPLES: usize = 2048;
const COLLAPSE_RATIO: f64 = 1e-4;

/// A refined closed solution.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    initial: PhaseState,
    period: f64,
    residual: f64,
    trajectory: Trajectory,
    curve: ClosedCurve,
}

impl PeriodicOrbit {
    /// Initial state on the refinement section, at `t = 0`.
    pub fn initial_state(&self) -> PhaseState {
        self.initial
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Max-norm of `flow_T(s) - s` over the one-period trajectory.
    pub fn closure_residual(&self) -> f64 {
        self.residual
    }

    /// Dense one-period trajectory starting at the initial state.
    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    /// Projection onto the `(x, y)` plane, closed by construction.
    pub fn curve(&self) -> &ClosedCurve {
        &self.curve
    }

    pub fn is_self_intersecting(&self) -> bool {
        self.curve.is_self_intersecting()
    }
}

struct SectionFrame {
    section: SectionSpec,
    /// Index of the pinned coordinate in the state array (0 = x, 1 = y).
    pinned: usize,
}

impl SectionFrame {
    fn for_seed(seed: &PhaseState) -> Result<SectionFrame, ResonanceError> {
        if seed.r.abs() > 1e-9 {
            Ok(SectionFrame {
                section: SectionSpec {
                    coordinate: SectionCoord::Y,
                    offset: seed.y,
                    direction: if seed.r > 0.0 { 1 } else { -1 },
                },
                pinned: 1,
            })
        } else if seed.p.abs() > 1e-9 {
            Ok(SectionFrame {
                section: SectionSpec {
                    coordinate: SectionCoord::X,
                    offset: seed.x,
                    direction: if seed.p > 0.0 { 1 } else { -1 },
                },
                pinned: 0,
            })
        } else {
            Err(ResonanceError::InvalidInput(
                "seed velocity vanishes; no transversal section through the seed".to_string(),
            ))
        }
    }

    /// Free coordinates (the three state components not pinned by the
    /// section).
    fn free(&self, s: [f64; 4]) -> [f64; 3] {
        match self.pinned {
            0 => [s[1], s[2], s[3]],
            _ => [s[0], s[2], s[3]],
        }
    }

    fn state(&self, free: [f64; 3]) -> PhaseState {
        match self.pinned {
            0 => PhaseState::new(self.section.offset, free[0], free[1], free[2], 0.0),
            _ => PhaseState::new(free[0], self.section.offset, free[1], free[2], 0.0),
        }
    }
}

/// Time and state of the k-th section return of the flow from `start`.
fn kth_return(
    spec: &SystemSpec,
    start: PhaseState,
    frame: &SectionFrame,
    k: usize,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<(PhaseState, Trajectory), ResonanceError> {
    let traj = integrate(spec, start, start.t + horizon, cfg)?;
    let skip = 1e-7 * horizon;
    let returns: Vec<PhaseState> = find_crossings(&traj, &frame.section)
        .into_iter()
        .filter(|s| s.t - start.t > skip)
        .collect();
    if returns.len() < k {
        return Err(ResonanceError::NoConvergence {
            best_residual: f64::INFINITY,
            reason: format!(
                "trajectory makes only {} section return(s) where {k} were expected",
                returns.len()
            ),
        });
    }
    Ok((returns[k - 1], traj))
}

fn coordinate_amplitudes(traj: &Trajectory) -> (f64, f64) {
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for i in 0..=512 {
        let s = traj.sample(t0 + (t1 - t0) * i as f64 / 512.0);
        for (j, v) in [s.x, s.y].into_iter().enumerate() {
            min[j] = min[j].min(v);
            max[j] = max[j].max(v);
        }
    }
    (max[0] - min[0], max[1] - min[1])
}

/// Refines a candidate periodic orbit from `seed` with guessed period
/// `seed_period`, stopping when the closure residual `max|flow_T(s) - s|`
/// drops to `orbit_tol`.
pub fn refine_orbit(
    spec: &SystemSpec,
    seed: PhaseState,
    seed_period: f64,
    cfg: &IntegratorConfig,
    orbit_tol: f64,
) -> Result<PeriodicOrbit, ResonanceError> {
    if !(seed_period > 0.0 && seed_period.is_finite()) {
        return Err(ResonanceError::InvalidInput("seed period must be positive".to_string()));
    }
    if !(orbit_tol > 0.0) {
        return Err(ResonanceError::InvalidInput("orbit tolerance must be positive".to_string()));
    }
    if !seed.is_finite() {
        return Err(ResonanceError::InvalidInput("seed state must be finite".to_string()));
    }
    let seed = PhaseState { t: 0.0, ..seed };
    let frame = SectionFrame::for_seed(&seed)?;

    // Pick which section return closes the orbit: the one whose time is
    // nearest the seed period.
    let scout = integrate(spec, seed, 1.6 * seed_period, cfg)?;
    let skip = 1e-7 * seed_period;
    let returns: Vec<PhaseState> = find_crossings(&scout, &frame.section)
        .into_iter()
        .filter(|s| s.t > skip)
        .collect();
    let (seed_amp_x, seed_amp_y) = coordinate_amplitudes(&scout);
    let k = returns
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            (a.t - seed_period).abs().total_cmp(&(b.t - seed_period).abs())
        })
        .map(|(i, _)| i + 1)
        .ok_or_else(|| ResonanceError::NoConvergence {
            best_residual: f64::INFINITY,
            reason: "trajectory never returns to the section near the seed".to_string(),
        })?;
    let t_k = returns[k - 1].t;
    if t_k < 0.25 * seed_period || t_k > 1.5 * seed_period {
        return Err(ResonanceError::NoConvergence {
            best_residual: f64::INFINITY,
            reason: format!(
                "nearest section return at t = {t_k:.6} is incompatible with the seed period {seed_period:.6}"
            ),
        });
    }

    let sigma_seed = frame.free(seed.to_array());
    let seed_scale = 1.0 + sigma_seed.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let step_cap = 0.5 * seed_scale;
    let fd_delta = cfg.rtol.sqrt();

    let mut sigma = sigma_seed;
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    let mut horizon = 1.6 * seed_period;

    for _ in 0..MAX_ITER {
        let start = frame.state(sigma);
        let (ret, _) = kth_return(spec, start, &frame, k, horizon, cfg)?;
        let period = ret.t;
        horizon = 1.3 * period.max(seed_period);

        let start_arr = start.to_array();
        let ret_arr = ret.to_array();
        let mut residual: f64 = 0.0;
        for i in 0..4 {
            residual = residual.max((ret_arr[i] - start_arr[i]).abs());
        }

        if residual <= orbit_tol {
            // Re-integrate exactly one period and re-measure; the stored
            // trajectory is the single source of truth for the orbit.
            let final_traj = integrate(spec, start, period, cfg)?;
            let end = final_traj.end_state().to_array();
            let final_residual = (0..4)
                .map(|i| (end[i] - start_arr[i]).abs())
                .fold(0.0f64, f64::max);
            if final_residual <= orbit_tol {
                let (amp_x, amp_y) = coordinate_amplitudes(&final_traj);
                let collapsed = (seed_amp_x > 1e-9 * seed_scale
                    && amp_x < COLLAPSE_RATIO * seed_amp_x)
                    || (seed_amp_y > 1e-9 * seed_scale && amp_y < COLLAPSE_RATIO * seed_amp_y);
                if collapsed {
                    return Err(ResonanceError::NoConvergence {
                        best_residual: final_residual,
                        reason: "iterates collapsed onto a zero-amplitude oscillation; \
                                 no closed orbit exists near the seed"
                            .to_string(),
                    });
                }
                let curve = build_curve(&final_traj, period)?;
                return Ok(PeriodicOrbit {
                    initial: start,
                    period,
                    residual: final_residual,
                    trajectory: final_traj,
                    curve,
                });
            }
        }

        if residual < best * 0.9999 {
            best = residual;
            stall = 0;
        } else {
            stall += 1;
            if stall >= MAX_STALL {
                return Err(ResonanceError::NoConvergence {
                    best_residual: best,
                    reason: format!("closure residual stagnated after {MAX_STALL} iterations"),
                });
            }
        }

        // Forward finite-difference Jacobian of the free-coordinate residual.
        let res3 = {
            let f = frame.free(ret_arr);
            [f[0] - sigma[0], f[1] - sigma[1], f[2] - sigma[2]]
        };
        let mut jac = DMatrix::<f64>::zeros(3, 3);
        for col in 0..3 {
            let delta = fd_delta * (1.0 + sigma[col].abs());
            let mut pert = sigma;
            pert[col] += delta;
            let (ret_p, _) = kth_return(spec, frame.state(pert), &frame, k, horizon, cfg)?;
            let fp = frame.free(ret_p.to_array());
            for row in 0..3 {
                let r_p = fp[row] - pert[row];
                jac[(row, col)] = (r_p - res3[row]) / delta;
            }
        }

        // Least-squares Newton step through a truncated SVD.
        let svd = jac.svd(true, true);
        let rhs = DVector::from_column_slice(&res3);
        let step = svd
            .solve(&rhs, 1e-10)
            .map_err(|e| ResonanceError::InvalidInput(format!("SVD solve failed: {e}")))?;
        let mut delta = [-step[0], -step[1], -step[2]];
        let norm = delta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if norm > step_cap {
            let s = step_cap / norm;
            for d in &mut delta {
                *d *= s;
            }
        }
        for i in 0..3 {
            sigma[i] += delta[i];
        }
        let drift = (0..3)
            .map(|i| (sigma[i] - sigma_seed[i]).abs())
            .fold(0.0f64, f64::max);
        if drift > 10.0 * seed_scale {
            return Err(ResonanceError::NoConvergence {
                best_residual: best,
                reason: "iterates wandered far from the seed".to_string(),
            });
        }
    }

    Err(ResonanceError::NoConvergence {
        best_residual: best,
        reason: format!("no convergence within {MAX_ITER} iterations"),
    })
}

/// Samples the one-period trajectory into a closed `(x, y)` polyline.
fn build_curve(traj: &Trajectory, period: f64) -> Result<ClosedCurve, ResonanceError> {
    let t0 = traj.t_start();
    let mut vertices = Vec::with_capacity(CURVE_SAMPLES + 1);
    for i in 0..CURVE_SAMPLES {
        let t = t0 + period * i as f64 / CURVE_SAMPLES as f64;
        let s = traj.sample(t);
        vertices.push([s.x, s.y]);
    }
    // Close back to the first vertex; the closure residual is reported
    // separately on the orbit.
    Ok(ClosedCurve::from_loop(vertices)?)
}
