//! Force assembly and integration of the second-order system
//!
//! ```text
//! x'' = -dU/dx + dpsi/dy,      y'' = -dU/dy - dpsi/dx
//! ```
//!
//! in first-order form with state `(x, y, p, r)`, `p = dx/dt`, `r = dy/dt`.
//! The mechanical energy is `H = (p^2 + r^2)/2 + U(x, y)`; along a solution
//! `dH/dt` equals the power of the vortical force, `psi_y * p - psi_x * r`,
//! which [`energy_balance`] checks by quadrature over the dense output.
//!
//! Integration runs forward in time only. The force depends on positions
//! alone, so backward integration is available at the call site: integrate
//! `(x, y, -p, -r)` forward and negate the velocities of the result.

mod integrator;

pub use integrator::{IntegrateError, IntegratorConfig, IntegratorStats, Step, Trajectory};

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::expr::{DomainError, ScalarField};
use crate::quad;

/// Point in extended phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub x: f64,
    pub y: f64,
    /// dx/dt
    pub p: f64,
    /// dy/dt
    pub r: f64,
    pub t: f64,
}

impl PhaseState {
    pub fn new(x: f64, y: f64, p: f64, r: f64, t: f64) -> Self {
        PhaseState { x, y, p, r, t }
    }

    pub fn from_array(a: [f64; 4], t: f64) -> Self {
        PhaseState { x: a[0], y: a[1], p: a[2], r: a[3], t }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.p, self.r]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite()) && self.t.is_finite()
    }
}

/// A system defined by its potential `U` and vortical potential `psi`,
/// with the derivative fields cached at construction.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    name: String,
    u: ScalarField,
    psi: ScalarField,
    u_x: ScalarField,
    u_y: ScalarField,
    psi_x: ScalarField,
    psi_y: ScalarField,
    psi_laplacian: ScalarField,
}

impl SystemSpec {
    pub fn new(name: impl Into<String>, u: ScalarField, psi: ScalarField) -> Self {
        let (u_x, u_y) = u.grad();
        let (psi_x, psi_y) = psi.grad();
        let psi_laplacian = psi.laplacian();
        SystemSpec {
            name: name.into(),
            u,
            psi,
            u_x,
            u_y,
            psi_x,
            psi_y,
            psi_laplacian,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    pub fn psi(&self) -> &ScalarField {
        &self.psi
    }

    pub fn u_grad(&self) -> (&ScalarField, &ScalarField) {
        (&self.u_x, &self.u_y)
    }

    pub fn psi_grad(&self) -> (&ScalarField, &ScalarField) {
        (&self.psi_x, &self.psi_y)
    }

    pub fn psi_laplacian(&self) -> &ScalarField {
        &self.psi_laplacian
    }

    /// Force components `(-U_x + psi_y, -U_y - psi_x)` at `(x, y)`.
    pub fn force(&self, x: f64, y: f64) -> Result<(f64, f64), DomainError> {
        let fx = -self.u_x.eval(x, y)? + self.psi_y.eval(x, y)?;
        let fy = -self.u_y.eval(x, y)? - self.psi_x.eval(x, y)?;
        Ok((fx, fy))
    }

    /// First-order right-hand side `(dx, dy, dp, dr) = (p, r, Fx, Fy)`.
    pub fn rhs(&self, state: &PhaseState) -> Result<[f64; 4], DomainError> {
        if !state.is_finite() {
            return Err(DomainError::NonFinite);
        }
        let (fx, fy) = self.force(state.x, state.y)?;
        Ok([state.p, state.r, fx, fy])
    }

    /// Mechanical energy `H = (p^2 + r^2)/2 + U(x, y)`.
    pub fn energy(&self, state: &PhaseState) -> Result<f64, DomainError> {
        Ok(0.5 * (state.p * state.p + state.r * state.r) + self.u.eval(state.x, state.y)?)
    }

    /// Power of the vortical (non-potential) force: `psi_y * p - psi_x * r`.
    pub fn power(&self, state: &PhaseState) -> Result<f64, DomainError> {
        Ok(self.psi_y.eval(state.x, state.y)? * state.p
            - self.psi_x.eval(state.x, state.y)? * state.r)
    }
}

/// Integrates the system from `s0` to `t_end` with dense output.
pub fn integrate(
    spec: &SystemSpec,
    s0: PhaseState,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrateError> {
    let t0 = s0.t;
    integrator::integrate_ode(
        |y: &[f64; 4]| {
            let (fx, fy) = spec.force(y[0], y[1])?;
            Ok([y[2], y[3], fx, fy])
        },
        t0,
        s0.to_array(),
        t_end,
        cfg,
    )
}

/// Residual of the energy balance `H(t1) - H(t0) = integral of power dt`,
/// with the integral taken by 5-node Gauss–Legendre quadrature per accepted
/// step over the dense output. An empty trajectory yields 0.
pub fn energy_balance(spec: &SystemSpec, traj: &Trajectory) -> Result<f64, DomainError> {
    if traj.is_empty() {
        return Ok(0.0);
    }
    let (nodes, weights) = quad::gauss_legendre(5);
    let mut per_step = Vec::with_capacity(traj.steps().len());
    for step in traj.steps() {
        let mut failure = None;
        let val = quad::integrate(&nodes, &weights, step.t0, step.t1, |t| {
            let s = PhaseState::from_array(step.interpolate(t), t);
            match spec.power(&s) {
                Ok(v) => v,
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        per_step.push(val);
    }
    let q = quad::pairwise_sum(&per_step);
    let h0 = spec.energy(&traj.start_state())?;
    let h1 = spec.energy(&traj.end_state())?;
    Ok(h1 - h0 - q)
}

/// Integral of `|power|` over the trajectory, used as a normalizer by
/// balance checks.
pub fn absolute_power_integral(spec: &SystemSpec, traj: &Trajectory) -> Result<f64, DomainError> {
    if traj.is_empty() {
        return Ok(0.0);
    }
    let (nodes, weights) = quad::gauss_legendre(5);
    let mut per_step = Vec::with_capacity(traj.steps().len());
    for step in traj.steps() {
        let mut failure = None;
        let val = quad::integrate(&nodes, &weights, step.t0, step.t1, |t| {
            let s = PhaseState::from_array(step.interpolate(t), t);
            match spec.power(&s) {
                Ok(v) => v.abs(),
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        per_step.push(val);
    }
    Ok(quad::pairwise_sum(&per_step))
}

/// Formats a float with 17 significant digits (round-trip safe).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the trajectory as CSV `t,x,y,p,r,H,power` sampled uniformly at
/// `dt`, always including the final time.
pub fn write_trajectory_csv<W: Write>(
    spec: &SystemSpec,
    traj: &Trajectory,
    dt: f64,
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "t,x,y,p,r,H,power")?;
    if traj.is_empty() {
        return Ok(());
    }
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let span = t1 - t0;
    let n = (span / dt + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|i| t0 + i as f64 * dt).collect();
    if t1 - times.last().copied().unwrap_or(t0) > 1e-9 * span.max(1.0) {
        times.push(t1);
    }
    for t in times {
        let s = traj.sample(t.min(t1));
        let h = spec.energy(&s).map_err(io_domain)?;
        let pw = spec.power(&s).map_err(io_domain)?;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.x),
            fmt_f64(s.y),
            fmt_f64(s.p),
            fmt_f64(s.r),
            fmt_f64(h),
            fmt_f64(pw)
        )?;
    }
    Ok(())
}

fn io_domain(e: DomainError) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, e.to_string())
}
