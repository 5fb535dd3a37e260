//! The circulation invariant of a closed orbit, in three forms.
//!
//! For a periodic solution with period `T` and projected closed curve `L`:
//!
//! * time form: `integral over [0,T] of (psi_x * dy/dt - psi_y * dx/dt) dt`,
//! * contour form: `integral over L of (psi_x dy - psi_y dx)`,
//! * area form: `integral over the enclosed region of (laplacian psi) dA`.
//!
//! The three agree for closed curves; each vanishes on genuine periodic
//! orbits because the time form is exactly the energy balance over one
//! period. Resonant Lissajous projections self-intersect, so the area form
//! is implemented with winding-number weights, which reduces to the plain
//! region integral for simple curves and keeps the contour equality exact
//! for figure eights.
//!
//! Orientation convention: counterclockwise positive. The invariant itself
//! (all forms equal to zero) does not depend on the traversal direction;
//! only the sign of non-vanishing diagnostics does.

mod curve;

pub use curve::{point_segment_distance, ClosedCurve, CurveError};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::dynamics::{PhaseState, SystemSpec, Trajectory};
use crate::expr::{DomainError, ScalarField};
use crate::quad;
use crate::resonance::PeriodicOrbit;

/// Normalizer floor, preventing a zero denominator in verdicts when the
/// vortical force vanishes identically along the orbit.
pub const NORMALIZER_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum InvariantError {
    #[error("field evaluation failed: {0}")]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("grid resolution must be at least 32 (got {0})")]
    ResolutionTooSmall(usize),
}

/// `|value|` measured against its normalizer with the standard floor.
pub fn invariant_holds(value: f64, normalizer: f64, tol: f64) -> bool {
    value.abs() <= tol * normalizer.max(NORMALIZER_FLOOR)
}

/// Writes a curve polyline as CSV `x,y` (17 significant digits per value).
pub fn write_curve_csv<W: std::io::Write>(
    curve: &ClosedCurve,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "x,y")?;
    for v in curve.vertices() {
        writeln!(out, "{},{}", crate::dynamics::fmt_f64(v[0]), crate::dynamics::fmt_f64(v[1]))?;
    }
    Ok(())
}

/// Time form over an arbitrary trajectory segment: 5-node Gauss–Legendre
/// per accepted step of the dense output. Returns `(value, normalizer)`
/// where the normalizer integrates the absolute integrand.
pub fn time_integral_over(
    spec: &SystemSpec,
    traj: &Trajectory,
) -> Result<(f64, f64), InvariantError> {
    if traj.is_empty() {
        return Ok((0.0, 0.0));
    }
    let (psi_x, psi_y) = spec.psi_grad();
    let (nodes, weights) = quad::gauss_legendre(5);
    let mut vals = Vec::with_capacity(traj.steps().len());
    let mut abs_vals = Vec::with_capacity(traj.steps().len());
    for step in traj.steps() {
        let mut failure: Option<DomainError> = None;
        let mut eval = |t: f64| -> f64 {
            let s = PhaseState::from_array(step.interpolate(t), t);
            let gx = psi_x.eval(s.x, s.y);
            let gy = psi_y.eval(s.x, s.y);
            match (gx, gy) {
                (Ok(gx), Ok(gy)) => gx * s.r - gy * s.p,
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(e);
                    0.0
                }
            }
        };
        let v = quad::integrate(&nodes, &weights, step.t0, step.t1, &mut eval);
        let a = quad::integrate(&nodes, &weights, step.t0, step.t1, |t| eval(t).abs());
        if let Some(e) = failure {
            return Err(e.into());
        }
        vals.push(v);
        abs_vals.push(a);
    }
    Ok((quad::pairwise_sum(&vals), quad::pairwise_sum(&abs_vals)))
}

/// Time form over one period of a refined orbit.
pub fn time_integral(
    spec: &SystemSpec,
    orbit: &PeriodicOrbit,
) -> Result<(f64, f64), InvariantError> {
    time_integral_over(spec, orbit.trajectory())
}

/// Contour form along a closed polyline: per-segment 4-point Gauss
/// quadrature of the 1-form `psi_x dy - psi_y dx`.
pub fn line_integral(
    psi: &ScalarField,
    curve: &ClosedCurve,
) -> Result<(f64, f64), InvariantError> {
    let (psi_x, psi_y) = psi.grad();
    let (nodes, weights) = quad::gauss_legendre(4);
    let segs = curve.vertices().windows(2);
    let mut vals = Vec::with_capacity(curve.segment_count());
    let mut abs_vals = Vec::with_capacity(curve.segment_count());
    for seg in segs {
        let (a, b) = (seg[0], seg[1]);
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let mut failure: Option<DomainError> = None;
        let mut eval = |u: f64| -> f64 {
            let x = a[0] + u * dx;
            let y = a[1] + u * dy;
            match (psi_x.eval(x, y), psi_y.eval(x, y)) {
                (Ok(gx), Ok(gy)) => gx * dy - gy * dx,
                (Err(e), _) | (_, Err(e)) => {
                    failure = Some(e);
                    0.0
                }
            }
        };
        let v = quad::integrate(&nodes, &weights, 0.0, 1.0, &mut eval);
        let av = quad::integrate(&nodes, &weights, 0.0, 1.0, |u| eval(u).abs());
        if let Some(e) = failure {
            return Err(e.into());
        }
        vals.push(v);
        abs_vals.push(av);
    }
    Ok((quad::pairwise_sum(&vals), quad::pairwise_sum(&abs_vals)))
}

/// Integer winding numbers sampled at the centers of a uniform grid over the
/// curve's bounding box grown by 5%.
#[derive(Debug, Clone)]
pub struct WindingGrid {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    winding: Vec<i32>,
    /// Evaluation points of cells whose center fell on the curve (within
    /// 1e-9) and was perturbed by half a cell diagonal towards (+x, +y).
    perturbed: BTreeMap<usize, [f64; 2]>,
}

impl WindingGrid {
    pub fn build(curve: &ClosedCurve, resolution: usize) -> WindingGrid {
        let ([bx0, by0], [bx1, by1]) = curve.bounding_box();
        let (cx, cy) = (0.5 * (bx0 + bx1), 0.5 * (by0 + by1));
        let hx = 0.5 * (bx1 - bx0).max(1e-12) * 1.05;
        let hy = 0.5 * (by1 - by0).max(1e-12) * 1.05;
        let (x0, y0) = (cx - hx, cy - hy);
        let (nx, ny) = (resolution, resolution);
        let dx = 2.0 * hx / nx as f64;
        let dy = 2.0 * hy / ny as f64;

        let verts = curve.vertices();
        let segs: Vec<([f64; 2], [f64; 2])> =
            verts.windows(2).map(|s| (s[0], s[1])).collect();

        let mut winding = vec![0i32; nx * ny];
        let mut perturbed = BTreeMap::new();
        for iy in 0..ny {
            let yc = y0 + (iy as f64 + 0.5) * dy;
            // Signed ray crossings of this row line, sorted by x.
            let mut crossings: Vec<(f64, i32)> = Vec::new();
            for &(a, b) in &segs {
                if (a[1] <= yc) != (b[1] <= yc) {
                    let x_int = a[0] + (yc - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                    crossings.push((x_int, if b[1] > a[1] { 1 } else { -1 }));
                }
            }
            crossings.sort_by(|u, v| u.0.total_cmp(&v.0));
            // winding(x) counts crossings strictly to the right of x.
            let mut suffix = vec![0i32; crossings.len() + 1];
            for (i, &(_, d)) in crossings.iter().enumerate().rev() {
                suffix[i] = suffix[i + 1] + d;
            }
            for ix in 0..nx {
                let xc = x0 + (ix as f64 + 0.5) * dx;
                let idx = crossings.partition_point(|&(x, _)| x <= xc);
                winding[iy * nx + ix] = suffix[idx];
            }
            // Cells whose center lies on the curve: perturb deterministically.
            for &(a, b) in &segs {
                if yc < a[1].min(b[1]) - 1e-9 || yc > a[1].max(b[1]) + 1e-9 {
                    continue;
                }
                let lo = ((a[0].min(b[0]) - 1e-9 - x0) / dx - 0.5).floor().max(0.0) as usize;
                let hi = ((a[0].max(b[0]) + 1e-9 - x0) / dx).ceil().min(nx as f64) as usize;
                for ix in lo..hi {
                    let key = iy * nx + ix;
                    if perturbed.contains_key(&key) {
                        continue;
                    }
                    let xc = x0 + (ix as f64 + 0.5) * dx;
                    if point_segment_distance([xc, yc], a, b) <= 1e-9 {
                        let pt = [xc + 0.5 * dx, yc + 0.5 * dy];
                        perturbed.insert(key, pt);
                    }
                }
            }
        }
        for (&key, &pt) in &perturbed {
            winding[key] = curve.winding_number_unchecked(pt);
        }
        WindingGrid { x0, y0, dx, dy, nx, ny, winding, perturbed }
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn winding_at(&self, ix: usize, iy: usize) -> i32 {
        self.winding[iy * self.nx + ix]
    }

    /// Cell-center evaluation point, moved off the curve where necessary.
    pub fn eval_point(&self, ix: usize, iy: usize) -> [f64; 2] {
        let key = iy * self.nx + ix;
        self.perturbed.get(&key).copied().unwrap_or([
            self.x0 + (ix as f64 + 0.5) * self.dx,
            self.y0 + (iy as f64 + 0.5) * self.dy,
        ])
    }
}

/// Area form: midpoint-rule sum of `winding * laplacian(psi)` over the grid
/// cells, row-major with pairwise summation. Returns `(value, normalizer)`.
pub fn area_integral(
    psi: &ScalarField,
    curve: &ClosedCurve,
    resolution: usize,
) -> Result<(f64, f64), InvariantError> {
    if resolution < 32 {
        return Err(InvariantError::ResolutionTooSmall(resolution));
    }
    let lap = psi.laplacian();
    let grid = WindingGrid::build(curve, resolution);
    let (nx, ny) = grid.resolution();
    let cell = grid.cell_area();
    let mut vals = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let w = grid.winding_at(ix, iy);
            if w == 0 {
                vals.push(0.0);
                continue;
            }
            let pt = grid.eval_point(ix, iy);
            vals.push(w as f64 * lap.eval(pt[0], pt[1])? * cell);
        }
    }
    let value = quad::pairwise_sum(&vals);
    let abs_vals: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    Ok((value, quad::pairwise_sum(&abs_vals)))
}

/// All three forms with normalizers, cross-form residuals, and the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub time_integral: f64,
    pub line_integral: f64,
    pub area_integral: f64,
    pub time_normalizer: f64,
    pub line_normalizer: f64,
    pub area_normalizer: f64,
    pub time_line_residual: f64,
    pub line_area_residual: f64,
    pub tolerance: f64,
    pub normalizer_floor: f64,
    pub grid_resolution: usize,
    /// The area form used winding weights over a self-intersecting curve.
    pub self_intersecting: bool,
    pub holds: bool,
}

/// Evaluates the invariant on a refined orbit and delivers the verdict:
/// the invariant holds when both the time and contour forms vanish relative
/// to their normalizers at `tol`.
pub fn report(
    spec: &SystemSpec,
    orbit: &PeriodicOrbit,
    resolution: usize,
    tol: f64,
) -> Result<InvariantReport, InvariantError> {
    let (time_value, time_norm) = time_integral(spec, orbit)?;
    let (line_value, line_norm) = line_integral(spec.psi(), orbit.curve())?;
    let (area_value, area_norm) = area_integral(spec.psi(), orbit.curve(), resolution)?;
    let holds = invariant_holds(time_value, time_norm, tol)
        && invariant_holds(line_value, line_norm, tol);
    Ok(InvariantReport {
        time_integral: time_value,
        line_integral: line_value,
        area_integral: area_value,
        time_normalizer: time_norm,
        line_normalizer: line_norm,
        area_normalizer: area_norm,
        time_line_residual: (time_value - line_value).abs(),
        line_area_residual: (line_value - area_value).abs(),
        tolerance: tol,
        normalizer_floor: NORMALIZER_FLOOR,
        grid_resolution: resolution,
        self_intersecting: orbit.curve().is_self_intersecting(),
        holds,
    })
}
