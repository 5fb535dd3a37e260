//! Grid Helmholtz decomposition of sampled planar force fields.
//!
//! A field `F = (Fx, Fy)` splits into a potential part `-grad U` and a
//! vortical part `(psi_y, -psi_x)`; the potentials solve
//! `laplacian U = -div F` and `laplacian psi = -curl_z F`. On periodic grids
//! the whole pipeline (derivatives, inversion, recomposition residual) runs
//! in Fourier space, which is exact for resolved fields; Dirichlet-zero
//! grids use 5-point stencils with successive over-relaxation and are
//! approximate near the boundary.
//!
//! The split is unique only up to harmonic components: a constant field is
//! representable by neither part on a periodic grid, stays in the residual,
//! and is reported through the result's warning.

mod io;
mod poisson;

pub use io::{read_field, read_field_csv, write_field_csv, write_field_with_header, write_scalar_csv};
pub use poisson::{fft2, solve_poisson, wavenumber, PoissonSolution, SOR_MAX_SWEEPS, SOR_TOL};

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{DomainError, ScalarField};

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid geometry: {0}")]
    BadGeometry(String),
    #[error("grid samples must all be finite")]
    NonFiniteSample,
    #[error("sample count does not match nx * ny")]
    LengthMismatch,
    #[error("boundary mode does not match the grid (grid periodic: {grid_periodic})")]
    ModeMismatch { grid_periodic: bool },
    #[error("relaxation stalled at relative residual {achieved:e} after {sweeps} sweeps")]
    RelaxationStalled { achieved: f64, sweeps: usize },
    #[error("field evaluation failed: {0}")]
    Domain(#[from] DomainError),
    #[error("malformed grid file: {0}")]
    Malformed(String),
}

/// Boundary treatment of grid operators and Poisson solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    Periodic,
    DirichletZero,
}

/// Uniform rectilinear grid. Periodic grids sample `[min, max)` with spacing
/// `extent / n` (the upper edge excluded); bounded grids include both edges
/// with spacing `extent / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
    pub periodic: bool,
}

impl GridGeometry {
    pub fn validate(&self) -> Result<(), GridError> {
        if self.nx < 8 || self.ny < 8 {
            return Err(GridError::BadGeometry(format!(
                "need at least 8 nodes per axis (got {} x {})",
                self.nx, self.ny
            )));
        }
        if !(self.x_max > self.x_min) || !(self.y_max > self.y_min) {
            return Err(GridError::BadGeometry("empty extent".to_string()));
        }
        for v in [self.x_min, self.x_max, self.y_min, self.y_max] {
            if !v.is_finite() {
                return Err(GridError::BadGeometry("non-finite extent".to_string()));
            }
        }
        Ok(())
    }

    pub fn x_extent(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn y_extent(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn dx(&self) -> f64 {
        if self.periodic {
            self.x_extent() / self.nx as f64
        } else {
            self.x_extent() / (self.nx - 1) as f64
        }
    }

    pub fn dy(&self) -> f64 {
        if self.periodic {
            self.y_extent() / self.ny as f64
        } else {
            self.y_extent() / (self.ny - 1) as f64
        }
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.dy()
    }

    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One scalar channel sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridScalar {
    pub geometry: GridGeometry,
    pub values: Vec<f64>,
}

impl GridScalar {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<GridScalar, GridError> {
        geometry.validate()?;
        if values.len() != geometry.len() {
            return Err(GridError::LengthMismatch);
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(GridError::NonFiniteSample);
        }
        Ok(GridScalar { geometry, values })
    }

    pub fn from_fn(
        geometry: GridGeometry,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<GridScalar, GridError> {
        geometry.validate()?;
        let mut values = Vec::with_capacity(geometry.len());
        for iy in 0..geometry.ny {
            for ix in 0..geometry.nx {
                values.push(f(geometry.x(ix), geometry.y(iy)));
            }
        }
        GridScalar::new(geometry, values)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Max-norm distance to another grid of identical geometry.
    pub fn max_diff(&self, other: &GridScalar) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A sampled vector field `(Fx, Fy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub geometry: GridGeometry,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
}

impl GridField {
    pub fn new(geometry: GridGeometry, fx: Vec<f64>, fy: Vec<f64>) -> Result<GridField, GridError> {
        geometry.validate()?;
        if fx.len() != geometry.len() || fy.len() != geometry.len() {
            return Err(GridError::LengthMismatch);
        }
        if !fx.iter().chain(fy.iter()).all(|v| v.is_finite()) {
            return Err(GridError::NonFiniteSample);
        }
        Ok(GridField { geometry, fx, fy })
    }

    pub fn l2_norm(&self) -> f64 {
        self.fx
            .iter()
            .chain(self.fy.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }
}

/// 2nd-order derivative of one channel along an axis: central differences
/// with periodic wrap, or one-sided stencils at bounded edges.
fn derivative(geom: &GridGeometry, values: &[f64], axis: usize) -> Vec<f64> {
    let (nx, ny) = (geom.nx, geom.ny);
    let h = if axis == 0 { geom.dx() } else { geom.dy() };
    let n_axis = if axis == 0 { nx } else { ny };
    let at = |ix: usize, iy: usize| values[geom.idx(ix, iy)];
    let mut out = vec![0.0; values.len()];
    for iy in 0..ny {
        for ix in 0..nx {
            let i = if axis == 0 { ix } else { iy };
            let sample = |j: usize| if axis == 0 { at(j, iy) } else { at(ix, j) };
            let v = if geom.periodic {
                let prev = (i + n_axis - 1) % n_axis;
                let next = (i + 1) % n_axis;
                (sample(next) - sample(prev)) / (2.0 * h)
            } else if i == 0 {
                (-3.0 * sample(0) + 4.0 * sample(1) - sample(2)) / (2.0 * h)
            } else if i == n_axis - 1 {
                (3.0 * sample(i) - 4.0 * sample(i - 1) + sample(i - 2)) / (2.0 * h)
            } else {
                (sample(i + 1) - sample(i - 1)) / (2.0 * h)
            };
            out[geom.idx(ix, iy)] = v;
        }
    }
    out
}

/// `dFx/dx + dFy/dy` by 2nd-order differences.
pub fn divergence(f: &GridField) -> GridScalar {
    let ddx = derivative(&f.geometry, &f.fx, 0);
    let ddy = derivative(&f.geometry, &f.fy, 1);
    let values = ddx.iter().zip(&ddy).map(|(a, b)| a + b).collect();
    GridScalar { geometry: f.geometry, values }
}

/// Scalar curl `dFy/dx - dFx/dy` by 2nd-order differences.
pub fn curl_z(f: &GridField) -> GridScalar {
    let dfy_dx = derivative(&f.geometry, &f.fy, 0);
    let dfx_dy = derivative(&f.geometry, &f.fx, 1);
    let values = dfy_dx.iter().zip(&dfx_dy).map(|(a, b)| a - b).collect();
    GridScalar { geometry: f.geometry, values }
}

/// Samples the force field `(-U_x + psi_y, -U_y - psi_x)` at the grid nodes
/// using exact symbolic derivatives; node values agree with the dynamics
/// force assembly exactly.
pub fn compose(
    u: &ScalarField,
    psi: &ScalarField,
    geometry: GridGeometry,
) -> Result<GridField, GridError> {
    geometry.validate()?;
    let (u_x, u_y) = u.grad();
    let (psi_x, psi_y) = psi.grad();
    let mut fx = Vec::with_capacity(geometry.len());
    let mut fy = Vec::with_capacity(geometry.len());
    for iy in 0..geometry.ny {
        for ix in 0..geometry.nx {
            let (x, y) = (geometry.x(ix), geometry.y(iy));
            fx.push(-u_x.eval(x, y)? + psi_y.eval(x, y)?);
            fy.push(-u_y.eval(x, y)? - psi_x.eval(x, y)?);
        }
    }
    GridField::new(geometry, fx, fy)
}

/// Outcome of a decomposition.
#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub u: GridScalar,
    pub psi: GridScalar,
    /// Relative L2 norm of `F - (-grad U + rot psi)` computed with the same
    /// discrete operators the decomposition used.
    pub residual: f64,
    pub mode: BoundaryMode,
    pub warning: Option<String>,
}

impl DecompositionResult {
    /// `-grad U` by the 2nd-order stencils.
    pub fn potential_part(&self) -> GridField {
        let gx = derivative(&self.u.geometry, &self.u.values, 0);
        let gy = derivative(&self.u.geometry, &self.u.values, 1);
        GridField {
            geometry: self.u.geometry,
            fx: gx.into_iter().map(|v| -v).collect(),
            fy: gy.into_iter().map(|v| -v).collect(),
        }
    }

    /// `(psi_y, -psi_x)` by the 2nd-order stencils.
    pub fn vortical_part(&self) -> GridField {
        let gx = derivative(&self.psi.geometry, &self.psi.values, 0);
        let gy = derivative(&self.psi.geometry, &self.psi.values, 1);
        GridField {
            geometry: self.psi.geometry,
            fx: gy,
            fy: gx.into_iter().map(|v| -v).collect(),
        }
    }
}

/// Splits `f` into potential and vortical parts.
pub fn decompose(f: &GridField, mode: BoundaryMode) -> Result<DecompositionResult, GridError> {
    f.geometry.check_mode(mode)?;
    match mode {
        BoundaryMode::Periodic => decompose_spectral(f),
        BoundaryMode::DirichletZero => decompose_sor(f),
    }
}

fn decompose_spectral(f: &GridField) -> Result<DecompositionResult, GridError> {
    let g = f.geometry;
    let (nx, ny) = (g.nx, g.ny);
    let n = (nx * ny) as f64;

    let mut fx_hat: Vec<Complex<f64>> = f.fx.iter().map(|&v| Complex::new(v, 0.0)).collect();
    let mut fy_hat: Vec<Complex<f64>> = f.fy.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut fx_hat, nx, ny, false);
    fft2(&mut fy_hat, nx, ny, false);

    let mean_x = fx_hat[0].re / n;
    let mean_y = fy_hat[0].re / n;

    let mut u_hat = vec![Complex::new(0.0, 0.0); nx * ny];
    let mut psi_hat = vec![Complex::new(0.0, 0.0); nx * ny];
    let mut res_num = 0.0;
    let mut res_den = 0.0;
    let i_unit = Complex::new(0.0, 1.0);
    for iy in 0..ny {
        let ky = wavenumber(iy, ny, g.y_extent());
        for ix in 0..nx {
            let kx = wavenumber(ix, nx, g.x_extent());
            let k2 = kx * kx + ky * ky;
            let idx = iy * nx + ix;
            let (fxh, fyh) = (fx_hat[idx], fy_hat[idx]);
            res_den += fxh.norm_sqr() + fyh.norm_sqr();
            if k2 == 0.0 {
                // Mean and Nyquist modes are invisible to the derivative
                // operators: they stay in the residual.
                res_num += fxh.norm_sqr() + fyh.norm_sqr();
                continue;
            }
            let uh = i_unit * (kx * fxh + ky * fyh) / k2;
            let ph = i_unit * (kx * fyh - ky * fxh) / k2;
            u_hat[idx] = uh;
            psi_hat[idx] = ph;
            let rec_x = -i_unit * kx * uh + i_unit * ky * ph;
            let rec_y = -i_unit * ky * uh - i_unit * kx * ph;
            res_num += (fxh - rec_x).norm_sqr() + (fyh - rec_y).norm_sqr();
        }
    }
    let residual = if res_den > 0.0 { (res_num / res_den).sqrt() } else { 0.0 };

    fft2(&mut u_hat, nx, ny, true);
    fft2(&mut psi_hat, nx, ny, true);
    let mut u_vals: Vec<f64> = u_hat.iter().map(|c| c.re / n).collect();
    let mut psi_vals: Vec<f64> = psi_hat.iter().map(|c| c.re / n).collect();
    zero_mean(&mut u_vals);
    zero_mean(&mut psi_vals);

    let rms = (res_den / (2.0 * n)).sqrt();
    let mean_mag = (mean_x * mean_x + mean_y * mean_y).sqrt();
    let warning = (mean_mag > 1e-12 * rms.max(1e-300)).then(|| {
        format!(
            "constant force component ({mean_x:e}, {mean_y:e}) is a harmonic remainder; \
             it is representable by neither potential and stays in the residual"
        )
    });

    Ok(DecompositionResult {
        u: GridScalar::new(g, u_vals)?,
        psi: GridScalar::new(g, psi_vals)?,
        residual,
        mode: BoundaryMode::Periodic,
        warning,
    })
}

fn decompose_sor(f: &GridField) -> Result<DecompositionResult, GridError> {
    let div = divergence(f);
    let curl = curl_z(f);
    let neg = |g: &GridScalar| GridScalar {
        geometry: g.geometry,
        values: g.values.iter().map(|v| -v).collect(),
    };
    let u = solve_poisson(&neg(&div), BoundaryMode::DirichletZero)?;
    let psi = solve_poisson(&neg(&curl), BoundaryMode::DirichletZero)?;

    let result = DecompositionResult {
        u: u.grid,
        psi: psi.grid,
        residual: 0.0,
        mode: BoundaryMode::DirichletZero,
        warning: None,
    };
    let pot = result.potential_part();
    let vort = result.vortical_part();
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..f.fx.len() {
        num += (f.fx[i] - pot.fx[i] - vort.fx[i]).powi(2)
            + (f.fy[i] - pot.fy[i] - vort.fy[i]).powi(2);
        den += f.fx[i].powi(2) + f.fy[i].powi(2);
    }
    let residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(DecompositionResult { residual, ..result })
}

fn zero_mean(values: &mut [f64]) {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in values {
        *v -= mean;
    }
}
