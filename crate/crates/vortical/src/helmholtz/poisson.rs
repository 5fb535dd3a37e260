//! Poisson solvers backing the grid decomposition.
//!
//! Periodic grids invert the Laplacian exactly in Fourier space (zero-mean
//! gauge); Dirichlet-zero grids run red-black successive over-relaxation on
//! the 5-point stencil until the relative residual reaches 1e-10.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{BoundaryMode, GridError, GridGeometry, GridScalar};

pub const SOR_TOL: f64 = 1e-10;
pub const SOR_MAX_SWEEPS: usize = 100_000;

/// Result of a Poisson solve `laplacian(u) = rhs`.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub grid: GridScalar,
    /// Mean removed from the right-hand side in the periodic mode
    /// (solvability gauge); 0 in Dirichlet mode.
    pub removed_mean: f64,
    /// Relative residual of the discrete solve.
    pub residual: f64,
    /// Relaxation sweeps performed (0 for the spectral path).
    pub sweeps: usize,
}

/// In-place 2D FFT over a row-major `ny` x `nx` complex buffer.
pub fn fft2(buf: &mut [Complex<f64>], nx: usize, ny: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(nx)
    } else {
        planner.plan_fft_forward(nx)
    };
    for row in buf.chunks_exact_mut(nx) {
        row_fft.process(row);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(ny)
    } else {
        planner.plan_fft_forward(ny)
    };
    let mut scratch = vec![Complex::new(0.0, 0.0); ny];
    for ix in 0..nx {
        for iy in 0..ny {
            scratch[iy] = buf[iy * nx + ix];
        }
        col_fft.process(&mut scratch);
        for iy in 0..ny {
            buf[iy * nx + ix] = scratch[iy];
        }
    }
}

/// Angular wavenumber of FFT bin `i` for first-derivative operators; the
/// Nyquist bin of even lengths maps to zero so real fields stay real.
pub fn wavenumber(i: usize, n: usize, length: f64) -> f64 {
    if n.is_multiple_of(2) && i == n / 2 {
        return 0.0;
    }
    let signed = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
    2.0 * std::f64::consts::PI * signed / length
}

pub fn solve_poisson(rhs: &GridScalar, mode: BoundaryMode) -> Result<PoissonSolution, GridError> {
    rhs.geometry.check_mode(mode)?;
    match mode {
        BoundaryMode::Periodic => solve_spectral(rhs),
        BoundaryMode::DirichletZero => solve_sor(rhs),
    }
}

fn solve_spectral(rhs: &GridScalar) -> Result<PoissonSolution, GridError> {
    let g = rhs.geometry;
    let (nx, ny) = (g.nx, g.ny);
    let n = (nx * ny) as f64;
    let mean = rhs.values.iter().sum::<f64>() / n;

    let mut buf: Vec<Complex<f64>> =
        rhs.values.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    fft2(&mut buf, nx, ny, false);
    let mut rhs_hat = buf.clone();
    for iy in 0..ny {
        let ky = wavenumber(iy, ny, g.y_extent());
        for ix in 0..nx {
            let kx = wavenumber(ix, nx, g.x_extent());
            let k2 = kx * kx + ky * ky;
            let idx = iy * nx + ix;
            if k2 == 0.0 {
                buf[idx] = Complex::new(0.0, 0.0);
                rhs_hat[idx] = Complex::new(0.0, 0.0);
            } else {
                buf[idx] /= -k2;
            }
        }
    }

    // Residual of the spectral operator applied back, via Parseval.
    let mut num = 0.0;
    let mut den = 0.0;
    for iy in 0..ny {
        let ky = wavenumber(iy, ny, g.y_extent());
        for ix in 0..nx {
            let kx = wavenumber(ix, nx, g.x_extent());
            let k2 = kx * kx + ky * ky;
            let idx = iy * nx + ix;
            num += (buf[idx] * (-k2) - rhs_hat[idx]).norm_sqr();
            den += rhs_hat[idx].norm_sqr();
        }
    }
    let residual = if den > 0.0 { (num / den).sqrt() } else { 0.0 };

    fft2(&mut buf, nx, ny, true);
    let mut values: Vec<f64> = buf.iter().map(|c| c.re / n).collect();
    let u_mean = values.iter().sum::<f64>() / n;
    for v in &mut values {
        *v -= u_mean;
    }
    Ok(PoissonSolution {
        grid: GridScalar::new(g, values)?,
        removed_mean: mean,
        residual,
        sweeps: 0,
    })
}

fn solve_sor(rhs: &GridScalar) -> Result<PoissonSolution, GridError> {
    let g = rhs.geometry;
    let (nx, ny) = (g.nx, g.ny);
    let (dx, dy) = (g.dx(), g.dy());
    let (ax, ay) = (1.0 / (dx * dx), 1.0 / (dy * dy));
    let diag = 2.0 * (ax + ay);

    // Jacobi spectral radius of the 5-point operator on this rectangle,
    // giving the optimal over-relaxation factor.
    let rho = (ax * (std::f64::consts::PI / (nx as f64 - 1.0)).cos()
        + ay * (std::f64::consts::PI / (ny as f64 - 1.0)).cos())
        / (ax + ay);
    let omega = 2.0 / (1.0 + (1.0 - rho * rho).max(0.0).sqrt());

    let rhs_norm = rhs.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut u = vec![0.0f64; nx * ny];
    if rhs_norm == 0.0 {
        return Ok(PoissonSolution {
            grid: GridScalar::new(g, u)?,
            removed_mean: 0.0,
            residual: 0.0,
            sweeps: 0,
        });
    }

    let idx = |ix: usize, iy: usize| iy * nx + ix;
    let mut sweeps = 0;
    let mut residual = f64::INFINITY;
    while sweeps < SOR_MAX_SWEEPS {
        // Red-black ordering: two half-sweeps over fixed colors, so the
        // update order (hence the result) does not depend on traversal.
        for color in 0..2usize {
            for iy in 1..ny - 1 {
                for ix in 1..nx - 1 {
                    if (ix + iy) % 2 != color {
                        continue;
                    }
                    let nb = ax * (u[idx(ix + 1, iy)] + u[idx(ix - 1, iy)])
                        + ay * (u[idx(ix, iy + 1)] + u[idx(ix, iy - 1)]);
                    let gs = (nb - rhs.values[idx(ix, iy)]) / diag;
                    u[idx(ix, iy)] += omega * (gs - u[idx(ix, iy)]);
                }
            }
        }
        sweeps += 1;
        if sweeps % 16 == 0 || sweeps == SOR_MAX_SWEEPS {
            let mut acc = 0.0;
            for iy in 1..ny - 1 {
                for ix in 1..nx - 1 {
                    let lap = ax * (u[idx(ix + 1, iy)] - 2.0 * u[idx(ix, iy)] + u[idx(ix - 1, iy)])
                        + ay * (u[idx(ix, iy + 1)] - 2.0 * u[idx(ix, iy)] + u[idx(ix, iy - 1)]);
                    let r = rhs.values[idx(ix, iy)] - lap;
                    acc += r * r;
                }
            }
            residual = acc.sqrt() / rhs_norm;
            if residual <= SOR_TOL {
                return Ok(PoissonSolution {
                    grid: GridScalar::new(g, u)?,
                    removed_mean: 0.0,
                    residual,
                    sweeps,
                });
            }
        }
    }
    Err(GridError::RelaxationStalled { achieved: residual, sweeps })
}

/// Geometry helpers shared with the spectral path.
impl GridGeometry {
    pub(super) fn check_mode(&self, mode: BoundaryMode) -> Result<(), GridError> {
        let want = matches!(mode, BoundaryMode::Periodic);
        if self.periodic != want {
            return Err(GridError::ModeMismatch {
                grid_periodic: self.periodic,
            });
        }
        Ok(())
    }
}
