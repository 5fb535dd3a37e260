//! Planar mechanical systems of the form
//!
//! ```text
//! x'' = -dU/dx + dpsi/dy,      y'' = -dU/dy - dpsi/dx
//! ```
//!
//! built from two scalar fields: a potential `U(x, y)` and a vortical
//! (stream-function) potential `psi(x, y)`. The crate provides
//!
//! * [`expr`] — a small expression language for `U` and `psi` with exact
//!   symbolic first and second derivatives,
//! * [`dynamics`] — force assembly, an adaptive 5(4) Runge–Kutta integrator
//!   with dense output, the mechanical energy `H = (p^2 + r^2)/2 + U`, the
//!   power of the vortical force, and an energy-balance diagnostic,
//! * [`resonance`] — Poincaré-section crossings, spectral frequency
//!   estimation, rational frequency-ratio classification, and Newton
//!   shooting refinement of periodic orbits,
//! * [`invariants`] — the circulation invariant of a closed orbit in its
//!   three forms (time integral, contour integral, winding-weighted area
//!   integral) with cross-form verdicts,
//! * [`helmholtz`] — splitting a sampled 2D force field into potential and
//!   vortical parts on periodic or Dirichlet grids, plus the forward
//!   composition for round trips,
//! * [`config`] / [`commands`] — JSON run configuration and the batch
//!   subcommands behind the `vortical` binary.
//!
//! Each runnable capability has a standalone program under `examples/`.

// Negated comparisons like `!(x > 0.0)` are used on purpose: they treat NaN
// as out of range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod dynamics;
pub mod expr;
pub mod helmholtz;
pub mod invariants;
pub mod quad;
pub mod resonance;


pub use dynamics::{IntegratorConfig, PhaseState, SystemSpec, Trajectory};
pub use expr::{Expr, ScalarField};
pub use invariants::{ClosedCurve, InvariantReport};
pub use resonance::{FrequencyEstimate, PeriodicOrbit, ResonanceLabel, SectionSpec};


