//! Batch subcommands: each one reads a configuration, runs a pipeline, and
//! writes its reports into an output directory. Exit codes are part of the
//! contract:
//!
//! * 0 — success (for `verify`: the invariant holds)
//! * 2 — `verify` ran but the invariant verdict is "violated"
//! * 3 — no periodic orbit found
//! * 4 — configuration or input-format error
//! * 5 — integration / numerical failure
//!
//! Identical configurations produce byte-identical outputs, independent of
//! the scan worker count.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::config::{AxisTarget, ConfigError, RunConfig, ScanConfig};
use crate::dynamics::{
    self, energy_balance, fmt_f64, integrate, IntegrateError, PhaseState, SystemSpec,
};
use crate::expr::DomainError;
use crate::helmholtz::{self, BoundaryMode, GridError};
use crate::invariants::{self, InvariantError, InvariantReport};
use crate::resonance::{
    classify, estimate_frequencies, refine_orbit, FrequencyEstimate, PeriodicOrbit,
    ResonanceError, ResonanceLabel,
};

#[derive(Debug)]
pub enum CliError {
    /// Exit 4.
    Config(String),
    /// Exit 5.
    Numerical(String),
    /// Exit 3.
    NoOrbit(String),
    /// Exit 2; the report has already been written.
    Violated { report_path: PathBuf },
    /// Exit 1.
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violated { .. } => 2,
            CliError::NoOrbit(_) => 3,
            CliError::Config(_) => 4,
            CliError::Numerical(_) => 5,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::NoOrbit(m) => write!(f, "no periodic orbit: {m}"),
            CliError::Violated { report_path } => {
                write!(f, "invariant violated; see {}", report_path.display())
            }
            CliError::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<IntegrateError> for CliError {
    fn from(e: IntegrateError) -> Self {
        match e {
            IntegrateError::InvalidConfig(m) => CliError::Config(m),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<ResonanceError> for CliError {
    fn from(e: ResonanceError) -> Self {
        match e {
            ResonanceError::InvalidInput(m) => CliError::Config(m),
            ResonanceError::Integration(err) => err.into(),
            ResonanceError::NoConvergence { .. } | ResonanceError::DegenerateCurve(_) => {
                CliError::NoOrbit(e.to_string())
            }
        }
    }
}

impl From<InvariantError> for CliError {
    fn from(e: InvariantError) -> Self {
        match e {
            InvariantError::ResolutionTooSmall(_) => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<DomainError> for CliError {
    fn from(e: DomainError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        match e {
            GridError::Malformed(_)
            | GridError::BadGeometry(_)
            | GridError::LengthMismatch
            | GridError::ModeMismatch { .. }
            | GridError::NonFiniteSample => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Io(e.into()))?;
    writeln!(w)?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct SimulateSummary {
    pub system: String,
    pub t_start: f64,
    pub t_end: f64,
    pub initial_state: PhaseState,
    pub final_state: PhaseState,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub energy_balance_residual: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub trajectory_csv: String,
}

/// Integrates and writes `trajectory.csv` plus `simulate_summary.json`.
pub fn cmd_simulate(
    cfg: &RunConfig,
    state: [f64; 4],
    t_end: f64,
    dt: Option<f64>,
    out_dir: &Path,
) -> Result<SimulateSummary, CliError> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    let spec = cfg.build_system()?;
    let s0 = PhaseState::from_array(state, 0.0);
    let traj = integrate(&spec, s0, t_end, &cfg.integrator_config())?;

    let dt = dt.unwrap_or((t_end - s0.t) / 1000.0);
    if !(dt > 0.0) {
        return Err(CliError::Config("output dt must be positive".to_string()));
    }
    let csv_path = out_dir.join("trajectory.csv");
    {
        let mut w = BufWriter::new(File::create(&csv_path)?);
        dynamics::write_trajectory_csv(&spec, &traj, dt, &mut w)?;
    }

    let summary = SimulateSummary {
        system: spec.name().to_string(),
        t_start: traj.t_start(),
        t_end: traj.t_end(),
        initial_state: traj.start_state(),
        final_state: traj.end_state(),
        initial_energy: spec.energy(&traj.start_state())?,
        final_energy: spec.energy(&traj.end_state())?,
        energy_balance_residual: energy_balance(&spec, &traj)?,
        accepted_steps: traj.stats().accepted,
        rejected_steps: traj.stats().rejected,
        rhs_evaluations: traj.stats().evaluations,
        trajectory_csv: csv_path.display().to_string(),
    };
    write_json(&out_dir.join("simulate_summary.json"), &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
pub struct ClassifySummary {
    pub system: String,
    pub horizon: f64,
    pub frequencies: FrequencyEstimate,
    pub label: ResonanceLabel,
}

/// Classifies the motion from `state` over `horizon` time units and writes
/// `classification.json`.
pub fn cmd_classify(
    cfg: &RunConfig,
    state: [f64; 4],
    horizon: f64,
    out_dir: &Path,
) -> Result<ClassifySummary, CliError> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    let spec = cfg.build_system()?;
    let (freqs, label) = classify_from(cfg, &spec, state, horizon)?;
    let summary = ClassifySummary {
        system: spec.name().to_string(),
        horizon,
        frequencies: freqs,
        label,
    };
    write_json(&out_dir.join("classification.json"), &summary)?;
    Ok(summary)
}

fn classify_from(
    cfg: &RunConfig,
    spec: &SystemSpec,
    state: [f64; 4],
    horizon: f64,
) -> Result<(FrequencyEstimate, ResonanceLabel), CliError> {
    let s0 = PhaseState::from_array(state, 0.0);
    let traj = integrate(spec, s0, horizon, &cfg.integrator_config())?;
    let freqs = estimate_frequencies(&traj, cfg.classification.samples)?;
    let label = classify(&freqs, cfg.classification.max_denominator, cfg.classification.tolerance);
    Ok((freqs, label))
}

#[derive(Debug, Serialize)]
pub struct OrbitDocument {
    pub system: String,
    pub initial_state: PhaseState,
    pub period: f64,
    pub closure_residual: f64,
    pub label: ResonanceLabel,
    pub self_intersecting: bool,
    /// Closed projection onto the `(x, y)` plane.
    pub curve: Vec<[f64; 2]>,
}

fn orbit_document(
    cfg: &RunConfig,
    spec: &SystemSpec,
    orbit: &PeriodicOrbit,
) -> Result<OrbitDocument, CliError> {
    // Attach the m:n label by classifying a long trajectory started on the
    // refined orbit itself.
    let horizon = 32.0 * orbit.period();
    let (_, label) = classify_from(cfg, spec, orbit.initial_state().to_array(), horizon)?;
    Ok(OrbitDocument {
        system: spec.name().to_string(),
        initial_state: orbit.initial_state(),
        period: orbit.period(),
        closure_residual: orbit.closure_residual(),
        label,
        self_intersecting: orbit.is_self_intersecting(),
        curve: orbit.curve().vertices().to_vec(),
    })
}

fn write_curve(orbit: &PeriodicOrbit, path: &Path) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    invariants::write_curve_csv(orbit.curve(), &mut w)?;
    Ok(())
}

/// Refines a periodic orbit from the seed and writes `orbit.json` plus the
/// projected polyline as `orbit_curve.csv`.
pub fn cmd_find_orbit(
    cfg: &RunConfig,
    state: [f64; 4],
    seed_period: f64,
    out_dir: &Path,
) -> Result<OrbitDocument, CliError> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    let spec = cfg.build_system()?;
    let seed = PhaseState::from_array(state, 0.0);
    let orbit = refine_orbit(&spec, seed, seed_period, &cfg.integrator_config(), cfg.orbit_tolerance)?;
    let doc = orbit_document(cfg, &spec, &orbit)?;
    write_json(&out_dir.join("orbit.json"), &doc)?;
    write_curve(&orbit, &out_dir.join("orbit_curve.csv"))?;
    Ok(doc)
}

#[derive(Debug, Serialize)]
pub struct VerifyDocument {
    pub system: String,
    pub orbit: OrbitDocument,
    pub report: InvariantReport,
}

/// Refines an orbit, evaluates the invariant report, and writes
/// `verify.json`. Exit code 0 when the verdict holds, 2 when violated,
/// 3 when no orbit could be refined.
pub fn cmd_verify(
    cfg: &RunConfig,
    state: [f64; 4],
    seed_period: f64,
    resolution: Option<usize>,
    out_dir: &Path,
) -> Result<VerifyDocument, CliError> {
    cfg.validate()?;
    ensure_dir(out_dir)?;
    let spec = cfg.build_system()?;
    let seed = PhaseState::from_array(state, 0.0);
    let orbit = refine_orbit(&spec, seed, seed_period, &cfg.integrator_config(), cfg.orbit_tolerance)?;
    let resolution = resolution.unwrap_or(cfg.grid_resolution);
    let report = invariants::report(&spec, &orbit, resolution, cfg.invariant_tolerance)?;
    let doc = VerifyDocument {
        system: spec.name().to_string(),
        orbit: orbit_document(cfg, &spec, &orbit)?,
        report,
    };
    let report_path = out_dir.join("verify.json");
    write_json(&report_path, &doc)?;
    write_curve(&orbit, &out_dir.join("orbit_curve.csv"))?;
    if !doc.report.holds {
        return Err(CliError::Violated { report_path });
    }
    Ok(doc)
}

/// One scan row; failures stay in the row and never abort the scan.
#[derive(Debug, Clone)]
struct ScanRow {
    axes: Vec<f64>,
    status: String,
    label: String,
    m: Option<u32>,
    n: Option<u32>,
    period: Option<f64>,
    closure_residual: Option<f64>,
    time_integral: Option<f64>,
    line_integral: Option<f64>,
    area_integral: Option<f64>,
    verdict: String,
}

impl ScanRow {
    fn to_csv(&self) -> String {
        let num = |v: &Option<f64>| v.map(fmt_f64).unwrap_or_default();
        let int = |v: &Option<u32>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut cells: Vec<String> = self.axes.iter().map(|v| fmt_f64(*v)).collect();
        cells.extend([
            self.status.clone(),
            self.label.clone(),
            int(&self.m),
            int(&self.n),
            num(&self.period),
            num(&self.closure_residual),
            num(&self.time_integral),
            num(&self.line_integral),
            num(&self.area_integral),
            self.verdict.clone(),
        ]);
        cells.join(",")
    }
}

fn scan_cell(scan: &ScanConfig, axis_values: &[f64]) -> Result<ScanRow, CliError> {
    let mut cfg = scan.base();
    let mut state = scan.scan.state;
    for (axis, &value) in scan.scan.axes.iter().zip(axis_values) {
        match axis.parse_target()? {
            AxisTarget::Param(name) => {
                cfg.system.params.insert(name, value);
            }
            AxisTarget::State(idx) => state[idx] = value,
        }
    }
    let spec = cfg.build_system()?;
    let (_, label) = classify_from(&cfg, &spec, state, scan.scan.horizon)?;

    let mut row = ScanRow {
        axes: axis_values.to_vec(),
        status: "ok".to_string(),
        label: String::new(),
        m: None,
        n: None,
        period: None,
        closure_residual: None,
        time_integral: None,
        line_integral: None,
        area_integral: None,
        verdict: String::new(),
    };
    match label {
        ResonanceLabel::QuasiPeriodic => {
            row.label = "quasi_periodic".to_string();
            Ok(row)
        }
        ResonanceLabel::Periodic { m, n, period } => {
            row.label = "periodic".to_string();
            row.m = Some(m);
            row.n = Some(n);
            let seed = PhaseState::from_array(state, 0.0);
            let orbit =
                refine_orbit(&spec, seed, period, &cfg.integrator_config(), cfg.orbit_tolerance)?;
            row.period = Some(orbit.period());
            row.closure_residual = Some(orbit.closure_residual());
            let report =
                invariants::report(&spec, &orbit, cfg.grid_resolution, cfg.invariant_tolerance)?;
            row.time_integral = Some(report.time_integral);
            row.line_integral = Some(report.line_integral);
            row.area_integral = Some(report.area_integral);
            row.verdict = if report.holds { "holds" } else { "violated" }.to_string();
            Ok(row)
        }
    }
}

/// Runs the scan over a bounded worker pool and writes `scan.csv`. Rows are
/// emitted in row-major axis order regardless of the worker count; per-cell
/// failures are recorded in the row's status column.
pub fn cmd_scan(scan: &ScanConfig, out_dir: &Path, workers: usize) -> Result<PathBuf, CliError> {
    scan.validate()?;
    ensure_dir(out_dir)?;

    let grids: Vec<Vec<f64>> = scan.scan.axes.iter().map(|a| a.values()).collect();
    let mut cells: Vec<Vec<f64>> = Vec::new();
    match grids.len() {
        1 => {
            for &a in &grids[0] {
                cells.push(vec![a]);
            }
        }
        _ => {
            for &a in &grids[0] {
                for &b in &grids[1] {
                    cells.push(vec![a, b]);
                }
            }
        }
    }

    let workers = workers.clamp(1, cells.len().max(1));
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<ScanRow>>> = Mutex::new(vec![None; cells.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let row = match scan_cell(scan, &cells[i]) {
                    Ok(row) => row,
                    Err(e) => ScanRow {
                        axes: cells[i].clone(),
                        status: format!("error: {e}"),
                        label: String::new(),
                        m: None,
                        n: None,
                        period: None,
                        closure_residual: None,
                        time_integral: None,
                        line_integral: None,
                        area_integral: None,
                        verdict: String::new(),
                    },
                };
                rows.lock().unwrap()[i] = Some(row);
            });
        }
    });

    let path = out_dir.join("scan.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    let axis_names: Vec<String> = scan
        .scan
        .axes
        .iter()
        .map(|a| a.target.replace(':', "_"))
        .collect();
    writeln!(
        w,
        "{},status,label,m,n,period,closure_residual,time_integral,line_integral,area_integral,verdict",
        axis_names.join(",")
    )?;
    for row in rows.into_inner().unwrap() {
        writeln!(w, "{}", row.expect("all scan cells computed").to_csv())?;
    }
    Ok(path)
}

#[derive(Debug, Serialize)]
pub struct DecomposeSummary {
    pub mode: BoundaryMode,
    pub recomposition_residual: f64,
    pub warning: Option<String>,
    pub u_csv: String,
    pub psi_csv: String,
}

/// Reads a sampled force field, splits it, and writes the recovered
/// potentials plus `decomposition.json`.
pub fn cmd_decompose(
    input: &Path,
    mode: BoundaryMode,
    out_dir: &Path,
) -> Result<DecomposeSummary, CliError> {
    ensure_dir(out_dir)?;
    let file = File::open(input).map_err(|e| {
        CliError::Config(format!("cannot open grid file {}: {e}", input.display()))
    })?;
    let field = helmholtz::read_field(std::io::BufReader::new(file), mode == BoundaryMode::Periodic)?;
    let dec = helmholtz::decompose(&field, mode)?;

    let u_path = out_dir.join("u_grid.csv");
    let psi_path = out_dir.join("psi_grid.csv");
    {
        let mut w = BufWriter::new(File::create(&u_path)?);
        helmholtz::write_scalar_csv(&dec.u, "U", &mut w)?;
        let mut w = BufWriter::new(File::create(&psi_path)?);
        helmholtz::write_scalar_csv(&dec.psi, "psi", &mut w)?;
    }
    let summary = DecomposeSummary {
        mode,
        recomposition_residual: dec.residual,
        warning: dec.warning.clone(),
        u_csv: u_path.display().to_string(),
        psi_csv: psi_path.display().to_string(),
    };
    write_json(&out_dir.join("decomposition.json"), &summary)?;
    Ok(summary)
}

/// Writes ready-to-run demo configurations and verifies the resonant one.
pub fn cmd_demo(out_dir: &Path) -> Result<VerifyDocument, CliError> {
    ensure_dir(out_dir)?;
    let harmonic = r#"{
  "version": 1,
  "system": {"name": "harmonic-circle", "u": "0.5*(x^2+y^2)", "psi": "0"}
}
"#;
    let resonant = r#"{
  "version": 1,
  "system": {"name": "resonant-1-2", "u": "(2*x^2+3*y^2)/2", "psi": "x*y"}
}
"#;
    let quasi = r#"{
  "version": 1,
  "system": {"name": "quasi-sqrt3", "u": "x^2+y^2", "psi": "x*y"}
}
"#;
    fs::write(out_dir.join("demo_harmonic.json"), harmonic)?;
    fs::write(out_dir.join("demo_resonant.json"), resonant)?;
    fs::write(out_dir.join("demo_quasiperiodic.json"), quasi)?;

    let cfg = RunConfig::from_json_str(resonant)?;
    cmd_verify(&cfg, [1.0, 0.0, 0.0, 2.0], 6.2, None, out_dir)
}

/// Worker count for scans: the `VORTICAL_WORKERS` environment variable, or
/// all available parallelism.
pub fn worker_count() -> usize {
    if let Ok(text) = std::env::var("VORTICAL_WORKERS") {
        if let Ok(n) = text.trim().parse::<usize>() {
            if n >= 1 {
                return n;
            }
        }
    }
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
