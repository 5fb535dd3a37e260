use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use vortical::commands::{self, CliError};
use vortical::config::{RunConfig, ScanConfig};
use vortical::helmholtz::BoundaryMode;

/// Batch tool for planar systems driven by a scalar potential U and a
/// vortical potential psi: simulation, resonance classification, periodic
/// orbits, invariant verification, parameter scans, and grid field
/// decomposition.
#[derive(Parser)]
#[command(name = "vortical", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy)]
struct StateArg([f64; 4]);

impl FromStr for StateArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Result<Vec<f64>, _> = s.split(',').map(|c| c.trim().parse::<f64>()).collect();
        match parts {
            Ok(v) if v.len() == 4 => Ok(StateArg([v[0], v[1], v[2], v[3]])),
            Ok(v) => Err(format!("expected 4 components x,y,p,r (got {})", v.len())),
            Err(e) => Err(e.to_string()),
        }
    }
}

fn parse_mode(s: &str) -> Result<BoundaryMode, String> {
    match s {
        "periodic" => Ok(BoundaryMode::Periodic),
        "dirichlet" | "dirichlet-zero" => Ok(BoundaryMode::DirichletZero),
        other => Err(format!("unknown mode {other:?} (periodic | dirichlet)")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate from an initial state and export the trajectory as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Initial state as `x,y,p,r`.
        #[arg(long)]
        state: StateArg,
        #[arg(long = "t-end")]
        t_end: f64,
        /// Output sampling interval (default: span / 1000).
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate dominant frequencies and label the motion periodic or
    /// quasi-periodic.
    Classify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        state: StateArg,
        /// Classification horizon in time units (>= 20 characteristic
        /// periods recommended).
        #[arg(long = "t-end")]
        t_end: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refine a periodic orbit by shooting from a seed state and period.
    FindOrbit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        state: StateArg,
        #[arg(long = "seed-period")]
        seed_period: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refine an orbit and verify the circulation invariant in all three
    /// forms. Exits 0 when the invariant holds, 2 when violated, 3 when no
    /// orbit is found.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        state: StateArg,
        #[arg(long = "seed-period")]
        seed_period: f64,
        /// Winding-grid resolution override for the area form.
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one or two parameters / state components; one CSV row per cell.
    /// Worker count comes from VORTICAL_WORKERS (default: all cores).
    Scan {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Split a sampled force field CSV into potential and vortical parts.
    Decompose {
        /// Grid file: plain `x,y,Fx,Fy` CSV or the JSON-header format.
        #[arg(long)]
        input: PathBuf,
        /// periodic | dirichlet
        #[arg(long, value_parser = parse_mode)]
        mode: BoundaryMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write demo configurations and verify the bundled resonant system.
    Demo {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>, cfg_dir: Option<&str>) -> PathBuf {
    flag.or_else(|| cfg_dir.map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, state, t_end, dt, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let dir = out_dir(out, cfg.output_dir.as_deref());
            let summary = commands::cmd_simulate(&cfg, state.0, t_end, dt, &dir)?;
            println!(
                "simulated {} to t = {}: {} accepted steps, energy balance residual {:e}",
                summary.system, summary.t_end, summary.accepted_steps,
                summary.energy_balance_residual
            );
            println!("wrote {}", summary.trajectory_csv);
        }
        Command::Classify { config, state, t_end, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let dir = out_dir(out, cfg.output_dir.as_deref());
            let summary = commands::cmd_classify(&cfg, state.0, t_end, &dir)?;
            println!(
                "f1 = {} (confidence {:.3}), f2 = {} (confidence {:.3})",
                summary.frequencies.f1,
                summary.frequencies.confidence_x,
                summary.frequencies.f2,
                summary.frequencies.confidence_y
            );
            println!("label: {}", summary.label);
        }
        Command::FindOrbit { config, state, seed_period, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let dir = out_dir(out, cfg.output_dir.as_deref());
            let doc = commands::cmd_find_orbit(&cfg, state.0, seed_period, &dir)?;
            println!(
                "orbit: T = {}, closure residual {:e}, label {}",
                doc.period, doc.closure_residual, doc.label
            );
        }
        Command::Verify { config, state, seed_period, resolution, out } => {
            let cfg = RunConfig::from_path(&config)?;
            let dir = out_dir(out, cfg.output_dir.as_deref());
            let doc = commands::cmd_verify(&cfg, state.0, seed_period, resolution, &dir)?;
            println!(
                "invariant holds: time {:e}, contour {:e}, area {:e} (period {})",
                doc.report.time_integral,
                doc.report.line_integral,
                doc.report.area_integral,
                doc.orbit.period
            );
        }
        Command::Scan { config, out } => {
            let scan = ScanConfig::from_path(&config)?;
            let dir = out_dir(out, scan.output_dir.as_deref());
            let path = commands::cmd_scan(&scan, &dir, commands::worker_count())?;
            println!("wrote {}", path.display());
        }
        Command::Decompose { input, mode, out } => {
            let dir = out_dir(out, None);
            let summary = commands::cmd_decompose(&input, mode, &dir)?;
            println!(
                "recomposition residual {:e}{}",
                summary.recomposition_residual,
                summary.warning.as_deref().map(|w| format!(" (warning: {w})")).unwrap_or_default()
            );
        }
        Command::Demo { out } => {
            let dir = out_dir(out, None);
            let doc = commands::cmd_demo(&dir)?;
            println!(
                "demo verified {}: invariant holds with time form {:e}",
                doc.system, doc.report.time_integral
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version are not errors; anything else is a usage
            // problem and maps to the config-error exit code.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 4,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
