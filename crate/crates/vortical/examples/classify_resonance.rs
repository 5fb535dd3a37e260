//! Distinguish resonant from quasi-periodic motion: spectral frequency
//! estimation followed by continued-fraction classification of the ratio.
//!
//! Run with `cargo run --example classify_resonance`.

use std::f64::consts::PI;

use vortical::dynamics::{integrate, IntegratorConfig, PhaseState, SystemSpec};
use vortical::expr::ScalarField;
use vortical::resonance::{classify, estimate_frequencies};

fn run(name: &str, u: &str, psi: &str) {
    let spec = SystemSpec::new(
        name,
        ScalarField::parse_simple(u).unwrap(),
        ScalarField::parse_simple(psi).unwrap(),
    );
    let traj = integrate(
        &spec,
        PhaseState::new(1.0, 0.0, 0.0, 1.0, 0.0),
        64.0 * 2.0 * PI,
        &IntegratorConfig::default(),
    )
    .unwrap();
    let freqs = estimate_frequencies(&traj, 8192).unwrap();
    let label = classify(&freqs, 12, 1e-4);
    println!(
        "{name:14} f1 = {:.6} f2 = {:.6} (confidence {:.2}) -> {label}",
        freqs.f1,
        freqs.f2,
        freqs.confidence()
    );
}

fn main() {
    // Frequencies 1 and 2: a 1:2 resonance with common period 2*pi.
    run("resonant 1:2", "(2*x^2+3*y^2)/2", "x*y");
    // Frequencies 1 and sqrt(3): incommensurable, the torus fills densely.
    run("quasi sqrt(3)", "x^2+y^2", "x*y");
    // Equal frequencies: the circular orbit of the isotropic oscillator.
    run("harmonic 1:1", "0.5*(x^2+y^2)", "0");
}
