//! Refine a periodic orbit by Newton shooting on the section return map,
//! then look at its projected closed curve.
//!
//! Run with `cargo run --example find_orbit`.

use vortical::dynamics::{IntegratorConfig, PhaseState, SystemSpec};
use vortical::expr::ScalarField;
use vortical::resonance::refine_orbit;

fn main() {
    let spec = SystemSpec::new(
        "resonant-1-2",
        ScalarField::parse_simple("(2*x^2+3*y^2)/2").unwrap(),
        ScalarField::parse_simple("x*y").unwrap(),
    );
    let cfg = IntegratorConfig::default();

    // A deliberately rough period guess; the section return time supplies
    // the exact period while Newton closes the state.
    let seed = PhaseState::new(1.0, 0.0, 0.0, 2.0, 0.0);
    let orbit = refine_orbit(&spec, seed, 6.2, &cfg, 1e-9).unwrap();
    println!("period           = {}", orbit.period());
    println!("closure residual = {:e}", orbit.closure_residual());
    println!(
        "projected curve  = {} vertices, self-intersecting: {}",
        orbit.curve().vertices().len(),
        orbit.is_self_intersecting()
    );
    println!("signed area      = {:.6}", orbit.curve().signed_area());

    // The quasi-periodic control: frequencies 1 and sqrt(3) admit no closed
    // orbit near a generic seed, and the shooting reports that.
    let quasi = SystemSpec::new(
        "quasi-sqrt3",
        ScalarField::parse_simple("x^2+y^2").unwrap(),
        ScalarField::parse_simple("x*y").unwrap(),
    );
    let err = refine_orbit(&quasi, PhaseState::new(1.0, 0.0, 0.0, 1.0, 0.0), 6.3, &cfg, 1e-9)
        .unwrap_err();
    println!("\nquasi-periodic system: {err}");
}
