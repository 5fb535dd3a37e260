//! Evaluate the circulation invariant of a refined orbit in all three
//! forms — time integral, contour integral, winding-weighted area
//! integral — and print the JSON report the CLI emits.
//!
//! Run with `cargo run --example invariant_report`.

use vortical::dynamics::{IntegratorConfig, PhaseState, SystemSpec};
use vortical::expr::ScalarField;
use vortical::invariants::report;
use vortical::resonance::refine_orbit;

fn main() {
    let spec = SystemSpec::new(
        "resonant-1-2",
        ScalarField::parse_simple("(2*x^2+3*y^2)/2").unwrap(),
        ScalarField::parse_simple("x*y").unwrap(),
    );
    let cfg = IntegratorConfig::default();
    let orbit = refine_orbit(&spec, PhaseState::new(1.0, 0.0, 0.0, 2.0, 0.0), 6.2, &cfg, 1e-9)
        .unwrap();

    let rep = report(&spec, &orbit, 256, 1e-6).unwrap();
    println!("time form    = {:+e}  (normalizer {:e})", rep.time_integral, rep.time_normalizer);
    println!("contour form = {:+e}  (normalizer {:e})", rep.line_integral, rep.line_normalizer);
    println!("area form    = {:+e}  (normalizer {:e})", rep.area_integral, rep.area_normalizer);
    println!("cross residuals: time/contour {:e}, contour/area {:e}",
        rep.time_line_residual, rep.line_area_residual);
    println!("self-intersecting projection: {}", rep.self_intersecting);
    println!("verdict: {}", if rep.holds { "holds" } else { "violated" });

    println!("\nfull JSON report:");
    println!("{}", serde_json::to_string_pretty(&rep).unwrap());
}
