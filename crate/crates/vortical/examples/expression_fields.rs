//! Tour of the expression language: parsing, evaluation, exact gradients,
//! and Laplacians, including how domain errors are reported as values.
//!
//! Run with `cargo run --example expression_fields`.

use std::collections::BTreeMap;

use vortical::expr::ScalarField;

fn main() {
    let field = ScalarField::parse_simple("0.5*(x^2+y^2)").unwrap();
    println!("U(x, y)      = {field}");
    println!("U(3, 4)      = {}", field.eval(3.0, 4.0).unwrap());

    let (ux, uy) = field.grad();
    println!("grad U       = ({ux}, {uy})");
    println!("laplacian U  = {}", field.laplacian());

    // Parameters are bound at construction and checked up front.
    let mut params = BTreeMap::new();
    params.insert("g".to_string(), 0.75);
    let psi = ScalarField::parse("g*x*y", params).unwrap();
    let (psi_x, psi_y) = psi.grad();
    println!("\npsi          = {psi} with g = 0.75");
    println!("grad psi     = ({psi_x}, {psi_y})");
    println!("laplacian    = {} (harmonic)", psi.laplacian());

    // Out-of-domain points come back as errors, never as silent NaN.
    let recip = ScalarField::parse_simple("1/x").unwrap();
    println!("\n1/x at x = 0 -> {:?}", recip.eval(0.0, 0.0));
    let log = ScalarField::parse_simple("log(x)").unwrap();
    println!("log(x) at -1 -> {:?}", log.eval(-1.0, 0.0));

    // Syntax errors carry byte offsets.
    println!("\nparse(\"x +\") -> {}", ScalarField::parse_simple("x +").unwrap_err());
}
