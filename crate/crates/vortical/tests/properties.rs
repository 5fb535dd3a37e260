//! Cross-module property suites: symbolic derivatives against finite
//! differences on randomly generated expressions, print/parse round trips,
//! classification of planted rationals, the integrator order check, and
//! spectral-estimator accuracy.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vortical::dynamics::{integrate, IntegratorConfig, PhaseState, SystemSpec};
use vortical::expr::{parse, Expr, Func, ScalarField, Var};
use vortical::resonance::{classify, dominant_frequency, FrequencyEstimate, ResonanceLabel};

/// Bounded random expression over x, y: depth-limited, constants in [-2, 2].
fn random_expr(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
    let leaf = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
        0 => Expr::Constant(rng.gen_range(-2.0..2.0)),
        1 => Expr::Var(Var::X),
        _ => Expr::Var(Var::Y),
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..10) {
        0 | 1 => leaf(rng),
        2 => Expr::Add(
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        3 => Expr::Sub(
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        4 | 5 => Expr::Mul(
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        6 => Expr::Div(
            Box::new(random_expr(rng, depth - 1)),
            Box::new(random_expr(rng, depth - 1)),
        ),
        7 => Expr::Pow(
            Box::new(random_expr(rng, depth - 1)),
            Box::new(Expr::Constant(rng.gen_range(2..=3) as f64)),
        ),
        8 => Expr::Neg(Box::new(random_expr(rng, depth - 1))),
        _ => {
            let f = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Tanh]
                [rng.gen_range(0..6)];
            Expr::Call(f, Box::new(random_expr(rng, depth - 1)))
        }
    }
}

/// Central difference along one axis, requiring every stencil value to be
/// in-domain and of moderate magnitude. Returns the estimates at step `h`
/// and `2h`; their agreement is the trustworthiness guard (a Richardson
/// check), which screens out points near domain errors or with third
/// derivatives too steep for a 1e-6 comparison.
fn guarded_fd(f: &ScalarField, x: f64, y: f64, h: f64, axis: usize) -> Option<(f64, f64)> {
    let probe = |s: f64| -> Option<f64> {
        let (px, py) = if axis == 0 { (x + s, y) } else { (x, y + s) };
        match f.eval(px, py) {
            Ok(v) if v.abs() <= 100.0 => Some(v),
            _ => None,
        }
    };
    let (p1, m1) = (probe(h)?, probe(-h)?);
    let (p2, m2) = (probe(2.0 * h)?, probe(-2.0 * h)?);
    probe(0.0)?;
    Some(((p1 - m1) / (2.0 * h), (p2 - m2) / (4.0 * h)))
}

#[test]
fn symbolic_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-5;
    let mut comparisons = 0usize;
    for _ in 0..100 {
        let field = ScalarField::new(random_expr(&mut rng, 4), BTreeMap::new()).unwrap();
        let (gx, gy) = field.grad();
        let mut found = 0usize;
        for _ in 0..200 {
            if found >= 10 {
                break;
            }
            let x = rng.gen_range(-2.0..2.0);
            let y = rng.gen_range(-2.0..2.0);
            let (Some((fdx, fdx2)), Some((fdy, fdy2))) =
                (guarded_fd(&field, x, y, h, 0), guarded_fd(&field, x, y, h, 1))
            else {
                continue;
            };
            let (Ok(sx), Ok(sy)) = (gx.eval(x, y), gy.eval(x, y)) else {
                continue;
            };
            // Skip points where the finite difference is not itself
            // trustworthy at the target accuracy.
            if (fdx - fdx2).abs() > 2e-7 * sx.abs().max(1.0)
                || (fdy - fdy2).abs() > 2e-7 * sy.abs().max(1.0)
            {
                continue;
            }
            assert!(
                (fdx - sx).abs() <= 1e-6 * sx.abs().max(1.0),
                "d/dx of {field} at ({x}, {y}): fd {fdx} vs symbolic {sx}"
            );
            assert!(
                (fdy - sy).abs() <= 1e-6 * sy.abs().max(1.0),
                "d/dy of {field} at ({x}, {y}): fd {fdy} vs symbolic {sy}"
            );
            found += 1;
            comparisons += 1;
        }
    }
    assert!(comparisons >= 500, "only {comparisons} valid comparison points");
}

#[test]
fn laplacian_agrees_with_twice_applied_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut comparisons = 0usize;
    for _ in 0..60 {
        let field = ScalarField::new(random_expr(&mut rng, 3), BTreeMap::new()).unwrap();
        let lap = field.laplacian();
        let (gx, gy) = field.grad();
        let (gxx, _) = gx.grad();
        let (_, gyy) = gy.grad();
        for _ in 0..40 {
            let x = rng.gen_range(-2.0..2.0);
            let y = rng.gen_range(-2.0..2.0);
            let (Ok(l), Ok(a), Ok(b)) = (lap.eval(x, y), gxx.eval(x, y), gyy.eval(x, y)) else {
                continue;
            };
            if l.abs() > 1e6 {
                continue;
            }
            assert!(
                (l - (a + b)).abs() <= 1e-9 * l.abs().max(1.0),
                "laplacian of {field} at ({x}, {y}): {l} vs {}",
                a + b
            );
            comparisons += 1;
        }
    }
    assert!(comparisons >= 300, "only {comparisons} valid comparison points");
}

#[test]
fn printed_expressions_reparse_with_identical_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..300 {
        let expr = random_expr(&mut rng, 4);
        let printed = expr.to_string();
        let reparsed = parse(&printed)
            .unwrap_or_else(|e| panic!("printed form {printed:?} fails to parse: {e}"));
        let params = BTreeMap::new();
        for _ in 0..5 {
            let x = rng.gen_range(-2.0..2.0);
            let y = rng.gen_range(-2.0..2.0);
            match (expr.eval(x, y, &params), reparsed.eval(x, y, &params)) {
                (Ok(a), Ok(b)) => assert!(
                    (a - b).abs() <= 1e-12 * a.abs().max(1.0),
                    "{printed}: {a} vs {b}"
                ),
                (Err(_), Err(_)) => {}
                other => panic!("{printed} at ({x}, {y}): {other:?}"),
            }
        }
    }
}

proptest! {
    /// Planted rational frequency ratios are recovered in lowest terms at
    /// any positive scale.
    #[test]
    fn classify_recovers_planted_rationals(
        m in 1u32..=8,
        n in 1u32..=8,
        alpha in 0.1f64..10.0,
    ) {
        fn gcd(a: u32, b: u32) -> u32 {
            if b == 0 { a } else { gcd(b, a % b) }
        }
        let g = gcd(m, n);
        let est = FrequencyEstimate {
            f1: alpha,
            f2: alpha * m as f64 / n as f64,
            confidence_x: 0.9,
            confidence_y: 0.9,
        };
        let label = classify(&est, 10, 1e-9);
        prop_assert_eq!(
            label,
            ResonanceLabel::Periodic {
                m: m / g,
                n: n / g,
                period: (n / g) as f64 * 2.0 * PI / alpha,
            }
        );
    }
}

#[test]
fn tightening_tolerances_shows_the_integrator_order() {
    // One decade of tolerance tightening must shrink the closed-form error
    // at least 4x for the embedded 5(4) pair (error scales roughly
    // linearly in the tolerance, so a factor 2 would be too strict per
    // halving but 4 per decade has margin).
    let s = SystemSpec::new(
        "order-check",
        ScalarField::parse_simple("(2*x^2+3*y^2)/2").unwrap(),
        ScalarField::parse_simple("x*y").unwrap(),
    );
    let err_at = |rtol: f64| -> f64 {
        let cfg = IntegratorConfig { rtol, atol: rtol * 1e-2, ..Default::default() };
        let traj =
            integrate(&s, PhaseState::new(1.0, 0.0, 0.0, 2.0, 0.0), 2.0 * PI, &cfg).unwrap();
        let e = traj.end_state();
        (e.x - 1.0).abs().max(e.y.abs()).max(e.p.abs()).max((e.r - 2.0).abs())
    };
    let coarse = err_at(1e-6);
    let fine = err_at(1e-7);
    let finer = err_at(1e-8);
    assert!(coarse / fine >= 4.0, "decade 1e-6 -> 1e-7: ratio {}", coarse / fine);
    assert!(fine / finer >= 4.0, "decade 1e-7 -> 1e-8: ratio {}", fine / finer);
}

#[test]
fn two_tone_frequency_error_stays_below_a_tenth_of_a_bin() {
    // Synthetic two-tone signal; the estimator must land within a tenth of
    // the spectral bin width of the dominant tone.
    let n = 8192usize;
    let span = 64.0 * 2.0 * PI;
    let dt = span / n as f64;
    let signal: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 * dt;
            t.cos() + 0.3 * (2.7 * t).cos()
        })
        .collect();
    let bin = 2.0 * PI / span;
    let (f, conf) = dominant_frequency(&signal, span);
    assert!((f - 1.0).abs() <= bin / 10.0, "estimate {f}, bin width {bin}");
    assert!(conf > 0.0);

    // Same bound through the trajectory-facing API on the resonant system.
    let s = SystemSpec::new(
        "two-tone",
        ScalarField::parse_simple("(2*x^2+3*y^2)/2").unwrap(),
        ScalarField::parse_simple("x*y").unwrap(),
    );
    let traj = integrate(
        &s,
        PhaseState::new(1.0, 0.0, 0.0, 2.0, 0.0),
        span,
        &IntegratorConfig::default(),
    )
    .unwrap();
    let est = vortical::resonance::estimate_frequencies(&traj, n).unwrap();
    assert!((est.f1 - 1.0).abs() <= bin / 10.0);
    assert!((est.f2 - 2.0).abs() <= bin / 10.0);
}

#[test]
fn winding_grid_is_zero_outside_the_curve() {
    use vortical::invariants::{ClosedCurve, WindingGrid};
    let pts: Vec<[f64; 2]> = (0..512)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / 512.0;
            [0.4 * t.cos() + 0.1, 0.7 * t.sin() - 0.2]
        })
        .collect();
    let curve = ClosedCurve::from_loop(pts).unwrap();
    let grid = WindingGrid::build(&curve, 64);
    let (nx, ny) = grid.resolution();
    // The padded frame of cells lies outside the curve's bounding box.
    for ix in 0..nx {
        assert_eq!(grid.winding_at(ix, 0), 0);
        assert_eq!(grid.winding_at(ix, ny - 1), 0);
    }
    for iy in 0..ny {
        assert_eq!(grid.winding_at(0, iy), 0);
        assert_eq!(grid.winding_at(nx - 1, iy), 0);
    }
    // And the center is inside.
    let mid = grid.eval_point(nx / 2, ny / 2);
    assert_eq!(curve.winding_number(mid).unwrap(), 1);
}
