//! Symbolic differentiation and the small simplifier behind it.
//!
//! The simplifier folds constant subtrees and applies 0/1 identities; it is
//! deliberately not a CAS. Folding only happens when the folded value is
//! finite, so out-of-domain constants (`1/0`) stay in the tree and surface as
//! domain errors at evaluation time.

use super::{eval_pow, Expr, Func, Var};

/// Exact derivative with respect to `var`. Total on the supported grammar.
pub fn differentiate(expr: &Expr, var: Var) -> Expr {
    match expr {
        Expr::Constant(_) | Expr::Param(_) => Expr::Constant(0.0),
        Expr::Var(v) => Expr::Constant(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => Expr::Neg(Box::new(differentiate(a, var))),
        Expr::Add(a, b) => Expr::Add(
            Box::new(differentiate(a, var)),
            Box::new(differentiate(b, var)),
        ),
        Expr::Sub(a, b) => Expr::Sub(
            Box::new(differentiate(a, var)),
            Box::new(differentiate(b, var)),
        ),
        Expr::Mul(a, b) => Expr::Add(
            Box::new(Expr::Mul(Box::new(differentiate(a, var)), b.clone())),
            Box::new(Expr::Mul(a.clone(), Box::new(differentiate(b, var)))),
        ),
        Expr::Div(a, b) => Expr::Div(
            Box::new(Expr::Sub(
                Box::new(Expr::Mul(Box::new(differentiate(a, var)), b.clone())),
                Box::new(Expr::Mul(a.clone(), Box::new(differentiate(b, var)))),
            )),
            Box::new(Expr::Pow(b.clone(), Box::new(Expr::Constant(2.0)))),
        ),
        Expr::Pow(base, exponent) => match exponent.as_ref() {
            // d/dv f^c = c * f^(c-1) * f'
            Expr::Constant(c) => Expr::Mul(
                Box::new(Expr::Mul(
                    Box::new(Expr::Constant(*c)),
                    Box::new(Expr::Pow(base.clone(), Box::new(Expr::Constant(c - 1.0)))),
                )),
                Box::new(differentiate(base, var)),
            ),
            // General exponent via the exp/log rewrite:
            // d/dv f^g = f^g * (g' * log f + g * f'/f)
            _ => Expr::Mul(
                Box::new(expr.clone()),
                Box::new(Expr::Add(
                    Box::new(Expr::Mul(
                        Box::new(differentiate(exponent, var)),
                        Box::new(Expr::Call(Func::Log, base.clone())),
                    )),
                    Box::new(Expr::Div(
                        Box::new(Expr::Mul(exponent.clone(), Box::new(differentiate(base, var)))),
                        base.clone(),
                    )),
                )),
            ),
        },
        Expr::Call(func, a) => {
            let inner = differentiate(a, var);
            let outer = match func {
                Func::Sin => Expr::Call(Func::Cos, a.clone()),
                Func::Cos => Expr::Neg(Box::new(Expr::Call(Func::Sin, a.clone()))),
                Func::Exp => Expr::Call(Func::Exp, a.clone()),
                Func::Log => Expr::Div(Box::new(Expr::Constant(1.0)), a.clone()),
                Func::Sqrt => Expr::Div(
                    Box::new(Expr::Constant(1.0)),
                    Box::new(Expr::Mul(
                        Box::new(Expr::Constant(2.0)),
                        Box::new(Expr::Call(Func::Sqrt, a.clone())),
                    )),
                ),
                Func::Tanh => Expr::Sub(
                    Box::new(Expr::Constant(1.0)),
                    Box::new(Expr::Pow(
                        Box::new(Expr::Call(Func::Tanh, a.clone())),
                        Box::new(Expr::Constant(2.0)),
                    )),
                ),
            };
            Expr::Mul(Box::new(outer), Box::new(inner))
        }
    }
}

fn constant(e: &Expr) -> Option<f64> {
    match e {
        Expr::Constant(c) => Some(*c),
        _ => None,
    }
}

/// Bottom-up constant folding and 0/1 identities.
pub fn simplify(expr: &Expr) -> Expr {
    match expr {
        Expr::Constant(_) | Expr::Var(_) | Expr::Param(_) => expr.clone(),
        Expr::Neg(a) => {
            let a = simplify(a);
            match a {
                Expr::Constant(c) => Expr::Constant(-c),
                Expr::Neg(inner) => *inner,
                other => Expr::Neg(Box::new(other)),
            }
        }
        Expr::Add(a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            match (constant(&a), constant(&b)) {
                (Some(x), Some(y)) if (x + y).is_finite() => return Expr::Constant(x + y),
                (Some(0.0), _) => return b,
                (_, Some(0.0)) => return a,
                _ => {}
            }
            // c1 + (c2 + e) -> (c1+c2) + e
            if let (Some(c1), Expr::Add(l, r)) = (constant(&a), &b) {
                if let Some(c2) = constant(l) {
                    return simplify(&Expr::Add(Box::new(Expr::Constant(c1 + c2)), r.clone()));
                }
            }
            Expr::Add(Box::new(a), Box::new(b))
        }
        Expr::Sub(a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            match (constant(&a), constant(&b)) {
                (Some(x), Some(y)) if (x - y).is_finite() => return Expr::Constant(x - y),
                (_, Some(0.0)) => return a,
                (Some(0.0), _) => return simplify(&Expr::Neg(Box::new(b))),
                _ => {}
            }
            if a == b {
                return Expr::Constant(0.0);
            }
            Expr::Sub(Box::new(a), Box::new(b))
        }
        Expr::Mul(a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            // Canonicalize a constant factor to the left.
            let (a, b) = if constant(&b).is_some() && constant(&a).is_none() {
                (b, a)
            } else {
                (a, b)
            };
            match (constant(&a), constant(&b)) {
                (Some(x), Some(y)) if (x * y).is_finite() => return Expr::Constant(x * y),
                (Some(0.0), _) => return Expr::Constant(0.0),
                (Some(1.0), _) => return b,
                _ => {}
            }
            // c1 * (c2 * e) -> (c1*c2) * e
            if let (Some(c1), Expr::Mul(l, r)) = (constant(&a), &b) {
                if let Some(c2) = constant(l) {
                    return simplify(&Expr::Mul(Box::new(Expr::Constant(c1 * c2)), r.clone()));
                }
            }
            Expr::Mul(Box::new(a), Box::new(b))
        }
        Expr::Div(a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            match (constant(&a), constant(&b)) {
                (Some(x), Some(y)) if y != 0.0 && (x / y).is_finite() => {
                    return Expr::Constant(x / y)
                }
                (Some(0.0), None) => return Expr::Constant(0.0),
                (_, Some(1.0)) => return a,
                _ => {}
            }
            Expr::Div(Box::new(a), Box::new(b))
        }
        Expr::Pow(a, b) => {
            let (a, b) = (simplify(a), simplify(b));
            match (constant(&a), constant(&b)) {
                (Some(x), Some(y)) => {
                    if let Ok(v) = eval_pow(x, y) {
                        if v.is_finite() {
                            return Expr::Constant(v);
                        }
                    }
                }
                (_, Some(0.0)) => return Expr::Constant(1.0),
                (_, Some(1.0)) => return a,
                (Some(1.0), _) => return Expr::Constant(1.0),
                _ => {}
            }
            Expr::Pow(Box::new(a), Box::new(b))
        }
        Expr::Call(func, a) => {
            let a = simplify(a);
            if let Some(c) = constant(&a) {
                let folded = Expr::Call(*func, Box::new(Expr::Constant(c)));
                if let Ok(v) = folded.eval(0.0, 0.0, &Default::default()) {
                    return Expr::Constant(v);
                }
                return folded;
            }
            Expr::Call(*func, Box::new(a))
        }
    }
}
