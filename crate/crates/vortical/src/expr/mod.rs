//! Expression language for scalar fields in the two variables `x`, `y`.
//!
//! The grammar supports decimal literals, the variables `x` and `y`, named
//! parameters, `+ - * / ^` with parentheses, and the functions `sin`, `cos`,
//! `exp`, `log`, `sqrt`, `tanh`. Unary minus binds tighter than `^`, which is
//! right-associative; `*`,`/` bind tighter than `+`,`-`. Implicit
//! multiplication (`2x`) is rejected.
//!
//! Evaluation never produces a silent NaN: out-of-domain points (log of a
//! non-positive value, division by zero, `0` raised to a negative power, ...)
//! are reported as [`DomainError`] values so that callers scanning a grid can
//! decide per point.

mod calculus;
mod parser;

pub use calculus::{differentiate, simplify};
pub use parser::parse;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Variables an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

/// Built-in unary functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

/// Expression tree over `x`, `y` and named parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Syntax error with the byte offset at which parsing failed.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at byte {offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

/// Out-of-domain evaluation, reported as a value rather than a panic.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DomainError {
    #[error("log of a non-positive value")]
    LogNonPositive,
    #[error("square root of a negative value")]
    SqrtNegative,
    #[error("division by zero")]
    DivisionByZero,
    #[error("zero raised to a negative power")]
    ZeroToNegative,
    #[error("non-positive base with a non-integer exponent")]
    PowNonPositiveBase,
    #[error("non-finite value encountered")]
    NonFinite,
}

/// Errors constructing a [`ScalarField`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FieldError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unbound parameters: {0:?}")]
    UnboundParams(Vec<String>),
}

impl Expr {
    /// Collects the distinct parameter names appearing in the tree.
    pub fn parameters(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn walk_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Constant(_) | Expr::Var(_) => {}
            Expr::Param(name) => out.push(name.clone()),
            Expr::Neg(a) | Expr::Call(_, a) => a.walk_params(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.walk_params(out);
                b.walk_params(out);
            }
        }
    }

    /// Evaluates with explicit parameter bindings.
    pub fn eval(&self, x: f64, y: f64, params: &BTreeMap<String, f64>) -> Result<f64, DomainError> {
        let v = match self {
            Expr::Constant(c) => *c,
            Expr::Var(Var::X) => x,
            Expr::Var(Var::Y) => y,
            // ScalarField construction guarantees bindings; a free parameter
            // reached through a bare Expr is a non-finite result.
            Expr::Param(name) => *params.get(name).ok_or(DomainError::NonFinite)?,
            Expr::Neg(a) => -a.eval(x, y, params)?,
            Expr::Add(a, b) => a.eval(x, y, params)? + b.eval(x, y, params)?,
            Expr::Sub(a, b) => a.eval(x, y, params)? - b.eval(x, y, params)?,
            Expr::Mul(a, b) => a.eval(x, y, params)? * b.eval(x, y, params)?,
            Expr::Div(a, b) => {
                let d = b.eval(x, y, params)?;
                if d == 0.0 {
                    return Err(DomainError::DivisionByZero);
                }
                a.eval(x, y, params)? / d
            }
            Expr::Pow(a, b) => eval_pow(a.eval(x, y, params)?, b.eval(x, y, params)?)?,
            Expr::Call(f, a) => {
                let v = a.eval(x, y, params)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(DomainError::LogNonPositive);
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(DomainError::SqrtNegative);
                        }
                        v.sqrt()
                    }
                    Func::Tanh => v.tanh(),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(DomainError::NonFinite)
        }
    }
}

/// `base ^ exponent` with integer exponents evaluated exactly and general
/// exponents through the `exp(e * log(b))` rewrite. `0 ^ 0` is defined as 1.
fn eval_pow(base: f64, exponent: f64) -> Result<f64, DomainError> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        let n = exponent as i32;
        if base == 0.0 && n < 0 {
            return Err(DomainError::ZeroToNegative);
        }
        return Ok(base.powi(n));
    }
    if base <= 0.0 {
        return Err(DomainError::PowNonPositiveBase);
    }
    Ok((exponent * base.ln()).exp())
}

struct DisplayExpr<'a>(&'a Expr, u8);

// Precedence levels used by both the printer and the parser:
// add/sub = 1, mul/div = 2, pow = 4 (right-assoc), unary minus = 5, atoms = 6.
impl fmt::Display for DisplayExpr<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let DisplayExpr(expr, min_prec) = *self;
        let prec = precedence(expr);
        if prec < min_prec {
            write!(f, "(")?;
        }
        match expr {
            Expr::Constant(c) => write!(f, "{c}")?,
            Expr::Var(Var::X) => write!(f, "x")?,
            Expr::Var(Var::Y) => write!(f, "y")?,
            Expr::Param(name) => write!(f, "{name}")?,
            Expr::Neg(a) => write!(f, "-{}", DisplayExpr(a, 5))?,
            Expr::Add(a, b) => write!(f, "{} + {}", DisplayExpr(a, 1), DisplayExpr(b, 2))?,
            Expr::Sub(a, b) => write!(f, "{} - {}", DisplayExpr(a, 1), DisplayExpr(b, 2))?,
            Expr::Mul(a, b) => write!(f, "{}*{}", DisplayExpr(a, 2), DisplayExpr(b, 3))?,
            Expr::Div(a, b) => write!(f, "{}/{}", DisplayExpr(a, 2), DisplayExpr(b, 3))?,
            Expr::Pow(a, b) => write!(f, "{}^{}", DisplayExpr(a, 5), DisplayExpr(b, 4))?,
            Expr::Call(func, a) => write!(f, "{}({})", func.name(), DisplayExpr(a, 0))?,
        }
        if prec < min_prec {
            write!(f, ")")?;
        }
        Ok(())
    }
}

fn precedence(expr: &Expr) -> u8 {
    match expr {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Pow(..) => 4,
        Expr::Neg(..) => 5,
        Expr::Constant(..) | Expr::Var(..) | Expr::Param(..) | Expr::Call(..) => 6,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", DisplayExpr(self, 0))
    }
}

/// A parsed expression together with bound parameter values.
///
/// Immutable after construction; safe to evaluate from many threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    expr: Expr,
    params: BTreeMap<String, f64>,
}

impl ScalarField {
    /// Wraps an expression, requiring every parameter in the tree to be bound.
    pub fn new(expr: Expr, params: BTreeMap<String, f64>) -> Result<ScalarField, FieldError> {
        let free: Vec<String> = expr
            .parameters()
            .into_iter()
            .filter(|p| !params.contains_key(p))
            .collect();
        if !free.is_empty() {
            return Err(FieldError::UnboundParams(free));
        }
        Ok(ScalarField { expr, params })
    }

    /// Parses `text` and binds `params` in one step.
    pub fn parse(text: &str, params: BTreeMap<String, f64>) -> Result<ScalarField, FieldError> {
        ScalarField::new(parse(text)?, params)
    }

    /// Constant-free convenience constructor for tests and examples.
    pub fn parse_simple(text: &str) -> Result<ScalarField, FieldError> {
        ScalarField::parse(text, BTreeMap::new())
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64, DomainError> {
        self.expr.eval(x, y, &self.params)
    }

    /// Symbolic gradient `(d/dx, d/dy)` as new fields sharing the bindings.
    pub fn grad(&self) -> (ScalarField, ScalarField) {
        let dx = simplify(&differentiate(&self.expr, Var::X));
        let dy = simplify(&differentiate(&self.expr, Var::Y));
        (
            ScalarField { expr: dx, params: self.params.clone() },
            ScalarField { expr: dy, params: self.params.clone() },
        )
    }

    /// Symbolic Laplacian `d2/dx2 + d2/dy2`.
    pub fn laplacian(&self) -> ScalarField {
        let dxx = differentiate(&simplify(&differentiate(&self.expr, Var::X)), Var::X);
        let dyy = differentiate(&simplify(&differentiate(&self.expr, Var::Y)), Var::Y);
        let expr = simplify(&Expr::Add(Box::new(dxx), Box::new(dyy)));
        ScalarField { expr, params: self.params.clone() }
    }

    /// True when the expression simplified to the literal constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(simplify(&self.expr), Expr::Constant(c) if c == 0.0)
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}
