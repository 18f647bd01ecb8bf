//! A small expression language for test functions.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)?
//! exponent:= INTEGER ('^' exponent)?
//! primary := NUMBER | 'w' INTEGER | 'x' | '(' expr ')'
//! ```
//!
//! `^` binds tighter than unary minus (`-w2^2` is `-(w2^2)`) and is
//! right-associative; exponents are non-negative integer literals. `w1..wd`
//! are the coordinates of a sphere point, `x` is the variable of a scalar
//! function on an interval.

mod parser;

use std::fmt;

use thiserror::Error;

use crate::analysis::{basis::named_function, SphericalFunction};

pub use parser::parse;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Zero-based coordinate index (`w1` is `Coord(0)`).
    Coord(usize),
    /// The scalar variable `x`.
    X,
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at offset {offset}: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub expected: Vec<&'static str>,
    pub found: String,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownIdentifier,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable w{index} needs dimension >= {index}, point has dimension {dim}")]
    DimensionMismatch { index: usize, dim: usize },
    #[error("variable x is not bound when evaluating on a point")]
    UnboundScalar,
    #[error("coordinate variables are not bound in a scalar function of x")]
    UnboundCoordinate,
    #[error("division by zero")]
    DivisionByZero,
}

enum Bindings<'a> {
    Point(&'a [f64]),
    Scalar(f64),
}

impl Expr {
    /// Evaluates at a point; `w_i` reads coordinate `i`.
    pub fn eval(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.eval_with(&Bindings::Point(point))
    }

    /// Evaluates a function of the scalar variable `x`.
    pub fn eval_scalar(&self, x: f64) -> Result<f64, EvalError> {
        self.eval_with(&Bindings::Scalar(x))
    }

    fn eval_with(&self, env: &Bindings<'_>) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Coord(i) => match env {
                Bindings::Point(p) => *p.get(*i).ok_or(EvalError::DimensionMismatch {
                    index: i + 1,
                    dim: p.len(),
                })?,
                Bindings::Scalar(_) => return Err(EvalError::UnboundCoordinate),
            },
            Expr::X => match env {
                Bindings::Scalar(x) => *x,
                Bindings::Point(_) => return Err(EvalError::UnboundScalar),
            },
            Expr::Neg(e) => -e.eval_with(env)?,
            Expr::Binary(op, a, b) => {
                let a = a.eval_with(env)?;
                let b = b.eval_with(env)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                }
            }
            Expr::Pow(base, n) => int_pow(base.eval_with(env)?, *n),
        })
    }

    /// Largest coordinate index used, one-based (`w3` gives 3); 0 if none.
    pub fn max_coord(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::X => 0,
            Expr::Coord(i) => i + 1,
            Expr::Neg(e) | Expr::Pow(e, _) => e.max_coord(),
            Expr::Binary(_, a, b) => a.max_coord().max(b.max_coord()),
        }
    }

    pub fn uses_x(&self) -> bool {
        match self {
            Expr::X => true,
            Expr::Num(_) | Expr::Coord(_) => false,
            Expr::Neg(e) | Expr::Pow(e, _) => e.uses_x(),
            Expr::Binary(_, a, b) => a.uses_x() || b.uses_x(),
        }
    }
}

/// Square-and-multiply, so results do not depend on the platform `powi`.
fn int_pow(mut base: f64, mut n: u32) -> f64 {
    let mut acc = 1.0;
    while n > 0 {
        if n & 1 == 1 {
            acc *= base;
        }
        base *= base;
        n >>= 1;
    }
    acc
}

/// Fully parenthesized; reparses to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Coord(i) => write!(f, "w{}", i + 1),
            Expr::X => f.write_str("x"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(e, n) => write!(f, "({e}^{n})"),
        }
    }
}

/// Wraps an expression as a function on the sphere of radius `R` in `R^d`,
/// with the expression's text as descriptor.
pub fn to_spherical_function(expr: &Expr, source: &str, dim: usize, radius: f64) -> crate::Result<SphericalFunction> {
    if expr.uses_x() {
        return Err(EvalError::UnboundScalar.into());
    }
    let needed = expr.max_coord();
    if needed > dim {
        return Err(EvalError::DimensionMismatch { index: needed, dim }.into());
    }
    let expr = expr.clone();
    Ok(SphericalFunction::fallible(dim, radius, source.trim(), move |w| {
        Ok(expr.eval(w)?)
    }))
}

/// Resolves a function spec: a built-in family (`fourier:cos:K`,
/// `fourier:sin:K`, `sh:L:M`) or an expression in `w1..wd`.
pub fn resolve_function(spec: &str, dim: usize, radius: f64) -> crate::Result<SphericalFunction> {
    if let Some(named) = named_function(spec, dim, radius) {
        return named;
    }
    to_spherical_function(&parse(spec)?, spec, dim, radius)
}

/// A scalar function `h(x)` given as an expression in `x`.
pub fn to_scalar_function(expr: &Expr) -> crate::Result<impl Fn(f64) -> crate::Result<f64> + Clone> {
    if expr.max_coord() > 0 {
        return Err(EvalError::UnboundCoordinate.into());
    }
    let expr = expr.clone();
    Ok(move |x| Ok(expr.eval_scalar(x)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn int_pow_matches_repeated_multiplication() {
        assert_eq!(int_pow(3.0, 0), 1.0);
        assert_eq!(int_pow(-2.0, 3), -8.0);
        assert_eq!(int_pow(0.5, 10), 0.5f64.powi(10));
    }

    #[test]
    fn display_is_parenthesized() {
        let e = parse("-w2^2 + 3*x").unwrap();
        assert_eq!(e.to_string(), "((-(w2^2)) + (3 * x))");
    }

    #[test]
    fn spherical_wrapping() {
        let g = resolve_function("1 + 2*w1", 3, 1.0).unwrap();
        assert_eq!(g.descriptor(), "1 + 2*w1");
        assert_eq!(g.eval_coords(&[1.0, 0.0, 0.0]).unwrap(), 3.0);
        assert_eq!(
            resolve_function("0", 3, 1.0)
                .unwrap()
                .eval_coords(&[0.0, 1.0, 0.0])
                .unwrap(),
            0.0
        );
        assert!(matches!(
            resolve_function("w1*w5", 3, 1.0),
            Err(crate::Error::Eval(EvalError::DimensionMismatch { index: 5, dim: 3 }))
        ));
        assert!(resolve_function("x + w1", 3, 1.0).is_err());
        assert!(resolve_function("fourier:sin:1", 2, 1.0).is_ok());
    }
}
