//! Arithmetic expression trees over a fixed, ordered set of variables.
//!
//! Expressions are immutable, reference-counted, and closed under exact
//! symbolic differentiation. There is no simplification pass: derivative
//! trees are returned as the raw product/quotient/chain rules produce them
//! and correctness is defined by evaluation.

use std::fmt;
use std::sync::Arc;

use crate::error::EvalError;
use crate::scalar::Real;

/// Node of an expression tree. Variables are stored as indices into the
/// ordered variable list of the owning model.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<T> {
    Const(T),
    Var(usize),
    Neg(Arc<Expr<T>>),
    Add(Arc<Expr<T>>, Arc<Expr<T>>),
    Sub(Arc<Expr<T>>, Arc<Expr<T>>),
    Mul(Arc<Expr<T>>, Arc<Expr<T>>),
    Div(Arc<Expr<T>>, Arc<Expr<T>>),
    /// Integer powers only; fractional exponents are rejected by the parser.
    Pow(Arc<Expr<T>>, i32),
    Sin(Arc<Expr<T>>),
    Cos(Arc<Expr<T>>),
    Exp(Arc<Expr<T>>),
    Log(Arc<Expr<T>>),
}

impl<T: Real> Expr<T> {
    pub fn constant(v: T) -> Arc<Self> {
        Arc::new(Expr::Const(v))
    }

    pub fn var(i: usize) -> Arc<Self> {
        Arc::new(Expr::Var(i))
    }

    /// Exact tree-walk evaluation at `point` (indexed by variable).
    pub fn eval(&self, point: &[T]) -> Result<T, EvalError> {
        let v = self.eval_inner(point)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner(&self, point: &[T]) -> Result<T, EvalError> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => point[*i],
            Expr::Neg(u) => -u.eval_inner(point)?,
            Expr::Add(u, v) => u.eval_inner(point)? + v.eval_inner(point)?,
            Expr::Sub(u, v) => u.eval_inner(point)? - v.eval_inner(point)?,
            Expr::Mul(u, v) => u.eval_inner(point)? * v.eval_inner(point)?,
            Expr::Div(u, v) => {
                let d = v.eval_inner(point)?;
                if d == T::zero() {
                    return Err(EvalError::DivisionByZero);
                }
                u.eval_inner(point)? / d
            }
            Expr::Pow(u, n) => {
                let b = u.eval_inner(point)?;
                if *n < 0 && b == T::zero() {
                    return Err(EvalError::DivisionByZero);
                }
                b.powi(*n)
            }
            Expr::Sin(u) => u.eval_inner(point)?.sin(),
            Expr::Cos(u) => u.eval_inner(point)?.cos(),
            Expr::Exp(u) => u.eval_inner(point)?.exp(),
            Expr::Log(u) => {
                let a = u.eval_inner(point)?;
                if a <= T::zero() {
                    return Err(EvalError::LogDomain);
                }
                a.ln()
            }
        })
    }

    /// Exact partial derivative with respect to variable index `var`.
    pub fn differentiate(self: &Arc<Self>, var: usize) -> Arc<Self> {
        match self.as_ref() {
            Expr::Const(_) => Expr::constant(T::zero()),
            Expr::Var(i) => Expr::constant(if *i == var { T::one() } else { T::zero() }),
            Expr::Neg(u) => Arc::new(Expr::Neg(u.differentiate(var))),
            Expr::Add(u, v) => Arc::new(Expr::Add(u.differentiate(var), v.differentiate(var))),
            Expr::Sub(u, v) => Arc::new(Expr::Sub(u.differentiate(var), v.differentiate(var))),
            Expr::Mul(u, v) => Arc::new(Expr::Add(
                Arc::new(Expr::Mul(u.differentiate(var), v.clone())),
                Arc::new(Expr::Mul(u.clone(), v.differentiate(var))),
            )),
            Expr::Div(u, v) => {
                // (u'v - uv') / v^2
                let num = Arc::new(Expr::Sub(
                    Arc::new(Expr::Mul(u.differentiate(var), v.clone())),
                    Arc::new(Expr::Mul(u.clone(), v.differentiate(var))),
                ));
                Arc::new(Expr::Div(num, Arc::new(Expr::Pow(v.clone(), 2))))
            }
            Expr::Pow(u, n) => {
                if *n == 0 {
                    return Expr::constant(T::zero());
                }
                // n * u^(n-1) * u'
                let coef = Expr::constant(T::of(f64::from(*n)));
                let power = Arc::new(Expr::Pow(u.clone(), n - 1));
                Arc::new(Expr::Mul(
                    Arc::new(Expr::Mul(coef, power)),
                    u.differentiate(var),
                ))
            }
            Expr::Sin(u) => Arc::new(Expr::Mul(
                Arc::new(Expr::Cos(u.clone())),
                u.differentiate(var),
            )),
            Expr::Cos(u) => Arc::new(Expr::Neg(Arc::new(Expr::Mul(
                Arc::new(Expr::Sin(u.clone())),
                u.differentiate(var),
            )))),
            Expr::Exp(u) => Arc::new(Expr::Mul(
                Arc::new(Expr::Exp(u.clone())),
                u.differentiate(var),
            )),
            Expr::Log(u) => Arc::new(Expr::Div(u.differentiate(var), u.clone())),
        }
    }

    /// True if any variable occurs in the tree.
    pub fn has_variables(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(_) => true,
            Expr::Neg(u) | Expr::Sin(u) | Expr::Cos(u) | Expr::Exp(u) | Expr::Log(u) => {
                u.has_variables()
            }
            Expr::Pow(u, _) => u.has_variables(),
            Expr::Add(u, v) | Expr::Sub(u, v) | Expr::Mul(u, v) | Expr::Div(u, v) => {
                u.has_variables() || v.has_variables()
            }
        }
    }

    /// Fully parenthesized rendering with the given variable names.
    pub fn display<'a>(&'a self, names: &'a [String]) -> ExprDisplay<'a, T> {
        ExprDisplay { expr: self, names }
    }
}

/// Display adapter carrying the variable-name context.
pub struct ExprDisplay<'a, T> {
    expr: &'a Expr<T>,
    names: &'a [String],
}

impl<T: Real> fmt::Display for ExprDisplay<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self.expr, self.names, f)
    }
}

fn write_expr<T: Real>(e: &Expr<T>, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Const(c) => {
            if *c < T::zero() {
                write!(f, "({c})")
            } else {
                write!(f, "{c}")
            }
        }
        Expr::Var(i) => write!(f, "{}", names[*i]),
        Expr::Neg(u) => {
            write!(f, "(-")?;
            write_expr(u, names, f)?;
            write!(f, ")")
        }
        Expr::Add(u, v) => write_binary(u, "+", v, names, f),
        Expr::Sub(u, v) => write_binary(u, "-", v, names, f),
        Expr::Mul(u, v) => write_binary(u, "*", v, names, f),
        Expr::Div(u, v) => write_binary(u, "/", v, names, f),
        Expr::Pow(u, n) => {
            write!(f, "(")?;
            write_expr(u, names, f)?;
            if *n < 0 {
                write!(f, "^({n}))")
            } else {
                write!(f, "^{n})")
            }
        }
        Expr::Sin(u) => write_call("sin", u, names, f),
        Expr::Cos(u) => write_call("cos", u, names, f),
        Expr::Exp(u) => write_call("exp", u, names, f),
        Expr::Log(u) => write_call("log", u, names, f),
    }
}

fn write_binary<T: Real>(
    u: &Expr<T>,
    op: &str,
    v: &Expr<T>,
    names: &[String],
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    write!(f, "(")?;
    write_expr(u, names, f)?;
    write!(f, " {op} ")?;
    write_expr(v, names, f)?;
    write!(f, ")")
}

fn write_call<T: Real>(
    name: &str,
    u: &Expr<T>,
    names: &[String],
    f: &mut fmt::Formatter<'_>,
) -> fmt::Result {
    write!(f, "{name}(")?;
    write_expr(u, names, f)?;
    write!(f, ")")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["x".into(), "y1".into(), "y2".into()]
    }

    #[test]
    fn constant_evaluates_anywhere() {
        let e: Arc<Expr<f64>> = Expr::constant(5.0);
        assert_eq!(e.eval(&[1.0, 2.0, 3.0]).unwrap(), 5.0);
    }

    #[test]
    fn division_by_zero_is_reported() {
        let e: Arc<Expr<f64>> = Arc::new(Expr::Div(Expr::constant(1.0), Expr::var(0)));
        assert_eq!(e.eval(&[0.0]).unwrap_err(), EvalError::DivisionByZero);
    }

    #[test]
    fn log_domain_is_reported() {
        let e: Arc<Expr<f64>> = Arc::new(Expr::Log(Expr::var(0)));
        assert_eq!(e.eval(&[-1.0]).unwrap_err(), EvalError::LogDomain);
        assert_eq!(e.eval(&[0.0]).unwrap_err(), EvalError::LogDomain);
    }

    #[test]
    fn overflow_is_non_finite() {
        let e: Arc<Expr<f64>> = Arc::new(Expr::Exp(Expr::constant(1e4)));
        assert_eq!(e.eval(&[]).unwrap_err(), EvalError::NonFinite);
    }

    #[test]
    fn product_rule() {
        // d/dx (x*y1 + x^2) at (1, 2) = y1 + 2x = 4
        let x = Expr::var(0);
        let y1 = Expr::var(1);
        let e: Arc<Expr<f64>> = Arc::new(Expr::Add(
            Arc::new(Expr::Mul(x.clone(), y1)),
            Arc::new(Expr::Pow(x, 2)),
        ));
        let d = e.differentiate(0);
        assert_eq!(d.eval(&[1.0, 2.0]).unwrap(), 4.0);
    }

    #[test]
    fn chain_rule_sin() {
        // d/dy1 sin(y1) at 0 = cos(0) = 1
        let e: Arc<Expr<f64>> = Arc::new(Expr::Sin(Expr::var(1)));
        assert_eq!(e.differentiate(1).eval(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn power_rule_squared_variable() {
        // d/dy2 (x*y2^2) at (1, _, 3) = 2*x*y2 = 6
        let e: Arc<Expr<f64>> = Arc::new(Expr::Mul(
            Expr::var(0),
            Arc::new(Expr::Pow(Expr::var(2), 2)),
        ));
        assert_eq!(e.differentiate(2).eval(&[1.0, 0.0, 3.0]).unwrap(), 6.0);
    }

    #[test]
    fn display_is_fully_parenthesized() {
        let e: Arc<Expr<f64>> = Arc::new(Expr::Mul(
            Expr::var(0),
            Arc::new(Expr::Add(Expr::var(1), Arc::new(Expr::Pow(Expr::var(2), 2)))),
        ));
        assert_eq!(e.display(&names()).to_string(), "(x * (y1 + (y2^2)))");
    }
}
