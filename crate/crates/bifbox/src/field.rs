//! Vector-field models: `F = (f, g_1 .. g_m)` on `R^{m+1}` with the
//! hyperplane `{x = 0}` as claimed manifold of equilibria.

use std::sync::Arc;

use crate::error::{Error, EvalError, Result};
use crate::expr::Expr;
use crate::parse::parse_expression;
use crate::scalar::Real;

/// Right-hand side of an autonomous ODE, evaluated componentwise.
pub trait VectorField<T>: Sync {
    fn dim(&self) -> usize;
    fn eval_into(&self, p: &[T], out: &mut [T]) -> std::result::Result<(), EvalError>;

    fn eval_vec(&self, p: &[T]) -> std::result::Result<Vec<T>, EvalError>
    where
        T: Real,
    {
        let mut out = vec![T::zero(); self.dim()];
        self.eval_into(p, &mut out)?;
        Ok(out)
    }
}

/// Closure-backed vector field, mostly for tests and normal-form models.
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<T, F> VectorField<T> for FnField<F>
where
    F: Fn(&[T], &mut [T]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, p: &[T], out: &mut [T]) -> std::result::Result<(), EvalError> {
        (self.f)(p, out);
        Ok(())
    }
}

/// A vector field given by expressions, with its analysis anchor and domain.
///
/// State order is `(x, y_1, .., y_m)`; in parameter mode an extra trailing
/// `lambda` coordinate with identically zero drift is appended, so the
/// equilibrium manifold `{x = 0}` has dimension `m + 1` there.
#[derive(Debug, Clone)]
pub struct FieldModel<T> {
    m: usize,
    lambda: bool,
    variables: Vec<String>,
    components: Vec<Arc<Expr<T>>>,
    sources: Vec<String>,
    anchor: Vec<T>,
    domain_radius: T,
}

impl<T: Real> FieldModel<T> {
    /// Parse a model from component sources. `g` must have length `m`.
    pub fn new(
        m: usize,
        f: &str,
        g: &[&str],
        lambda: bool,
        anchor: Option<Vec<T>>,
        domain_radius: T,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("m must be positive".into()));
        }
        if g.len() != m {
            return Err(Error::InvalidInput(format!(
                "expected {m} g-components, got {}",
                g.len()
            )));
        }
        if !(domain_radius > T::zero()) {
            return Err(Error::InvalidInput("domain_radius must be positive".into()));
        }

        let mut variables = vec!["x".to_string()];
        if m == 1 {
            variables.push("y".to_string());
        } else {
            for i in 1..=m {
                variables.push(format!("y{i}"));
            }
        }
        if lambda {
            variables.push("lambda".to_string());
        }
        let mut aliases = Vec::new();
        if m == 1 {
            aliases.push(("y1".to_string(), 1));
        }
        if lambda {
            aliases.push(("λ".to_string(), variables.len() - 1));
        }

        let mut components = Vec::with_capacity(variables.len());
        let mut sources = Vec::with_capacity(variables.len());
        components.push(parse_expression(f, &variables, &aliases)?);
        sources.push(f.to_string());
        for src in g {
            components.push(parse_expression(src, &variables, &aliases)?);
            sources.push((*src).to_string());
        }
        if lambda {
            components.push(Expr::constant(T::zero()));
            sources.push("0".to_string());
        }

        let dim = variables.len();
        let anchor = anchor.unwrap_or_else(|| vec![T::zero(); dim]);
        if anchor.len() != dim {
            return Err(Error::InvalidInput(format!(
                "anchor has {} coordinates, state has {dim}",
                anchor.len()
            )));
        }
        if anchor[0] != T::zero() {
            return Err(Error::NotOnManifold(format!(
                "anchor x-coordinate is {}, expected 0",
                anchor[0]
            )));
        }

        Ok(FieldModel {
            m,
            lambda,
            variables,
            components,
            sources,
            anchor,
            domain_radius,
        })
    }

    /// Build a model directly from expression trees (same state conventions).
    pub fn from_components(
        m: usize,
        lambda: bool,
        components: Vec<Arc<Expr<T>>>,
        anchor: Option<Vec<T>>,
        domain_radius: T,
    ) -> Result<Self> {
        let mut variables = vec!["x".to_string()];
        if m == 1 {
            variables.push("y".to_string());
        } else {
            for i in 1..=m {
                variables.push(format!("y{i}"));
            }
        }
        if lambda {
            variables.push("lambda".to_string());
        }
        if components.len() != variables.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} components, got {}",
                variables.len(),
                components.len()
            )));
        }
        let sources = components
            .iter()
            .map(|c| c.display(&variables).to_string())
            .collect();
        let dim = variables.len();
        let anchor = anchor.unwrap_or_else(|| vec![T::zero(); dim]);
        if anchor.len() != dim || anchor[0] != T::zero() {
            return Err(Error::NotOnManifold("anchor must lie on {x = 0}".into()));
        }
        Ok(FieldModel {
            m,
            lambda,
            variables,
            components,
            sources,
            anchor,
            domain_radius,
        })
    }

    /// Named example problems used throughout the documentation and tests.
    ///
    /// - `transcritical`: `f = x*y`, `g = x` -- line of equilibria, simple
    ///   eigenvalue crossing with nonzero drift.
    /// - `driftsing`: `f = x*y1`, `g = (x*y2, x)` -- plane of equilibria with
    ///   a drift singularity at the origin.
    /// - `paramdrift`: `f = x*y`, `g = x*(x + lambda)` -- one-parameter family
    ///   with the drift degenerating at `lambda = 0`.
    pub fn builtin(name: &str) -> Result<Self> {
        let one = T::one();
        match name {
            "transcritical" => FieldModel::new(1, "x*y", &["x"], false, None, one),
            "driftsing" => FieldModel::new(2, "x*y1", &["x*y2", "x"], false, None, one),
            "paramdrift" => FieldModel::new(1, "x*y", &["x*(x + lambda)"], true, None, one),
            _ => Err(Error::InvalidInput(format!(
                "unknown builtin problem `{name}` (expected transcritical, driftsing or paramdrift)"
            ))),
        }
    }

    /// Manifold dimension: `m`, plus one in parameter mode.
    pub fn manifold_dim(&self) -> usize {
        self.m + usize::from(self.lambda)
    }

    /// Full state dimension `m + 1` (plus one in parameter mode).
    pub fn state_dim(&self) -> usize {
        self.variables.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn has_lambda(&self) -> bool {
        self.lambda
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn components(&self) -> &[Arc<Expr<T>>] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Arc<Expr<T>> {
        &self.components[i]
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn anchor(&self) -> &[T] {
        &self.anchor
    }

    pub fn domain_radius(&self) -> T {
        self.domain_radius
    }

    /// Same field re-anchored at another manifold point.
    pub fn with_anchor(&self, anchor: Vec<T>) -> Result<Self> {
        if anchor.len() != self.state_dim() {
            return Err(Error::InvalidInput("anchor dimension mismatch".into()));
        }
        if anchor[0] != T::zero() {
            return Err(Error::NotOnManifold(format!(
                "anchor x-coordinate is {}, expected 0",
                anchor[0]
            )));
        }
        let mut out = self.clone();
        out.anchor = anchor;
        Ok(out)
    }
}

impl<T: Real> VectorField<T> for FieldModel<T> {
    fn dim(&self) -> usize {
        self.state_dim()
    }

    fn eval_into(&self, p: &[T], out: &mut [T]) -> std::result::Result<(), EvalError> {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(p)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_transcritical_evaluates() {
        let f: FieldModel<f64> = FieldModel::builtin("transcritical").unwrap();
        assert_eq!(f.state_dim(), 2);
        assert_eq!(f.eval_vec(&[0.5, 2.0]).unwrap(), vec![1.0, 0.5]);
    }

    #[test]
    fn builtin_driftsing_evaluates() {
        let f: FieldModel<f64> = FieldModel::builtin("driftsing").unwrap();
        assert_eq!(f.eval_vec(&[2.0, 3.0, 4.0]).unwrap(), vec![6.0, 8.0, 2.0]);
    }

    #[test]
    fn lambda_mode_appends_frozen_coordinate() {
        let f: FieldModel<f64> = FieldModel::builtin("paramdrift").unwrap();
        assert_eq!(f.state_dim(), 3);
        assert_eq!(f.manifold_dim(), 2);
        let v = f.eval_vec(&[0.5, 1.0, 0.25]).unwrap();
        assert_eq!(v, vec![0.5, 0.375, 0.0]);
    }

    #[test]
    fn off_manifold_anchor_rejected() {
        let err = FieldModel::<f64>::new(1, "x*y", &["x"], false, Some(vec![0.1, 0.0]), 1.0)
            .unwrap_err();
        assert!(matches!(err, Error::NotOnManifold(_)));
    }

    #[test]
    fn component_count_checked() {
        let err = FieldModel::<f64>::new(2, "x", &["x"], false, None, 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn generic_scalar_instantiates_f32() {
        let f: FieldModel<f32> = FieldModel::builtin("transcritical").unwrap();
        assert_eq!(f.eval_vec(&[2.0, 3.0]).unwrap(), vec![6.0f32, 2.0]);
    }
}
