//! Manifold verification and the desingularized field `F~` with `F = x F~`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, EvalError, Result};
use crate::expr::Expr;
use crate::field::{FieldModel, VectorField};
use crate::jet::MultiJet;
use crate::numeric::{gauss_legendre_8, quasi_random_ball};
use crate::scalar::{norm2, norm_inf, Real};

/// Residual tolerance for the equilibrium-manifold check.
pub const DEFAULT_MANIFOLD_TOL: f64 = 1e-10;
/// Below this norm the desingularized field counts as vanishing and the
/// flow-box construction is inapplicable.
pub const DEFAULT_DRIFT_TOL: f64 = 1e-8;

/// Outcome of sampling `|F(0, y)|` over the manifold patch.
#[derive(Debug, Clone, Serialize)]
pub struct ManifoldReport<T> {
    pub pass: bool,
    pub samples: usize,
    pub tol: T,
    pub max_residual: T,
    pub worst_point: Vec<T>,
}

/// Evaluate `F` at quasi-random points of `{x = 0}` inside the domain ball
/// and report the largest residual.
pub fn verify_manifold<T: Real>(
    field: &FieldModel<T>,
    samples: usize,
    tol: T,
) -> Result<ManifoldReport<T>> {
    if samples == 0 {
        return Err(Error::InvalidInput("need at least one sample".into()));
    }
    let mdim = field.manifold_dim();
    let mut worst = T::zero();
    let mut worst_point = vec![T::zero(); field.state_dim()];
    for y in quasi_random_ball::<T>(mdim, samples, field.domain_radius()) {
        let mut p = vec![T::zero(); field.state_dim()];
        p[1..].copy_from_slice(&y);
        let residual = match field.eval_vec(&p) {
            Ok(v) => norm_inf(&v),
            Err(_) => T::infinity(),
        };
        if residual > worst {
            worst = residual;
            worst_point = p;
        }
    }
    Ok(ManifoldReport {
        pass: worst <= tol,
        samples,
        tol,
        max_residual: worst,
        worst_point,
    })
}

/// How the division by `x` was carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReductionRoute {
    /// Every additive term carried a factor `x`; the quotient is exact.
    Symbolic,
    /// Removable-singularity form `F~(x,y) = ∫_0^1 ∂_x F(s x, y) ds`
    /// by fixed-order Gauss quadrature.
    Quadrature,
}

/// The desingularized field. Behind the quadrature route the components are
/// not expressions, so `F~` is exposed as a vector field rather than a model.
#[derive(Debug, Clone)]
pub enum ReducedField<T> {
    Symbolic(FieldModel<T>),
    Quadrature {
        original: FieldModel<T>,
        x_derivatives: Vec<Arc<Expr<T>>>,
    },
}

impl<T: Real> ReducedField<T> {
    pub fn route(&self) -> ReductionRoute {
        match self {
            ReducedField::Symbolic(_) => ReductionRoute::Symbolic,
            ReducedField::Quadrature { .. } => ReductionRoute::Quadrature,
        }
    }

    /// The exact expression model, when the symbolic route succeeded.
    pub fn model(&self) -> Option<&FieldModel<T>> {
        match self {
            ReducedField::Symbolic(m) => Some(m),
            ReducedField::Quadrature { .. } => None,
        }
    }

    pub fn state_dim(&self) -> usize {
        match self {
            ReducedField::Symbolic(m) => m.state_dim(),
            ReducedField::Quadrature { original, .. } => original.state_dim(),
        }
    }
}

impl<T: Real> VectorField<T> for ReducedField<T> {
    fn dim(&self) -> usize {
        self.state_dim()
    }

    fn eval_into(&self, p: &[T], out: &mut [T]) -> std::result::Result<(), EvalError> {
        match self {
            ReducedField::Symbolic(m) => m.eval_into(p, out),
            ReducedField::Quadrature { x_derivatives, .. } => {
                for o in out.iter_mut() {
                    *o = T::zero();
                }
                let mut q = p.to_vec();
                for (node, weight) in gauss_legendre_8::<T>() {
                    q[0] = node * p[0];
                    for (o, dx) in out.iter_mut().zip(x_derivatives) {
                        *o = *o + weight * dx.eval(&q)?;
                    }
                }
                Ok(())
            }
        }
    }
}

/// Divide one expression by `x` (variable index 0), succeeding when every
/// additive term structurally carries the factor.
fn divide_expr_by_x<T: Real>(e: &Arc<Expr<T>>) -> Option<Arc<Expr<T>>> {
    match e.as_ref() {
        Expr::Const(c) if *c == T::zero() => Some(Expr::constant(T::zero())),
        Expr::Const(_) => None,
        Expr::Var(0) => Some(Expr::constant(T::one())),
        Expr::Var(_) => None,
        Expr::Neg(u) => divide_expr_by_x(u).map(|du| Arc::new(Expr::Neg(du))),
        Expr::Add(u, v) => Some(Arc::new(Expr::Add(
            divide_expr_by_x(u)?,
            divide_expr_by_x(v)?,
        ))),
        Expr::Sub(u, v) => Some(Arc::new(Expr::Sub(
            divide_expr_by_x(u)?,
            divide_expr_by_x(v)?,
        ))),
        Expr::Mul(u, v) => {
            if let Some(du) = divide_expr_by_x(u) {
                Some(Arc::new(Expr::Mul(du, v.clone())))
            } else {
                divide_expr_by_x(v).map(|dv| Arc::new(Expr::Mul(u.clone(), dv)))
            }
        }
        Expr::Div(u, v) => divide_expr_by_x(u).map(|du| Arc::new(Expr::Div(du, v.clone()))),
        // u^n / x = (u/x) * u^(n-1)
        Expr::Pow(u, n) if *n >= 1 => divide_expr_by_x(u).map(|du| {
            if *n == 1 {
                du
            } else {
                Arc::new(Expr::Mul(du, Arc::new(Expr::Pow(u.clone(), n - 1))))
            }
        }),
        _ => None,
    }
}

/// Exact symbolic quotient `F~` with `F = x F~`, or `NotDivisible` when some
/// component has a term without the factor `x`.
pub fn divide_by_x_symbolic<T: Real>(field: &FieldModel<T>) -> Result<FieldModel<T>> {
    let mut reduced = Vec::with_capacity(field.components().len());
    for (i, c) in field.components().iter().enumerate() {
        match divide_expr_by_x(c) {
            Some(r) => reduced.push(r),
            None => {
                return Err(Error::NotDivisible(format!(
                    "component {i} has an additive term without a factor x"
                )))
            }
        }
    }
    FieldModel::from_components(
        field.m(),
        field.has_lambda(),
        reduced,
        Some(field.anchor().to_vec()),
        field.domain_radius(),
    )
}

/// Desingularize `F`: the symbolic quotient when all terms carry `x`,
/// otherwise the quadrature form of the removable singularity.
pub fn divide_by_x<T: Real>(field: &FieldModel<T>) -> ReducedField<T> {
    match divide_by_x_symbolic(field) {
        Ok(model) => ReducedField::Symbolic(model),
        Err(_) => {
            let x_derivatives = field
                .components()
                .iter()
                .map(|c| c.differentiate(0))
                .collect();
            ReducedField::Quadrature {
                original: field.clone(),
                x_derivatives,
            }
        }
    }
}

/// Drift of the reduced field at a manifold point.
#[derive(Debug, Clone, Serialize)]
pub struct DriftReport<T> {
    pub vector: Vec<T>,
    pub norm: T,
    pub vanishing: bool,
}

/// Evaluate `F~` at a point of `{x = 0}` and flag a vanishing drift
/// (where the flow-box construction is inapplicable).
pub fn drift_at<T: Real>(
    reduced: &ReducedField<T>,
    point: &[T],
    tol_drift: T,
) -> Result<DriftReport<T>> {
    if point[0] != T::zero() {
        return Err(Error::NotOnManifold(format!(
            "drift point has x = {}, expected 0",
            point[0]
        )));
    }
    let vector = reduced.eval_vec(point).map_err(Error::Eval)?;
    let norm = norm2(&vector);
    Ok(DriftReport {
        vanishing: norm < tol_drift,
        vector,
        norm,
    })
}

/// Jet-level division: shift every x-exponent down by one.
pub fn divide_jet_by_x<T: Real>(jet: &MultiJet<T>, tol: T) -> Result<MultiJet<T>> {
    jet.divide_by_x(tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::jet_of_field;

    #[test]
    fn clean_field_passes_manifold_check() {
        let f: FieldModel<f64> = FieldModel::builtin("driftsing").unwrap();
        let report = verify_manifold(&f, 64, 1e-10).unwrap();
        assert!(report.pass);
        assert_eq!(report.max_residual, 0.0);
    }

    #[test]
    fn constant_offset_fails_manifold_check() {
        let f = FieldModel::<f64>::new(2, "x*y1 + 1e-3", &["x*y2", "x"], false, None, 1.0)
            .unwrap();
        let report = verify_manifold(&f, 64, 1e-9).unwrap();
        assert!(!report.pass);
        assert!((report.max_residual - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn pure_square_passes() {
        let f = FieldModel::<f64>::new(1, "x^2", &["0"], false, None, 1.0).unwrap();
        assert!(verify_manifold(&f, 32, 1e-10).unwrap().pass);
    }

    #[test]
    fn monomial_shift() {
        // F = (x*y, x) -> F~ = (y, 1)
        let f: FieldModel<f64> = FieldModel::builtin("transcritical").unwrap();
        let reduced = divide_by_x_symbolic(&f).unwrap();
        assert_eq!(reduced.eval_vec(&[0.0, 0.7]).unwrap(), vec![0.7, 1.0]);
    }

    #[test]
    fn square_shift() {
        let f = FieldModel::<f64>::new(1, "x^2", &["0"], false, None, 1.0).unwrap();
        let reduced = divide_by_x_symbolic(&f).unwrap();
        assert_eq!(reduced.eval_vec(&[0.3, 0.0]).unwrap(), vec![0.3, 0.0]);
    }

    #[test]
    fn cubic_builtin_regular_origin() {
        // F~ = (y1, y2, 1) has nonvanishing drift (0, 0, 1) at the origin.
        let f: FieldModel<f64> = FieldModel::builtin("driftsing").unwrap();
        let reduced = divide_by_x(&f);
        assert_eq!(reduced.route(), ReductionRoute::Symbolic);
        let drift = drift_at(&reduced, &[0.0, 0.0, 0.0], 1e-8).unwrap();
        assert_eq!(drift.vector, vec![0.0, 0.0, 1.0]);
        assert!(!drift.vanishing);
    }

    #[test]
    fn transcritical_drift() {
        let f: FieldModel<f64> = FieldModel::builtin("transcritical").unwrap();
        let reduced = divide_by_x(&f);
        let drift = drift_at(&reduced, &[0.0, 0.0], 1e-8).unwrap();
        assert_eq!(drift.vector, vec![0.0, 1.0]);
        assert!(!drift.vanishing);
    }

    #[test]
    fn vanishing_drift_flagged() {
        // F~ = (y1, y2, y2) vanishes at the origin.
        let f = FieldModel::<f64>::new(2, "x*y1", &["x*y2", "x*y2"], false, None, 1.0).unwrap();
        let reduced = divide_by_x(&f);
        let drift = drift_at(&reduced, &[0.0, 0.0, 0.0], 1e-8).unwrap();
        assert_eq!(drift.vector, vec![0.0, 0.0, 0.0]);
        assert!(drift.vanishing);
    }

    #[test]
    fn quadrature_fallback_matches_sinc() {
        // f = sin(x) is not structurally divisible; F~ must equal sin(x)/x.
        let f = FieldModel::<f64>::new(1, "sin(x)", &["x"], false, None, 1.0).unwrap();
        let reduced = divide_by_x(&f);
        assert_eq!(reduced.route(), ReductionRoute::Quadrature);
        for &x in &[1e-3, 0.1, 0.5, 0.9, -0.7] {
            let v = reduced.eval_vec(&[x, 0.0]).unwrap();
            let exact = x.sin() / x;
            assert!((v[0] - exact).abs() < 1e-12, "x={x}: {} vs {exact}", v[0]);
        }
        // smooth through x = 0
        let v = reduced.eval_vec(&[0.0, 0.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn identity_f_equals_x_times_reduced() {
        let f: FieldModel<f64> = FieldModel::builtin("driftsing").unwrap();
        let reduced = divide_by_x(&f);
        for p in quasi_random_ball::<f64>(3, 1000, 1.0) {
            let lhs = f.eval_vec(&p).unwrap();
            let rhs = reduced.eval_vec(&p).unwrap();
            for (l, r) in lhs.iter().zip(&rhs) {
                let err = (*l - p[0] * *r).abs();
                assert!(err <= 1e-12 * l.abs().max(1.0), "at {p:?}");
            }
        }
    }

    #[test]
    fn jet_division_commutes_with_field_division() {
        let f = FieldModel::<f64>::new(
            2,
            "x*(y1 + y2^2) - x^2*y2",
            &["x*y2 + 0.5*x^2", "x"],
            false,
            None,
            1.0,
        )
        .unwrap();
        let jet_then_divide = jet_of_field(&f, &[0.0, 0.0, 0.0], 4)
            .unwrap()
            .divide_by_x(1e-12)
            .unwrap();
        let divide_then_jet =
            jet_of_field(&divide_by_x_symbolic(&f).unwrap(), &[0.0, 0.0, 0.0], 3).unwrap();
        for (alpha, row) in jet_then_divide.entries() {
            for (comp, v) in row.iter().enumerate() {
                let w = divide_then_jet.coefficient(alpha, comp);
                assert!((*v - w).abs() <= 1e-12, "alpha={alpha:?} comp={comp}");
            }
        }
        for (alpha, row) in divide_then_jet.entries() {
            for (comp, w) in row.iter().enumerate() {
                let v = jet_then_divide.coefficient(alpha, comp);
                assert!((*w - v).abs() <= 1e-12, "alpha={alpha:?} comp={comp}");
            }
        }
    }
}
