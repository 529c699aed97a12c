//! Truncated multivariate Taylor tables computed by exact symbolic
//! differentiation.
//!
//! Entries are stored as Taylor coefficients `∂^α F(base) / α!` keyed by the
//! multi-exponent `α`; a missing entry is exactly zero. Keeping the `1/α!`
//! normalization everywhere makes division by `x` a plain index shift.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::FieldModel;
use crate::scalar::Real;

pub type MultiIndex = Vec<usize>;

#[derive(Debug, Clone)]
pub struct MultiJet<T> {
    base: Vec<T>,
    order: usize,
    n_vars: usize,
    n_comps: usize,
    coeffs: BTreeMap<MultiIndex, Vec<T>>,
}

/// All multi-indices over `n_vars` variables with `|α| <= order`, graded by
/// total degree and lexicographic within a degree.
pub fn multi_indices(n_vars: usize, order: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=order {
        let mut idx = vec![0usize; n_vars];
        compositions(total, 0, &mut idx, &mut out);
    }
    out
}

fn compositions(rest: usize, pos: usize, idx: &mut MultiIndex, out: &mut Vec<MultiIndex>) {
    if pos + 1 == idx.len() {
        idx[pos] = rest;
        out.push(idx.clone());
        idx[pos] = 0;
        return;
    }
    for k in 0..=rest {
        idx[pos] = k;
        compositions(rest - k, pos + 1, idx, out);
        idx[pos] = 0;
    }
}

fn factorial<T: Real>(alpha: &[usize]) -> T {
    let mut acc = T::one();
    for &a in alpha {
        for k in 2..=a {
            acc = acc * T::of_usize(k);
        }
    }
    acc
}

/// Taylor table of `field` at `point` up to total degree `order`.
///
/// Every coefficient comes from exact repeated symbolic differentiation
/// followed by evaluation, so true zeros of polynomial inputs are exact.
pub fn jet_of_field<T: Real>(
    field: &FieldModel<T>,
    point: &[T],
    order: usize,
) -> Result<MultiJet<T>> {
    if order == 0 {
        return Err(Error::InvalidInput("jet order must be at least 1".into()));
    }
    if point.len() != field.state_dim() {
        return Err(Error::InvalidInput("jet point dimension mismatch".into()));
    }

    let n_vars = field.state_dim();
    let n_comps = field.components().len();
    let indices = multi_indices(n_vars, order);

    // Derivative expressions are built incrementally: D[α] differentiates
    // D[α - e_j] once, where j is the first nonzero entry of α.
    let mut derivs: BTreeMap<MultiIndex, Vec<Arc<Expr<T>>>> = BTreeMap::new();
    derivs.insert(
        vec![0; n_vars],
        field.components().to_vec(),
    );
    let mut coeffs = BTreeMap::new();
    for alpha in &indices {
        if !derivs.contains_key(alpha) {
            let j = alpha.iter().position(|&a| a > 0).expect("nonzero index");
            let mut parent = alpha.clone();
            parent[j] -= 1;
            let next: Vec<_> = derivs[&parent]
                .iter()
                .map(|e| e.differentiate(j))
                .collect();
            derivs.insert(alpha.clone(), next);
        }
        let fac = factorial::<T>(alpha);
        let mut row = Vec::with_capacity(n_comps);
        for e in &derivs[alpha] {
            row.push(e.eval(point).map_err(Error::Eval)? / fac);
        }
        if row.iter().any(|v| *v != T::zero()) {
            coeffs.insert(alpha.clone(), row);
        }
    }

    Ok(MultiJet {
        base: point.to_vec(),
        order,
        n_vars,
        n_comps,
        coeffs,
    })
}

impl<T: Real> MultiJet<T> {
    pub fn base(&self) -> &[T] {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_components(&self) -> usize {
        self.n_comps
    }

    pub fn entries(&self) -> impl Iterator<Item = (&MultiIndex, &Vec<T>)> {
        self.coeffs.iter()
    }

    /// Taylor coefficient `∂^α F_comp / α!`; zero when absent.
    pub fn coefficient(&self, alpha: &[usize], comp: usize) -> T {
        self.coeffs
            .get(alpha)
            .map(|row| row[comp])
            .unwrap_or_else(T::zero)
    }

    /// Raw partial derivative `∂^α F_comp` (coefficient times `α!`).
    pub fn partial(&self, alpha: &[usize], comp: usize) -> T {
        self.coefficient(alpha, comp) * factorial::<T>(alpha)
    }

    /// Largest absolute coefficient, used to scale zero tolerances.
    pub fn max_abs(&self) -> T {
        self.coeffs
            .values()
            .flat_map(|row| row.iter())
            .fold(T::zero(), |acc, v| acc.max(v.abs()))
    }

    /// Evaluate the truncated Taylor polynomial at `p`.
    pub fn eval_polynomial(&self, p: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_comps];
        for (alpha, row) in &self.coeffs {
            let mut mono = T::one();
            for (j, &a) in alpha.iter().enumerate() {
                let d = p[j] - self.base[j];
                for _ in 0..a {
                    mono = mono * d;
                }
            }
            for (o, &c) in out.iter_mut().zip(row) {
                *o = *o + c * mono;
            }
        }
        out
    }

    /// Jet of `F / x`: shift every x-exponent down by one.
    ///
    /// Entries with x-exponent zero must vanish (the manifold condition);
    /// a coefficient above `tol` is reported as `NotDivisible`.
    pub fn divide_by_x(&self, tol: T) -> Result<MultiJet<T>> {
        let mut coeffs = BTreeMap::new();
        for (alpha, row) in &self.coeffs {
            if alpha[0] == 0 {
                let worst = row.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
                if worst > tol {
                    return Err(Error::NotDivisible(format!(
                        "entry {alpha:?} with x-exponent 0 has coefficient {worst} (tol {tol})"
                    )));
                }
                continue;
            }
            let mut shifted = alpha.clone();
            shifted[0] -= 1;
            coeffs.insert(shifted, row.clone());
        }
        Ok(MultiJet {
            base: self.base.clone(),
            order: self.order - 1,
            n_vars: self.n_vars,
            n_comps: self.n_comps,
            coeffs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_enumeration_is_graded() {
        let idx = multi_indices(2, 2);
        assert_eq!(
            idx,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![1, 0],
                vec![0, 2],
                vec![1, 1],
                vec![2, 0]
            ]
        );
    }

    #[test]
    fn cubic_field_jet_at_origin() {
        // F = (x*y1, x*y2, x): only three nonzero Taylor entries at order 2.
        let f: FieldModel<f64> = FieldModel::builtin("driftsing").unwrap();
        let jet = jet_of_field(&f, &[0.0, 0.0, 0.0], 2).unwrap();
        assert_eq!(jet.coefficient(&[1, 1, 0], 0), 1.0);
        assert_eq!(jet.coefficient(&[1, 0, 1], 1), 1.0);
        assert_eq!(jet.coefficient(&[1, 0, 0], 2), 1.0);
        let nonzero: Vec<_> = jet.entries().collect();
        assert_eq!(nonzero.len(), 3);
    }

    #[test]
    fn pure_square_jet() {
        let f = FieldModel::<f64>::new(1, "x^2", &["0"], false, None, 1.0).unwrap();
        let jet = jet_of_field(&f, &[0.0, 0.0], 2).unwrap();
        assert_eq!(jet.coefficient(&[2, 0], 0), 1.0);
        assert_eq!(jet.entries().count(), 1);
    }

    #[test]
    fn order_zero_rejected() {
        let f: FieldModel<f64> = FieldModel::builtin("transcritical").unwrap();
        assert!(jet_of_field(&f, &[0.0, 0.0], 0).is_err());
    }

    #[test]
    fn taylor_normalization() {
        // f = x^3: coefficient 1, partial 6.
        let f = FieldModel::<f64>::new(1, "x^3", &["0"], false, None, 1.0).unwrap();
        let jet = jet_of_field(&f, &[0.0, 0.0], 3).unwrap();
        assert_eq!(jet.coefficient(&[3, 0], 0), 1.0);
        assert_eq!(jet.partial(&[3, 0], 0), 6.0);
    }

    #[test]
    fn divide_by_x_shifts_exponents() {
        let f: FieldModel<f64> = FieldModel::builtin("driftsing").unwrap();
        let jet = jet_of_field(&f, &[0.0, 0.0, 0.0], 3).unwrap();
        let reduced = jet.divide_by_x(1e-12).unwrap();
        assert_eq!(reduced.coefficient(&[0, 1, 0], 0), 1.0); // f~ = y1
        assert_eq!(reduced.coefficient(&[0, 0, 1], 1), 1.0); // g~1 = y2
        assert_eq!(reduced.coefficient(&[0, 0, 0], 2), 1.0); // g~2 = 1
    }

    #[test]
    fn divide_by_x_detects_obstruction() {
        let f = FieldModel::<f64>::new(1, "x*y + 0.001", &["x"], false, None, 1.0).unwrap();
        let jet = jet_of_field(&f, &[0.0, 0.0], 2).unwrap();
        let err = jet.divide_by_x(1e-9).unwrap_err();
        assert!(matches!(err, Error::NotDivisible { .. }));
    }
}
