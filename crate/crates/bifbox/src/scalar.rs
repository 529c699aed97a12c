use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the numerical core is generic over: `f32` or `f64`.
///
/// Everything downstream (expressions, jets, charts, integrators) is written
/// against this trait; the crate root exports `f64`-concrete aliases.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Conversion from an `f64` constant (tolerances, tableau entries, literals).
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("constant not representable in this scalar type")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("count not representable in this scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Euclidean norm of a slice.
pub fn norm2<T: Real>(v: &[T]) -> T {
    v.iter()
        .fold(T::zero(), |acc, &x| acc + x * x)
        .sqrt()
}

/// Dot product of two equally long slices.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Max-norm of a slice.
pub fn norm_inf<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f64::of(1e-10), 1e-10);
        assert_eq!(f32::of(0.5), 0.5f32);
        assert_eq!(f64::of_usize(7), 7.0);
    }

    #[test]
    fn norms() {
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert_eq!(dot(&[1.0, 2.0], &[3.0, 4.0]), 11.0);
        assert_eq!(norm_inf(&[-3.0, 2.0]), 3.0);
    }
}
