//! Small numerical building blocks: finite-difference weights, Richardson
//! extrapolation, quadrature nodes, quasi-random sampling, Gram-Schmidt and
//! tiny dense linear algebra.

use std::collections::HashMap;

use crate::scalar::{dot, norm2, Real};

/// 8-point Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_8<T: Real>() -> [(T, T); 8] {
    // Abscissas/weights for [-1, 1], mapped by x -> (x + 1) / 2, w -> w / 2.
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329_0,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362_0,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let mut out = [(T::zero(), T::zero()); 8];
    for i in 0..4 {
        let half = T::of(0.5);
        let x = T::of(X[i]);
        let w = T::of(W[i]) * half;
        out[2 * i] = (half * (T::one() - x), w);
        out[2 * i + 1] = (half * (T::one() + x), w);
    }
    out
}

/// Halton low-discrepancy value: `index`-th element for a prime `base`.
pub fn halton<T: Real>(mut index: usize, base: usize) -> T {
    let b = T::of_usize(base);
    let mut f = T::one();
    let mut r = T::zero();
    while index > 0 {
        f = f / b;
        r = r + f * T::of_usize(index % base);
        index /= base;
    }
    r
}

const HALTON_PRIMES: [usize; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Deterministic quasi-random points in the closed ball of given radius.
///
/// Halton points in the cube are mapped to `[-r, r]^dim`; anything outside
/// the ball is radially projected onto the sphere.
pub fn quasi_random_ball<T: Real>(dim: usize, count: usize, radius: T) -> Vec<Vec<T>> {
    assert!(dim <= HALTON_PRIMES.len(), "ball sampler supports dim <= 8");
    let two = T::of(2.0);
    (0..count)
        .map(|i| {
            let mut p: Vec<T> = (0..dim)
                .map(|j| (halton::<T>(i + 1, HALTON_PRIMES[j]) * two - T::one()) * radius)
                .collect();
            let n = norm2(&p);
            if n > radius {
                let s = radius / n;
                for c in &mut p {
                    *c = *c * s;
                }
            }
            p
        })
        .collect()
}

/// Finite-difference weights (Fornberg) for the `order`-th derivative at 0
/// on the given stencil offsets.
pub fn fornberg_weights<T: Real>(order: usize, offsets: &[T]) -> Vec<T> {
    let n = offsets.len();
    assert!(n > order, "stencil too small for requested derivative");
    let m = order;
    // w[i][k]: weight of node i for the k-th derivative.
    let mut w = vec![vec![T::zero(); m + 1]; n];
    let mut c1 = T::one();
    let mut c4 = offsets[0];
    w[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[i][k] = c1 * (T::of_usize(k) * w[i - 1][k - 1] - c5 * w[i - 1][k]) / c2;
                }
                w[i][0] = -c1 * c5 * w[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                w[j][k] = (c4 * w[j][k] - T::of_usize(k) * w[j][k - 1]) / c3;
            }
            w[j][0] = c4 * w[j][0] / c3;
        }
        c1 = c2;
    }
    w.into_iter().map(|row| row[m]).collect()
}

/// Minimal symmetric integer stencil for the `order`-th derivative.
///
/// Odd orders omit the center node; either way the truncation error expands
/// in even powers of the step, which is what Richardson extrapolation needs.
pub fn central_offsets(order: usize) -> Vec<i64> {
    let half = (order + 1) / 2;
    let mut out = Vec::new();
    for i in -(half as i64)..=(half as i64) {
        if order % 2 == 1 && i == 0 {
            continue;
        }
        out.push(i);
    }
    out
}

/// Derivative estimates `d^k φ / ds^k (0)` for `k = 1..=k_max`.
#[derive(Debug, Clone)]
pub struct DerivativeTable<T> {
    /// `values[k-1]` is the k-th derivative (not divided by `k!`).
    pub values: Vec<T>,
    /// Combined Richardson-spread and noise-amplification estimate per entry.
    pub uncertainties: Vec<T>,
}

/// Central differences on steps `h, h/2, .., h/2^(levels-1)` with Richardson
/// extrapolation. `noise` is the absolute uncertainty of one `phi` sample
/// (integrator tolerance); it bounds the amplified rounding per entry.
///
/// `phi` samples are cached on the dyadic grid, so repeated offsets across
/// derivative orders and levels cost one evaluation each.
pub fn derivative_table<T: Real, E>(
    mut phi: impl FnMut(T) -> std::result::Result<T, E>,
    k_max: usize,
    h: T,
    levels: usize,
    noise: T,
) -> std::result::Result<DerivativeTable<T>, E> {
    assert!(levels >= 2, "need at least two levels to extrapolate");
    let fine = 1i64 << (levels - 1);
    let h_min = h / T::of_usize(fine as usize);
    let mut cache: HashMap<i64, T> = HashMap::new();
    let mut sample = |i: i64, phi: &mut dyn FnMut(T) -> std::result::Result<T, E>| {
        if let Some(v) = cache.get(&i) {
            return Ok(*v);
        }
        let v = phi(T::of(i as f64) * h_min)?;
        cache.insert(i, v);
        Ok(v)
    };

    let mut values = Vec::with_capacity(k_max);
    let mut uncertainties = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let offsets = central_offsets(k);
        let offs_t: Vec<T> = offsets.iter().map(|&i| T::of(i as f64)).collect();
        let weights = fornberg_weights(k, &offs_t);
        let weight_l1 = weights.iter().fold(T::zero(), |a, w| a + w.abs());

        // One estimate per level, then a Richardson table over levels.
        let mut diag = Vec::with_capacity(levels);
        let mut prev_row: Vec<T> = Vec::new();
        let mut noise_amp = T::zero();
        for lev in 0..levels {
            let mult = 1i64 << (levels - 1 - lev);
            let h_lev = h_min * T::of(mult as f64);
            let mut acc = T::zero();
            for (&i, &w) in offsets.iter().zip(&weights) {
                acc = acc + w * sample(i * mult, &mut phi)?;
            }
            let mut scale = T::one();
            for _ in 0..k {
                scale = scale * h_lev;
            }
            let estimate = acc / scale;
            noise_amp = noise * weight_l1 / scale;

            let mut row = vec![estimate];
            for (q, prev) in prev_row.iter().enumerate() {
                let factor = T::of(4f64.powi(q as i32 + 1));
                let improved = (factor * row[q] - *prev) / (factor - T::one());
                row.push(improved);
            }
            diag.push(*row.last().unwrap());
            prev_row = row;
        }
        let best = *diag.last().unwrap();
        let spread = if diag.len() >= 2 {
            (best - diag[diag.len() - 2]).abs()
        } else {
            T::zero()
        };
        values.push(best);
        uncertainties.push(spread + noise_amp);
    }
    Ok(DerivativeTable {
        values,
        uncertainties,
    })
}

/// Orthonormal frame of the orthogonal complement of the unit vector `u`.
///
/// The standard basis vector with the largest `|<e_j, u>|` is dropped; the
/// remaining ones are Gram-Schmidt orthonormalized against `u` in order.
pub fn orthonormal_complement<T: Real>(u: &[T]) -> Vec<Vec<T>> {
    let n = u.len();
    let drop = (0..n)
        .max_by(|&a, &b| {
            u[a].abs()
                .partial_cmp(&u[b].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap();
    let mut frame: Vec<Vec<T>> = Vec::with_capacity(n - 1);
    for j in 0..n {
        if j == drop {
            continue;
        }
        let mut v = vec![T::zero(); n];
        v[j] = T::one();
        let cu = dot(&v, u);
        for (vi, &ui) in v.iter_mut().zip(u) {
            *vi = *vi - cu * ui;
        }
        for w in &frame {
            let c = dot(&v, w);
            for (vi, &wi) in v.iter_mut().zip(w) {
                *vi = *vi - c * wi;
            }
        }
        let nv = norm2(&v);
        for vi in &mut v {
            *vi = *vi / nv;
        }
        frame.push(v);
    }
    frame
}

/// Solve a small dense linear system in place (Gaussian elimination with
/// partial pivoting). Returns `None` when the matrix is numerically singular.
pub fn solve_dense<T: Real>(a: &mut [Vec<T>], b: &mut [T]) -> Option<Vec<T>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if a[pivot][col].abs() < T::of(1e-300) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] = a[row][k] - f * v;
            }
            let v = b[col];
            b[row] = b[row] - f * v;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut s = b[row];
        for k in row + 1..n {
            s = s - a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    Some(x)
}

/// Singular values of a small dense matrix (rows of equal length), computed
/// by one-sided Jacobi orthogonalization of the columns.
pub fn singular_values<T: Real>(a: &[Vec<T>]) -> Vec<T> {
    if a.is_empty() {
        return Vec::new();
    }
    let rows = a.len();
    let cols = a[0].len();
    // Work on the transpose when it has fewer columns: singular values agree.
    if cols > rows {
        let t: Vec<Vec<T>> = (0..cols)
            .map(|j| (0..rows).map(|i| a[i][j]).collect())
            .collect();
        return singular_values(&t);
    }
    let mut m: Vec<Vec<T>> = a.to_vec();
    let eps = T::of(1e-30);
    for _sweep in 0..60 {
        let mut off = T::zero();
        for p in 0..cols {
            for q in p + 1..cols {
                let mut apq = T::zero();
                let mut app = T::zero();
                let mut aqq = T::zero();
                for row in m.iter() {
                    apq = apq + row[p] * row[q];
                    app = app + row[p] * row[p];
                    aqq = aqq + row[q] * row[q];
                }
                off = off.max(apq.abs());
                if apq.abs() <= eps * (app * aqq).sqrt().max(eps) {
                    continue;
                }
                let tau = (aqq - app) / (T::of(2.0) * apq);
                let t = tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for row in m.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        if off < T::of(1e-28) {
            break;
        }
    }
    let mut sv: Vec<T> = (0..cols)
        .map(|j| {
            let col: Vec<T> = m.iter().map(|row| row[j]).collect();
            norm2(&col)
        })
        .collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Eigenvalues of `[[a, b], [c, d]]` as `(re, im)` pairs.
pub fn eig2<T: Real>(a: T, b: T, c: T, d: T) -> [(T, T); 2] {
    let tau = a + d;
    let delta = a * d - b * c;
    let half = T::of(0.5);
    let disc = tau * tau - T::of(4.0) * delta;
    if disc >= T::zero() {
        let r = disc.sqrt();
        [
            ((tau + r) * half, T::zero()),
            ((tau - r) * half, T::zero()),
        ]
    } else {
        let i = (-disc).sqrt() * half;
        [(tau * half, i), (tau * half, -i)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        // Degree up to 15 must be exact: oracle is the analytic integral.
        let nodes = gauss_legendre_8::<f64>();
        for k in 0..=15usize {
            let num: f64 = nodes.iter().map(|&(x, w)| w * x.powi(k as i32)).sum();
            let exact = 1.0 / (k as f64 + 1.0);
            assert!(
                (num - exact).abs() < 1e-14,
                "degree {k}: {num} vs {exact}"
            );
        }
    }

    #[test]
    fn halton_first_values() {
        assert_eq!(halton::<f64>(1, 2), 0.5);
        assert_eq!(halton::<f64>(2, 2), 0.25);
        assert_eq!(halton::<f64>(3, 2), 0.75);
        assert_eq!(halton::<f64>(1, 3), 1.0 / 3.0);
    }

    #[test]
    fn ball_points_stay_inside() {
        let pts = quasi_random_ball::<f64>(3, 200, 0.7);
        assert_eq!(pts.len(), 200);
        for p in &pts {
            assert!(norm2(p) <= 0.7 + 1e-12);
        }
    }

    #[test]
    fn fornberg_second_derivative_weights() {
        let w = fornberg_weights(2, &[-1.0f64, 0.0, 1.0]);
        assert!((w[0] - 1.0).abs() < 1e-14);
        assert!((w[1] + 2.0).abs() < 1e-14);
        assert!((w[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fornberg_first_derivative_weights() {
        let w = fornberg_weights(1, &[-1.0f64, 1.0]);
        assert!((w[0] + 0.5).abs() < 1e-14);
        assert!((w[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn derivative_table_on_analytic_function() {
        // φ(s) = sin(s) + s^3: derivatives at 0 are 1, 0, 5 (= -cos(0) + 6), 0, 1.
        let table = derivative_table::<f64, ()>(
            |s| Ok(s.sin() + s.powi(3)),
            5,
            0.1,
            3,
            1e-15,
        )
        .unwrap();
        let expect = [1.0, 0.0, 5.0, 0.0, 1.0];
        for (k, e) in expect.iter().enumerate() {
            assert!(
                (table.values[k] - e).abs() < 1e-6,
                "k={} got {} want {}",
                k + 1,
                table.values[k],
                e
            );
        }
    }

    #[test]
    fn complement_frame_is_orthonormal() {
        let u = [0.0f64, 0.0, 1.0];
        let frame = orthonormal_complement(&u);
        assert_eq!(frame, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);

        let v = [0.6f64, 0.8, 0.0];
        let frame = orthonormal_complement(&v);
        assert_eq!(frame.len(), 2);
        for f in &frame {
            assert!(dot(f, &v).abs() < 1e-14);
            assert!((norm2(f) - 1.0).abs() < 1e-14);
        }
        assert!(dot(&frame[0], &frame[1]).abs() < 1e-14);
    }

    #[test]
    fn dense_solve_small_system() {
        let mut a = vec![vec![2.0f64, 1.0], vec![1.0, 3.0]];
        let mut b = vec![5.0f64, 10.0];
        let x = solve_dense(&mut a, &mut b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_of_known_matrix() {
        // diag(3, 2) embedded in a rotation: singular values 3, 2.
        let a = vec![vec![3.0f64, 0.0], vec![0.0, 2.0], vec![0.0, 0.0]];
        let sv = singular_values(&a);
        assert!((sv[0] - 3.0).abs() < 1e-12);
        assert!((sv[1] - 2.0).abs() < 1e-12);

        let rank1 = vec![vec![1.0f64, 2.0], vec![2.0, 4.0]];
        let sv = singular_values(&rank1);
        assert!((sv[0] - 5.0).abs() < 1e-12);
        assert!(sv[1].abs() < 1e-12);
    }

    #[test]
    fn eig2_product_and_sum() {
        let [l1, l2] = eig2(1.0f64, 1.0, -1.0, 1.0);
        // complex pair: sum = tau = 2, |l|^2 = delta = 2
        assert!((l1.0 + l2.0 - 2.0).abs() < 1e-14);
        assert!((l1.0 * l2.0 - l1.1 * l2.1 - 2.0).abs() < 1e-14);
        assert!(l1.1 > 0.0 && l2.1 < 0.0);
    }
}
