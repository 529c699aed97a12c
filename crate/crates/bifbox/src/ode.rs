//! Adaptive embedded Runge-Kutta 5(4) (Dormand-Prince) with PI step-size
//! control and a fourth-order continuous extension for event localization.

use thiserror::Error;

use crate::error::EvalError;
use crate::field::VectorField;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
    #[error("right-hand side failed at the initial point: {0}")]
    InitialEval(EvalError),
}

impl From<OdeError> for crate::error::Error {
    fn from(e: OdeError) -> Self {
        match e {
            OdeError::StepUnderflow { t } | OdeError::MaxSteps { t } => {
                crate::error::Error::StepFailure { t }
            }
            OdeError::InitialEval(err) => crate::error::Error::Eval(err),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OdeOpts<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_steps: usize,
    pub max_step: Option<T>,
    pub initial_step: Option<T>,
}

impl<T: Real> Default for OdeOpts<T> {
    fn default() -> Self {
        OdeOpts {
            rel_tol: T::of(1e-10),
            abs_tol: T::of(1e-12),
            max_steps: 1_000_000,
            max_step: None,
            initial_step: None,
        }
    }
}

// Dormand-Prince 5(4) coefficients.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights are row 7 of A (FSAL); these are b_i - b̂_i.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Continuous-extension coefficients.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its dense-output polynomial.
pub struct AcceptedStep<'a, T> {
    pub t0: T,
    pub h: T,
    pub y0: &'a [T],
    pub y1: &'a [T],
    rcont: &'a [Vec<T>; 5],
}

impl<T: Real> AcceptedStep<'_, T> {
    pub fn t1(&self) -> T {
        self.t0 + self.h
    }

    /// Evaluate the interpolant at `t` (between `t0` and `t1`).
    pub fn eval_into(&self, t: T, out: &mut [T]) {
        let theta = (t - self.t0) / self.h;
        let th1 = T::one() - theta;
        for i in 0..out.len() {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
    }
}

/// Outcome of an integration run.
pub struct OdeOutcome<T> {
    pub t: T,
    pub y: Vec<T>,
    /// True when the handler requested an early stop.
    pub stopped: bool,
    pub steps: usize,
}

/// Integrate from `t0` to `t1` (either direction), invoking `handler` after
/// every accepted step. The handler returns `false` to stop early.
pub fn integrate_steps<T, F, H>(
    field: &F,
    t0: T,
    t1: T,
    y0: &[T],
    opts: &OdeOpts<T>,
    mut handler: H,
) -> Result<OdeOutcome<T>, OdeError>
where
    T: Real,
    F: VectorField<T> + ?Sized,
    H: FnMut(&AcceptedStep<T>) -> bool,
{
    let n = y0.len();
    let span = t1 - t0;
    if span == T::zero() {
        return Ok(OdeOutcome {
            t: t1,
            y: y0.to_vec(),
            stopped: false,
            steps: 0,
        });
    }
    let posneg = span.signum();
    let hmax = opts
        .max_step
        .map(|m| m.abs())
        .unwrap_or_else(|| span.abs());

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: [Vec<T>; 7] = Default::default();
    for stage in &mut k {
        *stage = vec![T::zero(); n];
    }
    let mut k1 = vec![T::zero(); n];
    if field.eval_into(&y, &mut k1).is_err() || k1.iter().any(|v| !v.is_finite()) {
        return Err(OdeError::InitialEval(
            field
                .eval_into(&y, &mut k1)
                .err()
                .unwrap_or(EvalError::NonFinite),
        ));
    }

    let mut h = opts
        .initial_step
        .map(|h| h.abs().min(hmax) * posneg)
        .unwrap_or_else(|| initial_step(field, t, &y, &k1, posneg, hmax, opts));

    let safe = T::of(0.9);
    let beta = T::of(0.04);
    let expo1 = T::of(0.2) - beta * T::of(0.75);
    let facc1 = T::of(5.0); // max shrink per step: h/5
    let facc2 = T::of(0.1); // max growth per step: 10h
    let mut facold = T::of(1e-4);
    let mut last_rejected = false;

    let mut ytmp = vec![T::zero(); n];
    let mut ynew = vec![T::zero(); n];
    let mut rcont: [Vec<T>; 5] = Default::default();
    for r in &mut rcont {
        *r = vec![T::zero(); n];
    }

    let mut steps = 0usize;
    loop {
        // Remaining span below roundoff counts as arrival.
        let remaining = (t1 - t) * posneg;
        if remaining <= T::of(1e-14) * t1.abs().max(T::one()) {
            return Ok(OdeOutcome {
                t: t1,
                y,
                stopped: false,
                steps,
            });
        }
        if steps >= opts.max_steps {
            return Err(OdeError::MaxSteps { t: t.as_f64() });
        }
        steps += 1;

        // Land exactly on t1.
        if (t + h - t1) * posneg > T::zero() {
            h = t1 - t;
        }
        if h.abs() < T::of(1e-14) * t.abs().max(T::one()) {
            return Err(OdeError::StepUnderflow { t: t.as_f64() });
        }

        k[0].copy_from_slice(&k1);
        let mut stage_failed = false;
        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc = acc + T::of(a) * kj[i];
                    }
                }
                ytmp[i] = y[i] + h * acc;
            }
            let _t_stage = t + T::of(C[s]) * h;
            let (head, tail) = k.split_at_mut(s);
            let _ = head;
            if field.eval_into(&ytmp, &mut tail[0]).is_err()
                || tail[0].iter().any(|v| !v.is_finite())
            {
                stage_failed = true;
                break;
            }
        }
        // Stage 7 is evaluated at the 5th-order solution, so ytmp == ynew.
        ynew.copy_from_slice(&ytmp);

        if stage_failed {
            h = h * T::of(0.5);
            last_rejected = true;
            continue;
        }

        // Scaled RMS error from the embedded 4th-order solution.
        let mut err = T::zero();
        for i in 0..n {
            let mut e = T::zero();
            for (j, kj) in k.iter().enumerate() {
                let c = E[j];
                if c != 0.0 {
                    e = e + T::of(c) * kj[i];
                }
            }
            e = e * h;
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(ynew[i].abs());
            let q = e / sc;
            err = err + q * q;
        }
        err = (err / T::of_usize(n)).sqrt();

        let fac11 = err.powf(expo1);
        if err <= T::one() {
            // Accept. Step-size factor uses the previous step's error (PI).
            let mut fac = fac11 / facold.powf(beta);
            fac = (fac / safe).max(facc2).min(facc1);
            facold = err.max(T::of(1e-4));
            // Dense output.
            for i in 0..n {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut dsum = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    if D[j] != 0.0 {
                        dsum = dsum + T::of(D[j]) * kj[i];
                    }
                }
                rcont[4][i] = h * dsum;
            }

            let step = AcceptedStep {
                t0: t,
                h,
                y0: &y,
                y1: &ynew,
                rcont: &rcont,
            };
            let go_on = handler(&step);

            t = t + h;
            y.copy_from_slice(&ynew);
            k1.copy_from_slice(&k[6]); // FSAL

            if !go_on {
                return Ok(OdeOutcome {
                    t,
                    y,
                    stopped: true,
                    steps,
                });
            }
            if (t - t1) * posneg >= T::zero() {
                return Ok(OdeOutcome {
                    t,
                    y,
                    stopped: false,
                    steps,
                });
            }

            let mut hnew = h / fac;
            if hnew.abs() > hmax {
                hnew = hmax * posneg;
            }
            if last_rejected {
                hnew = (hnew.abs().min(h.abs())) * posneg;
            }
            h = hnew;
            last_rejected = false;
        } else {
            // Reject and shrink.
            let hnew = h / (fac11 / safe).min(facc1);
            h = hnew;
            last_rejected = true;
        }
    }
}

fn initial_step<T: Real, F: VectorField<T> + ?Sized>(
    field: &F,
    t: T,
    y: &[T],
    f0: &[T],
    posneg: T,
    hmax: T,
    opts: &OdeOpts<T>,
) -> T {
    let _ = t;
    let n = y.len();
    let sc = |yi: T| opts.abs_tol + opts.rel_tol * yi.abs();
    let mut d0 = T::zero();
    let mut d1 = T::zero();
    for i in 0..n {
        let s = sc(y[i]);
        let a = y[i] / s;
        let b = f0[i] / s;
        d0 = d0 + a * a;
        d1 = d1 + b * b;
    }
    d0 = (d0 / T::of_usize(n)).sqrt();
    d1 = (d1 / T::of_usize(n)).sqrt();
    let mut h0 = if d0 < T::of(1e-5) || d1 < T::of(1e-5) {
        T::of(1e-6)
    } else {
        T::of(0.01) * (d0 / d1)
    };
    h0 = h0.min(hmax);

    // One explicit Euler probe to estimate the second derivative.
    let ytmp: Vec<T> = y
        .iter()
        .zip(f0)
        .map(|(&yi, &fi)| yi + h0 * posneg * fi)
        .collect();
    let mut f1 = vec![T::zero(); n];
    let d2 = if field.eval_into(&ytmp, &mut f1).is_ok() {
        let mut d = T::zero();
        for i in 0..n {
            let s = sc(y[i]);
            let q = (f1[i] - f0[i]) / s;
            d = d + q * q;
        }
        (d / T::of_usize(n)).sqrt() / h0
    } else {
        T::zero()
    };

    let d12 = d1.max(d2);
    let h1 = if d12 <= T::of(1e-15) {
        (h0 * T::of(1e-3)).max(T::of(1e-6))
    } else {
        (T::of(0.01) / d12).powf(T::of(0.2))
    };
    (h0 * T::of(100.0)).min(h1).min(hmax) * posneg
}

/// Endpoint of the flow of `field` from `y0` over the (signed) time `t`.
pub fn flow_endpoint<T, F>(
    field: &F,
    y0: &[T],
    t: T,
    opts: &OdeOpts<T>,
) -> Result<Vec<T>, OdeError>
where
    T: Real,
    F: VectorField<T> + ?Sized,
{
    integrate_steps(field, T::zero(), t, y0, opts, |_| true).map(|o| o.y)
}

/// Bisect the dense interpolant of one step for a sign change of `g`,
/// to absolute time tolerance `t_tol`. Returns the event time and state.
pub fn locate_event<T: Real>(
    step: &AcceptedStep<T>,
    g: impl Fn(T, &[T]) -> T,
    t_tol: T,
) -> Option<(T, Vec<T>)> {
    let n = step.y0.len();
    let mut a = step.t0;
    let mut b = step.t1();
    let ga = g(a, step.y0);
    let gb = g(b, step.y1);
    if ga == T::zero() {
        return Some((a, step.y0.to_vec()));
    }
    if gb == T::zero() {
        return Some((b, step.y1.to_vec()));
    }
    if (ga > T::zero()) == (gb > T::zero()) {
        return None;
    }
    let mut buf = vec![T::zero(); n];
    let mut ga = ga;
    for _ in 0..200 {
        if (b - a).abs() <= t_tol {
            break;
        }
        let mid = (a + b) * T::of(0.5);
        step.eval_into(mid, &mut buf);
        let gm = g(mid, &buf);
        if gm == T::zero() || (gm > T::zero()) != (ga > T::zero()) {
            b = mid;
        } else {
            a = mid;
            ga = gm;
        }
    }
    let t_event = (a + b) * T::of(0.5);
    step.eval_into(t_event, &mut buf);
    Some((t_event, buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;

    #[test]
    fn harmonic_oscillator_period() {
        let field = FnField {
            dim: 2,
            f: |p: &[f64], out: &mut [f64]| {
                out[0] = p[1];
                out[1] = -p[0];
            },
        };
        let opts = OdeOpts::default();
        let y = flow_endpoint(&field, &[1.0, 0.0], 2.0 * std::f64::consts::PI, &opts).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8, "y0 = {}", y[0]);
        assert!(y[1].abs() < 1e-8);
    }

    #[test]
    fn backward_integration() {
        let field = FnField {
            dim: 1,
            f: |_: &[f64], out: &mut [f64]| out[0] = 1.0,
        };
        let y = flow_endpoint(&field, &[0.0], -2.5, &OdeOpts::default()).unwrap();
        assert!((y[0] + 2.5).abs() < 1e-12);
    }

    #[test]
    fn dense_output_matches_analytic_solution() {
        // y' = cos(t) integrated as an autonomous system (t, y).
        let field = FnField {
            dim: 2,
            f: |p: &[f64], out: &mut [f64]| {
                out[0] = 1.0;
                out[1] = p[0].cos();
            },
        };
        let mut worst: f64 = 0.0;
        integrate_steps(
            &field,
            0.0,
            3.0,
            &[0.0, 0.0],
            &OdeOpts::default(),
            |step| {
                let mut buf = [0.0; 2];
                for q in 1..5 {
                    let t = step.t0 + step.h * (q as f64) / 5.0;
                    step.eval_into(t, &mut buf);
                    worst = worst.max((buf[1] - buf[0].sin()).abs());
                }
                true
            },
        )
        .unwrap();
        assert!(worst < 1e-9, "dense output error {worst}");
    }

    #[test]
    fn event_bisection_finds_zero_crossing() {
        let field = FnField {
            dim: 1,
            f: |_: &[f64], out: &mut [f64]| out[0] = 1.0,
        };
        let mut hit = None;
        integrate_steps(&field, 0.0, 2.0, &[-1.0], &OdeOpts::default(), |step| {
            if let Some((t, y)) = locate_event(step, |_, p| p[0], 1e-12) {
                hit = Some((t, y[0]));
                return false;
            }
            true
        })
        .unwrap();
        let (t, x) = hit.expect("crossing found");
        assert!((t - 1.0).abs() < 1e-10);
        assert!(x.abs() < 1e-10);
    }

    #[test]
    fn zero_span_returns_initial_state() {
        let field = FnField {
            dim: 1,
            f: |_: &[f64], out: &mut [f64]| out[0] = 1.0,
        };
        let y = flow_endpoint(&field, &[0.25], 0.0, &OdeOpts::default()).unwrap();
        assert_eq!(y, vec![0.25]);
    }
}
