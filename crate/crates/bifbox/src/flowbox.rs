//! Flow-box chart for the desingularized field.
//!
//! The chart maps `z = (z_0 .. z_m)` to phase space by flowing the reduced
//! field from a transverse section: points `(z_0 .. z_{m-1})` parametrize the
//! hyperplane through the anchor orthogonal to the drift, and `z_m` is the
//! flow time. In these coordinates the original field becomes the
//! one-dimensional `m`-parameter family `dz_m/dt = h_0(z)`, with
//! `(z_0 .. z_{m-1})` as first integrals.

use std::sync::Arc;

use crate::desingular::ReducedField;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::numeric::orthonormal_complement;
use crate::ode::{flow_endpoint, OdeOpts};
use crate::scalar::{dot, norm2, Real};

#[derive(Debug, Clone)]
pub struct FlowBoxChart<T> {
    reduced: Arc<ReducedField<T>>,
    anchor: Vec<T>,
    drift: Vec<T>,
    frame: Vec<Vec<T>>,
    chart_radius: T,
    ode: OdeOpts<T>,
}

/// Chart with the standard section frame: Gram-Schmidt of the standard basis
/// (minus the axis most aligned with the drift) against the unit drift.
pub fn build_chart<T: Real>(
    reduced: Arc<ReducedField<T>>,
    anchor: &[T],
    chart_radius: T,
    tol_drift: T,
) -> Result<FlowBoxChart<T>> {
    let v = reduced.eval_vec(anchor).map_err(Error::Eval)?;
    let n = norm2(&v);
    if n < tol_drift {
        return Err(Error::VanishingDrift {
            norm: n.as_f64(),
            tol: tol_drift.as_f64(),
        });
    }
    let drift: Vec<T> = v.iter().map(|&c| c / n).collect();
    let frame = orthonormal_complement(&drift);
    FlowBoxChart::with_frame(reduced, anchor.to_vec(), drift, frame, chart_radius)
}

/// Chart with a caller-supplied section frame (must be orthonormal and
/// orthogonal to the drift). Used to probe chart independence.
pub fn build_chart_with_frame<T: Real>(
    reduced: Arc<ReducedField<T>>,
    anchor: &[T],
    chart_radius: T,
    tol_drift: T,
    frame: Vec<Vec<T>>,
) -> Result<FlowBoxChart<T>> {
    let v = reduced.eval_vec(anchor).map_err(Error::Eval)?;
    let n = norm2(&v);
    if n < tol_drift {
        return Err(Error::VanishingDrift {
            norm: n.as_f64(),
            tol: tol_drift.as_f64(),
        });
    }
    let drift: Vec<T> = v.iter().map(|&c| c / n).collect();
    FlowBoxChart::with_frame(reduced, anchor.to_vec(), drift, frame, chart_radius)
}

impl<T: Real> FlowBoxChart<T> {
    fn with_frame(
        reduced: Arc<ReducedField<T>>,
        anchor: Vec<T>,
        drift: Vec<T>,
        frame: Vec<Vec<T>>,
        chart_radius: T,
    ) -> Result<Self> {
        let dim = anchor.len();
        if frame.len() + 1 != dim {
            return Err(Error::InvalidInput(format!(
                "section frame must have {} vectors",
                dim - 1
            )));
        }
        let ortho_tol = T::of(1e-12);
        for (i, u) in frame.iter().enumerate() {
            if (norm2(u) - T::one()).abs() > ortho_tol {
                return Err(Error::InvalidInput(format!("frame vector {i} not unit")));
            }
            if dot(u, &drift).abs() > ortho_tol {
                return Err(Error::InvalidInput(format!(
                    "frame vector {i} not orthogonal to the drift"
                )));
            }
            for (j, w) in frame.iter().enumerate().take(i) {
                if dot(u, w).abs() > ortho_tol {
                    return Err(Error::InvalidInput(format!(
                        "frame vectors {j} and {i} not orthogonal"
                    )));
                }
            }
        }
        if !(chart_radius > T::zero()) {
            return Err(Error::InvalidInput("chart radius must be positive".into()));
        }
        Ok(FlowBoxChart {
            reduced,
            anchor,
            drift,
            frame,
            chart_radius,
            ode: OdeOpts::default(),
        })
    }

    /// Number of section coordinates (`m`).
    pub fn m(&self) -> usize {
        self.frame.len()
    }

    pub fn anchor(&self) -> &[T] {
        &self.anchor
    }

    pub fn drift(&self) -> &[T] {
        &self.drift
    }

    pub fn frame(&self) -> &[Vec<T>] {
        &self.frame
    }

    pub fn chart_radius(&self) -> T {
        self.chart_radius
    }

    pub fn reduced(&self) -> &Arc<ReducedField<T>> {
        &self.reduced
    }

    pub fn ode_opts(&self) -> &OdeOpts<T> {
        &self.ode
    }

    /// Section point `Σ(w) = anchor + Σ w_i frame_i`.
    pub fn section_point(&self, w: &[T]) -> Vec<T> {
        let mut p = self.anchor.clone();
        for (wi, u) in w.iter().zip(&self.frame) {
            for (pc, uc) in p.iter_mut().zip(u) {
                *pc = *pc + *wi * *uc;
            }
        }
        p
    }

    fn check_radius(&self, r: T) -> Result<()> {
        if r > self.chart_radius {
            return Err(Error::LeftDomain);
        }
        Ok(())
    }

    /// `h(z) = Φ~_{z_m}(Σ(z_0 .. z_{m-1}))`: flow the reduced field from the
    /// section point over time `z_m` (negative times allowed).
    pub fn chart_to_phase(&self, z: &[T]) -> Result<Vec<T>> {
        let m = self.m();
        debug_assert_eq!(z.len(), m + 1);
        self.check_radius(norm2(z))?;
        let p0 = self.section_point(&z[..m]);
        Ok(flow_endpoint(self.reduced.as_ref(), &p0, z[m], &self.ode)?)
    }

    /// Invert the chart by backward-time shooting: Newton on the section
    /// condition `<Φ~_{-t}(p) - anchor, drift> = 0`.
    pub fn phase_to_chart(&self, p: &[T]) -> Result<Vec<T>> {
        let rel: Vec<T> = p
            .iter()
            .zip(&self.anchor)
            .map(|(&a, &b)| a - b)
            .collect();
        self.check_radius(norm2(&rel))?;

        // The drift has unit speed to first order, so the signed distance
        // along it is a good initial flow time.
        let mut t = dot(&rel, &self.drift);
        let tol = T::of(1e-12) * T::one().max(norm2(p));
        let mut q = p.to_vec();
        let mut converged = false;
        for _ in 0..50 {
            q = flow_endpoint(self.reduced.as_ref(), p, -t, &self.ode)?;
            let s = dot(&q, &self.drift) - dot(&self.anchor, &self.drift);
            if s.abs() <= tol {
                converged = true;
                break;
            }
            let v = self.reduced.eval_vec(&q).map_err(Error::Eval)?;
            let ds = -dot(&v, &self.drift);
            if ds == T::zero() {
                return Err(Error::NoConvergence(
                    "section condition has zero derivative".into(),
                ));
            }
            let dt = s / ds;
            t = t - dt;
            if t.abs() > T::of(4.0) * self.chart_radius {
                return Err(Error::LeftDomain);
            }
        }
        if !converged {
            return Err(Error::NoConvergence(
                "section shooting did not converge in 50 iterations".into(),
            ));
        }

        let mut z = Vec::with_capacity(self.m() + 1);
        for u in &self.frame {
            let mut c = T::zero();
            for ((&qc, &ac), &uc) in q.iter().zip(&self.anchor).zip(u) {
                c = c + (qc - ac) * uc;
            }
            z.push(c);
        }
        z.push(t);
        Ok(z)
    }

    /// Scalar right-hand side of the reduced family: the x-coordinate of
    /// `h(z)`.
    pub fn reduced_rhs(&self, z: &[T]) -> Result<T> {
        Ok(self.chart_to_phase(z)?[0])
    }

    /// The `m` section coordinates of `p`: first integrals of the original
    /// field inside the chart.
    pub fn conserved_coordinates(&self, p: &[T]) -> Result<Vec<T>> {
        let mut z = self.phase_to_chart(p)?;
        z.pop();
        Ok(z)
    }
}
