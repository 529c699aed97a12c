//! Singularity order, genericity conditions and explicit low-order
//! coefficients of the reduced family.
//!
//! The scalar germ `φ(s) = h_0(0, .., 0, s)` is fitted by Richardson-
//! extrapolated central differences; its first significant Taylor
//! coefficient determines the order `ℓ` and the sign. Condition checks and
//! the coefficient formulas use the exact jet of the input field, so for
//! polynomial inputs every "equals zero" verdict is exact.

use std::sync::Arc;

use serde::Serialize;

use crate::desingular::{
    divide_by_x, drift_at, verify_manifold, ManifoldReport, ReductionRoute, DEFAULT_DRIFT_TOL,
    DEFAULT_MANIFOLD_TOL,
};
use crate::error::{Error, Result};
use crate::field::FieldModel;
use crate::flowbox::{build_chart, FlowBoxChart};
use crate::jet::{jet_of_field, MultiJet};
use crate::numeric::{derivative_table, eig2, singular_values};
use crate::scalar::Real;

/// Default truncation order for the germ fit.
pub const DEFAULT_GERM_ORDER: usize = 5;
/// Relative significance threshold for germ coefficients.
pub const DEFAULT_COEF_TOL: f64 = 1e-4;
/// Singular values below this fraction of the largest do not count
/// towards the unfolding rank.
pub const RANK_SV_TOL: f64 = 1e-6;

/// Scale factor for "equals zero" verdicts on exact jet values.
pub fn jet_zero_tol<T: Real>(jet: &MultiJet<T>) -> T {
    T::of(1e-9) * (T::one() + jet.max_abs())
}

/// Taylor fit of the scalar germ along the flow direction.
#[derive(Debug, Clone, Serialize)]
pub struct GermFit<T> {
    /// Taylor coefficients `c_1 ..= c_N` of `φ` at 0 (`φ(0) = 0` on the manifold).
    pub coefficients: Vec<T>,
    /// Error estimates per coefficient (extrapolation spread + amplified noise).
    pub uncertainties: Vec<T>,
    /// Singularity order `ℓ`: first significant coefficient is `c_{ℓ+1}`.
    /// `None` when all coefficients up to `N` are insignificant.
    pub order: Option<usize>,
    pub sign: Option<i8>,
    /// The leading coefficient `c_{ℓ+1}`.
    pub leading: Option<T>,
    pub scale: T,
}

fn fd_base_step<T: Real>(radius: T, k_max: usize) -> T {
    let reach = T::of_usize((k_max + 1) / 2) + T::of(0.5);
    (T::of(0.2) * radius).min(radius / reach)
}

fn phi_noise<T: Real>(chart: &FlowBoxChart<T>) -> T {
    chart.ode_opts().abs_tol + chart.ode_opts().rel_tol * chart.chart_radius()
}

/// Fit `c_1 ..= c_N` of the germ at the section origin and locate the first
/// significant coefficient.
pub fn germ_fit<T: Real>(
    chart: &FlowBoxChart<T>,
    max_order: usize,
    coef_tol: T,
) -> Result<GermFit<T>> {
    if max_order == 0 {
        return Err(Error::InvalidInput("germ order must be at least 1".into()));
    }
    let m = chart.m();
    let h = fd_base_step(chart.chart_radius(), max_order);
    let mut z = vec![T::zero(); m + 1];
    let table = derivative_table(
        |s| {
            z[m] = s;
            chart.reduced_rhs(&z)
        },
        max_order,
        h,
        3,
        phi_noise(chart),
    )?;

    // Derivatives to Taylor coefficients.
    let mut coefficients = Vec::with_capacity(max_order);
    let mut uncertainties = Vec::with_capacity(max_order);
    let mut fac = T::one();
    for k in 1..=max_order {
        fac = fac * T::of_usize(k);
        coefficients.push(table.values[k - 1] / fac);
        uncertainties.push(table.uncertainties[k - 1] / fac);
    }

    let scale = coefficients
        .iter()
        .fold(T::zero(), |acc, c| acc.max(c.abs()));
    let ten = T::of(10.0);
    let mut order = None;
    let mut sign = None;
    let mut leading = None;
    for (i, (&c, &u)) in coefficients.iter().zip(&uncertainties).enumerate() {
        let threshold = (coef_tol * scale).max(ten * u);
        if c.abs() > threshold {
            order = Some(i); // first significant is c_{i+1}, so ℓ = i
            sign = Some(if c > T::zero() { 1 } else { -1 });
            leading = Some(c);
            break;
        }
    }

    Ok(GermFit {
        coefficients,
        uncertainties,
        order,
        sign,
        leading,
        scale,
    })
}

/// Order and sign of the singularity, or `DegenerateGerm` when no
/// coefficient up to `max_order` is significant.
pub fn singularity_order<T: Real>(
    chart: &FlowBoxChart<T>,
    max_order: usize,
) -> Result<(usize, i8)> {
    let fit = germ_fit(chart, max_order, T::of(DEFAULT_COEF_TOL))?;
    match (fit.order, fit.sign) {
        (Some(l), Some(s)) => Ok((l, s)),
        _ => Err(Error::DegenerateGerm { max_order }),
    }
}

/// Germ coefficients `c_0 ..= c_k_max` at an off-origin section point `w`.
fn germ_at<T: Real>(chart: &FlowBoxChart<T>, w: &[T], k_max: usize) -> Result<Vec<T>> {
    let m = chart.m();
    let mut z = vec![T::zero(); m + 1];
    z[..m].copy_from_slice(w);
    let c0 = chart.reduced_rhs(&z)?;
    let mut out = vec![c0];
    if k_max == 0 {
        return Ok(out);
    }
    let wnorm = crate::scalar::norm2(w);
    let avail = (chart.chart_radius() * chart.chart_radius() - wnorm * wnorm)
        .max(T::zero())
        .sqrt();
    let h = fd_base_step(avail, k_max);
    let mut zz = z.clone();
    let table = derivative_table(
        |s| {
            zz[m] = s;
            chart.reduced_rhs(&zz)
        },
        k_max,
        h,
        3,
        phi_noise(chart),
    )?;
    let mut fac = T::one();
    for k in 1..=k_max {
        fac = fac * T::of_usize(k);
        out.push(table.values[k - 1] / fac);
    }
    Ok(out)
}

/// Rank of the map from section coordinates to the unfolding coefficients
/// `(ζ_0 .. ζ_{ℓ-1})`, by central differences and small-matrix SVD.
pub fn unfolding_rank<T: Real>(chart: &FlowBoxChart<T>, ell: usize) -> Result<usize> {
    if ell == 0 {
        return Err(Error::InvalidInput(
            "unfolding rank needs a singularity of order at least 1".into(),
        ));
    }
    let m = chart.m();
    let hw = T::of(0.05) * chart.chart_radius();
    // jacobian[k][j] = dζ_k / dw_j
    let mut jacobian = vec![vec![T::zero(); m]; ell];
    for j in 0..m {
        let mut wp = vec![T::zero(); m];
        let mut wm = vec![T::zero(); m];
        wp[j] = hw;
        wm[j] = -hw;
        let zp = germ_at(chart, &wp, ell - 1)?;
        let zm = germ_at(chart, &wm, ell - 1)?;
        for k in 0..ell {
            jacobian[k][j] = (zp[k] - zm[k]) / (T::of(2.0) * hw);
        }
    }
    let sv = singular_values(&jacobian);
    let largest = sv.first().copied().unwrap_or_else(T::zero);
    let cut = T::of(RANK_SV_TOL) * largest;
    Ok(sv.iter().filter(|&&s| s > cut).count())
}

/// One named genericity verdict with the measured value behind it.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionVerdict<T> {
    pub name: String,
    pub ok: bool,
    pub value: T,
}

impl<T: Real> ConditionVerdict<T> {
    fn new(name: &str, ok: bool, value: T) -> Self {
        ConditionVerdict {
            name: name.to_string(),
            ok,
            value,
        }
    }
}

/// Genericity data for a one-dimensional manifold of equilibria.
#[derive(Debug, Clone, Serialize)]
pub struct M1Genericity<T> {
    /// Eigenvalue crossing speed `∂_y ∂_x f`.
    pub crossing: T,
    /// Transverse drift `∂_x g`.
    pub drift: T,
    pub verdicts: Vec<ConditionVerdict<T>>,
    pub ok: bool,
}

/// Crossing and drift conditions at an `m = 1` anchor. The anchor must be a
/// transcritical point (`∂_x f = 0`).
pub fn genericity_m1<T: Real>(jet: &MultiJet<T>) -> Result<M1Genericity<T>> {
    let tol = jet_zero_tol(jet);
    let dxf = jet.partial(&[1, 0], 0);
    if dxf.abs() > tol {
        return Err(Error::NotABifurcationPoint(format!(
            "transverse eigenvalue {dxf} does not vanish at the anchor"
        )));
    }
    let crossing = jet.partial(&[1, 1], 0);
    let drift = jet.partial(&[1, 0], 1);
    let verdicts = vec![
        ConditionVerdict::new("eigenvalue_crossing", crossing.abs() > tol, crossing),
        ConditionVerdict::new("drift", drift.abs() > tol, drift),
    ];
    let ok = verdicts.iter().all(|v| v.ok);
    Ok(M1Genericity {
        crossing,
        drift,
        verdicts,
        ok,
    })
}

/// Genericity data for a two-dimensional manifold of equilibria, stated in
/// the rotated frame where the eigenvalue gradient points along `y1`.
#[derive(Debug, Clone, Serialize)]
pub struct M2Genericity<T> {
    /// Gradient of the transverse eigenvalue in the original y-frame.
    pub gradient: [T; 2],
    /// Rotation angle applied to the y-plane.
    pub rotation_angle: T,
    /// Whether `y2` was reflected to make the tangential drift positive.
    pub reflected_y2: bool,
    /// `b = ∂_{y1} ∂_x f` in the rotated frame (equals `|gradient|`).
    pub eigenvalue_slope: T,
    /// `∂_x g_1` in the rotated frame (condition (iv) requires zero).
    pub transverse_drift: T,
    /// `∂_x g_2` in the rotated, reflected frame (tangential drift).
    pub tangential_drift: T,
    /// `∂_{y2} ∂_x g_1` in the rotated, reflected frame.
    pub transverse_drift_slope: T,
    /// `∂_{y2}^2 ∂_x f` in the rotated frame.
    pub eigenvalue_curvature: T,
    /// Condition (v) combination
    /// `b ∂_{y2}∂_x g_1 + ∂_{y2}^2 ∂_x f ∂_x g_2`.
    pub transversality: T,
    pub verdicts: Vec<ConditionVerdict<T>>,
    pub ok: bool,
}

/// Conditions (ii)-(vi) of the drift singularity at an `m = 2` anchor.
pub fn genericity_m2<T: Real>(jet: &MultiJet<T>) -> Result<M2Genericity<T>> {
    let tol = jet_zero_tol(jet);
    let dxf = jet.partial(&[1, 0, 0], 0);
    if dxf.abs() > tol {
        return Err(Error::NotABifurcationPoint(format!(
            "transverse eigenvalue {dxf} does not vanish at the anchor"
        )));
    }

    let g1 = jet.partial(&[1, 1, 0], 0);
    let g2 = jet.partial(&[1, 0, 1], 0);
    let gnorm = (g1 * g1 + g2 * g2).sqrt();
    let crossing_ok = gnorm > tol;
    // Unit gradient direction; fall back to the y1-axis when degenerate so
    // the remaining values are still reportable.
    let (c, s) = if crossing_ok {
        (g1 / gnorm, g2 / gnorm)
    } else {
        (T::one(), T::zero())
    };
    let rotation_angle = s.as_f64().atan2(c.as_f64());

    let dxg1 = jet.partial(&[1, 0, 0], 1);
    let dxg2 = jet.partial(&[1, 0, 0], 2);
    let dy1_dxg1 = jet.partial(&[1, 1, 0], 1);
    let dy2_dxg1 = jet.partial(&[1, 0, 1], 1);
    let dy1_dxg2 = jet.partial(&[1, 1, 0], 2);
    let dy2_dxg2 = jet.partial(&[1, 0, 1], 2);
    let dy1y1_dxf = jet.partial(&[1, 2, 0], 0);
    let dy1y2_dxf = jet.partial(&[1, 1, 1], 0);
    let dy2y2_dxf = jet.partial(&[1, 0, 2], 0);

    // Rotated quantities: y = R y', columns of R are the gradient direction
    // and its left-normal.
    let transverse_drift = c * dxg1 + s * dxg2;
    let mut tangential_drift = -s * dxg1 + c * dxg2;
    let mut transverse_drift_slope = -s * c * dy1_dxg1 - s * s * dy1_dxg2
        + c * c * dy2_dxg1
        + c * s * dy2_dxg2;
    let eigenvalue_curvature =
        s * s * dy1y1_dxf - T::of(2.0) * s * c * dy1y2_dxf + c * c * dy2y2_dxf;

    // Reflect y2 to make the tangential drift positive; this flips the
    // y2-odd quantities and leaves the condition (v) product of interest
    // with the same sign composition.
    let reflected_y2 = tangential_drift < T::zero();
    if reflected_y2 {
        tangential_drift = -tangential_drift;
        transverse_drift_slope = -transverse_drift_slope;
    }

    let transversality = gnorm * transverse_drift_slope + eigenvalue_curvature * tangential_drift;

    let verdicts = vec![
        ConditionVerdict::new("ii_transcritical_anchor", true, dxf),
        ConditionVerdict::new("iii_eigenvalue_crossing", crossing_ok, gnorm),
        ConditionVerdict::new(
            "iv_transverse_drift_vanishes",
            transverse_drift.abs() <= tol,
            transverse_drift,
        ),
        ConditionVerdict::new(
            "v_drift_crossing_speed",
            transversality.abs() > tol,
            transversality,
        ),
        ConditionVerdict::new(
            "vi_tangential_drift",
            tangential_drift.abs() > tol,
            tangential_drift,
        ),
    ];
    let ok = verdicts.iter().all(|v| v.ok);

    Ok(M2Genericity {
        gradient: [g1, g2],
        rotation_angle: T::of(rotation_angle),
        reflected_y2,
        eigenvalue_slope: gnorm,
        transverse_drift,
        tangential_drift,
        transverse_drift_slope,
        eigenvalue_curvature,
        transversality,
        verdicts,
        ok,
    })
}

/// The two explicit coefficients of the reduced cubic at a drift singularity.
#[derive(Debug, Clone, Serialize)]
pub struct CuspCoefficients<T> {
    /// `a = (∂_{y1}∂_x f ∂_{y2}∂_x g_1 + ∂_{y2}^2 ∂_x f ∂_x g_2) ∂_x g_2`.
    pub a: T,
    /// `b = ∂_{y1}∂_x f`.
    pub b: T,
}

/// Evaluate the cusp coefficients from the exact jet; requires the
/// genericity conditions to hold.
pub fn cusp_coefficients<T: Real>(jet: &MultiJet<T>) -> Result<CuspCoefficients<T>> {
    let gen2 = genericity_m2(jet)?;
    if !gen2.ok {
        let failed: Vec<_> = gen2
            .verdicts
            .iter()
            .filter(|v| !v.ok)
            .map(|v| v.name.clone())
            .collect();
        return Err(Error::NotABifurcationPoint(format!(
            "not a drift singularity: conditions failed: {}",
            failed.join(", ")
        )));
    }
    let a = gen2.transversality * gen2.tangential_drift;
    let b = gen2.eigenvalue_slope;
    let tol = jet_zero_tol(jet);
    if a.abs() <= tol {
        return Err(Error::DegenerateCoefficient { name: "a" });
    }
    if b.abs() <= tol {
        return Err(Error::DegenerateCoefficient { name: "b" });
    }
    Ok(CuspCoefficients { a, b })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumType {
    Saddle,
    Focus,
    Node,
}

/// Classification data for the parameter-dependent drift singularity.
#[derive(Debug, Clone, Serialize)]
pub struct ParameterCaseReport<T> {
    /// Coefficients of the reduced expansion in the normalized frame
    /// (`b > 0`, `sigma > 0` after the recorded reflections).
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub sigma: T,
    pub delta: T,
    pub tau: T,
    pub reflected_y: bool,
    pub reflected_lambda: bool,
    /// Coefficients in the user's original coordinates.
    pub raw: [T; 5],
    pub eq_type: EquilibriumType,
    /// Eigenvalues of [[a, b], [c, d]] as (re, im).
    pub eigenvalues: [(T, T); 2],
    pub verdicts: Vec<ConditionVerdict<T>>,
    pub ok: bool,
}

impl<T: Real> ParameterCaseReport<T> {
    /// Normalized unfolding parameter for a given `lambda`.
    pub fn lambda_tilde(&self, lambda: T) -> T {
        self.b * self.sigma * lambda
    }

    /// Bifurcating equilibrium in the transformed frame: `(λ~/δ, 0)`.
    pub fn predicted_equilibrium_transformed(&self, lambda: T) -> [T; 2] {
        [self.lambda_tilde(lambda) / self.delta, T::zero()]
    }

    /// The same equilibrium in the original `(x, y)` coordinates, from the
    /// leading-order expansion: solves `a x + b y = 0`,
    /// `c x + d y + sigma lambda = 0`.
    pub fn predicted_equilibrium(&self, lambda: T) -> [T; 2] {
        let [a, b, c, d, sigma] = self.raw;
        let delta = a * d - b * c;
        let x = sigma * lambda * b / delta;
        let y = -a * x / b;
        [x, y]
    }

    /// Transform a phase point into the normalized frame `(x~, y~)`.
    pub fn to_transformed(&self, x: T, y: T) -> [T; 2] {
        let [a, b, ..] = self.raw;
        let y_t = a * x + b * y;
        // the y-reflection flips the sign of b but x~ = x is unaffected
        let _ = self.reflected_y;
        [x, if self.reflected_y { -y_t } else { y_t }]
    }
}

/// Classify a parameter-dependent transcritical point with drift
/// singularity from the exact jet of the field at its anchor.
pub fn parameter_case_classify<T: Real>(field: &FieldModel<T>) -> Result<ParameterCaseReport<T>> {
    if !field.has_lambda() || field.m() != 1 {
        return Err(Error::InvalidInput(
            "parameter-dependent classification needs a scalar y and a lambda parameter".into(),
        ));
    }
    let jet = jet_of_field(field, field.anchor(), 3)?;
    let tol = jet_zero_tol(&jet);

    // Transcritical for all parameter values: ∂_x f and ∂_λ ∂_x f vanish.
    let dxf = jet.partial(&[1, 0, 0], 0);
    let dldxf = jet.partial(&[1, 0, 1], 0);
    if dxf.abs() > tol || dldxf.abs() > tol {
        return Err(Error::NotABifurcationPoint(format!(
            "anchor is not a transcritical point for all parameter values \
             (d_x f = {dxf}, d_lambda d_x f = {dldxf})"
        )));
    }

    // Reduced-field coefficients: the jet of F~ is the x-shift of the jet of F.
    let a = jet.coefficient(&[2, 0, 0], 0);
    let mut b = jet.coefficient(&[1, 1, 0], 0);
    let mut c = jet.coefficient(&[2, 0, 0], 1);
    let d = jet.coefficient(&[1, 1, 0], 1);
    let mut sigma = jet.coefficient(&[1, 0, 1], 1);
    let raw = [a, b, c, d, sigma];

    let reflected_y = b < T::zero();
    if reflected_y {
        b = -b;
        c = -c;
        sigma = -sigma;
    }
    let reflected_lambda = sigma < T::zero();
    if reflected_lambda {
        sigma = -sigma;
    }

    let dxg = jet.partial(&[1, 0, 0], 1);
    let delta = a * d - b * c;
    let tau = a + d;

    let verdicts = vec![
        ConditionVerdict::new("ii_transcritical_for_all_lambda", true, dxf.abs().max(dldxf.abs())),
        ConditionVerdict::new("iii_eigenvalue_crossing", b > tol, b),
        ConditionVerdict::new("iv_drift_vanishes", dxg.abs() <= tol, dxg),
        ConditionVerdict::new("v_drift_speed_in_lambda", sigma > tol, sigma),
        ConditionVerdict::new(
            "vi_hyperbolic",
            delta.abs() > tol && (delta < T::zero() || tau.abs() > tol),
            delta,
        ),
    ];
    let ok = verdicts.iter().all(|v| v.ok);
    if !verdicts[4].ok {
        return Err(Error::NonHyperbolic {
            delta: delta.as_f64(),
            tau: tau.as_f64(),
        });
    }

    let eq_type = if delta < T::zero() {
        EquilibriumType::Saddle
    } else if tau * tau < T::of(4.0) * delta {
        EquilibriumType::Focus
    } else {
        EquilibriumType::Node
    };
    let eigenvalues = eig2(a, b, c, d);

    Ok(ParameterCaseReport {
        a,
        b,
        c,
        d,
        sigma,
        delta,
        tau,
        reflected_y,
        reflected_lambda,
        raw,
        eq_type,
        eigenvalues,
        verdicts,
        ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Parameterless,
    ParameterDependent,
}

/// Options for the end-to-end classification pipeline.
#[derive(Debug, Clone)]
pub struct ClassifyOpts<T> {
    pub manifold_samples: usize,
    pub manifold_tol: T,
    pub drift_tol: T,
    pub germ_order: usize,
    pub coef_tol: T,
    /// Chart radius; default half the domain radius.
    pub chart_radius: Option<T>,
}

impl<T: Real> Default for ClassifyOpts<T> {
    fn default() -> Self {
        ClassifyOpts {
            manifold_samples: 128,
            manifold_tol: T::of(DEFAULT_MANIFOLD_TOL),
            drift_tol: T::of(DEFAULT_DRIFT_TOL),
            germ_order: DEFAULT_GERM_ORDER,
            coef_tol: T::of(DEFAULT_COEF_TOL),
            chart_radius: None,
        }
    }
}

/// Everything the pipeline finds out about one anchor.
#[derive(Debug, Clone, Serialize)]
pub struct ClassificationReport<T> {
    pub mode: Mode,
    pub manifold: ManifoldReport<T>,
    pub reduction_route: Option<ReductionRoute>,
    /// Singularity order ℓ of the reduced germ (`None`: degenerate up to N).
    pub order: Option<usize>,
    pub sign: Option<i8>,
    pub germ_coefficients: Vec<T>,
    pub germ_uncertainties: Vec<T>,
    pub unfolding_rank: Option<usize>,
    pub conditions: Vec<ConditionVerdict<T>>,
    pub m1: Option<M1Genericity<T>>,
    pub m2: Option<M2Genericity<T>>,
    pub cusp: Option<CuspCoefficients<T>>,
    /// Fitted cubic coefficient of the germ, for the sign cross-check.
    pub fitted_leading: Option<T>,
    pub sign_consistent_with_formula: Option<bool>,
    pub parameter_case: Option<ParameterCaseReport<T>>,
    pub generic: bool,
    pub diagnostics: Vec<String>,
}

/// Run the full pipeline: verify, desingularize, chart, order/sign,
/// genericity, coefficients.
pub fn classify_field<T: Real>(
    field: &FieldModel<T>,
    opts: &ClassifyOpts<T>,
) -> Result<ClassificationReport<T>> {
    let manifold = verify_manifold(field, opts.manifold_samples, opts.manifold_tol)?;
    if !manifold.pass {
        return Err(Error::ManifoldCheckFailed(format!(
            "max residual {} at {:?} exceeds {}",
            manifold.max_residual, manifold.worst_point, manifold.tol
        )));
    }

    if field.has_lambda() {
        let parameter_case = parameter_case_classify(field)?;
        let generic = parameter_case.ok;
        return Ok(ClassificationReport {
            mode: Mode::ParameterDependent,
            manifold,
            reduction_route: None,
            order: None,
            sign: None,
            germ_coefficients: Vec::new(),
            germ_uncertainties: Vec::new(),
            unfolding_rank: None,
            conditions: parameter_case.verdicts.clone(),
            m1: None,
            m2: None,
            cusp: None,
            fitted_leading: None,
            sign_consistent_with_formula: None,
            parameter_case: Some(parameter_case),
            generic,
            diagnostics: vec![
                "parameter-dependent mode: the drift vanishes at the singular parameter value, \
                 so no flow-box chart is built"
                    .to_string(),
            ],
        });
    }

    let mut diagnostics = Vec::new();
    let reduced = Arc::new(divide_by_x(field));
    let route = reduced.route();
    if route == ReductionRoute::Quadrature {
        diagnostics.push(
            "division by x fell back to quadrature; zero verdicts are no longer exact".to_string(),
        );
    }
    let drift = drift_at(&reduced, field.anchor(), opts.drift_tol)?;
    if drift.vanishing {
        return Err(Error::VanishingDrift {
            norm: drift.norm.as_f64(),
            tol: opts.drift_tol.as_f64(),
        });
    }

    let chart_radius = opts
        .chart_radius
        .unwrap_or_else(|| T::of(0.5) * field.domain_radius());
    let chart = build_chart(
        reduced,
        field.anchor(),
        chart_radius,
        opts.drift_tol,
    )?;

    let fit = germ_fit(&chart, opts.germ_order, opts.coef_tol)?;
    let m = field.m();
    let order = fit.order;
    if order.is_none() {
        diagnostics.push(format!(
            "degenerate germ: no significant coefficient up to order {}",
            opts.germ_order
        ));
    }
    if let Some(l) = order {
        if l > m {
            diagnostics.push(format!(
                "non-generic: singularity order {l} exceeds the manifold dimension {m}"
            ));
        }
    }

    let rank = match order {
        Some(l) if l >= 1 => Some(unfolding_rank(&chart, l)?),
        _ => None,
    };

    let jet = jet_of_field(field, field.anchor(), 3)?;
    let tol = jet_zero_tol(&jet);
    let mut ex = vec![0usize; jet.n_vars()];
    ex[0] = 1;
    let anchor_is_transcritical = jet.partial(&ex, 0).abs() <= tol;

    let mut conditions = vec![ConditionVerdict::new(
        "i_equilibrium_manifold",
        manifold.pass,
        manifold.max_residual,
    )];
    let mut m1 = None;
    let mut m2 = None;
    let mut cusp = None;
    let mut sign_consistent = None;

    if anchor_is_transcritical {
        match m {
            1 => {
                let g = genericity_m1(&jet)?;
                conditions.extend(g.verdicts.clone());
                m1 = Some(g);
            }
            2 => {
                let g = genericity_m2(&jet)?;
                conditions.extend(g.verdicts.clone());
                if g.ok {
                    let cc = cusp_coefficients(&jet)?;
                    if let Some(s) = fit.sign {
                        let formula_sign: i8 = if cc.a > T::zero() { 1 } else { -1 };
                        sign_consistent = Some(formula_sign == s);
                    }
                    cusp = Some(cc);
                }
                m2 = Some(g);
            }
            _ => diagnostics.push(format!(
                "genericity condition library covers m <= 2; for m = {m} only order, sign \
                 and unfolding rank are checked"
            )),
        }
    } else {
        diagnostics.push("anchor is normally hyperbolic (transverse eigenvalue nonzero)".into());
    }

    let generic = match order {
        None => false,
        Some(0) => true,
        Some(l) if l > m => false,
        Some(l) => {
            let rank_full = rank == Some(l);
            let conditions_ok = match (m, l) {
                (1, 1) => m1.as_ref().map(|g| g.ok).unwrap_or(false),
                (2, 1) => m2
                    .as_ref()
                    .map(|g| {
                        g.eigenvalue_slope > tol && g.transverse_drift.abs() > tol
                    })
                    .unwrap_or(false),
                (2, 2) => m2.as_ref().map(|g| g.ok).unwrap_or(false),
                _ => true,
            };
            rank_full && conditions_ok
        }
    };

    Ok(ClassificationReport {
        mode: Mode::Parameterless,
        manifold,
        reduction_route: Some(route),
        order,
        sign: fit.sign,
        germ_coefficients: fit.coefficients,
        germ_uncertainties: fit.uncertainties,
        unfolding_rank: rank,
        conditions,
        m1,
        m2,
        cusp,
        fitted_leading: fit.leading,
        sign_consistent_with_formula: sign_consistent,
        parameter_case: None,
        generic,
        diagnostics,
    })
}
