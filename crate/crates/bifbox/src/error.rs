use thiserror::Error;

/// What went wrong while tokenizing or parsing an expression.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("fractional exponent (only integer powers are allowed)")]
    FractionalExponent,
    #[error("exponent must be a constant integer expression")]
    NonConstantExponent,
    #[error("invalid numeric literal")]
    InvalidNumber,
}

/// Parse error with the byte offset into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at byte offset {offset}")]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

/// Runtime failure while evaluating an expression tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("logarithm of a non-positive value")]
    LogDomain,
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("anchor is not on the equilibrium manifold ({0})")]
    NotOnManifold(String),
    #[error("equilibrium-manifold check failed: {0}")]
    ManifoldCheckFailed(String),
    #[error("not divisible by x: {0}")]
    NotDivisible(String),
    #[error("the desingularized field vanishes at the requested point (|drift| = {norm} < {tol})")]
    VanishingDrift { norm: f64, tol: f64 },
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("integrator step size underflow at t = {t}")]
    StepFailure { t: f64 },
    #[error("trajectory left the integration domain")]
    LeftDomain,
    #[error("not a bifurcation point: {0}")]
    NotABifurcationPoint(String),
    #[error("germ is degenerate: all coefficients up to order {max_order} are below threshold")]
    DegenerateGerm { max_order: usize },
    #[error("coefficient `{name}` vanishes although the genericity verdicts passed")]
    DegenerateCoefficient { name: &'static str },
    #[error("linearization is not hyperbolic (delta = {delta}, tau = {tau})")]
    NonHyperbolic { delta: f64, tau: f64 },
    #[error("no seed convergence: {0}")]
    NoSeedConvergence(String),
    #[error("corrector Jacobian singular at step {step}; the curve has a fold or cusp there")]
    FoldInCurve { step: usize },
    #[error("heteroclinic shot did not land on the manifold ({0})")]
    NoLanding(String),
}

pub type Result<V> = std::result::Result<V, Error>;
