use thiserror::Error;

/// Errors raised by the reduced two-body toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("separation q = {q} lies outside the admissible domain")]
    Domain { q: f64 },
    #[error("state has a non-finite component")]
    NonFinite,
    #[error("coupling constant must be positive, got {0}")]
    NonPositiveCoupling(f64),
    #[error("potential is not attractive at q = {q} (U'(q) = {du})")]
    AttractivityViolation { q: f64, du: f64 },
    #[error("masses must be positive and finite (mu1 = {mu1}, mu2 = {mu2})")]
    InvalidMasses { mu1: f64, mu2: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no relative equilibrium: {0}")]
    NoSolution(String),
    #[error("right-angled family requires equal masses, got mass ratio {0}")]
    UnequalMasses(f64),
    #[error("trajectory left the safe region at t = {t} (q = {q})")]
    SingularityApproach { t: f64, q: f64 },
    #[error("step size underflow at t = {t} (h = {h})")]
    StepFailure { t: f64, h: f64 },
    #[error("point outside the chart domain: {0}")]
    ChartDomain(String),
    #[error("Euler-angle chart breaks down at t = {t}")]
    ChartBreakdown { t: f64 },
    #[error("linear part is not elliptic")]
    NotElliptic,
    #[error("linear part is resonant (|Omega2 - Omega1| = {gap})")]
    ResonantLinearPart { gap: f64 },
    #[error("small denominator k1*alpha1 + k2*alpha2 for k = ({k1}, {k2})")]
    SmallDenominator { k1: i32, k2: i32 },
    #[error("potential provides derivatives up to order {available}, order {required} needed")]
    InsufficientDerivatives { available: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
