use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("axis {axis} out of range for a {dim}-dimensional field")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unsupported lattice dimension {0} (allowed 1..=3)")]
    UnsupportedDimension(usize),
    #[error("theta component {component} = {value} lies outside [-pi, pi]")]
    ThetaOutOfRange { component: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("derivative of order {requested} requested, profile is only C^{available}")]
    DerivativeOrder { requested: usize, available: usize },
    #[error("{what} = {value} is outside the admissible domain")]
    Domain { what: &'static str, value: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("tolerance not met within the step budget (stopped at t = {t})")]
    StepBudget { t: f64 },
    #[error("grids do not match across traces")]
    GridMismatch,
    #[error("profile has no lambda control function")]
    MissingLambda,
    #[error("order m = {m} too small for {what}")]
    SmoothnessTooLow { m: usize, what: &'static str },
    #[error("eigenvalue radicand {radicand} is not positive at level {level}, t = {t}: zone constant too small")]
    RadicandNonPositive { level: usize, t: f64, radicand: f64 },
    #[error("derivative budget exhausted at level {level}")]
    DerivativeBudget { level: usize },
    #[error("zone constant escalation exceeded {cap}: {condition}")]
    Escalation { cap: f64, condition: String },
    #[error("hypothesis {0} failed")]
    Hypothesis(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
