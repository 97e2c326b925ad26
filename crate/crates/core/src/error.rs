use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate interval [{lo}, {hi}]")]
    DegenerateInterval { lo: f64, hi: f64 },
    #[error("grid needs at least 3 interior nodes, got {0}")]
    TooFewNodes(usize),
    #[error("radial grid needs radius > 0 and dimension >= 1 (radius {radius}, dim {dim})")]
    InvalidRadial { radius: f64, dim: u32 },
    #[error("expression is not finite at node {index} (coordinate {coord})")]
    NonFinite { index: usize, coord: f64 },
    #[error("field does not conform to the grid")]
    GridMismatch,
    #[error("weight is defined on a different domain: {0}")]
    DomainMismatch(String),
    #[error("invalid weight specification: {0}")]
    InvalidWeight(String),
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("boundary condition not supported here: {0}")]
    UnsupportedBc(&'static str),
    #[error("zero pivot in tridiagonal solve at row {0}")]
    SingularPivot(usize),
    #[error("no positive principal eigenvalue exists for this weight")]
    NoPositiveEigenvalue,
    #[error("eigenvalue bisection did not converge: {0}")]
    NonconvergedBisection(String),
    #[error("field is identically zero")]
    ZeroField,
    #[error("field has negative values (min {0:e})")]
    NegativeValues(f64),
    #[error("subsolution exceeds supersolution at node {0}")]
    OrderViolation(usize),
    #[error("lower field is not a subsolution (residual {residual:e} at node {index})")]
    NotSubsolution { index: usize, residual: f64 },
    #[error("upper field is not a supersolution (residual {residual:e} at node {index})")]
    NotSupersolution { index: usize, residual: f64 },
    #[error("weight is not bounded below by a positive constant on the ball")]
    BallNotPositive,
    #[error("ball intersects the positivity set of the weight")]
    BallIntersectsPositive,
    #[error("ball does not fit inside the domain")]
    BallOutsideDomain,
    #[error("positive part of the weight vanishes identically")]
    ZeroPositivePart,
    #[error("region metadata (inner radius) is required for this check")]
    MissingRegion,
    #[error("exponent q is required for this check")]
    MissingExponent,
    #[error("degenerate denominator in t* (integral of a*phi^2 = {0:e})")]
    DegenerateDenominator(f64),
    #[error("b1 and b2 overlap at node {0}")]
    SupportOverlap(usize),
    #[error("input is not positive in the interior")]
    NotPositive,
}

pub type Result<T> = std::result::Result<T, Error>;
