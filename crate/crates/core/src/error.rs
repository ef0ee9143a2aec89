use thiserror::Error;

/// Every failure the laboratory can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("direction is not admissible for this space: {0}")]
    InadmissibleDirection(String),
    #[error("direction has zero length")]
    ZeroDirection,
    #[error("conformal factor must be positive, got {0}")]
    NonpositiveKappa(f64),
    #[error("point lies on or outside the interior of the lattice")]
    BoundaryPoint,
    #[error("point is outside the domain of the field: {0}")]
    OutsideDomain(String),
    #[error("gradient is not timelike (quadratic form {0} <= 0)")]
    SpacelikeGradient(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("q0 must be positive, got {0}")]
    NonpositiveQ0(f64),
    #[error("indicatrix volume is infinite")]
    InfiniteVolume,

    #[error("negative base {0} raised to a fractional power")]
    NegativeBase(f64),
    #[error("lattice needs at least 5 points per axis")]
    GridTooSmall,
    #[error("radius must be positive, got {0}")]
    NonpositiveRadius(f64),

    #[error("1 - 3 phi^2 = {0} is below the singularity threshold")]
    SingularDenominator(f64),
    #[error("xi = 0 is a removable singularity of the rearranged equation")]
    OriginSingularity,
    #[error("integrator could not meet the requested tolerance: {0}")]
    ToleranceNotMet(String),
    #[error("xi = {xi} is outside the resolved range [0, {max}]")]
    OutOfRange { xi: f64, max: f64 },

    #[error("derivative unavailable: {0}")]
    DerivativeUnavailable(String),
    #[error("metric is singular")]
    SingularMetric,

    #[error("lambda vanishes at the current point")]
    ZeroLambda,
    #[error("trajectory left the domain: {0}")]
    LeftDomain(String),
    #[error("need at least 3 samples")]
    TooFewSamples,
}

pub type Result<T> = std::result::Result<T, Error>;
