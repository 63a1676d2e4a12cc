use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),

    #[error("space must contain at least one point")]
    EmptySpace,

    #[error("distance is not symmetric at ({i}, {j}): {dij} vs {dji}")]
    NotSymmetric { i: usize, j: usize, dij: f64, dji: f64 },

    #[error("nonzero diagonal distance at point {0}")]
    NonZeroDiagonal(usize),

    #[error("distance between distinct points {i} and {j} must be strictly positive (got {value})")]
    NonPositiveDistance { i: usize, j: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("triangle inequality violated at ({i}, {j}, {k}): d(i,k) = {dik} > d(i,j) + d(j,k) = {via}")]
    TriangleViolated { i: usize, j: usize, k: usize, dik: f64, via: f64 },

    #[error("negative weight {value} at point {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("{what} = {value} out of range {range}")]
    OutOfRange { what: &'static str, value: f64, range: &'static str },

    #[error("mask selects no points")]
    EmptyMask,

    #[error("mask selects a set of zero measure")]
    ZeroMass,

    #[error("induced subgraph is disconnected ({components} components)")]
    Disconnected { components: usize, labels: Vec<usize> },

    #[error("marginals differ in total mass by {0}")]
    MarginalMismatch(f64),

    #[error("measure is not absolutely continuous: charges point {index} of zero reference weight")]
    NotAbsolutelyContinuous { index: usize },

    #[error("measure charges point {index} outside the mask")]
    SupportViolation { index: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("hypothesis unmet: {0}")]
    HypothesisUnmet(String),

    #[error("quadrature did not reach tolerance {tolerance} (error estimate {estimate}) after {subdivisions} subdivisions")]
    Quadrature { tolerance: f64, estimate: f64, subdivisions: usize },

    #[error("empty anchor set: no evaluation point has subgradient norm <= {0}")]
    EmptyAnchorSet(f64),

    #[error("convex oracle inconsistent: subgradient inequality fails between points {0} and {1}")]
    InconsistentOracle(usize, usize),

    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
