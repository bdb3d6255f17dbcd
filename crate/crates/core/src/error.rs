use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by metric evaluation, solvers and I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("point {0} lies outside the domain")]
    PointOutsideDomain(Complex64),
    #[error("image point {image} of {source_point} escapes the target domain")]
    ImageEscapesDomain {
        source_point: Complex64,
        image: Complex64,
    },
    #[error("path leaves the domain near {0}")]
    PathExitsDomain(Complex64),
    #[error("finite-difference stencil around {0} leaves the domain")]
    StencilOutsideDomain(Complex64),
    #[error("density vanishes at {0}")]
    ZeroDensity(Complex64),
    #[error("points are not connected at resolution {0}")]
    PointsNotConnected(f64),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("coincident points {0}")]
    CoincidentPoints(Complex64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("argument {0} lies on the branch cut [1, +inf)")]
    ArgumentOnCut(Complex64),
    #[error("{0} is (within tolerance of) a puncture")]
    PuncturePoint(Complex64),
    #[error("{0} lies outside the slit plane where the developing map is single valued")]
    OutsidePrincipalRegion(Complex64),
    #[error("derivative vanishes at {0}")]
    CriticalPoint(Complex64),
    #[error("pole at {0}")]
    Pole(Complex64),
    #[error("reconstruction denominator vanishes near {0}")]
    DenominatorVanishes(Complex64),
    #[error("integrator step failure near {0}")]
    StepFailure(Complex64),
    #[error("disk is not compactly contained in the domain: {0}")]
    DiskNotCompactlyContained(String),
    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),
    #[error("I/O failure: {0}")]
    Io(String),
    #[error("malformed input: {0}")]
    Parse(String),
}

impl From<std::io::Error> for MetricError {
    fn from(err: std::io::Error) -> Self {
        MetricError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for MetricError {
    fn from(err: serde_json::Error) -> Self {
        MetricError::Parse(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MetricError>;
