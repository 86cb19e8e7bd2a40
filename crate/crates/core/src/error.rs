use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit reports. Numeric failures carry the point or
/// quantity that triggered them so callers can localize the problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("expression undefined at {0} (0/0 or non-finite intermediate)")]
    DomainError(Complex64),

    #[error("scale factor must be nonzero")]
    ZeroScale,

    #[error("point {point} lies within {guard} of a declared singularity at {singularity}")]
    SingularPoint {
        point: Complex64,
        singularity: Complex64,
        guard: f64,
    },

    #[error("grid point {0} is singular for the function or its shift")]
    SingularGridPoint(Complex64),

    #[error("denominator {value:e} vanishes relative to scale {scale:e} at {point}")]
    DegenerateDenominator {
        point: Complex64,
        value: f64,
        scale: f64,
    },

    #[error("winding integral {raw} is not within 0.25 of an integer after {nodes} nodes per edge")]
    NonIntegerWinding { raw: f64, nodes: usize },

    #[error("declared singularity at {0} lies within the guard band of the contour")]
    SingularityOnContour(Complex64),

    #[error("pole at {location} lies on the circle |z| = {r}")]
    PoleOnCircle { location: Complex64, r: f64 },

    #[error("pole at the origin requires r > 1 (got r = {0})")]
    OriginPoleSmallRadius(f64),

    #[error("ledger of `{0}` does not declare zeros")]
    IncompleteLedger(String),

    #[error("characteristic T(r) = {t} does not exceed its quadrature error {err} at r = {r}")]
    ZeroCharacteristic { r: f64, t: f64, err: f64 },

    #[error("non-finite sample of `{label}` at {point}")]
    NonFiniteSample { label: String, point: Complex64 },

    #[error("kappa is not 1-periodic on the probe grid (defect {0:e})")]
    NonPeriodicKappa(f64),

    #[error("coefficients A and B must be constant")]
    NonConstantCoefficients,

    #[error("coefficient A vanishes identically on the probe grid")]
    ZeroCoefficient,

    #[error("sample is degenerate: {0}")]
    DegenerateSample(String),

    #[error("no constant c fits the relation (best c = {best}, max defect {max_defect:e})")]
    NoConsistentConstant { best: Complex64, max_defect: f64 },

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("parameter `{name}` violates its constraint: {reason}")]
    ParameterConstraintViolation { name: String, reason: String },

    #[error("catalog entry `{id}` failed its self-check (max relative residual {max_relative:e})")]
    CatalogSelfCheck { id: String, max_relative: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Invalid(err.to_string())
    }
}
