use thiserror::Error;

/// Errors surfaced by the estimation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: expected 1, 2, or 3")]
    UnsupportedDimension(usize),

    #[error("derivative order {got} exceeds the supported maximum {max}")]
    OrderTooHigh { got: usize, max: usize },

    #[error("kernel bandwidth must be a positive even integer, got {0}")]
    InvalidBandwidth(usize),

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("antenna counts invalid: N_T*N_R = {0} must be odd and at least 3")]
    InvalidAntennaProduct(usize),

    #[error("structured transform needs a power-of-two size, got {0}")]
    UnsupportedTransformSize(usize),

    #[error("grid size {got} along axis {axis} is below the ambient length {ambient}")]
    GridTooCoarse {
        axis: usize,
        got: usize,
        ambient: usize,
    },

    #[error("measurement rows are not linearly independent (rank {rank} < {rows}) and the data is inconsistent")]
    InconsistentSystem { rank: usize, rows: usize },

    #[error("ill-conditioned linear system: condition number {0:.3e}")]
    IllConditioned(f64),

    #[error("separation condition violated: minimum normalized pairwise score {0:.4} < 1")]
    SeparationViolated(f64),

    #[error("interpolation system is numerically singular")]
    SingularSystem,

    #[error("certification grid too coarse: Bernstein lift factor {0:.3} >= 1")]
    CertificationGridTooCoarse(f64),

    #[error("max-form separation check needs a uniform threshold vector")]
    NonUniformThreshold,

    #[error("zero signal cannot be scaled to a finite signal-to-noise ratio")]
    ZeroSignalNoise,

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization failure: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("malformed operator file: {0}")]
    MalformedOperatorFile(String),

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
