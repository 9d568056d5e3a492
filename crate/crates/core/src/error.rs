use thiserror::Error;

/// Errors raised by the channel models and the analysis pipeline.
///
/// The `Display` form of every variant starts with a stable lowercase
/// reason prefix followed by a colon so callers can emit it as a single
/// machine-readable line.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument: {0}")]
    Argument(String),

    #[error("numeric-domain: {0}")]
    NumericDomain(String),

    #[error("tissue-file: line {line}: {message}")]
    TissueFile { line: usize, message: String },

    #[error("unknown-tissue: {0}")]
    UnknownTissue(String),

    #[error("phantom: {0}")]
    Phantom(String),

    #[error("resource: grid of {requested} voxels exceeds budget of {budget}")]
    Resource { requested: usize, budget: usize },

    #[error("placement: voxel ({i}, {j}, {k}): {message}")]
    Placement { i: i64, j: i64, k: i64, message: String },

    #[error("setup: {0}")]
    Setup(String),

    #[error("convergence: no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("probe: {0}")]
    Probe(String),

    #[error("sweep: at distance {distance_m} m: {source}")]
    Sweep {
        distance_m: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("model-domain: {0}")]
    ModelDomain(String),

    #[error("curve: {0}")]
    Curve(String),

    #[error("extrapolation: x = {x_m} m outside sampled range [{min_m}, {max_m}] m")]
    Extrapolation { x_m: f64, min_m: f64, max_m: f64 },

    #[error("pairing: {0}")]
    Pairing(String),

    #[error("format: line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("monotonicity: row {row}: distance {distance_m} is not greater than the previous row")]
    Monotonicity { row: usize, distance_m: f64 },

    #[error("value: row {row}: {message}")]
    Value { row: usize, message: String },

    #[error("empty-data: no sample rows after the header")]
    EmptyData,
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable reason prefix, the part of the message before the first colon.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::Argument(_) => "argument",
            Error::NumericDomain(_) => "numeric-domain",
            Error::TissueFile { .. } => "tissue-file",
            Error::UnknownTissue(_) => "unknown-tissue",
            Error::Phantom(_) => "phantom",
            Error::Resource { .. } => "resource",
            Error::Placement { .. } => "placement",
            Error::Setup(_) => "setup",
            Error::Convergence { .. } => "convergence",
            Error::Probe(_) => "probe",
            Error::Sweep { .. } => "sweep",
            Error::ModelDomain(_) => "model-domain",
            Error::Curve(_) => "curve",
            Error::Extrapolation { .. } => "extrapolation",
            Error::Pairing(_) => "pairing",
            Error::Format { .. } => "format",
            Error::Monotonicity { .. } => "monotonicity",
            Error::Value { .. } => "value",
            Error::EmptyData => "empty-data",
        }
    }
}
