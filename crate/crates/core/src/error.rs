use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid formula: {0}")]
    InvalidFormula(String),

    #[error("clause count {m} exceeds the {max} distinct 3-subsets of {n} variables")]
    DensityTooHigh { n: usize, m: usize, max: usize },

    #[error("{what} limited to n <= {cap}, got n = {n}")]
    SizeCap { what: &'static str, n: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("qubit index {index} out of range for {n} qubits")]
    QubitIndex { index: usize, n: usize },

    #[error("state norm drifted to {norm} after layer {layer}")]
    NormDrift { layer: usize, norm: f64 },

    #[error("non-finite energy at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("all {0} samples failed")]
    AllSamplesFailed(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing snapshot for iteration {0}")]
    MissingSnapshot(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
