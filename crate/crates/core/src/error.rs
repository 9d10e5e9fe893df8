use std::path::PathBuf;

/// Errors raised anywhere in the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("wire {wire} out of range for a {n_qubits}-qubit register")]
    WireOutOfRange { wire: usize, n_qubits: usize },

    #[error("CNOT control and target are both wire {0}")]
    ControlIsTarget(usize),

    #[error("duplicate wire {0} in measurement list")]
    DuplicateWire(usize),

    #[error("shape mismatch for {what}: expected {expected}, got {got}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("density-matrix path supports at most {max} qubits, got {q}")]
    DensityTooLarge { q: usize, max: usize },

    #[error("topology error: {0}")]
    Topology(String),

    #[error("cache does not match the network it is used with: {0}")]
    StaleCache(String),

    #[error("{path}: row {row}, column {column}: cannot parse {value:?}")]
    Cell {
        path: PathBuf,
        row: usize,
        column: String,
        value: String,
    },

    #[error("{path}: {msg}")]
    Dataset { path: PathBuf, msg: String },

    #[error("training diverged at epoch {epoch}: loss is {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
