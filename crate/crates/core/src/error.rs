use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array geometry: {0}")]
    Geometry(String),

    #[error("invalid source scene: {0}")]
    Scene(String),

    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    DerivativeOrder(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate dictionary: column {column} has zero norm")]
    DegenerateDictionary { column: usize },

    #[error("malformed conic program: {0}")]
    Program(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("covariance model needs at least 2 snapshots, got {0}; use the single-snapshot model instead")]
    TooFewSnapshots(usize),

    #[error("metrics need at least one trial")]
    EmptyMetrics,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}
