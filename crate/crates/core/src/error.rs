use crate::model::Node;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid sweep spec: {0}")]
    InvalidSpec(String),

    /// The PU target rate is zero, so the required SINR vanishes.
    #[error("degenerate target rate at PU node {0}")]
    DegenerateTarget(Node),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
