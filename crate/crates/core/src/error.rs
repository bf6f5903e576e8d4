use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("edge list is empty")]
    EmptyEdgeList,

    #[error("self-loop on node {0} is not allowed in an undirected graph")]
    SelfLoop(String),

    #[error("node {0} is isolated; the normalized Laplacian needs positive degrees")]
    IsolatedNode(usize),

    #[error("directed graph is not strongly connected")]
    NotStronglyConnected,

    #[error("graph is not connected")]
    Disconnected,

    #[error("laplacian kind {kind} cannot be used with a {direction} graph")]
    KindMismatch {
        kind: &'static str,
        direction: &'static str,
    },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("matrix is not square: {0} x {1}")]
    NotSquare(usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: String, got: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid probability {0}; must lie in [0, 1]")]
    InvalidProbability(f64),

    #[error("node {0} has zero degree; use a > 0 for full support")]
    ZeroDegree(usize),

    #[error("marginals are infeasible: sums {0} and {1} differ")]
    InfeasibleMarginals(f64, f64),

    #[error("projected direction vanished after {0} retries")]
    DegenerateDirection(usize),

    #[error("second Laplacian eigenvalue is not simple (gap {0:e})")]
    RepeatedFiedlerValue(f64),

    #[error("graph has no edges")]
    NoEdges,

    #[error("coupling is empty after thresholding")]
    EmptyCoupling,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Errors caused by bad input rather than by a failing computation.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Numerical(_) | Error::DegenerateDirection(_) | Error::RepeatedFiedlerValue(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
