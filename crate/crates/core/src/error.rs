use thiserror::Error;

pub type Result<T, E = MrfError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MrfError {
    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("degree bound {bound} exceeded at vertex {vertex}")]
    DegreeBoundExceeded { vertex: usize, bound: usize },

    #[error("alphabet size must be in [2, 256], got {0}")]
    InvalidAlphabet(usize),

    #[error("invalid potential on clique {clique:?}: {reason}")]
    InvalidPotential { clique: Vec<usize>, reason: String },

    #[error("state space of {states} exceeds the enumeration cap of {cap} states")]
    StateSpaceTooLarge { states: u128, cap: u64 },

    #[error("conditioning event has zero probability")]
    ZeroProbabilityConditioning,

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("potential on clique {0:?} is not pairwise")]
    NonPairwisePotential(Vec<usize>),

    #[error("site {0} has no symbol with positive conditional probability")]
    HardConstraintDeadlock(usize),

    #[error("correlation neighborhood of vertex {vertex} has {size} members, cap is {cap}")]
    CorrelationNeighborhoodTooLarge { vertex: usize, size: usize, cap: usize },

    #[error("hidden-vertex recovery failed: {0}")]
    HiddenRecovery(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl MrfError {
    /// True for errors caused by exceeding a resource cap rather than bad input.
    pub fn is_resource_cap(&self) -> bool {
        matches!(
            self,
            MrfError::StateSpaceTooLarge { .. } | MrfError::CorrelationNeighborhoodTooLarge { .. }
        )
    }
}
