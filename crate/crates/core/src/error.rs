use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A game, feasible set, or expression failed structural validation.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// An index (player, variable) was out of range for the instance.
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    /// Vector or matrix dimensions do not match the declared sizes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The requested operation needs structure the instance lacks
    /// (e.g. a built-in oracle bound to a player it cannot handle).
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),

    /// Feasible sets that depend on the shared variables are storable
    /// but not accepted by any algorithmic entry point.
    #[error("player {0} has a shared-variable-dependent feasible set; {1}")]
    SharedDependentFeasibleSet(usize, String),

    /// A subsolver or oracle failed (cycling guard, node budget, ...).
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// The joint feasible set (or a subproblem) is empty.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A subproblem that must be bounded is unbounded below.
    #[error("unbounded: {0}")]
    Unbounded(String),

    /// An enumeration would exceed the configured cap.
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),

    /// A cut that should have been new duplicated an existing pool
    /// entry; the relaxation and the player oracles disagree.
    #[error("duplicate cut for player {player} at iteration {iteration}: {detail}")]
    DuplicateCut {
        player: usize,
        iteration: usize,
        detail: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
