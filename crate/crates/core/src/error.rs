use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("outcome space must contain at least one outcome")]
    EmptyOutcomeSpace,
    #[error("duplicate outcome label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown outcome `{0}`")]
    UnknownOutcome(String),
    #[error("dimension mismatch: expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("invalid rational `{0}`")]
    InvalidRational(String),
    #[error("cone is incoherent: the nonnegative combination {witness:?} of its generators is strictly positive")]
    Incoherent { witness: Vec<String> },
    #[error("gamble is not a member of the trial's cone")]
    NotInCone,
    #[error("no outcome with nonzero value gives a nonpositive payoff")]
    NoNonzeroEvasion,
    #[error("trial index must be at least 1")]
    ZeroTrialIndex,
    #[error("Markov protocol requires the previous outcome")]
    MissingPreviousOutcome,
    #[error("unexpected previous outcome for a non-Markov protocol")]
    UnexpectedPreviousOutcome,
    #[error("unsupported for this protocol variant: {0}")]
    UnsupportedVariant(String),
    #[error("unsupported event: {0}")]
    UnsupportedEvent(String),
    #[error("prefix is already outside the event")]
    PrefixOutsideEvent,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("root price is zero; no superhedging strategy scales to it")]
    ZeroRootPrice,
    #[error("strategy failed: {0}")]
    Strategy(String),
    #[error("internal solver fault: {0}")]
    SolverFault(String),
    #[error("malformed document: {0}")]
    Document(String),
}
