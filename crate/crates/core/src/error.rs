use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Variants split into two families: malformed input (bad files, unknown
/// names, broken preconditions on arguments) and domain failures (an
/// assumption that does not hold, a positivity violation, a query that the
/// bounded search could not identify). The CLI maps the first family to
/// exit status 2 and the second to exit status 1.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid variable name `{0}`")]
    InvalidName(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("duplicate declaration of {0}")]
    Duplicate(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("graph contains a directed cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("variable sets overlap on `{0}`")]
    Overlap(String),
    #[error("empty variable set: {0}")]
    EmptySet(&'static str),
    #[error("node sets differ")]
    NodeSetMismatch,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("axiom {axiom} does not apply: {reason}")]
    AxiomShape { axiom: &'static str, reason: String },
    #[error("missing regime node for `{0}`")]
    MissingRegime(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("probability table error: {0}")]
    Table(String),
    #[error("table would have {0} cells, above the 2^24 limit")]
    TableTooLarge(u128),
    #[error("state `{state}` is not declared for `{var}`")]
    UnknownState { var: String, state: String },
    #[error("state `{state}` of `{var}` is not numeric")]
    NonNumeric { var: String, state: String },
    #[error("io error: {0}")]
    Io(String),

    #[error("conditioning event has zero probability: {0}")]
    ZeroProbability(String),
    #[error("positivity violation: {0}")]
    Positivity(String),
    #[error("precondition fails: {0}")]
    Precondition(String),
    #[error("weak instrument: |cov(X,Z)| = {cov_xz:e} is below threshold {threshold:e}")]
    WeakInstrument { cov_xz: f64, threshold: f64 },
    #[error("not identified by bounded search (depth {depth}, {explored} expressions explored)")]
    NotIdentified { depth: usize, explored: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    /// True for errors caused by malformed input rather than by a failing
    /// assumption about the model or data.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::ZeroProbability(_)
                | Error::Positivity(_)
                | Error::Precondition(_)
                | Error::WeakInstrument { .. }
                | Error::NotIdentified { .. }
                | Error::Degenerate(_)
        )
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
