use thiserror::Error;

/// Errors raised by the analysis pipeline.
///
/// Message strings are part of the report format: downstream tooling matches
/// on them, so keep them stable.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("zero field")]
    ZeroField,
    #[error("not an equilibrium")]
    NotAnEquilibrium,
    #[error("dicritical blow-up")]
    Dicritical,
    #[error("center not on divisor")]
    CenterNotOnDivisor,
    #[error("center not singular")]
    CenterNotSingular,
    #[error("reduction not reached")]
    ReductionNotReached,
    #[error("unknown chart {0}")]
    UnknownChart(usize),
    #[error("non-isolated equilibria suspected")]
    NonIsolated,
    #[error("ambiguous tangency")]
    AmbiguousTangency,
    #[error("unordered planes")]
    UnorderedPlanes,
    #[error("weight undefined: {0}")]
    WeightUndefined(String),
    #[error("non-hyperbolic vertex {0}")]
    NonHyperbolicVertex(usize),
    #[error("separatrix escaped")]
    SeparatrixEscaped,
    #[error("landing ambiguous")]
    LandingAmbiguous,
    #[error("step limit exceeded")]
    StepLimitExceeded,
    #[error("no exit edge at vertex {0}")]
    NoExitEdge(usize),
    #[error("rotation system inconsistent: {0}")]
    RotationInconsistent(String),
    #[error("unclassifiable: {0}")]
    Unclassifiable(String),
    #[error("non-positive input")]
    NonPositive,
    #[error("exit edge missing in graph")]
    ExitEdgeMissing,
    #[error("chain start invalid: {0}")]
    InvalidChainStart(String),
    #[error("too few samples: {0}")]
    TooFewSamples(usize),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(usize),
    #[error("origin not attracting along this orbit")]
    OriginNotAttracting,
    #[error("blow-up chart escape")]
    ChartEscape,
    #[error("initial point is the origin")]
    InitialPointAtOrigin,
    #[error("parse error at component {component}, monomial {monomial}: {detail}")]
    Parse { component: usize, monomial: usize, detail: String },
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
