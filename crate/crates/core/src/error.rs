use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed interval: {0}")]
    MalformedInterval(String),
    #[error("operands live on different kinds of space")]
    MixedSpaceKinds,
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error("ball has more than {cap} elements")]
    BallTooLarge { cap: usize },
    #[error("generating set is not closed under inverses")]
    AsymmetricGeneratingSet,
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("{cells} cells exceed the exact limit of {limit}")]
    TooLargeForExact { cells: usize, limit: usize },
    #[error("no cell union has measure in the admissible range")]
    EmptyAdmissibleRange,
    #[error("domain has measure zero")]
    EmptyDomain,
    #[error("profile has no entry at alpha = {0}")]
    ProfileGap(String),
    #[error("invalid constant: {0}")]
    InvalidConstant(String),
    #[error("invalid range: {0}")]
    InvalidRange(String),
    #[error("epsilon must be below alpha * c_alpha")]
    EpsilonTooLarge,
    #[error("transport ratios too large for the requested epsilon: {0}")]
    NoValidD(String),
    #[error("delta must lie strictly between 4 - 2*sqrt(3) and 1")]
    DeltaOutOfRange,
    #[error("action is not measure-preserving")]
    NotMeasurePreserving,
    #[error("measure ratio is unbounded")]
    RatioUnbounded,
    #[error("set is not contained in Y minus Z")]
    NotASubset,
    #[error("certificate is not marked maximal")]
    NotMaximal,
    #[error("no stage satisfies the threshold")]
    NoValidStage,
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("{cells} cells exceed the exhaustive limit of {limit}")]
    TooLarge { cells: usize, limit: usize },
    #[error("bad partition spec: {0}")]
    BadSpec(String),
    #[error("bad scenario parameters: {0}")]
    BadParams(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown strategy '{0}'")]
    UnknownStrategy(String),
    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage { stage: stage.to_string(), source: Box::new(self) }
    }

    /// 1 for failed verifications and unmet mathematical preconditions of the
    /// model, 2 for anything the user should fix in the invocation or config.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { source, .. } => source.exit_code(),
            Error::VerificationFailed(_)
            | Error::NoValidStage
            | Error::NotMaximal
            | Error::NotMeasurePreserving
            | Error::RatioUnbounded
            | Error::EpsilonTooLarge
            | Error::NoValidD(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
