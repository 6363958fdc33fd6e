use std::path::PathBuf;

/// Errors produced anywhere in the planning pipeline.
///
/// Every variant maps to a stable machine-readable code (see [`Error::code`])
/// which the command-line front end prints alongside the message.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("unknown object id `{0}`")]
    UnknownObject(String),

    #[error("unknown receptacle id `{0}`")]
    UnknownReceptacle(String),

    #[error("scene mismatch: expected `{expected}`, found `{found}`")]
    SceneMismatch { expected: String, found: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no spatial prior for object `{0}`")]
    MissingPrior(String),

    #[error("degenerate usage: every object has zero usage frequency")]
    DegenerateUsage,

    #[error("no affinity entry for pair (`{0}`, `{1}`)")]
    MissingAffinity(String, String),

    #[error("no commonsense entry for (`{0}`, `{1}`)")]
    MissingCommonsense(String, String),

    #[error("coverage: {0}")]
    Coverage(String),

    #[error("invalid preference weights: {0}")]
    InvalidWeights(String),

    #[error("invalid Likert response: {0}")]
    InvalidLikert(String),

    #[error("could not parse oracle reply for (`{object_id}`, `{receptacle_id}`): {reply:?}")]
    OracleParse {
        object_id: String,
        receptacle_id: String,
        reply: String,
    },

    #[error("stub fixture has no entry for (`{0}`, `{1}`)")]
    FixtureCoverage(String, String),

    #[error("oracle transport failure: {0}")]
    Transport(String),

    #[error("oracle configuration: {0}")]
    OracleConfig(String),

    #[error("instance too large for exhaustive search: {bound} leaf states exceeds {limit}")]
    Capacity { bound: u128, limit: u128 },

    #[error("planning failed: {0}")]
    Planning(String),

    #[error("incomplete arrangement: {0}")]
    Incomplete(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Stable identifier for diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidScene(_) => "E_SCENE",
            Error::UnknownObject(_) | Error::UnknownReceptacle(_) => "E_REFERENCE",
            Error::SceneMismatch { .. } => "E_SCENE_MISMATCH",
            Error::Precondition(_) => "E_PRECONDITION",
            Error::MissingPrior(_) => "E_PRIOR_COVERAGE",
            Error::DegenerateUsage => "E_DEGENERATE_USAGE",
            Error::MissingAffinity(..) => "E_AFFINITY_COVERAGE",
            Error::MissingCommonsense(..) => "E_TABLE_COVERAGE",
            Error::Coverage(_) => "E_COVERAGE",
            Error::InvalidWeights(_) => "E_WEIGHTS",
            Error::InvalidLikert(_) => "E_LIKERT",
            Error::OracleParse { .. } => "E_ORACLE_PARSE",
            Error::FixtureCoverage(..) => "E_FIXTURE_COVERAGE",
            Error::Transport(_) => "E_TRANSPORT",
            Error::OracleConfig(_) => "E_ORACLE_CONFIG",
            Error::Capacity { .. } => "E_CAPACITY",
            Error::Planning(_) => "E_PLANNING",
            Error::Incomplete(_) => "E_INCOMPLETE",
            Error::Io { .. } => "E_IO",
            Error::Json { .. } => "E_PARSE",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
