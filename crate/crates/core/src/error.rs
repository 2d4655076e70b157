use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("item id {item} is outside the 64-item universe{}", line_suffix(*.line))]
    ItemOutOfRange { item: u64, line: Option<usize> },

    #[error("cannot parse {token:?} as an item id at line {line}")]
    Parse { line: usize, token: String },

    #[error("database contains no transactions")]
    EmptyDatabase,

    #[error("item universe of {0} is not in 1..=64")]
    InvalidUniverse(usize),

    #[error("invalid mining parameters: {0}")]
    InvalidParams(String),

    #[error("brute-force enumeration needs at most 20 items, database has {0}")]
    UniverseTooLarge(usize),

    #[error("invalid dataset spec: {0}")]
    Spec(String),

    #[error("bad binary database: {0}")]
    Format(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("runs disagree on the frequent itemsets: {0}")]
    CorrectnessFailure(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{0}")]
    Usage(String),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Stable upper-case tag used as the prefix of CLI error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ItemOutOfRange { .. } => "ITEM_OUT_OF_RANGE",
            Error::Parse { .. } => "PARSE_ERROR",
            Error::EmptyDatabase => "EMPTY_DATABASE",
            Error::InvalidUniverse(_) => "INVALID_UNIVERSE",
            Error::InvalidParams(_) => "INVALID_PARAMS",
            Error::UniverseTooLarge(_) => "UNIVERSE_TOO_LARGE",
            Error::Spec(_) => "SPEC_ERROR",
            Error::Format(_) => "FORMAT_ERROR",
            Error::Io { .. } => "IO_ERROR",
            Error::CorrectnessFailure(_) => "CORRECTNESS_FAILURE",
            Error::Precondition(_) => "PRECONDITION",
            Error::Usage(_) => "USAGE_ERROR",
        }
    }
}
