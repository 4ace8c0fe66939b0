use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("liberty:{line}: {msg}")]
    Liberty { line: usize, msg: String },
    #[error("liberty: {0}")]
    LibertyStructure(String),
    #[error("def:{line}: {msg}")]
    Def { line: usize, msg: String },
    #[error("sdf:{line}: {msg}")]
    Sdf { line: usize, msg: String },
    #[error("labels: {0}")]
    Labels(String),
    #[error("sdc:{line}: {msg}")]
    Sdc { line: usize, msg: String },
    #[error("graph: {0}")]
    Graph(String),
    #[error("interchange: {0}")]
    Interchange(String),
    #[error("arrival times: {0}")]
    Provider(String),
    #[error("slack: {0}")]
    Slack(String),
    #[error("metric: {0}")]
    Metric(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("internal: {0}")]
    Internal(String),
    #[error("{path}: {cause}")]
    Io { path: String, cause: std::io::Error },
    #[error("{path}: {cause}")]
    File { path: String, cause: Box<Error> },
    #[error("{stage}: {cause}")]
    Stage { stage: &'static str, cause: Box<Error> },
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            cause: Box::new(self),
        }
    }

    pub fn in_file(self, path: impl Into<String>) -> Self {
        Error::File {
            path: path.into(),
            cause: Box::new(self),
        }
    }

    /// The innermost error under any stage or file wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { cause, .. } | Error::File { cause, .. } => cause.root(),
            e => e,
        }
    }
}
