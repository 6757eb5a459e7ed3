use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("annotation {id}: {message}")]
    Integrity { id: String, message: String },

    #[error("corpus: {0}")]
    Corpus(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unresolved placeholder `{{{0}}}` in prompt template")]
    UnresolvedPlaceholder(String),

    #[error("malformed model response: {message} (payload: {payload})")]
    Response { message: String, payload: String },

    #[error(transparent)]
    Client(#[from] crate::llm::ClientError),

    #[error("config: {0}")]
    Config(String),

    #[error("mentions from different documents: `{0}` and `{1}`")]
    CrossDocument(String, String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
