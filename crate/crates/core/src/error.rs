use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid or unparseable configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// An operation was called outside its preconditions.
    #[error("usage error: {0}")]
    Usage(String),

    /// Least-squares estimation could not proceed (rank deficiency or
    /// ill-conditioning). `block` names the offending column block.
    #[error("estimation error in {block}: {detail}")]
    Estimation { block: String, detail: String },

    /// The requested scenario cannot be realized, e.g. a calibration
    /// overhead exceeding the coherence interval.
    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    /// A pipeline stage failed; wraps the stage name around the cause.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// The innermost error, looking through stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) => 1,
            Error::Infeasible(_) => 3,
            _ => 2,
        }
    }
}

pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}
