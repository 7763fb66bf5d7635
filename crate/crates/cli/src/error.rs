use std::fmt;

use textmut::augment::RrConfigError;
use textmut::scorer::ScorerError;
use textmut::{DatasetError, LexiconError, MetricError, MutationError};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Data = 2,
    Config = 3,
    Transport = 4,
}

/// An error paired with the exit code it maps to.
pub struct Failure {
    pub exit: Exit,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(exit: Exit, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            exit,
            error: error.into(),
        }
    }

    pub fn data(msg: impl fmt::Display) -> Self {
        Failure::new(Exit::Data, anyhow::anyhow!("{msg}"))
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        Failure::new(Exit::Config, anyhow::anyhow!("{msg}"))
    }

    pub fn context(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Self {
        Failure {
            exit: self.exit,
            error: self.error.context(ctx),
        }
    }
}

impl fmt::Debug for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} ({:?})", self.error, self.exit)
    }
}

pub type Result<T, E = Failure> = std::result::Result<T, E>;

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        let exit = match e {
            DatasetError::InvalidRatios(_) => Exit::Config,
            _ => Exit::Data,
        };
        Failure::new(exit, e)
    }
}

impl From<LexiconError> for Failure {
    fn from(e: LexiconError) -> Self {
        Failure::new(Exit::Config, e)
    }
}

impl From<MutationError> for Failure {
    fn from(e: MutationError) -> Self {
        Failure::new(Exit::Config, e)
    }
}

impl From<RrConfigError> for Failure {
    fn from(e: RrConfigError) -> Self {
        Failure::new(Exit::Config, e)
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        Failure::new(Exit::Data, e)
    }
}

impl From<ScorerError> for Failure {
    fn from(e: ScorerError) -> Self {
        let exit = match e {
            ScorerError::InvalidSpec(_) => Exit::Config,
            ScorerError::DuplicateRequestId(_) => Exit::Data,
            _ => Exit::Transport,
        };
        Failure::new(exit, e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(Exit::Data, e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::new(Exit::Data, e)
    }
}

/// Attaches a path or similar context to any convertible error.
pub trait Context<T> {
    fn at(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Result<T>;
}

impl<T, E: Into<Failure>> Context<T> for std::result::Result<T, E> {
    fn at(self, ctx: impl fmt::Display + Send + Sync + 'static) -> Result<T> {
        self.map_err(|e| e.into().context(ctx))
    }
}
