use crate::instance::ValidationReport;
use crate::schedmodel::ScheduleReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),

    #[error("invalid schedule: {0}")]
    InvalidSchedule(ScheduleReport),

    #[error("malformed {what} document at line {line}, column {column}: {message}")]
    Parse {
        what: &'static str,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("bad parameter: {0}")]
    Parameter(String),

    #[error("search limit exceeded: {0}")]
    LimitExceeded(String),

    #[error("scheduler stalled at T = {clock} with {remaining} job(s) unplaced")]
    Stalled { clock: f64, remaining: usize },

    #[error("invariant broken: {0}")]
    Invariant(String),

    #[error("not a layered gap instance: {0}")]
    NotLayered(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn at(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }
}
