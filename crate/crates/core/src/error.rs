use crate::model::JobId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unknown job id {0}")]
    UnknownJob(JobId),

    #[error("processing time of job {0} is unresolved at the requested time")]
    Unresolved(JobId),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid trace: {0}")]
    InvalidTrace(String),

    #[error("inconsistent commitment for job {job}: elapsed work {elapsed} exceeds alpha * {committed}")]
    InconsistentCommitment {
        job: JobId,
        elapsed: String,
        committed: String,
    },

    #[error("runaway event loop: more than {0} events")]
    RunawayEventLoop(usize),

    #[error("horizon reached with uncommitted jobs {0:?}")]
    UncommittedAtHorizon(Vec<JobId>),

    #[error("policy returned an invalid decision: {0}")]
    InvalidDecision(String),

    #[error("query over an empty job set")]
    EmptyJobSet,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
