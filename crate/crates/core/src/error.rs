use alloc::string::String;

use crate::transcript::EventType;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid config: {field}: {message}")]
    InvalidConfig { field: &'static str, message: String },

    #[error("invalid task: {0}")]
    InvalidTask(&'static str),

    #[error("backend {backend} unavailable after {attempts} attempt(s): {reason}")]
    BackendUnavailable { backend: String, attempts: u32, reason: String },

    #[error("backend {backend} rejected request with status {status}: {body}")]
    Rejected { backend: String, status: u16, body: String },

    #[error("malformed response from {backend}: {reason}")]
    MalformedResponse { backend: String, reason: String },

    #[error("invalid request: {0}")]
    InvalidRequest(&'static str),

    #[error("orchestrator returned an empty style for agent {agent_id}")]
    EmptyStyle { agent_id: usize },

    #[error("cannot embed empty text")]
    EmptyText,

    #[error("embedding has zero norm or non-finite values")]
    DegenerateEmbedding,

    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(&'static str),

    #[error("outputs span more than one round")]
    MixedRounds,

    #[error("reference count {n} is invalid for {agents} agents")]
    InvalidN { n: usize, agents: usize },

    #[error("malformed reference set for agent {agent_id}: {reason}")]
    MalformedRefSet { agent_id: usize, reason: &'static str },

    #[error("memory response is missing the {0} section")]
    MissingSection(&'static str),

    #[error("memory response has an empty {0} section")]
    EmptySection(&'static str),

    #[error("expected {expected} reference outputs, got {actual}")]
    RefCountMismatch { expected: usize, actual: usize },

    #[error("agent {0} cannot reference its own output")]
    SelfReference(usize),

    #[error("previous output belongs to agent {actual}, not agent {expected}")]
    ForeignOutput { expected: usize, actual: usize },

    #[error("style inventory is empty")]
    EmptyInventory,

    #[error("replay diverged at record {index} ({event:?}): {detail}")]
    ReplayDivergence { index: usize, event: EventType, detail: String },

    #[error("malformed transcript: {0}")]
    MalformedTranscript(String),

    #[error("transcript sink failed: {0}")]
    Sink(String),
}
