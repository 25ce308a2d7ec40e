use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FanError {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("coordinate {value} lies outside [0,1]")]
    Range { value: String },
    #[error("invalid atom: {0}")]
    InvalidAtom(String),
    #[error("atoms overlap and cannot be merged: {0}")]
    Overlap(String),
    #[error("{0} is not a member of the set")]
    NotMember(String),
    #[error("the set is empty")]
    EmptySet,
    #[error("construction hypothesis fails: {0}")]
    Hypothesis(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("comb lacks construction metadata: {0}")]
    Metadata(String),
    #[error("invalid fan point: {0}")]
    InvalidPoint(String),
    #[error("sequence rule selected {0} points; at least 3 are required")]
    NoSequence(usize),
    #[error("partition scheme does not match the comb's source set: {0}")]
    SchemeMismatch(String),
    #[error("points carry different partition labels: {0}")]
    Refusal(String),
    #[error("point lies outside the self-similar cell: {0}")]
    Domain(String),
    #[error("cells cannot be separated at this truncation; need depth {required}")]
    CellOverlap { required: usize },
    #[error("adjustment interval meets the trace: {0}")]
    TraceCollision(String),
    #[error("shift exceeds the truncated window: {0}")]
    Window(String),
    #[error("schema violation at {path}: {msg}")]
    Schema { path: String, msg: String },
}
