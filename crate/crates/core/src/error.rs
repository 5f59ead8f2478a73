use thiserror::Error;

/// Errors across loading, validation, and scheduling.
///
/// Variants split into two families the CLI maps to exit codes:
/// input/validation failures (exit 1) and well-formed but infeasible
/// instances (exit 2). [`Error::is_infeasible`] draws the line.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed table: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: malformed document: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: String, column: String },

    #[error("{path}: unknown directive `{directive}`")]
    UnknownDirective { path: String, directive: String },

    #[error("{path} line {line}: field `{field}` = {value} out of range ({reason})")]
    FieldOutOfRange {
        path: String,
        line: u64,
        field: String,
        value: String,
        reason: String,
    },

    #[error("{path} line {line}: unknown algorithm `{value}`")]
    UnknownAlgorithm { path: String, line: u64, value: String },

    #[error("{path} line {line}: duplicate profile for ({op_id}, {algorithm})")]
    DuplicateProfile {
        path: String,
        line: u64,
        op_id: String,
        algorithm: String,
    },

    #[error("{path}: field `{field}` must be positive, got {value}")]
    NonPositiveField {
        path: String,
        field: String,
        value: String,
    },

    #[error("graph `{graph}`: duplicate op id `{op_id}`")]
    DuplicateOp { graph: String, op_id: String },

    #[error("graph `{graph}`: edge references unknown op `{op_id}`")]
    DanglingEdge { graph: String, op_id: String },

    #[error("graph `{graph}`: cycle detected through op `{op_id}`")]
    CycleDetected { graph: String, op_id: String },

    #[error("unknown op id `{op_id}`")]
    UnknownOp { op_id: String },

    #[error("completed set is not downward-closed: `{op_id}` listed without its predecessor `{missing_pred}`")]
    NotDownwardClosed { op_id: String, missing_pred: String },

    #[error("op `{op_id}` has no profile for menu `{menu}`")]
    MissingMenu { op_id: String, menu: String },

    #[error("algorithm {algorithm} not present in menu for op `{op_id}`")]
    AlgorithmNotInMenu { op_id: String, algorithm: String },

    #[error(
        "op `{op_id}` has no memory-feasible algorithm: tightest candidate needs {needed_bytes} B \
         (fixed {fixed_bytes} B + workspace {workspace_bytes} B) against budget {budget_bytes} B"
    )]
    NoFeasibleAlgorithm {
        op_id: String,
        needed_bytes: u64,
        fixed_bytes: u64,
        workspace_bytes: u64,
        budget_bytes: u64,
    },

    #[error("inter-SM partitioning needs at least 2 SMs, device has {num_sms}")]
    TooFewSms { num_sms: u32 },

    #[error("instance exceeds exhaustive-search limit: {what} is {got}, limit {limit}")]
    LimitExceeded {
        what: String,
        got: usize,
        limit: usize,
    },

    #[error("co-run allocation is not feasible: {reason}")]
    InfeasibleAllocation { reason: String },
}

impl Error {
    /// True for errors describing a well-formed but unsolvable instance,
    /// as opposed to malformed input. The CLI exits 2 for these, 1 otherwise.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::NoFeasibleAlgorithm { .. }
                | Error::TooFewSms { .. }
                | Error::LimitExceeded { .. }
                | Error::InfeasibleAllocation { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
