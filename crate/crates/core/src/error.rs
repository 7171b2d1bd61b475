use thiserror::Error;

use crate::graph::EditReport;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({u}, {v}) references a node >= n = {n}")]
    NodeOutOfRange { u: usize, v: usize, n: usize },
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("homophily ratio undefined on a graph with no edges")]
    UndefinedRatio,
    #[error("node {0} has no effective class label")]
    MissingLabel(usize),
    #[error("label arrays have length {got}, graph has {expected} nodes")]
    LabelLength { expected: usize, got: usize },
    #[error("editing removed every edge ({} removed)", .0.removed_edges.len())]
    DegenerateEdit(Box<EditReport>),
    #[error("deleting {k} of {m} edges leaves the ratios undefined")]
    DivisionByZero { k: u64, m: u64 },
    #[error("requested {k} deletions but only {available} Type III edges exist")]
    Infeasible { k: u64, available: u64 },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("exhaustive enumeration limited to {limit} edges, graph has {m}")]
    ResourceLimit { m: usize, limit: usize },
    #[error("edge list parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("tape error: {0}")]
    Tape(String),
    #[error("finite-difference step {0} outside [1e-7, 1e-4]")]
    BadStep(f64),
}

#[derive(Debug, Error)]
pub enum LossError {
    #[error("empty training mask")]
    EmptyMask,
    #[error("empty edge set")]
    EmptyEdges,
    #[error("no labeled node has a positive partner")]
    NoPositives,
    #[error("sensitive group {0} is empty")]
    EmptyGroup(u8),
    #[error("requested {requested} negative edges but only {capacity} non-edges exist")]
    Capacity { requested: usize, capacity: usize },
    #[error("loss term {0} is not finite")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("metric {metric} undefined: {reason}")]
    Undefined {
        metric: &'static str,
        reason: String,
    },
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("sensitive column `{col}` is not binary after mapping (saw `{value}`)")]
    NonBinarySensitive { col: String, value: String },
    #[error("parse failure in {file} at row {row}: {msg}")]
    Parse {
        file: String,
        row: usize,
        msg: String,
    },
    #[error("infeasible synthetic targets: {0}")]
    Infeasible(String),
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("split `{0}` is empty")]
    EmptySplit(&'static str),
    #[error("training diverged at {phase} epoch {epoch}: {detail}")]
    Diverged {
        phase: &'static str,
        epoch: usize,
        detail: String,
    },
    #[error("no epoch produced a defined validation score")]
    NoValidEpoch,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
