use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed tree document: {0}")]
    MalformedTree(String),
    #[error("tree has no nodes")]
    EmptyTree,
    #[error("node {node} references missing child {child}")]
    DanglingChild { node: usize, child: usize },
    #[error("node {node} references unknown feature `{feature}`")]
    UnknownFeature { node: usize, feature: String },
    #[error("node {node} has non-finite threshold")]
    NonFiniteThreshold { node: usize },
    #[error("leaf {node} carries unknown class `{label}`")]
    UnknownClass { node: usize, label: String },
    #[error("tree structure is not a rooted binary tree: {0}")]
    NotATree(String),
    #[error("decision path is contradictory on feature `{feature}` (requires {lower} < x <= {upper})")]
    ContradictoryPath { feature: String, lower: String, upper: String },
    #[error("missing value for feature `{0}`")]
    MissingFeature(String),
    #[error("non-finite value for feature `{0}`")]
    NonFiniteValue(String),
    #[error("rule set is empty")]
    EmptyRuleSet,
    #[error("rule bound {bound} on feature `{feature}` is not a threshold of the space")]
    BoundNotInSpace { feature: String, bound: String },
    #[error("feature `{0}` is not part of the discrete space")]
    FeatureNotInSpace(String),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("invalid cube: {0}")]
    InvalidCube(String),
    #[error("invalid trit string: {0}")]
    InvalidTrits(String),
    #[error("capacity exceeded: {what} needs {needed} but budget is {budget}")]
    Capacity { what: String, needed: u128, budget: u128 },
    #[error("prime set is not a verified cover: {0}")]
    Unverified(String),
    #[error("dataset error at row {row}, column `{column}`: {message}")]
    DataCell { row: usize, column: String, message: String },
    #[error("dataset error: {0}")]
    Data(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    /// Capacity failures are reported separately from validation failures.
    pub fn is_capacity(&self) -> bool {
        matches!(self, Error::Capacity { .. })
    }

    pub(crate) fn capacity(what: impl Into<String>, needed: u128, budget: u128) -> Self {
        Error::Capacity { what: what.into(), needed, budget }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
