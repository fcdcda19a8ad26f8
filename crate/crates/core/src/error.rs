use thiserror::Error;

use crate::model::{FeatureId, NodeId, ValidationReport};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReferenceError {
    #[error("configuration names feature `{0}`, which is not in the model")]
    UnknownFeature(FeatureId),
}

#[derive(Debug, Error)]
pub enum DeployError {
    #[error("model `{0}` is an application model, not a deployment node")]
    NotANodeModel(String),
    #[error("node `{0}` is listed twice")]
    DuplicateNode(NodeId),
}

#[derive(Debug, Error)]
pub enum MatchError {
    #[error("no deployment nodes given")]
    NoNodes,
    #[error("application model is malformed:\n{}", render(.0))]
    MalformedModel(ValidationReport),
    #[error("deployment spec is inconsistent:\n{}", render(.0))]
    InconsistentSpec(ValidationReport),
    #[error("node id `{0}` collides with an application feature")]
    NodeIdConflict(NodeId),
    #[error(transparent)]
    Deploy(#[from] DeployError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolverError {
    #[error("search space of {size} candidates exceeds the brute-force bound {bound}")]
    SpaceTooLarge { size: u128, bound: u128 },
    #[error("cardinality of `{0}` is malformed")]
    BadCardinality(FeatureId),
}

pub(crate) fn render(report: &ValidationReport) -> String {
    report
        .issues
        .iter()
        .map(|i| format!("  {i}"))
        .collect::<Vec<_>>()
        .join("\n")
}
