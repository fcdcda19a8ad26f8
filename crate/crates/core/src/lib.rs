//! Deployment analysis for extended feature models.
//!
//! An application is a feature model whose leaves may carry resource
//! attributes (`CPU=40`). Deployment nodes are feature models too; their
//! core features declare what the node offers. [`possible_host`] grafts the
//! nodes into the application model, matches features to nodes by resource
//! type, and enumerates every valid configuration: a selection of features
//! with instance counts plus a host for each selected attributed feature.
//!
//! ```
//! use fmdeploy::{parse_model, possible_host, DeploymentSpec, NodeDescriptor};
//!
//! let app = parse_model("model app { mandatory app { optional cam (CPU=30) } }").unwrap();
//! let hab = parse_model("model hab class embedded { mandatory hab (CPU=40) }").unwrap();
//! let nodes = [NodeDescriptor::from_model(hab).unwrap()];
//! let solutions = possible_host(&app, &nodes, &DeploymentSpec::new()).unwrap();
//! assert_eq!(solutions.len(), 2);
//! ```

pub mod cli;
pub mod config;
pub mod deploy;
pub mod dsl;
pub mod error;
pub mod matcher;
pub mod model;
pub mod solver;
pub mod span;

pub use config::{configuration_violation, is_valid_configuration, Configuration, Violation};
pub use deploy::{
    check_spec_consistency, find_match, resource_verification, DeploymentConstraint, DeploymentSpec, NodeDescriptor,
    ResourceViolation,
};
pub use dsl::{parse_deployment_spec, parse_model, serialize_model, serialize_spec, ParseDiagnostics};
pub use error::{DeployError, MatchError, ReferenceError, SolverError};
pub use matcher::{
    constraint_subset_counts, explain_infeasibility, possible_host, possible_host_with, AugmentedModel, Explanation,
    MatchOptions, SolutionSet,
};
pub use model::{
    validate_model, Cardinality, Feature, FeatureId, FeatureModel, ModelKind, NodeClass, NodeId, ResourceOntology,
    ValidationReport,
};
pub use solver::{brute_force_enumerate, encode, enumerate};
