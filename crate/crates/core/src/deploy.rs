//! Deployment constraints, node descriptors, ontology matching and the
//! per-node resource inequality.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::error::DeployError;
use crate::model::{Feature, FeatureId, FeatureModel, IssueKind, ModelKind, NodeClass, NodeId, ValidationReport};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeploymentConstraint {
    /// The feature may only be deployed on this node (when declared by the
    /// developer) or is a candidate for it (when derived by the matcher).
    HostedBy { node: NodeId, feature: FeatureId },
    NotHostedBy { node: NodeId, feature: FeatureId },
    /// When both are selected they share a node. Symmetric.
    Colocated(FeatureId, FeatureId),
    /// When both are selected they are on different nodes. Symmetric.
    Separated(FeatureId, FeatureId),
}

impl DeploymentConstraint {
    pub fn hosted_by(node: impl Into<NodeId>, feature: impl Into<FeatureId>) -> Self {
        Self::HostedBy {
            node: node.into(),
            feature: feature.into(),
        }
    }

    pub fn not_hosted_by(node: impl Into<NodeId>, feature: impl Into<FeatureId>) -> Self {
        Self::NotHostedBy {
            node: node.into(),
            feature: feature.into(),
        }
    }

    pub fn colocated(a: impl Into<FeatureId>, b: impl Into<FeatureId>) -> Self {
        Self::Colocated(a.into(), b.into())
    }

    pub fn separated(a: impl Into<FeatureId>, b: impl Into<FeatureId>) -> Self {
        Self::Separated(a.into(), b.into())
    }

    /// Orders the arguments of symmetric constraints so that `c(a,b)` and
    /// `c(b,a)` normalize to the same value.
    pub fn normalized(&self) -> Self {
        match self {
            Self::Colocated(a, b) if b < a => Self::Colocated(b.clone(), a.clone()),
            Self::Separated(a, b) if b < a => Self::Separated(b.clone(), a.clone()),
            other => other.clone(),
        }
    }

    /// True for colocation and separation.
    pub fn is_relational(&self) -> bool {
        matches!(self, Self::Colocated(..) | Self::Separated(..))
    }

    pub fn features(&self) -> Vec<&FeatureId> {
        match self {
            Self::HostedBy { feature, .. } | Self::NotHostedBy { feature, .. } => vec![feature],
            Self::Colocated(a, b) | Self::Separated(a, b) => vec![a, b],
        }
    }

    pub fn keyword(&self) -> &'static str {
        match self {
            Self::HostedBy { .. } => "hostedby",
            Self::NotHostedBy { .. } => "nothostedby",
            Self::Colocated(..) => "colocated",
            Self::Separated(..) => "separated",
        }
    }
}

impl fmt::Display for DeploymentConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::HostedBy { node, feature } | Self::NotHostedBy { node, feature } => {
                write!(f, "{}({node}, {feature})", self.keyword())
            }
            Self::Colocated(a, b) | Self::Separated(a, b) => write!(f, "{}({a}, {b})", self.keyword()),
        }
    }
}

/// Deployment constraints for one application.
///
/// `constraints` holds what the developer declared; `derived` holds the
/// hosting candidates and exclusions added by the matcher. A declared
/// `HostedBy` pins a feature, a derived one only makes the node a candidate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeploymentSpec {
    pub constraints: Vec<DeploymentConstraint>,
    pub derived: Vec<DeploymentConstraint>,
}

impl DeploymentSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_constraints(constraints: impl IntoIterator<Item = DeploymentConstraint>) -> Self {
        let mut spec = Self::new();
        for c in constraints {
            spec.push(c);
        }
        spec
    }

    /// Adds a declared constraint unless an equivalent one is present.
    pub fn push(&mut self, constraint: DeploymentConstraint) -> bool {
        let key = constraint.normalized();
        if self.constraints.iter().any(|c| c.normalized() == key) {
            return false;
        }
        self.constraints.push(constraint);
        true
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty() && self.derived.is_empty()
    }

    /// Declared constraints followed by derived ones.
    pub fn all(&self) -> impl Iterator<Item = &DeploymentConstraint> {
        self.constraints.iter().chain(self.derived.iter())
    }

    pub fn has_declared_hosted_by(&self, node: &NodeId, feature: &FeatureId) -> bool {
        self.constraints.iter().any(|c| {
            matches!(c, DeploymentConstraint::HostedBy { node: n, feature: f } if n == node && f == feature)
        })
    }

    /// Indices into `constraints` of the colocation and separation entries.
    pub fn relational_indices(&self) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_relational())
            .map(|(i, _)| i)
            .collect()
    }

    /// Keeps every non-relational declared constraint and only the relational
    /// ones whose index is listed in `keep`. Derived entries are dropped.
    pub fn restrict_relational(&self, keep: &[usize]) -> DeploymentSpec {
        DeploymentSpec {
            constraints: self
                .constraints
                .iter()
                .enumerate()
                .filter(|(i, c)| !c.is_relational() || keep.contains(i))
                .map(|(_, c)| c.clone())
                .collect(),
            derived: Vec::new(),
        }
    }
}

/// A deployment host: its model, class and aggregated capacities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeDescriptor {
    pub id: NodeId,
    pub model: FeatureModel,
    pub class: NodeClass,
    /// Total amount per resource type. Empty for elastic nodes.
    pub capacities: BTreeMap<String, u64>,
    offered: BTreeSet<String>,
}

impl NodeDescriptor {
    /// Builds a descriptor from a node model. Capacities sum the attributes
    /// of the features every node configuration selects (root and mandatory
    /// chain), each scaled by its lower cardinality bound.
    pub fn from_model(model: FeatureModel) -> Result<Self, DeployError> {
        let class = match model.kind {
            ModelKind::DeploymentNode(class) => class,
            ModelKind::Application => return Err(DeployError::NotANodeModel(model.name.clone())),
        };
        let offered: BTreeSet<String> = model.resource_types().into_iter().map(str::to_owned).collect();
        let mut capacities = BTreeMap::new();
        if class == NodeClass::Embedded {
            for r in &offered {
                capacities.insert(r.clone(), 0);
            }
            for id in model.core_features() {
                let feature = model.feature(id.as_str()).expect("core feature exists");
                let instances = u64::from(feature.cardinality.lower.max(1));
                for a in &feature.attributes {
                    *capacities.get_mut(&a.resource).expect("offered") += a.amount * instances;
                }
            }
        }
        Ok(Self {
            id: NodeId::new(model.name.clone()),
            model,
            class,
            capacities,
            offered,
        })
    }

    /// A node whose model is a single root feature carrying the given
    /// resources.
    pub fn with_resources(id: &str, class: NodeClass, resources: &[(&str, u64)]) -> Self {
        let mut model = FeatureModel::new(id, ModelKind::DeploymentNode(class), id.to_lowercase());
        model.features[0].attributes = resources
            .iter()
            .map(|(r, a)| crate::model::Attribute::new(*r, *a))
            .collect();
        Self::from_model(model).expect("node model")
    }

    pub fn offers(&self, resource: &str) -> bool {
        self.offered.contains(resource)
    }

    pub fn offered(&self) -> impl Iterator<Item = &str> {
        self.offered.iter().map(String::as_str)
    }

    pub fn is_embedded(&self) -> bool {
        self.class == NodeClass::Embedded
    }
}

/// Whether `node` offers every resource type `feature` requires. Amounts are
/// not compared here.
///
/// # Panics
///
/// If the feature carries no attributes; only attributed features are ever
/// matched against nodes.
pub fn find_match(feature: &Feature, node: &NodeDescriptor) -> bool {
    assert!(
        feature.has_attributes(),
        "find_match called on `{}`, which has no attributes",
        feature.id
    );
    feature.attributes.iter().all(|a| node.offers(&a.resource))
}

/// Resource types `feature` requires that `node` does not offer.
pub fn missing_resources<'a>(feature: &'a Feature, node: &NodeDescriptor) -> Vec<&'a str> {
    feature
        .attributes
        .iter()
        .filter(|a| !node.offers(&a.resource))
        .map(|a| a.resource.as_str())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ResourceViolation {
    Exceeded {
        node: NodeId,
        resource: String,
        load: u64,
        capacity: u64,
    },
    UnknownResource {
        node: NodeId,
        feature: FeatureId,
        resource: String,
    },
}

impl fmt::Display for ResourceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exceeded {
                node,
                resource,
                load,
                capacity,
            } => write!(f, "{node}: {resource} load {load} exceeds capacity {capacity}"),
            Self::UnknownResource { node, feature, resource } => {
                write!(f, "{node}: `{feature}` requires {resource}, which the node has no capacity for")
            }
        }
    }
}

/// Summed load per resource type of `hosted` features (count times amount).
pub fn node_load(hosted: &[(&Feature, u32)]) -> BTreeMap<String, u64> {
    let mut load = BTreeMap::new();
    for (feature, count) in hosted {
        for a in &feature.attributes {
            *load.entry(a.resource.clone()).or_insert(0) += a.amount * u64::from(*count);
        }
    }
    load
}

/// Checks the resource inequality on `node` and returns the per-resource
/// load on success. Elastic nodes always pass.
pub fn verify_resources(node: &NodeDescriptor, hosted: &[(&Feature, u32)]) -> Result<BTreeMap<String, u64>, ResourceViolation> {
    let load = node_load(hosted);
    if !node.is_embedded() {
        return Ok(load);
    }
    for (feature, _) in hosted {
        for a in &feature.attributes {
            if !node.capacities.contains_key(&a.resource) {
                return Err(ResourceViolation::UnknownResource {
                    node: node.id.clone(),
                    feature: feature.id.clone(),
                    resource: a.resource.clone(),
                });
            }
        }
    }
    for (resource, &amount) in &load {
        let capacity = node.capacities[resource];
        if amount > capacity {
            return Err(ResourceViolation::Exceeded {
                node: node.id.clone(),
                resource: resource.clone(),
                load: amount,
                capacity,
            });
        }
    }
    Ok(load)
}

pub fn resource_verification(node: &NodeDescriptor, hosted: &[(&Feature, u32)]) -> bool {
    verify_resources(node, hosted).is_ok()
}

/// Contradictions and dangling references detectable without search.
pub fn check_spec_consistency(spec: &DeploymentSpec, app: &FeatureModel, nodes: &[NodeDescriptor]) -> ValidationReport {
    let mut report = ValidationReport::default();
    let node_ids: HashSet<&NodeId> = nodes.iter().map(|n| &n.id).collect();

    let mut seen = HashSet::new();
    for c in spec.all() {
        if !seen.insert(c.normalized()) {
            report.push(IssueKind::DuplicateConstraint, format!("duplicate constraint {c}"), None);
        }
        for f in c.features() {
            match app.feature(f.as_str()) {
                None => report.push(IssueKind::DanglingReference, format!("{c} names unknown feature `{f}`"), None),
                Some(feature) if !feature.has_attributes() => report.push(
                    IssueKind::UnhostedFeature,
                    format!("{c} names `{f}`, which has no attributes and is never placed on a node"),
                    None,
                ),
                Some(_) => {}
            }
        }
        match c {
            DeploymentConstraint::HostedBy { node, .. } | DeploymentConstraint::NotHostedBy { node, .. } => {
                if !node_ids.contains(node) {
                    report.push(IssueKind::UnknownNode, format!("{c} names unknown node `{node}`"), None);
                }
            }
            DeploymentConstraint::Colocated(a, b) | DeploymentConstraint::Separated(a, b) => {
                if a == b {
                    report.push(IssueKind::SelfReference, format!("{c} relates a feature to itself"), None);
                }
            }
        }
    }

    let all: Vec<&DeploymentConstraint> = spec.all().collect();
    for (i, c) in all.iter().enumerate() {
        for d in &all[i + 1..] {
            let clash = match (c, d) {
                (DeploymentConstraint::Colocated(..), DeploymentConstraint::Separated(..))
                | (DeploymentConstraint::Separated(..), DeploymentConstraint::Colocated(..)) => {
                    let (mut x, mut y) = (c.features(), d.features());
                    x.sort();
                    y.sort();
                    x == y
                }
                (
                    DeploymentConstraint::HostedBy { node: n1, feature: f1 },
                    DeploymentConstraint::NotHostedBy { node: n2, feature: f2 },
                )
                | (
                    DeploymentConstraint::NotHostedBy { node: n1, feature: f1 },
                    DeploymentConstraint::HostedBy { node: n2, feature: f2 },
                ) => n1 == n2 && f1 == f2,
                _ => false,
            };
            if clash {
                report.push(IssueKind::SpecContradiction, format!("{c} contradicts {d}"), None);
            }
        }
    }
    // Declared pins are conjunctive: a feature runs on exactly one node.
    for (i, c) in spec.constraints.iter().enumerate() {
        let DeploymentConstraint::HostedBy { node: n1, feature: f1 } = c else {
            continue;
        };
        for d in &spec.constraints[i + 1..] {
            if matches!(d, DeploymentConstraint::HostedBy { node: n2, feature: f2 } if f1 == f2 && n1 != n2) {
                report.push(IssueKind::SpecContradiction, format!("{c} contradicts {d}"), None);
            }
        }
    }
    report
}
