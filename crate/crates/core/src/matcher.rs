//! The matching algorithm: graft one mandatory node feature per deployment
//! node under the application root, derive hosting candidates and
//! exclusions by ontology matching, then hand the augmented model to the
//! solver, which enforces the resource inequality per configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::{Duration, Instant};

use crate::config::Configuration;
use crate::deploy::{check_spec_consistency, find_match, missing_resources, node_load, DeploymentConstraint, DeploymentSpec, NodeDescriptor};
use crate::error::{MatchError, ReferenceError};
use crate::model::{validate_model_with, Feature, FeatureId, FeatureModel, NodeId, ResourceOntology, Variability};
use crate::solver::{self, encode, enumerate, EncodeDiagnostic, DEFAULT_SOLUTION_LIMIT};

/// A copy of the application model with node features grafted under the
/// root and the deployment spec extended with derived constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentedModel {
    pub base: FeatureModel,
    /// Injected node features, one per distinct node, in node order.
    pub node_features: Vec<FeatureId>,
    /// Declared constraints plus the derived `HostedBy`/`NotHostedBy` ones.
    pub spec: DeploymentSpec,
    /// Per node, the attributed features that matched it.
    pub matched: BTreeMap<NodeId, Vec<FeatureId>>,
}

impl AugmentedModel {
    /// Declared and derived constraints, declared first.
    pub fn derived_constraints(&self) -> impl Iterator<Item = &DeploymentConstraint> {
        self.spec.all()
    }

    /// Builds the augmented model. Nodes listed twice are grafted once.
    pub fn build(app: &FeatureModel, nodes: &[NodeDescriptor], spec: &DeploymentSpec) -> Result<Self, MatchError> {
        let mut base = app.clone();
        let mut augmented_spec = spec.clone();
        let mut node_features = Vec::new();
        let mut matched = BTreeMap::new();

        for node in nodes {
            let node_feature = FeatureId::new(node.id.as_str());
            match base.feature(node_feature.as_str()) {
                Some(f) if f.is_node_feature => continue,
                Some(_) => return Err(MatchError::NodeIdConflict(node.id.clone())),
                None => {}
            }
            let mut feature = Feature::new(node_feature.clone(), Some(base.root.clone()), Variability::Mandatory);
            feature.is_node_feature = true;
            base.add_feature(feature);
            node_features.push(node_feature);

            let mut hosted = Vec::new();
            for f in base.attributed_features() {
                if spec.has_declared_hosted_by(&node.id, &f.id) {
                    continue;
                }
                if find_match(f, node) {
                    augmented_spec
                        .derived
                        .push(DeploymentConstraint::hosted_by(node.id.clone(), f.id.clone()));
                    hosted.push(f.id.clone());
                } else {
                    augmented_spec
                        .derived
                        .push(DeploymentConstraint::not_hosted_by(node.id.clone(), f.id.clone()));
                }
            }
            matched.insert(node.id.clone(), hosted);
        }
        Ok(Self {
            base,
            node_features,
            spec: augmented_spec,
            matched,
        })
    }
}

#[derive(Clone, Debug)]
pub struct MatchOptions {
    /// Maximum number of configurations to collect.
    pub limit: usize,
    pub ontology: ResourceOntology,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            limit: DEFAULT_SOLUTION_LIMIT,
            ontology: ResourceOntology::default(),
        }
    }
}

/// Count of configurations under one subset of the relational constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetCount {
    pub label: String,
    /// Indices into the declared constraints of the spec.
    pub constraints: Vec<usize>,
    pub count: usize,
    pub truncated: bool,
}

#[derive(Clone, Debug, Default)]
pub struct SolutionStats {
    pub count: usize,
    pub elapsed: Duration,
    pub truncated: bool,
    pub subset_counts: Vec<SubsetCount>,
}

/// Load per resource type on each embedded node, for one configuration.
pub type NodeUsage = BTreeMap<NodeId, BTreeMap<String, u64>>;

#[derive(Clone, Debug)]
pub struct SolutionSet {
    /// Sorted and free of duplicates.
    pub configurations: Vec<Configuration>,
    /// Parallel to `configurations`.
    pub usage: Vec<NodeUsage>,
    pub stats: SolutionStats,
    pub diagnostics: Vec<EncodeDiagnostic>,
    pub augmented: AugmentedModel,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.configurations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configurations.is_empty()
    }

    /// Largest load observed per embedded node and resource type.
    pub fn peak_usage(&self) -> NodeUsage {
        let mut peak: NodeUsage = BTreeMap::new();
        for usage in &self.usage {
            for (node, load) in usage {
                let entry = peak.entry(node.clone()).or_default();
                for (r, &amount) in load {
                    let slot = entry.entry(r.clone()).or_insert(0);
                    *slot = (*slot).max(amount);
                }
            }
        }
        peak
    }
}

fn check_inputs(app: &FeatureModel, nodes: &[NodeDescriptor], spec: &DeploymentSpec, options: &MatchOptions) -> Result<(), MatchError> {
    if nodes.is_empty() {
        return Err(MatchError::NoNodes);
    }
    let report = validate_model_with(app, &options.ontology);
    if !report.is_ok() {
        return Err(MatchError::MalformedModel(report));
    }
    let report = check_spec_consistency(spec, app, nodes);
    if !report.is_ok() {
        return Err(MatchError::InconsistentSpec(report));
    }
    Ok(())
}

/// All valid deployment configurations of `app` on `nodes` under `spec`.
pub fn possible_host(app: &FeatureModel, nodes: &[NodeDescriptor], spec: &DeploymentSpec) -> Result<SolutionSet, MatchError> {
    possible_host_with(app, nodes, spec, &MatchOptions::default())
}

pub fn possible_host_with(
    app: &FeatureModel,
    nodes: &[NodeDescriptor],
    spec: &DeploymentSpec,
    options: &MatchOptions,
) -> Result<SolutionSet, MatchError> {
    let start = Instant::now();
    check_inputs(app, nodes, spec, options)?;
    let augmented = AugmentedModel::build(app, nodes, spec)?;
    let encoding = encode(&augmented, nodes);

    let result = if encoding.is_infeasible() {
        solver::Enumeration::default()
    } else {
        enumerate(&encoding, options.limit)
    };

    let usage = result
        .configurations
        .iter()
        .map(|config| {
            nodes
                .iter()
                .filter(|n| n.is_embedded())
                .map(|n| (n.id.clone(), node_load(&config.hosted_on(&augmented.base, &n.id))))
                .collect()
        })
        .collect();

    Ok(SolutionSet {
        stats: SolutionStats {
            count: result.configurations.len(),
            elapsed: start.elapsed(),
            truncated: result.truncated,
            subset_counts: Vec::new(),
        },
        configurations: result.configurations,
        usage,
        diagnostics: encoding.diagnostics,
        augmented,
    })
}

fn subset_label(spec: &DeploymentSpec, subset: &[usize]) -> String {
    if subset.is_empty() {
        return "none".to_owned();
    }
    subset
        .iter()
        .map(|&i| spec.constraints[i].to_string())
        .collect::<Vec<_>>()
        .join(" & ")
}

/// Subsets of the relational constraints of `spec`: all of size at most
/// `max_size`, plus the full set. Hosting constraints stay in every subset.
pub fn relational_subsets(spec: &DeploymentSpec, max_size: usize) -> Vec<Vec<usize>> {
    let relational = spec.relational_indices();
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for mask in 0u64..(1u64 << relational.len()) {
        let subset: Vec<usize> = relational
            .iter()
            .enumerate()
            .filter(|(bit, _)| mask & (1 << bit) != 0)
            .map(|(_, &i)| i)
            .collect();
        if subset.len() <= max_size || subset.len() == relational.len() {
            subsets.push(subset);
        }
    }
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// Configuration counts for each subset from [`relational_subsets`].
pub fn constraint_subset_counts(
    app: &FeatureModel,
    nodes: &[NodeDescriptor],
    spec: &DeploymentSpec,
    max_size: usize,
    options: &MatchOptions,
) -> Result<Vec<SubsetCount>, MatchError> {
    check_inputs(app, nodes, spec, options)?;
    relational_subsets(spec, max_size)
        .into_iter()
        .map(|subset| {
            let restricted = spec.restrict_relational(&subset);
            let set = possible_host_with(app, nodes, &restricted, options)?;
            Ok(SubsetCount {
                label: subset_label(spec, &subset),
                constraints: subset,
                count: set.len(),
                truncated: set.stats.truncated,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Blocker {
    MissingResources(Vec<String>),
    PinnedElsewhere(Vec<NodeId>),
    Capacity { resource: String, needed: u64, capacity: u64 },
    ColocatedWith { other: FeatureId, other_hosts: Vec<NodeId> },
    SeparatedFrom { other: FeatureId },
    /// No single cause was found; the combination of constraints leaves no
    /// valid configuration selecting the feature.
    NoValidConfiguration,
}

impl fmt::Display for Blocker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::MissingResources(rs) => write!(f, "{} missing", rs.join(", ")),
            Self::PinnedElsewhere(ns) => {
                let ns: Vec<_> = ns.iter().map(NodeId::as_str).collect();
                write!(f, "pinned by hostedby to {}", ns.join(", "))
            }
            Self::Capacity { resource, needed, capacity } => {
                write!(f, "needs {needed} {resource}, capacity is {capacity}")
            }
            Self::ColocatedWith { other, other_hosts } => {
                let ns: Vec<_> = other_hosts.iter().map(NodeId::as_str).collect();
                write!(f, "colocated with `{other}`, which can only run on {}", ns.join(", "))
            }
            Self::SeparatedFrom { other } => write!(f, "separated from `{other}`, which is confined to this node"),
            Self::NoValidConfiguration => f.write_str("no valid configuration selects it"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExplanationEntry {
    /// `None` for causes not tied to one node.
    pub node: Option<NodeId>,
    pub blocker: Blocker,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Explanation {
    pub entries: Vec<ExplanationEntry>,
}

impl Explanation {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            match &e.node {
                Some(n) => writeln!(f, "{n}: {}", e.blocker)?,
                None => writeln!(f, "{}", e.blocker)?,
            }
        }
        Ok(())
    }
}

/// Nodes a feature could be placed on judging only by pins and matching.
fn plausible_hosts(feature: &Feature, nodes: &[NodeDescriptor], spec: &DeploymentSpec) -> Vec<NodeId> {
    let pins = pins_of(&feature.id, spec);
    nodes
        .iter()
        .filter(|n| if pins.is_empty() { find_match(feature, n) } else { pins.contains(&n.id) })
        .map(|n| n.id.clone())
        .collect()
}

fn pins_of(feature: &FeatureId, spec: &DeploymentSpec) -> Vec<NodeId> {
    spec.constraints
        .iter()
        .filter_map(|c| match c {
            DeploymentConstraint::HostedBy { node, feature: f } if f == feature => Some(node.clone()),
            _ => None,
        })
        .collect()
}

/// Why `feature` appears in no valid configuration. Empty when some valid
/// configuration selects it.
pub fn explain_infeasibility(
    app: &FeatureModel,
    nodes: &[NodeDescriptor],
    spec: &DeploymentSpec,
    feature: &str,
) -> Result<Explanation, MatchError> {
    let Some(target) = app.feature(feature) else {
        return Err(ReferenceError::UnknownFeature(FeatureId::new(feature)).into());
    };
    let solutions = possible_host(app, nodes, spec)?;
    if solutions.configurations.iter().any(|c| c.is_selected(feature)) {
        return Ok(Explanation::default());
    }

    let mut explanation = Explanation::default();
    if target.has_attributes() {
        let core = app.core_features();
        let pins = pins_of(&target.id, spec);
        for node in nodes {
            let mut blockers = Vec::new();
            if !pins.is_empty() && !pins.contains(&node.id) {
                blockers.push(Blocker::PinnedElsewhere(pins.clone()));
            } else {
                let missing = missing_resources(target, node);
                if !missing.is_empty() && pins.is_empty() {
                    blockers.push(Blocker::MissingResources(missing.into_iter().map(str::to_owned).collect()));
                }
            }
            if node.is_embedded() {
                let instances = u64::from(*target.cardinality.selected_counts().start());
                for a in &target.attributes {
                    let needed = a.amount * instances;
                    let Some(&capacity) = node.capacities.get(&a.resource) else {
                        continue;
                    };
                    if needed > capacity {
                        blockers.push(Blocker::Capacity {
                            resource: a.resource.clone(),
                            needed,
                            capacity,
                        });
                    }
                }
            }
            for c in &spec.constraints {
                let (DeploymentConstraint::Colocated(a, b) | DeploymentConstraint::Separated(a, b)) = c else {
                    continue;
                };
                let other = if a == &target.id {
                    b
                } else if b == &target.id {
                    a
                } else {
                    continue;
                };
                let Some(other_feature) = app.feature(other.as_str()) else {
                    continue;
                };
                if !core.contains(other) {
                    continue;
                }
                let other_hosts = plausible_hosts(other_feature, nodes, spec);
                match c {
                    DeploymentConstraint::Colocated(..) if !other_hosts.contains(&node.id) => {
                        blockers.push(Blocker::ColocatedWith {
                            other: other.clone(),
                            other_hosts,
                        })
                    }
                    DeploymentConstraint::Separated(..) if other_hosts == [node.id.clone()] => {
                        blockers.push(Blocker::SeparatedFrom { other: other.clone() })
                    }
                    _ => {}
                }
            }
            explanation.entries.extend(blockers.into_iter().map(|blocker| ExplanationEntry {
                node: Some(node.id.clone()),
                blocker,
            }));
        }
    }
    if explanation.is_empty() {
        explanation.entries.push(ExplanationEntry {
            node: None,
            blocker: Blocker::NoValidConfiguration,
        });
    }
    Ok(explanation)
}

/// Features in `app` selected by no configuration of `solutions`.
pub fn dead_features(app: &FeatureModel, solutions: &SolutionSet) -> BTreeSet<FeatureId> {
    app.features
        .iter()
        .filter(|f| !solutions.configurations.iter().any(|c| c.is_selected(f.id.as_str())))
        .map(|f| f.id.clone())
        .collect()
}
