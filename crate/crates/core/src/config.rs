//! Configurations and the semantic validity check.
//!
//! [`is_valid_configuration`] is the reference semantics: the solver is
//! tested against a brute-force enumerator that filters with it, so this
//! module deliberately shares nothing with the solver's encoding.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::deploy::{verify_resources, DeploymentConstraint, DeploymentSpec, NodeDescriptor, ResourceViolation};
use crate::error::ReferenceError;
use crate::model::{CrossConstraintKind, Feature, FeatureId, FeatureModel, GroupKind, NodeId};

/// One product: instance counts of selected features plus the node each
/// selected attributed feature is deployed on.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    /// Only selected features appear; a missing entry means count 0.
    pub selection: BTreeMap<FeatureId, u32>,
    pub hosting: BTreeMap<FeatureId, NodeId>,
}

impl Configuration {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn select(mut self, feature: impl Into<FeatureId>, count: u32) -> Self {
        self.set_count(feature.into(), count);
        self
    }

    pub fn host(mut self, feature: impl Into<FeatureId>, node: impl Into<NodeId>) -> Self {
        self.hosting.insert(feature.into(), node.into());
        self
    }

    pub fn set_count(&mut self, feature: FeatureId, count: u32) {
        if count == 0 {
            self.selection.remove(&feature);
        } else {
            self.selection.insert(feature, count);
        }
    }

    pub fn count(&self, feature: &str) -> u32 {
        self.selection.get(feature).copied().unwrap_or(0)
    }

    pub fn is_selected(&self, feature: &str) -> bool {
        self.count(feature) > 0
    }

    pub fn host_of(&self, feature: &str) -> Option<&NodeId> {
        self.hosting.get(feature)
    }

    /// Features hosted on `node`, with their instance counts.
    pub fn hosted_on<'m>(&self, model: &'m FeatureModel, node: &NodeId) -> Vec<(&'m Feature, u32)> {
        self.hosting
            .iter()
            .filter(|(_, n)| *n == node)
            .filter_map(|(f, _)| model.feature(f.as_str()).map(|feature| (feature, self.count(f.as_str()))))
            .collect()
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (id, count) in &self.selection {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{id}")?;
            if *count != 1 {
                write!(f, "x{count}")?;
            }
            if let Some(node) = self.hosting.get(id) {
                write!(f, "@{node}")?;
            }
        }
        Ok(())
    }
}

/// The first rule a configuration breaks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    RootNotSelected,
    CountOutOfRange { feature: FeatureId, count: u32 },
    ParentNotSelected { feature: FeatureId, parent: FeatureId },
    MandatoryMissing { feature: FeatureId },
    ExclusiveGroup { owner: FeatureId, selected: usize },
    Implies { antecedent: FeatureId, consequent: FeatureId },
    Excludes { antecedent: FeatureId, consequent: FeatureId },
    MissingHost { feature: FeatureId },
    UnexpectedHost { feature: FeatureId },
    UnknownNode { feature: FeatureId, node: NodeId },
    HostNotAllowed { feature: FeatureId, node: NodeId },
    Colocated { a: FeatureId, b: FeatureId },
    Separated { a: FeatureId, b: FeatureId },
    Resource(ResourceViolation),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::RootNotSelected => f.write_str("root feature is not selected"),
            Self::CountOutOfRange { feature, count } => write!(f, "`{feature}` has count {count} outside its cardinality"),
            Self::ParentNotSelected { feature, parent } => write!(f, "`{feature}` is selected without its parent `{parent}`"),
            Self::MandatoryMissing { feature } => write!(f, "mandatory feature `{feature}` is missing"),
            Self::ExclusiveGroup { owner, selected } => {
                write!(f, "exclusive group under `{owner}` has {selected} members selected")
            }
            Self::Implies { antecedent, consequent } => write!(f, "`{antecedent}` implies `{consequent}`"),
            Self::Excludes { antecedent, consequent } => write!(f, "`{antecedent}` excludes `{consequent}`"),
            Self::MissingHost { feature } => write!(f, "`{feature}` is selected but not hosted"),
            Self::UnexpectedHost { feature } => write!(f, "`{feature}` is hosted but not a selected attributed feature"),
            Self::UnknownNode { feature, node } => write!(f, "`{feature}` is hosted on unknown node `{node}`"),
            Self::HostNotAllowed { feature, node } => write!(f, "`{feature}` may not be hosted on `{node}`"),
            Self::Colocated { a, b } => write!(f, "`{a}` and `{b}` must share a node"),
            Self::Separated { a, b } => write!(f, "`{a}` and `{b}` must be on different nodes"),
            Self::Resource(v) => v.fmt(f),
        }
    }
}

fn check_references(model: &FeatureModel, config: &Configuration) -> Result<(), ReferenceError> {
    for id in config.selection.keys().chain(config.hosting.keys()) {
        if !model.contains(id.as_str()) {
            return Err(ReferenceError::UnknownFeature(id.clone()));
        }
    }
    Ok(())
}

/// Tree, group, cardinality and cross-tree rules over the selection alone.
pub fn selection_violation(model: &FeatureModel, selection: &BTreeMap<FeatureId, u32>) -> Option<Violation> {
    let count = |id: &FeatureId| selection.get(id).copied().unwrap_or(0);

    if count(&model.root) == 0 {
        return Some(Violation::RootNotSelected);
    }
    for f in &model.features {
        let c = count(&f.id);
        if c > 0 && !f.cardinality.selected_counts().contains(&c) {
            return Some(Violation::CountOutOfRange {
                feature: f.id.clone(),
                count: c,
            });
        }
        if let Some(parent) = &f.parent {
            let parent_selected = count(parent) > 0;
            if c > 0 && !parent_selected {
                return Some(Violation::ParentNotSelected {
                    feature: f.id.clone(),
                    parent: parent.clone(),
                });
            }
            if c == 0 && parent_selected && f.is_mandatory_child() {
                return Some(Violation::MandatoryMissing { feature: f.id.clone() });
            }
        }
    }
    for group in &model.groups {
        if group.kind == GroupKind::Exclusive && count(&group.owner) > 0 {
            let selected = group.members.iter().filter(|m| count(m) > 0).count();
            if selected != 1 {
                return Some(Violation::ExclusiveGroup {
                    owner: group.owner.clone(),
                    selected,
                });
            }
        }
    }
    for c in &model.constraints {
        let (a, b) = (count(&c.antecedent) > 0, count(&c.consequent) > 0);
        let broken = match c.kind {
            CrossConstraintKind::Implies => a && !b,
            CrossConstraintKind::Excludes => a && b,
        };
        if broken {
            let (antecedent, consequent) = (c.antecedent.clone(), c.consequent.clone());
            return Some(match c.kind {
                CrossConstraintKind::Implies => Violation::Implies { antecedent, consequent },
                CrossConstraintKind::Excludes => Violation::Excludes { antecedent, consequent },
            });
        }
    }
    None
}

fn host_allowed(spec: &DeploymentSpec, feature: &FeatureId, node: &NodeId) -> bool {
    let mut pins = Vec::new();
    let mut candidates = Vec::new();
    for c in &spec.constraints {
        if let DeploymentConstraint::HostedBy { node: n, feature: f } = c {
            if f == feature {
                pins.push(n);
            }
        }
    }
    for c in spec.all() {
        match c {
            DeploymentConstraint::NotHostedBy { node: n, feature: f } if f == feature && n == node => return false,
            DeploymentConstraint::HostedBy { node: n, feature: f } if f == feature => candidates.push(n),
            _ => {}
        }
    }
    if !pins.is_empty() {
        pins.iter().all(|p| *p == node)
    } else if !candidates.is_empty() {
        candidates.contains(&node)
    } else {
        true
    }
}

/// Every rule a valid configuration must satisfy, checked in order; `None`
/// means the configuration is valid.
pub fn configuration_violation(
    model: &FeatureModel,
    nodes: &[NodeDescriptor],
    spec: &DeploymentSpec,
    config: &Configuration,
) -> Result<Option<Violation>, ReferenceError> {
    check_references(model, config)?;
    if let Some(v) = selection_violation(model, &config.selection) {
        return Ok(Some(v));
    }

    let by_node: HashMap<&NodeId, &NodeDescriptor> = nodes.iter().map(|n| (&n.id, n)).collect();
    for f in &model.features {
        let selected = config.is_selected(f.id.as_str());
        let host = config.host_of(f.id.as_str());
        match (selected && f.has_attributes(), host) {
            (true, None) => return Ok(Some(Violation::MissingHost { feature: f.id.clone() })),
            (false, Some(_)) => return Ok(Some(Violation::UnexpectedHost { feature: f.id.clone() })),
            (true, Some(node)) => {
                if !by_node.contains_key(node) {
                    return Ok(Some(Violation::UnknownNode {
                        feature: f.id.clone(),
                        node: node.clone(),
                    }));
                }
                if !host_allowed(spec, &f.id, node) {
                    return Ok(Some(Violation::HostNotAllowed {
                        feature: f.id.clone(),
                        node: node.clone(),
                    }));
                }
                // Even a declared pin cannot place a feature on a node
                // lacking one of its resource types.
                if let Some(a) = f.attributes.iter().find(|a| !by_node[node].offers(&a.resource)) {
                    return Ok(Some(Violation::Resource(ResourceViolation::UnknownResource {
                        node: node.clone(),
                        feature: f.id.clone(),
                        resource: a.resource.clone(),
                    })));
                }
            }
            (false, None) => {}
        }
    }

    for c in spec.all() {
        match c {
            DeploymentConstraint::Colocated(a, b) | DeploymentConstraint::Separated(a, b) => {
                let (Some(ha), Some(hb)) = (config.host_of(a.as_str()), config.host_of(b.as_str())) else {
                    continue;
                };
                let colocated = matches!(c, DeploymentConstraint::Colocated(..));
                if colocated && ha != hb {
                    return Ok(Some(Violation::Colocated { a: a.clone(), b: b.clone() }));
                }
                if !colocated && ha == hb {
                    return Ok(Some(Violation::Separated { a: a.clone(), b: b.clone() }));
                }
            }
            _ => {}
        }
    }

    for node in nodes.iter().filter(|n| n.is_embedded()) {
        let hosted = config.hosted_on(model, &node.id);
        if let Err(v) = verify_resources(node, &hosted) {
            return Ok(Some(Violation::Resource(v)));
        }
    }
    Ok(None)
}

/// Whether `config` is a valid product of `model` deployed on `nodes` under
/// `spec`, including the resource inequality on every embedded node.
pub fn is_valid_configuration(
    model: &FeatureModel,
    nodes: &[NodeDescriptor],
    spec: &DeploymentSpec,
    config: &Configuration,
) -> Result<bool, ReferenceError> {
    configuration_violation(model, nodes, spec, config).map(|v| v.is_none())
}
