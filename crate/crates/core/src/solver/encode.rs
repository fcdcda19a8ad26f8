use std::collections::HashMap;

use super::{EncodeDiagnostic, EncodedConstraint, Encoding, ResourceTerm, VarId, VarRole, VariableSpace, UNHOSTED};
use crate::deploy::{DeploymentConstraint, NodeDescriptor};
use crate::matcher::AugmentedModel;
use crate::model::{Cardinality, CrossConstraintKind, FeatureId, GroupKind, NodeId};

/// Encodes the augmented model over `nodes`. Variables are created in tree
/// pre-order (selection, then count) followed by the hosting variables,
/// which is also the search order.
pub fn encode(augmented: &AugmentedModel, nodes: &[NodeDescriptor]) -> Encoding {
    let model = &augmented.base;
    let spec = &augmented.spec;
    let mut space = VariableSpace {
        features: model.features.iter().map(|f| f.id.clone()).collect(),
        nodes: nodes.iter().map(|n| n.id.clone()).collect(),
        ..Default::default()
    };
    let index: HashMap<&FeatureId, usize> = model.features.iter().enumerate().map(|(i, f)| (&f.id, i)).collect();
    let node_index: HashMap<&NodeId, i64> = nodes.iter().enumerate().map(|(i, n)| (&n.id, i as i64)).collect();
    let mut constraints = Vec::new();
    let mut diagnostics = Vec::new();

    for f in &model.features {
        let selection = space.push(format!("sel[{}]", f.id), VarRole::Selection(space.selection.len()), vec![0, 1]);
        let feature_index = space.selection.len();
        space.selection.push(selection);
        let count = (f.cardinality != Cardinality::ONE).then(|| {
            let mut domain = vec![0];
            domain.extend(f.cardinality.selected_counts().map(i64::from));
            space.push(format!("count[{}]", f.id), VarRole::Count(feature_index), domain)
        });
        space.count.push(count);
        if let Some(count) = count {
            constraints.push(EncodedConstraint::CountChannel { selection, count });
        }
    }

    let core = model.core_features();
    for (i, f) in model.features.iter().enumerate() {
        if !f.has_attributes() {
            space.hosting.push(None);
            continue;
        }
        let mut candidates = Vec::new();
        let mut excluded = Vec::new();
        let mut pinned_to: Vec<&NodeId> = spec
            .constraints
            .iter()
            .filter_map(|c| match c {
                DeploymentConstraint::HostedBy { node, feature } if feature == &f.id => Some(node),
                _ => None,
            })
            .collect();
        pinned_to.sort();
        pinned_to.dedup();
        // Pins are conjunctive, so only a single known pinned node survives.
        let pins: Vec<i64> = match pinned_to.as_slice() {
            [only] => node_index.get(only).copied().into_iter().collect(),
            _ => Vec::new(),
        };
        let pinned = !pinned_to.is_empty();
        for c in spec.all() {
            match c {
                DeploymentConstraint::HostedBy { node, feature } if feature == &f.id => {
                    candidates.extend(node_index.get(node).copied())
                }
                DeploymentConstraint::NotHostedBy { node, feature } if feature == &f.id => {
                    excluded.extend(node_index.get(node).copied())
                }
                _ => {}
            }
        }
        let base: Vec<i64> = if pinned {
            pins.clone()
        } else if spec.all().any(|c| matches!(c, DeploymentConstraint::HostedBy { feature, .. } if feature == &f.id)) {
            candidates
        } else {
            (0..nodes.len() as i64).collect()
        };
        let mut domain = vec![UNHOSTED];
        for n in base {
            if excluded.contains(&n) || domain.contains(&n) {
                continue;
            }
            let node = &nodes[n as usize];
            if let Some(a) = f.attributes.iter().find(|a| !node.offers(&a.resource)) {
                diagnostics.push(EncodeDiagnostic::UnknownResource {
                    feature: f.id.clone(),
                    node: node.id.clone(),
                    resource: a.resource.clone(),
                });
                continue;
            }
            domain.push(n);
        }
        domain.sort_unstable();
        if domain.len() == 1 && core.contains(&f.id) {
            diagnostics.push(EncodeDiagnostic::NoFeasibleHost { feature: f.id.clone() });
        }
        let host = space.push(format!("host[{}]", f.id), VarRole::Hosting(i), domain);
        space.hosting.push(Some(host));
        constraints.push(EncodedConstraint::HostChannel {
            selection: space.selection[i],
            host,
        });
        if pinned {
            constraints.push(EncodedConstraint::HostedPin { host, allowed: pins });
        }
    }

    if let Some(&root) = index.get(&model.root) {
        constraints.push(EncodedConstraint::Root {
            selection: space.selection[root],
        });
    }
    for (i, f) in model.features.iter().enumerate() {
        let Some(parent) = f.parent.as_ref().and_then(|p| index.get(p)) else {
            continue;
        };
        let (child, parent) = (space.selection[i], space.selection[*parent]);
        constraints.push(EncodedConstraint::TreeLink { child, parent });
        if f.is_mandatory_child() {
            constraints.push(EncodedConstraint::MandatoryLink { parent, child });
        }
    }
    for group in model.groups.iter().filter(|g| g.kind == GroupKind::Exclusive) {
        let Some(&owner) = index.get(&group.owner) else {
            continue;
        };
        constraints.push(EncodedConstraint::XorExactlyOne {
            owner: space.selection[owner],
            members: group
                .members
                .iter()
                .filter_map(|m| index.get(m))
                .map(|&m| space.selection[m])
                .collect(),
        });
    }
    for c in &model.constraints {
        let (Some(&a), Some(&b)) = (index.get(&c.antecedent), index.get(&c.consequent)) else {
            continue;
        };
        let (antecedent, consequent) = (space.selection[a], space.selection[b]);
        constraints.push(match c.kind {
            CrossConstraintKind::Implies => EncodedConstraint::Implies { antecedent, consequent },
            CrossConstraintKind::Excludes => EncodedConstraint::Excludes { antecedent, consequent },
        });
    }

    let host_of = |id: &FeatureId| -> Option<VarId> { index.get(id).and_then(|&i| space.hosting[i]) };
    for c in spec.all() {
        match c {
            DeploymentConstraint::Colocated(a, b) | DeploymentConstraint::Separated(a, b) => {
                let (Some(a), Some(b)) = (host_of(a), host_of(b)) else {
                    continue;
                };
                constraints.push(if matches!(c, DeploymentConstraint::Colocated(..)) {
                    EncodedConstraint::ColocatedEq { a, b }
                } else {
                    EncodedConstraint::SeparatedNeq { a, b }
                });
            }
            _ => {}
        }
    }

    for (n, node) in nodes.iter().enumerate().filter(|(_, n)| n.is_embedded()) {
        for (resource, &capacity) in &node.capacities {
            let terms: Vec<ResourceTerm> = model
                .features
                .iter()
                .enumerate()
                .filter_map(|(i, f)| {
                    let host = space.hosting[i]?;
                    let amount = f.amount_of(resource)?;
                    space.vars[host.0].domain.contains(&(n as i64)).then_some(ResourceTerm {
                        host,
                        count: space.count[i],
                        amount,
                    })
                })
                .filter(|t| t.amount > 0)
                .collect();
            if !terms.is_empty() {
                constraints.push(EncodedConstraint::ResourceSumLeq {
                    node: n as i64,
                    resource: resource.clone(),
                    terms,
                    capacity,
                });
            }
        }
    }

    Encoding {
        space,
        constraints,
        diagnostics,
    }
}
