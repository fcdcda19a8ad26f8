use std::fmt::Write;

use crate::deploy::DeploymentSpec;
use crate::model::{Feature, FeatureModel, GroupKind, ModelKind, Variability};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn header(out: &mut String, feature: &Feature, indent: usize, in_group: bool) {
    let keyword = if !in_group && feature.variability == Variability::Mandatory {
        "mandatory"
    } else {
        "optional"
    };
    let _ = write!(out, "{:indent$}{keyword} {}", "", feature.id, indent = indent);
    if feature.name != feature.id.as_str() {
        let _ = write!(out, " as {}", quote(&feature.name));
    }
    if feature.cardinality.lower != 1 || feature.cardinality.upper != 1 {
        let _ = write!(out, " {}", feature.cardinality);
    }
    if !feature.attributes.is_empty() {
        let attrs: Vec<String> = feature
            .attributes
            .iter()
            .map(|a| format!("{}={}", a.resource, a.amount))
            .collect();
        let _ = write!(out, " ({})", attrs.join(", "));
    }
}

fn emit(out: &mut String, model: &FeatureModel, feature: &Feature, indent: usize, in_group: bool) {
    header(out, feature, indent, in_group);
    let children: Vec<&Feature> = model
        .children(feature.id.as_str())
        .filter(|c| !c.is_node_feature)
        .collect();
    if children.is_empty() {
        out.push('\n');
        return;
    }
    out.push_str(" {\n");
    let mut emitted_groups = Vec::new();
    for child in &children {
        match child.group {
            None => emit(out, model, child, indent + 2, false),
            Some(g) if emitted_groups.contains(&g) => {}
            Some(g) => {
                emitted_groups.push(g);
                let group = &model.groups[g];
                let keyword = match group.kind {
                    GroupKind::Exclusive => "xor",
                    GroupKind::InclusiveOr => "or",
                };
                let _ = writeln!(out, "{:indent$}{keyword} {{", "", indent = indent + 2);
                for member in &group.members {
                    if let Some(m) = model.feature(member.as_str()) {
                        emit(out, model, m, indent + 4, true);
                    }
                }
                let _ = writeln!(out, "{:indent$}}}", "", indent = indent + 2);
            }
        }
    }
    let _ = writeln!(out, "{:indent$}}}", "", indent = indent);
}

/// Canonical text of `model`. Node features grafted in by the matcher have
/// no concrete syntax and are left out.
pub fn serialize_model(model: &FeatureModel) -> String {
    let mut out = String::new();
    let _ = write!(out, "model {}", model.name);
    if let ModelKind::DeploymentNode(class) = model.kind {
        let _ = write!(out, " class {}", class.keyword());
    }
    out.push_str(" {\n");
    if let Some(root) = model.root_feature() {
        emit(&mut out, model, root, 2, false);
    }
    out.push_str("}\n");
    if !model.constraints.is_empty() {
        out.push_str("constraints {\n");
        for c in &model.constraints {
            let _ = writeln!(out, "  {} {} {};", c.antecedent, c.kind.keyword(), c.consequent);
        }
        out.push_str("}\n");
    }
    out
}

/// Text of the declared constraints of `spec`.
pub fn serialize_spec(spec: &DeploymentSpec) -> String {
    let mut out = String::from("deploy {\n");
    for c in &spec.constraints {
        let _ = writeln!(out, "  {c};");
    }
    out.push_str("}\n");
    out
}
