//! Extended feature models: a rooted feature tree with groups, attributes,
//! cardinalities and cross-tree constraints.
//!
//! The same structure describes an application and every deployment node.
//! Node models differ only in their [`ModelKind`], which carries the node
//! class (embedded nodes have finite capacities, elastic nodes do not).

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::span::{SourceSpan, SpanTable};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Identifier of a feature inside one model.
    FeatureId
);
string_id!(
    /// Identifier of a deployment node (the name of its node model).
    NodeId
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeClass {
    /// Finite capacities; subject to the resource inequality.
    Embedded,
    /// On-demand resources; treated as unbounded.
    Elastic,
}

impl NodeClass {
    pub fn keyword(self) -> &'static str {
        match self {
            NodeClass::Embedded => "embedded",
            NodeClass::Elastic => "elastic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Application,
    DeploymentNode(NodeClass),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variability {
    Mandatory,
    Optional,
}

/// Allowed instance-count range `[lower, upper]` of a feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Cardinality {
    pub lower: u32,
    pub upper: u32,
}

impl Cardinality {
    pub const ONE: Cardinality = Cardinality { lower: 1, upper: 1 };

    pub fn new(lower: u32, upper: u32) -> Self {
        Self { lower, upper }
    }

    pub fn is_well_formed(&self) -> bool {
        self.upper >= 1 && self.lower <= self.upper
    }

    /// Instance counts a selected feature may take. A count of zero always
    /// means "not selected", so the range starts at one even for `[0..n]`.
    pub fn selected_counts(&self) -> std::ops::RangeInclusive<u32> {
        self.lower.max(1)..=self.upper
    }
}

impl Default for Cardinality {
    fn default() -> Self {
        Self::ONE
    }
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}..{}]", self.lower, self.upper)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Exactly one member is selected whenever the owner is.
    Exclusive,
    /// Any subset of members, including none, may be selected.
    InclusiveOr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub owner: FeatureId,
    pub kind: GroupKind,
    pub members: Vec<FeatureId>,
}

/// A quantified resource requirement (application) or offering (node).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Attribute {
    pub resource: String,
    pub amount: u64,
}

impl Attribute {
    pub fn new(resource: impl Into<String>, amount: u64) -> Self {
        Self {
            resource: resource.into(),
            amount,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CrossConstraintKind {
    Implies,
    Excludes,
}

impl CrossConstraintKind {
    pub fn keyword(self) -> &'static str {
        match self {
            CrossConstraintKind::Implies => "implies",
            CrossConstraintKind::Excludes => "excludes",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossTreeConstraint {
    pub kind: CrossConstraintKind,
    pub antecedent: FeatureId,
    pub consequent: FeatureId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feature {
    pub id: FeatureId,
    /// Display name; equal to the id unless the model says otherwise.
    pub name: String,
    pub parent: Option<FeatureId>,
    /// Ignored for group members, whose selection is governed by the group.
    pub variability: Variability,
    /// Index into [`FeatureModel::groups`].
    pub group: Option<usize>,
    pub cardinality: Cardinality,
    pub attributes: Vec<Attribute>,
    /// Set only on the node features grafted in by the matcher.
    pub is_node_feature: bool,
}

impl Feature {
    pub fn new(id: impl Into<FeatureId>, parent: Option<FeatureId>, variability: Variability) -> Self {
        let id = id.into();
        Self {
            name: id.to_string(),
            id,
            parent,
            variability,
            group: None,
            cardinality: Cardinality::ONE,
            attributes: Vec::new(),
            is_node_feature: false,
        }
    }

    pub fn has_attributes(&self) -> bool {
        !self.attributes.is_empty()
    }

    pub fn amount_of(&self, resource: &str) -> Option<u64> {
        self.attributes
            .iter()
            .find(|a| a.resource == resource)
            .map(|a| a.amount)
    }

    /// True when the feature is a plain mandatory child, i.e. selected
    /// whenever its parent is.
    pub fn is_mandatory_child(&self) -> bool {
        self.group.is_none() && self.variability == Variability::Mandatory
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureModel {
    pub name: String,
    pub kind: ModelKind,
    pub root: FeatureId,
    /// Features in tree pre-order (the order they were declared in).
    pub features: Vec<Feature>,
    pub groups: Vec<Group>,
    pub constraints: Vec<CrossTreeConstraint>,
    pub spans: SpanTable,
}

impl FeatureModel {
    /// A model consisting of a single mandatory root feature.
    pub fn new(name: impl Into<String>, kind: ModelKind, root: impl Into<FeatureId>) -> Self {
        let root = root.into();
        Self {
            name: name.into(),
            kind,
            features: vec![Feature::new(root.clone(), None, Variability::Mandatory)],
            root,
            groups: Vec::new(),
            constraints: Vec::new(),
            spans: SpanTable::default(),
        }
    }

    pub fn feature(&self, id: &str) -> Option<&Feature> {
        self.features.iter().find(|f| f.id.as_str() == id)
    }

    pub fn feature_mut(&mut self, id: &str) -> Option<&mut Feature> {
        self.features.iter_mut().find(|f| f.id.as_str() == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.feature(id).is_some()
    }

    pub fn root_feature(&self) -> Option<&Feature> {
        self.feature(self.root.as_str())
    }

    pub fn children<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a Feature> + 'a {
        self.features
            .iter()
            .filter(move |f| f.parent.as_ref().is_some_and(|p| p.as_str() == id))
    }

    pub fn node_class(&self) -> Option<NodeClass> {
        match self.kind {
            ModelKind::Application => None,
            ModelKind::DeploymentNode(class) => Some(class),
        }
    }

    pub fn attributed_features(&self) -> impl Iterator<Item = &Feature> {
        self.features.iter().filter(|f| f.has_attributes())
    }

    /// Features selected in every configuration: the root and, transitively,
    /// its plain mandatory children.
    pub fn core_features(&self) -> BTreeSet<FeatureId> {
        let mut core = BTreeSet::new();
        let mut stack = vec![self.root.clone()];
        while let Some(id) = stack.pop() {
            if !core.insert(id.clone()) {
                continue;
            }
            stack.extend(
                self.children(id.as_str())
                    .filter(|c| c.is_mandatory_child())
                    .map(|c| c.id.clone()),
            );
        }
        core
    }

    /// Appends a feature. The caller is responsible for keeping `features`
    /// in pre-order.
    pub fn add_feature(&mut self, feature: Feature) {
        self.features.push(feature);
    }

    /// Declares a group over existing children of `owner` and marks them as
    /// members.
    pub fn add_group(&mut self, owner: impl Into<FeatureId>, kind: GroupKind, members: Vec<FeatureId>) {
        let index = self.groups.len();
        for member in &members {
            if let Some(f) = self.feature_mut(member.as_str()) {
                f.group = Some(index);
                f.variability = Variability::Optional;
            }
        }
        self.groups.push(Group {
            owner: owner.into(),
            kind,
            members,
        });
    }

    pub fn add_constraint(&mut self, kind: CrossConstraintKind, antecedent: impl Into<FeatureId>, consequent: impl Into<FeatureId>) {
        self.constraints.push(CrossTreeConstraint {
            kind,
            antecedent: antecedent.into(),
            consequent: consequent.into(),
        });
    }

    /// Resource types offered or required anywhere in the model.
    pub fn resource_types(&self) -> BTreeSet<&str> {
        self.features
            .iter()
            .flat_map(|f| f.attributes.iter().map(|a| a.resource.as_str()))
            .collect()
    }
}

/// Vocabulary of resource types and their units, shared by application and
/// node models. Names are case-sensitive.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceOntology {
    entries: BTreeMap<String, String>,
}

impl ResourceOntology {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, unit: impl Into<String>) -> Self {
        self.insert(name, unit);
        self
    }

    /// Returns false if the name was already present (the unit is kept).
    pub fn insert(&mut self, name: impl Into<String>, unit: impl Into<String>) -> bool {
        use std::collections::btree_map::Entry;
        match self.entries.entry(name.into()) {
            Entry::Occupied(_) => false,
            Entry::Vacant(v) => {
                v.insert(unit.into());
                true
            }
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn unit(&self, name: &str) -> Option<&str> {
        self.entries.get(name).map(String::as_str)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl Default for ResourceOntology {
    /// CPU in MIPS, RAM and DISK in megabytes, GPU in cores.
    fn default() -> Self {
        Self::empty()
            .with("CPU", "MIPS")
            .with("RAM", "MB")
            .with("GPU", "cores")
            .with("DISK", "MB")
    }
}

impl fmt::Display for ResourceOntology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.names().collect();
        write!(f, "{{{}}}", names.join(", "))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IssueKind {
    DuplicateId,
    MissingRoot,
    RootHasParent,
    ExtraRoot,
    DanglingParent,
    Cycle,
    BadCardinality,
    UnknownResource,
    DuplicateAttribute,
    DanglingReference,
    BadGroup,
    SelfReference,
    MisplacedNodeFeature,
    UnknownNode,
    UnhostedFeature,
    SpecContradiction,
    DuplicateConstraint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationIssue {
    pub kind: IssueKind,
    pub message: String,
    pub span: Option<SourceSpan>,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.span {
            Some(span) => write!(f, "{span}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Ordered list of problems; empty means well-formed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn len(&self) -> usize {
        self.issues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn count(&self, kind: IssueKind) -> usize {
        self.issues.iter().filter(|i| i.kind == kind).count()
    }

    pub(crate) fn push(&mut self, kind: IssueKind, message: impl Into<String>, span: Option<SourceSpan>) {
        self.issues.push(ValidationIssue {
            kind,
            message: message.into(),
            span,
        });
    }
}

/// Structural validation against the default resource ontology.
pub fn validate_model(model: &FeatureModel) -> ValidationReport {
    validate_model_with(model, &ResourceOntology::default())
}

pub fn validate_model_with(model: &FeatureModel, ontology: &ResourceOntology) -> ValidationReport {
    let mut report = ValidationReport::default();
    let span = |id: &str| model.spans.get(id).cloned();

    let mut seen = HashSet::new();
    for f in &model.features {
        if !seen.insert(f.id.as_str()) {
            report.push(IssueKind::DuplicateId, format!("duplicate feature id `{}`", f.id), span(f.id.as_str()));
        }
    }
    let by_id: HashMap<&str, &Feature> = model.features.iter().map(|f| (f.id.as_str(), f)).collect();

    match by_id.get(model.root.as_str()) {
        None => report.push(IssueKind::MissingRoot, format!("root feature `{}` is not declared", model.root), None),
        Some(root) if root.parent.is_some() => report.push(
            IssueKind::RootHasParent,
            format!("root feature `{}` must not have a parent", model.root),
            span(model.root.as_str()),
        ),
        Some(_) => {}
    }

    for f in &model.features {
        match &f.parent {
            None if f.id != model.root => report.push(
                IssueKind::ExtraRoot,
                format!("feature `{}` has no parent but is not the root", f.id),
                span(f.id.as_str()),
            ),
            Some(p) if !by_id.contains_key(p.as_str()) => report.push(
                IssueKind::DanglingParent,
                format!("feature `{}` names unknown parent `{}`", f.id, p),
                span(f.id.as_str()),
            ),
            _ => {}
        }
    }

    // Each cycle is reported once, keyed by its sorted member set.
    let mut cycles: BTreeSet<Vec<&str>> = BTreeSet::new();
    for f in &model.features {
        let mut path: Vec<&str> = vec![f.id.as_str()];
        let mut current = f;
        while let Some(parent) = current.parent.as_ref().and_then(|p| by_id.get(p.as_str())) {
            if let Some(pos) = path.iter().position(|id| *id == parent.id.as_str()) {
                let mut members = path[pos..].to_vec();
                members.sort_unstable();
                cycles.insert(members);
                break;
            }
            path.push(parent.id.as_str());
            current = parent;
        }
    }
    for members in cycles {
        report.push(
            IssueKind::Cycle,
            format!("parent cycle through {}", members.join(" -> ")),
            span(members[0]),
        );
    }

    for f in &model.features {
        let c = f.cardinality;
        if !c.is_well_formed() {
            report.push(
                IssueKind::BadCardinality,
                format!("feature `{}` has malformed cardinality {c}", f.id),
                span(f.id.as_str()),
            );
        } else if f.is_mandatory_child() && c.lower == 0 {
            report.push(
                IssueKind::BadCardinality,
                format!("mandatory feature `{}` has lower bound 0 in {c}", f.id),
                span(f.id.as_str()),
            );
        }

        let mut resources = HashSet::new();
        for a in &f.attributes {
            if !ontology.contains(&a.resource) {
                report.push(
                    IssueKind::UnknownResource,
                    format!(
                        "feature `{}` uses resource type `{}` which is not in the ontology {ontology}",
                        f.id, a.resource
                    ),
                    span(f.id.as_str()),
                );
            }
            if !resources.insert(a.resource.as_str()) {
                report.push(
                    IssueKind::DuplicateAttribute,
                    format!("feature `{}` declares `{}` twice", f.id, a.resource),
                    span(f.id.as_str()),
                );
            }
        }

        if f.is_node_feature && model.kind != ModelKind::Application {
            report.push(
                IssueKind::MisplacedNodeFeature,
                format!("node feature `{}` inside a node model", f.id),
                span(f.id.as_str()),
            );
        }

        if let Some(g) = f.group {
            let ok = model
                .groups
                .get(g)
                .is_some_and(|group| group.members.contains(&f.id));
            if !ok {
                report.push(
                    IssueKind::BadGroup,
                    format!("feature `{}` refers to a group it is not a member of", f.id),
                    span(f.id.as_str()),
                );
            }
        }
    }

    for (index, group) in model.groups.iter().enumerate() {
        if !by_id.contains_key(group.owner.as_str()) {
            report.push(
                IssueKind::DanglingReference,
                format!("group owner `{}` does not exist", group.owner),
                None,
            );
        }
        if group.members.len() < 2 {
            report.push(
                IssueKind::BadGroup,
                format!("group under `{}` needs at least two members", group.owner),
                span(group.owner.as_str()),
            );
        }
        for m in &group.members {
            match by_id.get(m.as_str()) {
                None => report.push(
                    IssueKind::DanglingReference,
                    format!("group member `{m}` does not exist"),
                    span(group.owner.as_str()),
                ),
                Some(f) if f.parent.as_ref() != Some(&group.owner) || f.group != Some(index) => report.push(
                    IssueKind::BadGroup,
                    format!("group member `{m}` is not a child of `{}` bound to this group", group.owner),
                    span(m.as_str()),
                ),
                Some(_) => {}
            }
        }
    }

    for c in &model.constraints {
        for id in [&c.antecedent, &c.consequent] {
            if !by_id.contains_key(id.as_str()) {
                report.push(
                    IssueKind::DanglingReference,
                    format!("constraint `{} {} {}` names unknown feature `{id}`", c.antecedent, c.kind.keyword(), c.consequent),
                    None,
                );
            }
        }
        if c.antecedent == c.consequent {
            report.push(
                IssueKind::SelfReference,
                format!("constraint relates `{}` to itself", c.antecedent),
                span(c.antecedent.as_str()),
            );
        }
    }

    report
}
