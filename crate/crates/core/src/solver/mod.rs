//! All-solutions constraint engine.
//!
//! [`encode`] turns an augmented model into integer variables and
//! constraints; [`enumerate`] lists every solution by backtracking with
//! propagation to a fixpoint after each decision. [`brute_force_enumerate`]
//! is an independent oracle that walks the whole candidate space and
//! filters with [`crate::is_valid_configuration`].

mod brute;
mod encode;
mod search;

pub use brute::{brute_force_enumerate, brute_force_space, DEFAULT_BRUTE_FORCE_BOUND};
pub use encode::encode;
pub use search::{enumerate, Enumeration};

use std::fmt;

use crate::model::{FeatureId, NodeId};

/// Hosting value meaning "not deployed" (the feature is unselected).
pub const UNHOSTED: i64 = -1;

/// Default cap on the number of solutions one enumeration returns.
pub const DEFAULT_SOLUTION_LIMIT: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarRole {
    /// 0/1: whether the feature is selected.
    Selection(usize),
    /// 0 when unselected, otherwise an instance count in the cardinality.
    Count(usize),
    /// [`UNHOSTED`] when unselected, otherwise a node index.
    Hosting(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub role: VarRole,
    pub domain: Vec<i64>,
}

/// Variables of one encoded problem, indexed by feature position.
#[derive(Clone, Debug, Default)]
pub struct VariableSpace {
    pub vars: Vec<Variable>,
    pub features: Vec<FeatureId>,
    pub nodes: Vec<NodeId>,
    pub selection: Vec<VarId>,
    /// Present for features whose cardinality is not `[1..1]`.
    pub count: Vec<Option<VarId>>,
    /// Present for attributed features.
    pub hosting: Vec<Option<VarId>>,
}

impl VariableSpace {
    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub(crate) fn push(&mut self, name: String, role: VarRole, domain: Vec<i64>) -> VarId {
        self.vars.push(Variable { name, role, domain });
        VarId(self.vars.len() - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Root,
    TreeLink,
    MandatoryLink,
    XorExactlyOne,
    Implies,
    Excludes,
    CountChannel,
    HostChannel,
    ColocatedEq,
    SeparatedNeq,
    HostedPin,
    ResourceSumLeq,
}

/// One feature's contribution to a node's resource sum: `amount` times its
/// instance count whenever it is hosted on that node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceTerm {
    pub host: VarId,
    pub count: Option<VarId>,
    pub amount: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncodedConstraint {
    Root { selection: VarId },
    /// child selected => parent selected
    TreeLink { child: VarId, parent: VarId },
    /// parent selected => child selected
    MandatoryLink { parent: VarId, child: VarId },
    XorExactlyOne { owner: VarId, members: Vec<VarId> },
    Implies { antecedent: VarId, consequent: VarId },
    Excludes { antecedent: VarId, consequent: VarId },
    /// selection = 0 <=> count = 0
    CountChannel { selection: VarId, count: VarId },
    /// selection = 0 <=> host = UNHOSTED
    HostChannel { selection: VarId, host: VarId },
    ColocatedEq { a: VarId, b: VarId },
    SeparatedNeq { a: VarId, b: VarId },
    HostedPin { host: VarId, allowed: Vec<i64> },
    ResourceSumLeq {
        node: i64,
        resource: String,
        terms: Vec<ResourceTerm>,
        capacity: u64,
    },
}

impl EncodedConstraint {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Self::Root { .. } => ConstraintKind::Root,
            Self::TreeLink { .. } => ConstraintKind::TreeLink,
            Self::MandatoryLink { .. } => ConstraintKind::MandatoryLink,
            Self::XorExactlyOne { .. } => ConstraintKind::XorExactlyOne,
            Self::Implies { .. } => ConstraintKind::Implies,
            Self::Excludes { .. } => ConstraintKind::Excludes,
            Self::CountChannel { .. } => ConstraintKind::CountChannel,
            Self::HostChannel { .. } => ConstraintKind::HostChannel,
            Self::ColocatedEq { .. } => ConstraintKind::ColocatedEq,
            Self::SeparatedNeq { .. } => ConstraintKind::SeparatedNeq,
            Self::HostedPin { .. } => ConstraintKind::HostedPin,
            Self::ResourceSumLeq { .. } => ConstraintKind::ResourceSumLeq,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EncodeDiagnostic {
    /// A feature selected in every product has no node it may run on.
    NoFeasibleHost { feature: FeatureId },
    /// A node was dropped from a feature's hosting domain because it does
    /// not offer one of the feature's resource types.
    UnknownResource { feature: FeatureId, node: NodeId, resource: String },
}

impl fmt::Display for EncodeDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoFeasibleHost { feature } => {
                write!(f, "no feasible host for `{feature}`, which every configuration selects")
            }
            Self::UnknownResource { feature, node, resource } => {
                write!(f, "`{feature}` cannot run on {node}: the node offers no {resource}")
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Encoding {
    pub space: VariableSpace,
    pub constraints: Vec<EncodedConstraint>,
    pub diagnostics: Vec<EncodeDiagnostic>,
}

impl Encoding {
    pub fn count_kind(&self, kind: ConstraintKind) -> usize {
        self.constraints.iter().filter(|c| c.kind() == kind).count()
    }

    pub fn is_infeasible(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| matches!(d, EncodeDiagnostic::NoFeasibleHost { .. }))
    }
}
