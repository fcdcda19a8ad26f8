//! Seeded random scenarios shared by the integration tests.

#![allow(dead_code)]

use std::path::PathBuf;

use fmdeploy::deploy::{DeploymentConstraint, DeploymentSpec, NodeDescriptor};
use fmdeploy::model::{
    Attribute, Cardinality, CrossConstraintKind, Feature, FeatureId, FeatureModel, Group, GroupKind, ModelKind,
    NodeClass, Variability,
};
use fmdeploy::{check_spec_consistency, validate_model};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const RESOURCES: [&str; 3] = ["CPU", "RAM", "GPU"];

pub struct Limits {
    pub features: usize,
    pub max_upper: u32,
    pub nodes: usize,
    pub deployment_constraints: usize,
    pub cross_constraints: usize,
}

pub const SMALL: Limits = Limits {
    features: 12,
    max_upper: 3,
    nodes: 3,
    deployment_constraints: 4,
    cross_constraints: 2,
};

pub struct Scenario {
    pub app: FeatureModel,
    pub nodes: Vec<NodeDescriptor>,
    pub spec: DeploymentSpec,
}

struct Builder<'r> {
    rng: &'r mut StdRng,
    model: FeatureModel,
    budget: usize,
    /// Budget promised to group members not built yet.
    reserved: usize,
    max_upper: u32,
}

impl Builder<'_> {
    fn next_id(&self) -> FeatureId {
        FeatureId::new(format!("f{}", self.model.features.len()))
    }

    fn cardinality(&mut self, mandatory: bool) -> Cardinality {
        if !self.rng.random_bool(0.3) {
            return Cardinality::ONE;
        }
        let upper = self.rng.random_range(1..=self.max_upper);
        let lower = if mandatory {
            self.rng.random_range(1..=upper)
        } else {
            self.rng.random_range(0..=upper)
        };
        Cardinality::new(lower, upper)
    }

    fn attributes(&mut self) -> Vec<Attribute> {
        if !self.rng.random_bool(0.5) {
            return Vec::new();
        }
        let mut attrs = Vec::new();
        for r in RESOURCES {
            let p = if r == "GPU" { 0.15 } else { 0.6 };
            if self.rng.random_bool(p) {
                attrs.push(Attribute::new(r, self.rng.random_range(1..=20)));
            }
        }
        if attrs.is_empty() {
            attrs.push(Attribute::new("CPU", self.rng.random_range(1..=20)));
        }
        attrs
    }

    fn display_name(&mut self, id: &FeatureId) -> String {
        match self.rng.random_range(0..10) {
            0 => format!("Feature {id}"),
            1 => format!("say \"{id}\" \\ again"),
            _ => id.to_string(),
        }
    }

    fn feature(&mut self, parent: &FeatureId, group: Option<usize>) {
        let id = self.next_id();
        self.budget -= 1;
        if group.is_some() {
            self.reserved -= 1;
        }
        let mandatory = group.is_none() && self.rng.random_bool(0.4);
        let variability = if mandatory {
            Variability::Mandatory
        } else {
            Variability::Optional
        };
        let mut f = Feature::new(id.clone(), Some(parent.clone()), variability);
        f.group = group;
        f.name = self.display_name(&id);
        f.cardinality = self.cardinality(mandatory);
        f.attributes = self.attributes();
        self.model.add_feature(f);
        if let Some(g) = group {
            self.model.groups[g].members.push(id.clone());
        }
        self.children(&id);
    }

    /// Children in declaration order; a group reserves its index before its
    /// members are built, as the parser does.
    fn children(&mut self, owner: &FeatureId) {
        while self.budget > self.reserved && self.rng.random_bool(0.55) {
            let free = self.budget - self.reserved;
            if free >= 2 && self.rng.random_bool(0.3) {
                let kind = if self.rng.random_bool(0.5) {
                    GroupKind::Exclusive
                } else {
                    GroupKind::InclusiveOr
                };
                let g = self.model.groups.len();
                self.model.groups.push(Group {
                    owner: owner.clone(),
                    kind,
                    members: Vec::new(),
                });
                let size = self.rng.random_range(2..=3.min(free));
                self.reserved += size;
                for _ in 0..size {
                    self.feature(owner, Some(g));
                }
            } else {
                self.feature(owner, None);
            }
        }
    }
}

/// A valid application model with at most `limits.features` features,
/// canonical enough that serializing and parsing it gives it back.
pub fn random_model(rng: &mut StdRng, limits: &Limits) -> FeatureModel {
    let total = rng.random_range(1..=limits.features);
    let mut b = Builder {
        rng,
        model: FeatureModel::new("app", ModelKind::Application, "f0"),
        budget: total - 1,
        reserved: 0,
        max_upper: limits.max_upper,
    };
    while b.budget > 0 {
        b.children(&FeatureId::new("f0"));
    }
    let mut model = b.model;

    let ids: Vec<FeatureId> = model.features.iter().skip(1).map(|f| f.id.clone()).collect();
    if ids.len() >= 2 {
        for _ in 0..rng.random_range(0..=limits.cross_constraints) {
            let a = ids[rng.random_range(0..ids.len())].clone();
            let c = ids[rng.random_range(0..ids.len())].clone();
            let kind = if rng.random_bool(0.5) {
                CrossConstraintKind::Implies
            } else {
                CrossConstraintKind::Excludes
            };
            let duplicate = model
                .constraints
                .iter()
                .any(|x| x.kind == kind && x.antecedent == a && x.consequent == c);
            if a != c && !duplicate {
                model.add_constraint(kind, a, c);
            }
        }
    }
    let report = validate_model(&model);
    assert!(report.is_ok(), "generator produced an invalid model: {report:?}");
    model
}

pub fn random_nodes(rng: &mut StdRng, limits: &Limits) -> Vec<NodeDescriptor> {
    (0..rng.random_range(1..=limits.nodes))
        .map(|i| {
            let class = if rng.random_bool(0.7) {
                NodeClass::Embedded
            } else {
                NodeClass::Elastic
            };
            let mut resources: Vec<(&str, u64)> = Vec::new();
            for r in RESOURCES {
                if rng.random_bool(if r == "GPU" { 0.3 } else { 0.85 }) {
                    resources.push((r, rng.random_range(5..=45)));
                }
            }
            if resources.is_empty() {
                resources.push(("CPU", 30));
            }
            NodeDescriptor::with_resources(&format!("N{i}"), class, &resources)
        })
        .collect()
}

/// Up to `limits.deployment_constraints` declared constraints over the
/// attributed features, each kept only if the spec stays consistent.
pub fn random_spec(rng: &mut StdRng, app: &FeatureModel, nodes: &[NodeDescriptor], limits: &Limits) -> DeploymentSpec {
    let attributed: Vec<FeatureId> = app.attributed_features().map(|f| f.id.clone()).collect();
    let mut spec = DeploymentSpec::new();
    if attributed.is_empty() {
        return spec;
    }
    for _ in 0..rng.random_range(0..=limits.deployment_constraints) {
        let a = attributed[rng.random_range(0..attributed.len())].clone();
        let b = attributed[rng.random_range(0..attributed.len())].clone();
        let c = match rng.random_range(0..3) {
            0 => DeploymentConstraint::hosted_by(nodes[rng.random_range(0..nodes.len())].id.clone(), a),
            1 => DeploymentConstraint::colocated(a, b),
            _ => DeploymentConstraint::separated(a, b),
        };
        let mut candidate = spec.clone();
        candidate.push(c);
        if check_spec_consistency(&candidate, app, nodes).is_ok() {
            spec = candidate;
        }
    }
    spec
}

pub fn random_scenario(seed: u64, limits: &Limits) -> Scenario {
    let mut rng = StdRng::seed_from_u64(seed);
    let app = random_model(&mut rng, limits);
    let nodes = random_nodes(&mut rng, limits);
    let spec = random_spec(&mut rng, &app, &nodes, limits);
    Scenario { app, nodes, spec }
}

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// The control admittance application on HAB and CloudVM, with the
/// three-constraint deployment spec.
pub fn control_admittance() -> Scenario {
    let app = fmdeploy::parse_model(&read_fixture("control-admittance.fm")).expect("application fixture");
    let node_models = vec![
        fmdeploy::parse_model(&read_fixture("hab.fm")).expect("hab fixture"),
        fmdeploy::parse_model(&read_fixture("cloudvm.fm")).expect("cloudvm fixture"),
    ];
    let spec = fmdeploy::parse_deployment_spec(&read_fixture("shea.dep"), &app, &node_models).expect("spec fixture");
    let nodes = node_models
        .into_iter()
        .map(|m| NodeDescriptor::from_model(m).expect("node model"))
        .collect();
    Scenario { app, nodes, spec }
}
