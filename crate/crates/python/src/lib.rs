//! Python bindings: models, nodes and specs as immutable objects, plus the
//! enumeration, statistics and explanation entry points.

use std::collections::BTreeMap;
use std::path::PathBuf;

use fmdeploy::deploy::{find_match as core_find_match, DeploymentConstraint, NodeDescriptor};
use fmdeploy::dsl::Source;
use fmdeploy::matcher::{constraint_subset_counts, explain_infeasibility, possible_host_with, MatchOptions};
use fmdeploy::model::{ModelKind, NodeClass};
use fmdeploy::solver::{brute_force_enumerate, DEFAULT_BRUTE_FORCE_BOUND};
use fmdeploy::{
    is_valid_configuration, parse_deployment_spec, serialize_model, serialize_spec, validate_model, AugmentedModel,
    Configuration, DeploymentSpec, FeatureModel,
};
use pyo3::exceptions::{PyKeyError, PyOSError, PyValueError};
use pyo3::prelude::*;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "FeatureModel", module = "fmdeploy_py", frozen)]
struct PyFeatureModel {
    inner: FeatureModel,
}

#[pymethods]
impl PyFeatureModel {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        let parsed = Source::new("<string>").parse_model(text).map_err(value_error)?;
        Ok(Self { inner: parsed.value })
    }

    /// Reads a `.fm` file; diagnostics name the file.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| PyOSError::new_err(format!("{}: {e}", path.display())))?;
        let parsed = Source::new(path.display().to_string())
            .parse_model(&text)
            .map_err(value_error)?;
        Ok(Self { inner: parsed.value })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn root(&self) -> String {
        self.inner.root.to_string()
    }

    #[getter]
    fn features(&self) -> Vec<String> {
        self.inner.features.iter().map(|f| f.id.to_string()).collect()
    }

    /// `None` for application models, else `"embedded"` or `"elastic"`.
    #[getter]
    fn node_class(&self) -> Option<&'static str> {
        match self.inner.kind {
            ModelKind::Application => None,
            ModelKind::DeploymentNode(NodeClass::Embedded) => Some("embedded"),
            ModelKind::DeploymentNode(NodeClass::Elastic) => Some("elastic"),
        }
    }

    /// Well-formedness issues; empty when the model is valid.
    fn validate(&self) -> Vec<String> {
        validate_model(&self.inner).issues.iter().map(ToString::to_string).collect()
    }

    fn to_text(&self) -> String {
        serialize_model(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.features.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("FeatureModel({:?}, {} features)", self.inner.name, self.inner.features.len())
    }
}

#[pyclass(name = "Node", module = "fmdeploy_py", frozen)]
struct PyNode {
    inner: NodeDescriptor,
}

#[pymethods]
impl PyNode {
    #[new]
    fn new(model: &PyFeatureModel) -> PyResult<Self> {
        let inner = NodeDescriptor::from_model(model.inner.clone()).map_err(value_error)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (id, resources, embedded = true))]
    fn with_resources(id: &str, resources: BTreeMap<String, u64>, embedded: bool) -> Self {
        let class = if embedded { NodeClass::Embedded } else { NodeClass::Elastic };
        let res: Vec<(&str, u64)> = resources.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        Self {
            inner: NodeDescriptor::with_resources(id, class, &res),
        }
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id.to_string()
    }

    #[getter]
    fn embedded(&self) -> bool {
        self.inner.is_embedded()
    }

    #[getter]
    fn capacities(&self) -> BTreeMap<String, u64> {
        self.inner.capacities.clone()
    }

    fn offers(&self, resource: &str) -> bool {
        self.inner.offers(resource)
    }

    fn __repr__(&self) -> String {
        let class = if self.inner.is_embedded() { "embedded" } else { "elastic" };
        format!("Node({:?}, {class})", self.inner.id.as_str())
    }
}

#[pyclass(name = "DeploymentSpec", module = "fmdeploy_py", frozen)]
#[derive(Default)]
struct PySpec {
    inner: DeploymentSpec,
}

impl PySpec {
    fn with(&self, c: DeploymentConstraint) -> Self {
        let mut inner = self.inner.clone();
        inner.push(c);
        Self { inner }
    }
}

#[pymethods]
impl PySpec {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// Parses a `.dep` text, resolving names against the application and
    /// node models.
    #[staticmethod]
    fn parse(text: &str, app: &PyFeatureModel, nodes: Vec<PyRef<'_, PyNode>>) -> PyResult<Self> {
        let models: Vec<FeatureModel> = nodes.iter().map(|n| n.inner.model.clone()).collect();
        let inner = parse_deployment_spec(text, &app.inner, &models).map_err(value_error)?;
        Ok(Self { inner })
    }

    fn hosted_by(&self, node: &str, feature: &str) -> Self {
        self.with(DeploymentConstraint::hosted_by(node, feature))
    }

    fn colocated(&self, a: &str, b: &str) -> Self {
        self.with(DeploymentConstraint::colocated(a, b))
    }

    fn separated(&self, a: &str, b: &str) -> Self {
        self.with(DeploymentConstraint::separated(a, b))
    }

    #[getter]
    fn constraints(&self) -> Vec<String> {
        self.inner.constraints.iter().map(ToString::to_string).collect()
    }

    fn to_text(&self) -> String {
        serialize_spec(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.constraints.len()
    }

    fn __repr__(&self) -> String {
        format!("DeploymentSpec({})", self.constraints().join("; "))
    }
}

#[pyclass(name = "Configuration", module = "fmdeploy_py", frozen)]
struct PyConfiguration {
    inner: Configuration,
}

#[pymethods]
impl PyConfiguration {
    /// Feature id to instance count, including injected node features.
    #[getter]
    fn selection(&self) -> BTreeMap<String, u32> {
        self.inner.selection.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[getter]
    fn hosting(&self) -> BTreeMap<String, String> {
        self.inner.hosting.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn is_selected(&self, feature: &str) -> bool {
        self.inner.is_selected(feature)
    }

    fn count(&self, feature: &str) -> u32 {
        self.inner.count(feature)
    }

    fn host_of(&self, feature: &str) -> Option<String> {
        self.inner.host_of(feature).map(ToString::to_string)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let hosting: Vec<String> = self.inner.hosting.iter().map(|(f, n)| format!("{f}@{n}")).collect();
        format!("Configuration({})", hosting.join(", "))
    }
}

#[pyclass(name = "SolutionSet", module = "fmdeploy_py", frozen)]
struct PySolutionSet {
    configurations: Vec<Configuration>,
    #[pyo3(get)]
    truncated: bool,
    #[pyo3(get)]
    peak_usage: BTreeMap<String, BTreeMap<String, u64>>,
    #[pyo3(get)]
    diagnostics: Vec<String>,
    #[pyo3(get)]
    elapsed_ms: f64,
}

#[pymethods]
impl PySolutionSet {
    #[getter]
    fn configurations(&self) -> Vec<PyConfiguration> {
        self.configurations
            .iter()
            .map(|c| PyConfiguration { inner: c.clone() })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.configurations.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "SolutionSet({} configurations{})",
            self.configurations.len(),
            if self.truncated { ", truncated" } else { "" }
        )
    }
}

fn node_list(nodes: &[PyRef<'_, PyNode>]) -> Vec<NodeDescriptor> {
    nodes.iter().map(|n| n.inner.clone()).collect()
}

fn options(limit: Option<usize>) -> MatchOptions {
    let mut options = MatchOptions::default();
    if let Some(limit) = limit {
        options.limit = limit;
    }
    options
}

/// All valid configurations of `app` deployed on `nodes` under `spec`.
#[pyfunction]
#[pyo3(signature = (app, nodes, spec = None, limit = None))]
fn possible_host(
    py: Python<'_>,
    app: &PyFeatureModel,
    nodes: Vec<PyRef<'_, PyNode>>,
    spec: Option<&PySpec>,
    limit: Option<usize>,
) -> PyResult<PySolutionSet> {
    let nodes = node_list(&nodes);
    let spec = spec.map(|s| s.inner.clone()).unwrap_or_default();
    let set = py
        .detach(|| possible_host_with(&app.inner, &nodes, &spec, &options(limit)))
        .map_err(value_error)?;
    let peak_usage = set
        .peak_usage()
        .into_iter()
        .map(|(n, usage)| (n.to_string(), usage))
        .collect();
    Ok(PySolutionSet {
        truncated: set.stats.truncated,
        peak_usage,
        diagnostics: set.diagnostics.iter().map(ToString::to_string).collect(),
        elapsed_ms: set.stats.elapsed.as_secs_f64() * 1e3,
        configurations: set.configurations,
    })
}

/// Exhaustive enumeration over every assignment; slow, for cross-checks.
#[pyfunction]
#[pyo3(signature = (app, nodes, spec = None))]
fn brute_force(
    py: Python<'_>,
    app: &PyFeatureModel,
    nodes: Vec<PyRef<'_, PyNode>>,
    spec: Option<&PySpec>,
) -> PyResult<Vec<PyConfiguration>> {
    let nodes = node_list(&nodes);
    let spec = spec.map(|s| s.inner.clone()).unwrap_or_default();
    let aug = AugmentedModel::build(&app.inner, &nodes, &spec).map_err(value_error)?;
    let all = py
        .detach(|| brute_force_enumerate(&aug, &nodes, DEFAULT_BRUTE_FORCE_BOUND))
        .map_err(value_error)?;
    Ok(all.into_iter().map(|inner| PyConfiguration { inner }).collect())
}

/// `(label, count, truncated)` for the empty set of relational constraints,
/// each subset up to `subset_size`, and the full spec.
#[pyfunction]
#[pyo3(signature = (app, nodes, spec, subset_size = 1, limit = None))]
fn subset_counts(
    py: Python<'_>,
    app: &PyFeatureModel,
    nodes: Vec<PyRef<'_, PyNode>>,
    spec: &PySpec,
    subset_size: usize,
    limit: Option<usize>,
) -> PyResult<Vec<(String, usize, bool)>> {
    let nodes = node_list(&nodes);
    let counts = py
        .detach(|| constraint_subset_counts(&app.inner, &nodes, &spec.inner, subset_size, &options(limit)))
        .map_err(value_error)?;
    Ok(counts.into_iter().map(|c| (c.label, c.count, c.truncated)).collect())
}

/// Why no configuration selects `feature`: `(node or None, reason)` pairs,
/// empty when the feature is selectable.
#[pyfunction]
#[pyo3(signature = (app, nodes, feature, spec = None))]
fn explain(
    app: &PyFeatureModel,
    nodes: Vec<PyRef<'_, PyNode>>,
    feature: &str,
    spec: Option<&PySpec>,
) -> PyResult<Vec<(Option<String>, String)>> {
    let nodes = node_list(&nodes);
    let spec = spec.map(|s| s.inner.clone()).unwrap_or_default();
    let e = explain_infeasibility(&app.inner, &nodes, &spec, feature).map_err(|e| match e {
        fmdeploy::MatchError::Reference(r) => PyKeyError::new_err(r.to_string()),
        other => value_error(other),
    })?;
    Ok(e.entries
        .into_iter()
        .map(|en| (en.node.map(|n| n.to_string()), en.blocker.to_string()))
        .collect())
}

/// Checks one configuration against the model, the spec and every embedded
/// node's capacity.
#[pyfunction]
#[pyo3(signature = (app, nodes, configuration, spec = None))]
fn is_valid(
    app: &PyFeatureModel,
    nodes: Vec<PyRef<'_, PyNode>>,
    configuration: &PyConfiguration,
    spec: Option<&PySpec>,
) -> PyResult<bool> {
    let nodes = node_list(&nodes);
    let spec = spec.map(|s| s.inner.clone()).unwrap_or_default();
    let aug = AugmentedModel::build(&app.inner, &nodes, &spec).map_err(value_error)?;
    is_valid_configuration(&aug.base, &nodes, &aug.spec, &configuration.inner)
        .map_err(|e| PyKeyError::new_err(e.to_string()))
}

/// Whether `node` offers every resource type `feature` of `app` requires.
#[pyfunction]
fn find_match(app: &PyFeatureModel, feature: &str, node: &PyNode) -> PyResult<bool> {
    let f = app
        .inner
        .feature(feature)
        .ok_or_else(|| PyKeyError::new_err(format!("unknown feature `{feature}`")))?;
    Ok(core_find_match(f, &node.inner))
}

#[pymodule]
fn fmdeploy_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFeatureModel>()?;
    m.add_class::<PyNode>()?;
    m.add_class::<PySpec>()?;
    m.add_class::<PyConfiguration>()?;
    m.add_class::<PySolutionSet>()?;
    m.add_function(wrap_pyfunction!(possible_host, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(subset_counts, m)?)?;
    m.add_function(wrap_pyfunction!(explain, m)?)?;
    m.add_function(wrap_pyfunction!(is_valid, m)?)?;
    m.add_function(wrap_pyfunction!(find_match, m)?)?;
    Ok(())
}
