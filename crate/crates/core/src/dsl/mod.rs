//! Textual formats for feature models (`.fm`) and deployment specs (`.dep`).
//!
//! ```text
//! model control_admittance {
//!   mandatory control_admittance {
//!     mandatory keypad (CPU=5, RAM=16)
//!     optional face_recognition {
//!       optional live_streaming [0..3] (CPU=30)
//!       optional images { xor { optional snapshot optional video_frame } }
//!     }
//!   }
//! }
//! constraints { bayesian implies high; }
//!
//! deploy { hostedby(HAB, keypad); colocated(bayesian, live_streaming); }
//! ```

mod lexer;
mod parser;
mod serialize;

use std::fmt;
use std::sync::Arc;

use crate::deploy::DeploymentSpec;
use crate::model::{FeatureModel, ResourceOntology};
use crate::span::SourceSpan;

pub use serialize::{serialize_model, serialize_spec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}: {level}: {}", self.span, self.message)
    }
}

/// Diagnostics of a failed parse; holds at least one error.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub struct ParseDiagnostics(pub Vec<ParseDiagnostic>);

impl ParseDiagnostics {
    pub fn errors(&self) -> impl Iterator<Item = &ParseDiagnostic> {
        self.0.iter().filter(|d| d.severity == Severity::Error)
    }
}

impl fmt::Display for ParseDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Result of a parse together with any warnings emitted along the way.
#[derive(Clone, Debug)]
pub struct Parsed<T> {
    pub value: T,
    pub warnings: Vec<ParseDiagnostic>,
}

fn finish<T>(value: Option<T>, diagnostics: Vec<ParseDiagnostic>) -> Result<Parsed<T>, ParseDiagnostics> {
    match value {
        Some(value) if diagnostics.iter().all(|d| d.severity == Severity::Warning) => Ok(Parsed {
            value,
            warnings: diagnostics,
        }),
        _ => Err(ParseDiagnostics(diagnostics)),
    }
}

/// Parser configuration: the file name used in spans and the resource
/// ontology attributes are checked against.
#[derive(Clone, Debug)]
pub struct Source {
    pub file: Arc<str>,
    pub ontology: ResourceOntology,
}

impl Source {
    pub fn new(file: impl Into<Arc<str>>) -> Self {
        Self {
            file: file.into(),
            ontology: ResourceOntology::default(),
        }
    }

    pub fn with_ontology(mut self, ontology: ResourceOntology) -> Self {
        self.ontology = ontology;
        self
    }

    pub fn parse_model(&self, text: &str) -> Result<Parsed<FeatureModel>, ParseDiagnostics> {
        let (value, diagnostics) = parser::parse_model(&self.file, &self.ontology, text);
        finish(value, diagnostics)
    }

    pub fn parse_deployment_spec(
        &self,
        text: &str,
        app: &FeatureModel,
        nodes: &[FeatureModel],
    ) -> Result<Parsed<DeploymentSpec>, ParseDiagnostics> {
        let (value, diagnostics) = parser::parse_spec(&self.file, text, app, nodes);
        finish(value, diagnostics)
    }
}

impl Default for Source {
    fn default() -> Self {
        Self::new("<input>")
    }
}

pub fn parse_model(text: &str) -> Result<FeatureModel, ParseDiagnostics> {
    Source::default().parse_model(text).map(|p| p.value)
}

pub fn parse_deployment_spec(text: &str, app: &FeatureModel, nodes: &[FeatureModel]) -> Result<DeploymentSpec, ParseDiagnostics> {
    Source::default()
        .parse_deployment_spec(text, app, nodes)
        .map(|p| p.value)
}
