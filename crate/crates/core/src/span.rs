use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// A position inside a source text. Lines and columns are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub line: u32,
    pub column: u32,
}

impl SourceSpan {
    pub fn new(file: impl Into<Arc<str>>, line: u32, column: u32) -> Self {
        Self {
            file: file.into(),
            line,
            column,
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

/// Source positions of parsed entities, keyed by identifier.
///
/// Positions are not part of a model's identity: two tables always compare
/// equal, so a model parsed from differently formatted text still equals the
/// original.
#[derive(Clone, Debug, Default)]
pub struct SpanTable {
    entries: HashMap<String, SourceSpan>,
}

impl SpanTable {
    pub fn insert(&mut self, id: impl Into<String>, span: SourceSpan) {
        self.entries.entry(id.into()).or_insert(span);
    }

    pub fn get(&self, id: &str) -> Option<&SourceSpan> {
        self.entries.get(id)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl PartialEq for SpanTable {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for SpanTable {}
