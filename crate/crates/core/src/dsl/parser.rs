use std::collections::HashSet;
use std::sync::Arc;

use super::lexer::{tokenize, Token, TokenKind};
use super::{ParseDiagnostic, Severity};
use crate::deploy::{DeploymentConstraint, DeploymentSpec};
use crate::model::{
    validate_model_with, Attribute, Cardinality, CrossConstraintKind, CrossTreeConstraint, Feature, FeatureId, FeatureModel,
    Group, GroupKind, ModelKind, NodeClass, ResourceOntology, Variability,
};
use crate::span::SourceSpan;

const RESERVED: &[&str] = &[
    "model",
    "class",
    "embedded",
    "elastic",
    "mandatory",
    "optional",
    "xor",
    "or",
    "constraints",
    "implies",
    "excludes",
    "deploy",
    "hostedby",
    "colocated",
    "separated",
    "as",
];

fn is_snake_case(id: &str) -> bool {
    let mut chars = id.chars();
    chars.next().is_some_and(|c| c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// A syntax error has been recorded and parsing cannot continue.
struct Abort;

type PResult<T> = Result<T, Abort>;

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    diagnostics: Vec<ParseDiagnostic>,
    ontology: &'a ResourceOntology,
}

impl<'a> Parser<'a> {
    fn new(tokens: Vec<Token>, ontology: &'a ResourceOntology) -> Self {
        Self {
            tokens,
            pos: 0,
            diagnostics: Vec::new(),
            ontology,
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_ident(&self) -> Option<&str> {
        match &self.peek().kind {
            TokenKind::Ident(s) => Some(s),
            _ => None,
        }
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.pos].clone();
        if token.kind != TokenKind::Eof {
            self.pos += 1;
        }
        token
    }

    fn error(&mut self, span: &SourceSpan, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic {
            severity: Severity::Error,
            message: message.into(),
            span: span.clone(),
        });
    }

    fn warning(&mut self, span: &SourceSpan, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic {
            severity: Severity::Warning,
            message: message.into(),
            span: span.clone(),
        });
    }

    fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    fn unexpected<T>(&mut self, expected: &str) -> PResult<T> {
        let token = self.peek().clone();
        self.error(&token.span, format!("expected {expected} but found {}", token.kind.describe()));
        Err(Abort)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if &self.peek().kind == kind {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> PResult<Token> {
        if self.peek().kind == kind {
            Ok(self.advance())
        } else {
            self.unexpected(&kind.describe())
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek().kind.clone() {
            TokenKind::Ident(s) => {
                let span = self.advance().span;
                Ok((s, span))
            }
            _ => self.unexpected(what),
        }
    }

    fn expect_int(&mut self) -> PResult<u64> {
        match self.peek().kind {
            TokenKind::Int(n) => {
                self.advance();
                Ok(n)
            }
            _ => self.unexpected("an integer"),
        }
    }

    fn expect_keyword(&mut self, keyword: &str) -> PResult<SourceSpan> {
        match self.peek_ident() {
            Some(s) if s == keyword => Ok(self.advance().span),
            Some(other) => {
                let other = other.to_owned();
                let span = self.peek().span.clone();
                self.error(&span, format!("unknown keyword `{other}`, expected `{keyword}`"));
                Err(Abort)
            }
            None => self.unexpected(&format!("`{keyword}`")),
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if self.peek().kind == TokenKind::Eof {
            Ok(())
        } else {
            self.unexpected("end of input")
        }
    }

    fn feature_id(&mut self, id: &str, span: &SourceSpan) {
        if RESERVED.contains(&id) {
            self.error(span, format!("`{id}` is a reserved word and cannot name a feature"));
        } else if !is_snake_case(id) {
            self.error(span, format!("feature identifier `{id}` must be lowercase snake_case"));
        }
    }

    fn model(&mut self, file: &Arc<str>) -> PResult<FeatureModel> {
        self.expect_keyword("model")?;
        let (name, _) = self.expect_ident("a model name")?;
        let mut kind = ModelKind::Application;
        if self.peek_ident() == Some("class") {
            self.advance();
            let (class, span) = self.expect_ident("`embedded` or `elastic`")?;
            kind = match class.as_str() {
                "embedded" => ModelKind::DeploymentNode(NodeClass::Embedded),
                "elastic" => ModelKind::DeploymentNode(NodeClass::Elastic),
                other => {
                    self.error(&span, format!("unknown node class `{other}`, expected `embedded` or `elastic`"));
                    return Err(Abort);
                }
            };
        }
        self.expect(TokenKind::LBrace)?;

        let mut model = FeatureModel {
            name,
            kind,
            root: FeatureId::new(""),
            features: Vec::new(),
            groups: Vec::new(),
            constraints: Vec::new(),
            spans: Default::default(),
        };
        let root_span = self.peek().span.clone();
        let root = self.feature(&mut model, None, None)?;
        model.root = root.clone();
        if model.feature(root.as_str()).is_some_and(|f| f.variability != Variability::Mandatory) {
            self.error(&root_span, format!("root feature `{root}` must be mandatory"));
        }
        if self.peek().kind != TokenKind::RBrace && self.peek().kind != TokenKind::Eof {
            let span = self.peek().span.clone();
            self.error(&span, "a model has exactly one root feature");
            return Err(Abort);
        }
        self.expect(TokenKind::RBrace)?;

        if self.peek_ident() == Some("constraints") {
            self.advance();
            self.expect(TokenKind::LBrace)?;
            while !self.eat(&TokenKind::RBrace) {
                let (antecedent, span) = self.expect_ident("a feature identifier or `}`")?;
                let (keyword, kw_span) = self.expect_ident("`implies` or `excludes`")?;
                let kind = match keyword.as_str() {
                    "implies" => CrossConstraintKind::Implies,
                    "excludes" => CrossConstraintKind::Excludes,
                    other => {
                        self.error(&kw_span, format!("unknown keyword `{other}`, expected `implies` or `excludes`"));
                        return Err(Abort);
                    }
                };
                let (consequent, consequent_span) = self.expect_ident("a feature identifier")?;
                self.expect(TokenKind::Semi)?;
                for (id, s) in [(&antecedent, &span), (&consequent, &consequent_span)] {
                    if !model.contains(id) {
                        self.error(s, format!("unresolved reference to feature `{id}`"));
                    }
                }
                if antecedent == consequent {
                    self.error(&span, format!("constraint relates `{antecedent}` to itself"));
                }
                model.constraints.push(CrossTreeConstraint {
                    kind,
                    antecedent: antecedent.into(),
                    consequent: consequent.into(),
                });
            }
        }
        self.expect_eof()?;

        if !self.has_errors() {
            for issue in validate_model_with(&model, self.ontology).issues {
                let span = issue.span.clone().unwrap_or_else(|| SourceSpan::new(file.clone(), 1, 1));
                self.error(&span, issue.message);
            }
        }
        Ok(model)
    }

    fn feature(&mut self, model: &mut FeatureModel, parent: Option<FeatureId>, group: Option<usize>) -> PResult<FeatureId> {
        let kw_span = self.peek().span.clone();
        let variability = match self.peek_ident() {
            Some("mandatory") => Variability::Mandatory,
            Some("optional") => Variability::Optional,
            Some(other) => {
                let other = other.to_owned();
                self.error(&kw_span, format!("unknown keyword `{other}`, expected `mandatory` or `optional`"));
                return Err(Abort);
            }
            None => return self.unexpected("`mandatory` or `optional`"),
        };
        self.advance();
        let (id, span) = self.expect_ident("a feature identifier")?;
        self.feature_id(&id, &span);

        let mut feature = Feature::new(id.as_str(), parent, variability);
        if group.is_some() {
            if variability == Variability::Mandatory {
                self.warning(&kw_span, format!("`{id}` is a group member; the group decides its selection, so `mandatory` is ignored"));
            }
            feature.variability = Variability::Optional;
            feature.group = group;
        }

        if self.peek_ident() == Some("as") {
            self.advance();
            match self.peek().kind.clone() {
                TokenKind::Str(s) => {
                    self.advance();
                    feature.name = s;
                }
                _ => return self.unexpected("a display name string"),
            }
        }

        if self.eat(&TokenKind::LBracket) {
            let card_span = self.peek().span.clone();
            let lower = self.expect_int()?;
            self.expect(TokenKind::DotDot)?;
            let upper = self.expect_int()?;
            self.expect(TokenKind::RBracket)?;
            let (Ok(lower), Ok(upper)) = (u32::try_from(lower), u32::try_from(upper)) else {
                self.error(&card_span, "cardinality bound does not fit in 32 bits");
                return Err(Abort);
            };
            let card = Cardinality::new(lower, upper);
            if !card.is_well_formed() {
                self.error(&card_span, format!("cardinality {card} of `{id}` needs lower <= upper and upper >= 1"));
            } else if feature.is_mandatory_child() && lower == 0 {
                self.error(&card_span, format!("mandatory feature `{id}` cannot have lower bound 0"));
            }
            feature.cardinality = card;
        }

        if self.eat(&TokenKind::LParen) {
            let mut seen = HashSet::new();
            loop {
                let (resource, r_span) = self.expect_ident("a resource type")?;
                self.expect(TokenKind::Equals)?;
                let amount = self.expect_int()?;
                if !self.ontology.contains(&resource) {
                    self.error(&r_span, format!("unknown resource type `{resource}`; the ontology defines {}", self.ontology));
                }
                if !seen.insert(resource.clone()) {
                    self.error(&r_span, format!("resource type `{resource}` given twice"));
                }
                feature.attributes.push(Attribute::new(resource, amount));
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
            self.expect(TokenKind::RParen)?;
        }

        let id = FeatureId::new(id);
        if model.contains(id.as_str()) {
            self.error(&span, format!("duplicate feature id `{id}`"));
        } else {
            model.spans.insert(id.as_str(), span);
            model.features.push(feature);
        }

        if self.eat(&TokenKind::LBrace) {
            loop {
                match self.peek_ident() {
                    Some("mandatory" | "optional") => {
                        self.feature(model, Some(id.clone()), None)?;
                    }
                    Some(kw @ ("xor" | "or")) => {
                        let kind = if kw == "xor" {
                            GroupKind::Exclusive
                        } else {
                            GroupKind::InclusiveOr
                        };
                        self.group(model, id.clone(), kind)?;
                    }
                    Some(other) => {
                        let other = other.to_owned();
                        let span = self.peek().span.clone();
                        self.error(&span, format!("unknown keyword `{other}`, expected a feature or a group"));
                        return Err(Abort);
                    }
                    None => {
                        self.expect(TokenKind::RBrace)?;
                        break;
                    }
                }
            }
        }
        Ok(id)
    }

    fn group(&mut self, model: &mut FeatureModel, owner: FeatureId, kind: GroupKind) -> PResult<()> {
        let span = self.advance().span;
        self.expect(TokenKind::LBrace)?;
        let index = model.groups.len();
        model.groups.push(Group {
            owner: owner.clone(),
            kind,
            members: Vec::new(),
        });
        let mut members = Vec::new();
        while !self.eat(&TokenKind::RBrace) {
            members.push(self.feature(model, Some(owner.clone()), Some(index))?);
        }
        if members.len() < 2 {
            self.error(&span, format!("group under `{owner}` needs at least two members"));
        }
        model.groups[index].members = members;
        Ok(())
    }

    fn resolve_feature(&mut self, app: &FeatureModel, id: &str, span: &SourceSpan) -> bool {
        match app.feature(id) {
            None => {
                self.error(span, format!("unresolved feature `{id}` in application `{}`", app.name));
                false
            }
            Some(f) if !f.has_attributes() => {
                self.error(span, format!("`{id}` carries no attributes and is never placed on a node"));
                false
            }
            Some(_) => true,
        }
    }

    fn spec(&mut self, app: &FeatureModel, nodes: &[FeatureModel]) -> PResult<DeploymentSpec> {
        self.expect_keyword("deploy")?;
        self.expect(TokenKind::LBrace)?;
        let mut spec = DeploymentSpec::new();
        while !self.eat(&TokenKind::RBrace) {
            let (keyword, kw_span) = self.expect_ident("`hostedby`, `colocated`, `separated` or `}`")?;
            if !matches!(keyword.as_str(), "hostedby" | "colocated" | "separated") {
                self.error(
                    &kw_span,
                    format!("unknown keyword `{keyword}`, expected `hostedby`, `colocated` or `separated`"),
                );
                return Err(Abort);
            }
            self.expect(TokenKind::LParen)?;
            let (first, first_span) = self.expect_ident("an identifier")?;
            self.expect(TokenKind::Comma)?;
            let (second, second_span) = self.expect_ident("an identifier")?;
            self.expect(TokenKind::RParen)?;
            self.expect(TokenKind::Semi)?;

            let mut ok = true;
            let constraint = match keyword.as_str() {
                "hostedby" => {
                    if !nodes.iter().any(|n| n.name == first) {
                        let known: Vec<&str> = nodes.iter().map(|n| n.name.as_str()).collect();
                        self.error(&first_span, format!("unresolved node `{first}`; known nodes: {}", known.join(", ")));
                        ok = false;
                    }
                    ok &= self.resolve_feature(app, &second, &second_span);
                    DeploymentConstraint::hosted_by(first.as_str(), second.as_str())
                }
                kw => {
                    if first == second {
                        let what = if kw == "colocated" {
                            "colocation of a feature with itself"
                        } else {
                            "separation of a feature from itself"
                        };
                        self.error(&kw_span, format!("{what} (`{first}`)"));
                        ok = false;
                    } else {
                        ok &= self.resolve_feature(app, &first, &first_span);
                        ok &= self.resolve_feature(app, &second, &second_span);
                    }
                    if kw == "colocated" {
                        DeploymentConstraint::colocated(first.as_str(), second.as_str())
                    } else {
                        DeploymentConstraint::separated(first.as_str(), second.as_str())
                    }
                }
            };
            if !ok {
                continue;
            }
            let opposite = match &constraint {
                DeploymentConstraint::Colocated(a, b) => Some(DeploymentConstraint::Separated(a.clone(), b.clone())),
                DeploymentConstraint::Separated(a, b) => Some(DeploymentConstraint::Colocated(a.clone(), b.clone())),
                _ => None,
            };
            if let Some(opposite) = opposite {
                let key = opposite.normalized();
                if spec.constraints.iter().any(|c| c.normalized() == key) {
                    self.error(&kw_span, format!("{constraint} contradicts an earlier {opposite}"));
                    continue;
                }
            }
            if let DeploymentConstraint::HostedBy { node, feature } = &constraint {
                let earlier = spec.constraints.iter().find(
                    |c| matches!(c, DeploymentConstraint::HostedBy { node: n, feature: f } if f == feature && n != node),
                );
                if let Some(earlier) = earlier {
                    self.error(&kw_span, format!("{constraint} contradicts an earlier {earlier}: a feature runs on one node"));
                    continue;
                }
            }
            if !spec.push(constraint.clone()) {
                self.warning(&kw_span, format!("duplicate constraint {constraint} ignored"));
            }
        }
        self.expect_eof()?;
        Ok(spec)
    }
}

pub(super) fn parse_model(
    file: &Arc<str>,
    ontology: &ResourceOntology,
    text: &str,
) -> (Option<FeatureModel>, Vec<ParseDiagnostic>) {
    let tokens = match tokenize(file, text) {
        Ok(tokens) => tokens,
        Err(d) => return (None, vec![d]),
    };
    let mut parser = Parser::new(tokens, ontology);
    let model = parser.model(file).ok();
    (model, parser.diagnostics)
}

pub(super) fn parse_spec(
    file: &Arc<str>,
    text: &str,
    app: &FeatureModel,
    nodes: &[FeatureModel],
) -> (Option<DeploymentSpec>, Vec<ParseDiagnostic>) {
    let tokens = match tokenize(file, text) {
        Ok(tokens) => tokens,
        Err(d) => return (None, vec![d]),
    };
    let ontology = ResourceOntology::empty();
    let mut parser = Parser::new(tokens, &ontology);
    let spec = parser.spec(app, nodes).ok();
    (spec, parser.diagnostics)
}

#[cfg(test)]
mod tests {
    use crate::dsl::{parse_deployment_spec, parse_model, Severity, Source};
    use crate::model::{Cardinality, GroupKind, Variability};

    #[test]
    fn minimal_model() {
        let m = parse_model("model ctrl { mandatory ctrl { mandatory keypad (CPU=5, RAM=16) } }").unwrap();
        assert_eq!(m.features.len(), 2);
        let keypad = m.feature("keypad").unwrap();
        assert_eq!(keypad.amount_of("CPU"), Some(5));
        assert_eq!(keypad.parent.as_ref().unwrap().as_str(), "ctrl");
    }

    #[test]
    fn unbalanced_brace_is_one_error_at_end() {
        let text = "model m { mandatory r { or { optional a optional b } }";
        let err = parse_model(text).unwrap_err();
        assert_eq!(err.0.len(), 1, "{err}");
        let d = &err.0[0];
        assert_eq!(d.severity, Severity::Error);
        assert_eq!((d.span.line, d.span.column as usize), (1, text.len() + 1));
        assert!(d.message.contains("end of input"));
    }

    #[test]
    fn groups_and_cardinality() {
        let m = parse_model(
            "model m { mandatory r {
                optional s [0..3] (CPU=30)
                xor { optional a mandatory b }
                or { optional c optional d }
            } }",
        )
        .unwrap();
        assert_eq!(m.feature("s").unwrap().cardinality, Cardinality::new(0, 3));
        assert_eq!(m.groups.len(), 2);
        assert_eq!(m.groups[0].kind, GroupKind::Exclusive);
        assert_eq!(m.feature("b").unwrap().variability, Variability::Optional);
        assert_eq!(m.feature("d").unwrap().group, Some(1));
    }

    #[test]
    fn mandatory_in_group_warns() {
        let parsed = Source::default()
            .parse_model("model m { mandatory r { xor { mandatory a optional b } } }")
            .unwrap();
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn unknown_keyword_and_resource() {
        let err = parse_model("model m { mandatory r { sometimes a } }").unwrap_err();
        assert!(err.0[0].message.contains("unknown keyword `sometimes`"));
        let err = parse_model("model m { mandatory r (TPU=1) }").unwrap_err();
        assert!(err.0[0].message.contains("ontology"), "{err}");
    }

    #[test]
    fn semantic_errors_accumulate() {
        let err = parse_model(
            "model m { mandatory r { optional a optional a mandatory z [0..2] optional Bad } }
             constraints { a implies nowhere; }",
        )
        .unwrap_err();
        let messages: Vec<_> = err.errors().map(|d| d.message.as_str()).collect();
        assert_eq!(messages.len(), 4, "{messages:?}");
        assert!(messages.iter().any(|m| m.contains("duplicate feature id")));
        assert!(messages.iter().any(|m| m.contains("lower bound 0")));
        assert!(messages.iter().any(|m| m.contains("snake_case")));
        assert!(messages.iter().any(|m| m.contains("unresolved reference")));
    }

    #[test]
    fn optional_root_rejected() {
        assert!(parse_model("model m { optional r }").is_err());
    }

    #[test]
    fn node_class_header() {
        let m = parse_model("model HAB class embedded { mandatory hab (CPU=100) }").unwrap();
        assert_eq!(m.node_class(), Some(crate::model::NodeClass::Embedded));
        assert!(parse_model("model HAB class fluffy { mandatory hab }").is_err());
    }

    fn app_and_nodes() -> (crate::model::FeatureModel, Vec<crate::model::FeatureModel>) {
        let app = parse_model(
            "model app { mandatory r {
                mandatory keypad (CPU=1)
                optional bayesian (CPU=1)
                optional live_streaming (CPU=1)
                optional smart_phone (CPU=1)
                optional plain
            } }",
        )
        .unwrap();
        let nodes = vec![
            parse_model("model HAB class embedded { mandatory hab (CPU=10) }").unwrap(),
            parse_model("model CloudVM class elastic { mandatory vm (CPU=1) }").unwrap(),
        ];
        (app, nodes)
    }

    #[test]
    fn three_constraint_spec() {
        let (app, nodes) = app_and_nodes();
        let spec = parse_deployment_spec(
            "deploy { hostedby(HAB, keypad); colocated(bayesian, live_streaming); separated(smart_phone, bayesian); }",
            &app,
            &nodes,
        )
        .unwrap();
        assert_eq!(spec.constraints.len(), 3);
        assert!(parse_deployment_spec("deploy { }", &app, &nodes).unwrap().is_empty());
    }

    #[test]
    fn spec_errors() {
        let (app, nodes) = app_and_nodes();
        let err = parse_deployment_spec("deploy { colocated(keypad, keypad); }", &app, &nodes).unwrap_err();
        assert!(err.0[0].message.contains("colocation of a feature with itself"));
        let err = parse_deployment_spec("deploy { hostedby(Moon, keypad); }", &app, &nodes).unwrap_err();
        assert!(err.0[0].message.contains("unresolved node `Moon`"));
        let err = parse_deployment_spec("deploy { separated(plain, keypad); }", &app, &nodes).unwrap_err();
        assert!(err.0[0].message.contains("no attributes"));
        let err = parse_deployment_spec(
            "deploy { colocated(bayesian, keypad); separated(keypad, bayesian); }",
            &app,
            &nodes,
        )
        .unwrap_err();
        assert!(err.0[0].message.contains("contradicts"));
        let err = parse_deployment_spec("deploy { hostedby(HAB, keypad); hostedby(CloudVM, keypad); }", &app, &nodes).unwrap_err();
        assert!(err.0[0].message.contains("contradicts an earlier hostedby(HAB, keypad)"));
    }

    #[test]
    fn diagnostics_point_inside_the_input() {
        let text = "model m {\n  mandatory r {\n    optional x (RAM=1, RAM=2)\n  }\n}";
        let err = parse_model(text).unwrap_err();
        let d = &err.0[0];
        assert_eq!((d.span.line, d.span.column), (3, 24));
    }
}
