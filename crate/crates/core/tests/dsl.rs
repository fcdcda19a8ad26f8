mod common;

use fmdeploy::dsl::{Severity, Source};
use fmdeploy::{parse_deployment_spec, parse_model, serialize_model, serialize_spec};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_models_round_trip(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let model = common::random_model(&mut rng, &common::SMALL);
        let text = serialize_model(&model);
        let parsed = parse_model(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&parsed, &model);
        prop_assert_eq!(serialize_model(&parsed), text);
    }

    #[test]
    fn random_specs_round_trip(seed in any::<u64>()) {
        let s = common::random_scenario(seed, &common::SMALL);
        let node_models: Vec<_> = s.nodes.iter().map(|n| n.model.clone()).collect();
        let text = serialize_spec(&s.spec);
        let parsed = parse_deployment_spec(&text, &s.app, &node_models)
            .map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(parsed.constraints, s.spec.constraints);
    }
}

#[test]
fn fixtures_parse_without_diagnostics() {
    let mut node_models = Vec::new();
    for name in ["hab.fm", "cloudvm.fm"] {
        let parsed = Source::new(name).parse_model(&common::read_fixture(name)).unwrap();
        assert!(parsed.warnings.is_empty(), "{name}: {:?}", parsed.warnings);
        node_models.push(parsed.value);
    }
    let app = Source::new("control-admittance.fm")
        .parse_model(&common::read_fixture("control-admittance.fm"))
        .unwrap();
    assert!(app.warnings.is_empty());
    assert_eq!(app.value.features.len(), 16);
    let spec = Source::new("shea.dep")
        .parse_deployment_spec(&common::read_fixture("shea.dep"), &app.value, &node_models)
        .unwrap();
    assert!(spec.warnings.is_empty());
    assert_eq!(spec.value.constraints.len(), 3);
}

#[test]
fn fixture_survives_a_round_trip() {
    let app = parse_model(&common::read_fixture("control-admittance.fm")).unwrap();
    assert_eq!(parse_model(&serialize_model(&app)).unwrap(), app);
}

#[test]
fn errors_carry_file_line_and_column() {
    let text = "model m {\n  mandatory r {\n    optional a (CPU=)\n  }\n}\n";
    let err = Source::new("broken.fm").parse_model(text).unwrap_err();
    let first = &err.0[0];
    assert_eq!(first.severity, Severity::Error);
    let span = &first.span;
    assert_eq!((span.line, span.column), (3, 21));
    assert!(first.to_string().starts_with("broken.fm:3:21: error:"), "{first}");
}

#[test]
fn warnings_do_not_fail_parsing() {
    let parsed = Source::new("w.fm")
        .parse_model("model m { mandatory r { xor { mandatory a optional b } } }")
        .unwrap();
    assert_eq!(parsed.warnings.len(), 1);
    assert_eq!(parsed.warnings[0].severity, Severity::Warning);
}
