mod common;

use std::collections::BTreeSet;

use fmdeploy::deploy::{find_match, verify_resources, DeploymentConstraint, NodeDescriptor};
use fmdeploy::matcher::{possible_host, AugmentedModel};
use fmdeploy::model::{Attribute, Feature, NodeClass, Variability};
use fmdeploy::solver::{brute_force_enumerate, encode, enumerate, DEFAULT_BRUTE_FORCE_BOUND};
use fmdeploy::{check_spec_consistency, is_valid_configuration, Configuration};
use proptest::prelude::*;

fn set_of(configs: &[Configuration]) -> BTreeSet<Configuration> {
    configs.iter().cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn search_matches_brute_force(seed in any::<u64>()) {
        let s = common::random_scenario(seed, &common::SMALL);
        let aug = AugmentedModel::build(&s.app, &s.nodes, &s.spec).unwrap();
        let fast = enumerate(&encode(&aug, &s.nodes), usize::MAX);
        let slow = brute_force_enumerate(&aug, &s.nodes, DEFAULT_BRUTE_FORCE_BOUND).unwrap();
        prop_assert!(!fast.truncated);
        prop_assert_eq!(fast.configurations, slow);
    }

    #[test]
    fn every_solution_is_valid(seed in any::<u64>()) {
        let s = common::random_scenario(seed, &common::SMALL);
        let set = possible_host(&s.app, &s.nodes, &s.spec).unwrap();
        for c in &set.configurations {
            prop_assert!(is_valid_configuration(&set.augmented.base, &s.nodes, &set.augmented.spec, c).unwrap());
        }
    }

    #[test]
    fn input_model_is_untouched(seed in any::<u64>()) {
        let s = common::random_scenario(seed, &common::SMALL);
        let before = s.app.clone();
        let _ = possible_host(&s.app, &s.nodes, &s.spec).unwrap();
        prop_assert_eq!(&s.app, &before);
    }

    #[test]
    fn adding_a_constraint_never_adds_configurations(seed in any::<u64>(), pick in any::<(usize, usize, u8)>()) {
        let s = common::random_scenario(seed, &common::SMALL);
        let attributed: Vec<_> = s.app.attributed_features().map(|f| f.id.clone()).collect();
        prop_assume!(!attributed.is_empty());
        let a = attributed[pick.0 % attributed.len()].clone();
        let b = attributed[pick.1 % attributed.len()].clone();
        let c = match pick.2 % 3 {
            0 => DeploymentConstraint::hosted_by(s.nodes[pick.1 % s.nodes.len()].id.clone(), a),
            1 => DeploymentConstraint::colocated(a, b),
            _ => DeploymentConstraint::separated(a, b),
        };
        let mut bigger = s.spec.clone();
        prop_assume!(bigger.push(c));
        prop_assume!(check_spec_consistency(&bigger, &s.app, &s.nodes).is_ok());
        let base = set_of(&possible_host(&s.app, &s.nodes, &s.spec).unwrap().configurations);
        let more = set_of(&possible_host(&s.app, &s.nodes, &bigger).unwrap().configurations);
        prop_assert!(more.is_subset(&base));
    }

    #[test]
    fn lowering_capacity_never_adds_configurations(seed in any::<u64>(), which in any::<usize>(), cut in 1u64..20) {
        let s = common::random_scenario(seed, &common::SMALL);
        let embedded: Vec<usize> = (0..s.nodes.len()).filter(|&i| s.nodes[i].is_embedded()).collect();
        prop_assume!(!embedded.is_empty());
        let mut smaller = s.nodes.clone();
        let node = &mut smaller[embedded[which % embedded.len()]];
        for cap in node.capacities.values_mut() {
            *cap = cap.saturating_sub(cut);
        }
        let base = set_of(&possible_host(&s.app, &s.nodes, &s.spec).unwrap().configurations);
        let less = set_of(&possible_host(&s.app, &smaller, &s.spec).unwrap().configurations);
        prop_assert!(less.is_subset(&base));
    }

    #[test]
    fn node_order_does_not_matter(seed in any::<u64>()) {
        let s = common::random_scenario(seed, &common::SMALL);
        let mut reversed = s.nodes.clone();
        reversed.reverse();
        let a = possible_host(&s.app, &s.nodes, &s.spec).unwrap().configurations;
        let b = possible_host(&s.app, &reversed, &s.spec).unwrap().configurations;
        prop_assert_eq!(a, b);
    }

    #[test]
    fn relational_constraints_are_symmetric(seed in any::<u64>(), colocate in any::<bool>()) {
        let s = common::random_scenario(seed, &common::SMALL);
        let attributed: Vec<_> = s.app.attributed_features().map(|f| f.id.clone()).collect();
        prop_assume!(attributed.len() >= 2);
        let (a, b) = (attributed[0].clone(), attributed[1].clone());
        let make = |x: &fmdeploy::FeatureId, y: &fmdeploy::FeatureId| {
            let mut spec = s.spec.clone();
            spec.constraints.push(if colocate {
                DeploymentConstraint::colocated(x.clone(), y.clone())
            } else {
                DeploymentConstraint::separated(x.clone(), y.clone())
            });
            spec
        };
        let (ab, ba) = (make(&a, &b), make(&b, &a));
        prop_assume!(check_spec_consistency(&ab, &s.app, &s.nodes).is_ok());
        let x = possible_host(&s.app, &s.nodes, &ab).unwrap().configurations;
        let y = possible_host(&s.app, &s.nodes, &ba).unwrap().configurations;
        prop_assert_eq!(x, y);
    }

    #[test]
    fn elastic_nodes_accept_any_load(amounts in proptest::collection::vec((0u64..1_000_000, 0u32..50), 0..8)) {
        let node = NodeDescriptor::with_resources("Cloud", NodeClass::Elastic, &[("CPU", 1)]);
        let features: Vec<Feature> = amounts
            .iter()
            .enumerate()
            .map(|(i, (amount, _))| {
                let mut f = Feature::new(format!("f{i}"), None, Variability::Optional);
                f.attributes = vec![Attribute::new("CPU", *amount), Attribute::new("RAM", *amount)];
                f
            })
            .collect();
        let hosted: Vec<(&Feature, u32)> = features.iter().zip(&amounts).map(|(f, (_, n))| (f, *n)).collect();
        prop_assert!(verify_resources(&node, &hosted).is_ok());
    }

    #[test]
    fn offering_more_types_keeps_matches(needs in proptest::sample::subsequence(vec!["CPU", "RAM", "GPU", "DISK"], 1..=4),
                                         offers in proptest::sample::subsequence(vec!["CPU", "RAM", "GPU", "DISK"], 0..=4),
                                         extra in proptest::sample::select(vec!["CPU", "RAM", "GPU", "DISK"])) {
        let mut f = Feature::new("f", None, Variability::Optional);
        f.attributes = needs.iter().map(|r| Attribute::new(*r, 1)).collect();
        let with = |types: &[&str]| {
            let res: Vec<(&str, u64)> = types.iter().map(|r| (*r, 10)).collect();
            NodeDescriptor::with_resources("N", NodeClass::Embedded, &res)
        };
        let mut more = offers.clone();
        if !more.contains(&extra) {
            more.push(extra);
        }
        if find_match(&f, &with(&offers)) {
            prop_assert!(find_match(&f, &with(&more)));
        }
        prop_assert_eq!(find_match(&f, &with(&offers)), needs.iter().all(|r| offers.contains(r)));
    }
}
