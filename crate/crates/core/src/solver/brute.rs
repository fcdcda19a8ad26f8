use std::collections::BTreeMap;

use crate::config::{is_valid_configuration, selection_violation, Configuration};
use crate::deploy::NodeDescriptor;
use crate::error::SolverError;
use crate::matcher::AugmentedModel;
use crate::model::FeatureId;

pub const DEFAULT_BRUTE_FORCE_BOUND: u128 = 10_000_000;

fn count_domain(feature: &crate::model::Feature) -> Vec<u32> {
    std::iter::once(0).chain(feature.cardinality.selected_counts()).collect()
}

/// Number of feature selections (instance-count combinations) the oracle
/// walks.
pub fn brute_force_space(augmented: &AugmentedModel) -> u128 {
    augmented
        .base
        .features
        .iter()
        .map(|f| count_domain(f).len() as u128)
        .product()
}

/// Advances a mixed-radix counter; false once it wraps around.
fn next(digits: &mut [usize], radices: &[usize]) -> bool {
    for (d, &r) in digits.iter_mut().zip(radices) {
        *d += 1;
        if *d < r {
            return true;
        }
        *d = 0;
    }
    false
}

/// Exhaustive oracle: every instance-count vector over every feature, and
/// for each structurally valid selection every assignment of its attributed
/// features to nodes, kept when [`is_valid_configuration`] accepts it.
///
/// `bound` caps both the number of selections and the number of hosting
/// assignments tried for any one selection.
pub fn brute_force_enumerate(
    augmented: &AugmentedModel,
    nodes: &[NodeDescriptor],
    bound: u128,
) -> Result<Vec<Configuration>, SolverError> {
    let model = &augmented.base;
    let size = brute_force_space(augmented);
    if size > bound {
        return Err(SolverError::SpaceTooLarge { size, bound });
    }
    let domains: Vec<Vec<u32>> = model.features.iter().map(count_domain).collect();
    let radices: Vec<usize> = domains.iter().map(Vec::len).collect();
    let mut digits = vec![0usize; domains.len()];
    let mut out = Vec::new();

    loop {
        let selection: BTreeMap<FeatureId, u32> = model
            .features
            .iter()
            .zip(&digits)
            .zip(&domains)
            .filter(|((_, &d), dom)| dom[d] > 0)
            .map(|((f, &d), dom)| (f.id.clone(), dom[d]))
            .collect();

        if selection_violation(model, &selection).is_none() {
            let placed: Vec<&FeatureId> = model
                .features
                .iter()
                .filter(|f| f.has_attributes() && selection.contains_key(&f.id))
                .map(|f| &f.id)
                .collect();
            let assignments = (nodes.len() as u128).checked_pow(placed.len() as u32).unwrap_or(u128::MAX);
            if assignments > bound {
                return Err(SolverError::SpaceTooLarge { size: assignments, bound });
            }
            if !nodes.is_empty() || placed.is_empty() {
                let node_radices = vec![nodes.len(); placed.len()];
                let mut hosts = vec![0usize; placed.len()];
                loop {
                    let config = Configuration {
                        selection: selection.clone(),
                        hosting: placed
                            .iter()
                            .zip(&hosts)
                            .map(|(f, &n)| ((*f).clone(), nodes[n].id.clone()))
                            .collect(),
                    };
                    if is_valid_configuration(model, nodes, &augmented.spec, &config).expect("oracle builds known features") {
                        out.push(config);
                    }
                    if !next(&mut hosts, &node_radices) {
                        break;
                    }
                }
            }
        }
        if !next(&mut digits, &radices) {
            break;
        }
    }
    out.sort();
    Ok(out)
}
