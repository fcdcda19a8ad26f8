use super::{EncodedConstraint, Encoding, ResourceTerm, VarId, UNHOSTED};
use crate::config::Configuration;

type Domains = Vec<Vec<i64>>;

/// The domain of some variable became empty.
struct Wipeout;

fn retain(doms: &mut Domains, var: VarId, keep: impl Fn(i64) -> bool) -> Result<bool, Wipeout> {
    let dom = &mut doms[var.0];
    let before = dom.len();
    dom.retain(|&v| keep(v));
    if dom.is_empty() {
        Err(Wipeout)
    } else {
        Ok(dom.len() != before)
    }
}

fn is(doms: &Domains, var: VarId, value: i64) -> bool {
    doms[var.0].len() == 1 && doms[var.0][0] == value
}

fn can(doms: &Domains, var: VarId, value: i64) -> bool {
    doms[var.0].contains(&value)
}

/// Smallest instance count a term can contribute when its feature is hosted.
fn min_positive_count(doms: &Domains, term: &ResourceTerm) -> Option<u64> {
    match term.count {
        None => Some(1),
        Some(c) => doms[c.0].iter().filter(|&&v| v > 0).min().map(|&v| v as u64),
    }
}

fn propagate_one(c: &EncodedConstraint, doms: &mut Domains) -> Result<bool, Wipeout> {
    let mut changed = false;
    match c {
        EncodedConstraint::Root { selection } => {
            changed |= retain(doms, *selection, |v| v == 1)?;
        }
        EncodedConstraint::TreeLink { child, parent } => {
            if is(doms, *parent, 0) {
                changed |= retain(doms, *child, |v| v == 0)?;
            }
            if is(doms, *child, 1) {
                changed |= retain(doms, *parent, |v| v == 1)?;
            }
        }
        EncodedConstraint::MandatoryLink { parent, child } => {
            if is(doms, *parent, 1) {
                changed |= retain(doms, *child, |v| v == 1)?;
            }
            if is(doms, *child, 0) {
                changed |= retain(doms, *parent, |v| v == 0)?;
            }
        }
        EncodedConstraint::XorExactlyOne { owner, members } => {
            let chosen = members.iter().filter(|&&m| is(doms, m, 1)).count();
            let open: Vec<VarId> = members.iter().copied().filter(|&m| can(doms, m, 1)).collect();
            if chosen > 1 || open.is_empty() {
                changed |= retain(doms, *owner, |v| v == 0)?;
            } else if is(doms, *owner, 1) {
                if chosen == 1 {
                    let rest: Vec<VarId> = members.iter().copied().filter(|&m| !is(doms, m, 1)).collect();
                    for m in rest {
                        changed |= retain(doms, m, |v| v == 0)?;
                    }
                } else if open.len() == 1 {
                    changed |= retain(doms, open[0], |v| v == 1)?;
                }
            }
        }
        EncodedConstraint::Implies { antecedent, consequent } => {
            if is(doms, *antecedent, 1) {
                changed |= retain(doms, *consequent, |v| v == 1)?;
            }
            if is(doms, *consequent, 0) {
                changed |= retain(doms, *antecedent, |v| v == 0)?;
            }
        }
        EncodedConstraint::Excludes { antecedent, consequent } => {
            if is(doms, *antecedent, 1) {
                changed |= retain(doms, *consequent, |v| v == 0)?;
            }
            if is(doms, *consequent, 1) {
                changed |= retain(doms, *antecedent, |v| v == 0)?;
            }
        }
        EncodedConstraint::CountChannel { selection, count: other } | EncodedConstraint::HostChannel { selection, host: other } => {
            let off = if matches!(c, EncodedConstraint::CountChannel { .. }) {
                0
            } else {
                UNHOSTED
            };
            if is(doms, *selection, 0) {
                changed |= retain(doms, *other, |v| v == off)?;
            } else if is(doms, *selection, 1) {
                changed |= retain(doms, *other, |v| v != off)?;
            }
            if is(doms, *other, off) {
                changed |= retain(doms, *selection, |v| v == 0)?;
            } else if !can(doms, *other, off) {
                changed |= retain(doms, *selection, |v| v == 1)?;
            }
        }
        EncodedConstraint::ColocatedEq { a, b } | EncodedConstraint::SeparatedNeq { a, b } => {
            let equal = matches!(c, EncodedConstraint::ColocatedEq { .. });
            for (x, y) in [(*a, *b), (*b, *a)] {
                let other = doms[y.0].clone();
                let supported = |v: i64| {
                    v == UNHOSTED || other.iter().any(|&w| w == UNHOSTED || (w == v) == equal)
                };
                changed |= retain(doms, x, supported)?;
            }
        }
        EncodedConstraint::HostedPin { host, allowed } => {
            changed |= retain(doms, *host, |v| v == UNHOSTED || allowed.contains(&v))?;
        }
        EncodedConstraint::ResourceSumLeq { node, terms, capacity, .. } => {
            // Lower bound on the load: terms already fixed to this node, at
            // their smallest possible count.
            let mins: Vec<u64> = terms
                .iter()
                .map(|t| {
                    if is(doms, t.host, *node) {
                        min_positive_count(doms, t).map_or(0, |c| c * t.amount)
                    } else {
                        0
                    }
                })
                .collect();
            let total: u64 = mins.iter().sum();
            if total > *capacity {
                return Err(Wipeout);
            }
            for (t, own) in terms.iter().zip(&mins) {
                let rest = total - own;
                if is(doms, t.host, *node) {
                    if let Some(count) = t.count {
                        changed |= retain(doms, count, |v| v <= 0 || rest + v as u64 * t.amount <= *capacity)?;
                    }
                } else if can(doms, t.host, *node) {
                    let fits = min_positive_count(doms, t).is_some_and(|c| rest + c * t.amount <= *capacity);
                    if !fits {
                        changed |= retain(doms, t.host, |v| v != *node)?;
                    }
                }
            }
        }
    }
    Ok(changed)
}

fn propagate(constraints: &[EncodedConstraint], doms: &mut Domains) -> Result<(), Wipeout> {
    loop {
        let mut changed = false;
        for c in constraints {
            changed |= propagate_one(c, doms)?;
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Solutions of one enumeration run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Enumeration {
    /// Sorted, without duplicates.
    pub configurations: Vec<Configuration>,
    /// Set when the solution limit stopped the search early.
    pub truncated: bool,
}

struct Search<'e> {
    encoding: &'e Encoding,
    limit: usize,
    found: Vec<Configuration>,
    truncated: bool,
}

impl Search<'_> {
    fn solution(&self, doms: &Domains) -> Configuration {
        let space = &self.encoding.space;
        let mut config = Configuration::new();
        for (i, id) in space.features.iter().enumerate() {
            let selected = doms[space.selection[i].0][0];
            let count = match space.count[i] {
                Some(c) => doms[c.0][0],
                None => selected,
            };
            config.set_count(id.clone(), count as u32);
            if let Some(h) = space.hosting[i] {
                let node = doms[h.0][0];
                if node != UNHOSTED {
                    config.hosting.insert(id.clone(), space.nodes[node as usize].clone());
                }
            }
        }
        config
    }

    fn dfs(&mut self, doms: Domains, next: usize) {
        if self.truncated {
            return;
        }
        let Some(var) = (next..doms.len()).find(|&v| doms[v].len() > 1) else {
            if self.found.len() >= self.limit {
                self.truncated = true;
            } else {
                self.found.push(self.solution(&doms));
            }
            return;
        };
        for &value in &doms[var] {
            let mut branch = doms.clone();
            branch[var] = vec![value];
            if propagate(&self.encoding.constraints, &mut branch).is_ok() {
                self.dfs(branch, var + 1);
            }
            if self.truncated {
                return;
            }
        }
    }
}

/// Every solution of `encoding`, at most `limit` of them, in canonical
/// order.
pub fn enumerate(encoding: &Encoding, limit: usize) -> Enumeration {
    let mut doms: Domains = encoding.space.vars.iter().map(|v| v.domain.clone()).collect();
    let mut search = Search {
        encoding,
        limit,
        found: Vec::new(),
        truncated: false,
    };
    if propagate(&encoding.constraints, &mut doms).is_ok() {
        search.dfs(doms, 0);
    }
    let mut configurations = search.found;
    configurations.sort();
    configurations.dedup();
    Enumeration {
        configurations,
        truncated: search.truncated,
    }
}
