//! Exact inference by variable elimination.

use std::collections::BTreeSet;

use super::factor::Factor;
use super::{Assignment, BayesNet, BnError, EvidenceSet, Posterior, ZERO_EVIDENCE_THRESHOLD};

/// Probability of a full assignment: the product of each node's CPT entry.
pub fn joint_probability(net: &BayesNet, assignment: &Assignment) -> Result<f64, BnError> {
    for node in assignment.keys() {
        if net.index_of(node).is_none() {
            return Err(BnError::UnknownNode(node.clone()));
        }
    }
    let mut states = Vec::with_capacity(net.len());
    for node in net.nodes() {
        let state = assignment
            .get(&node.id)
            .ok_or_else(|| BnError::IncompleteAssignment(node.id.clone()))?;
        states.push(node.state_index(state).ok_or_else(|| BnError::UnknownState {
            node: node.id.clone(),
            state: state.clone(),
        })?);
    }
    Ok((0..net.len())
        .map(|i| net.cpts()[i].rows[net.row_index(i, &states)][states[i]])
        .product())
}

/// Marginal probability of the evidence.
pub fn evidence_probability(net: &BayesNet, evidence: &EvidenceSet) -> Result<f64, BnError> {
    let evidence = resolve(net, evidence)?;
    Ok(eliminate(net, None, &evidence).values[0])
}

/// Posterior distribution of `query` given `evidence`.
pub fn posterior(net: &BayesNet, query: &str, evidence: &EvidenceSet) -> Result<Posterior, BnError> {
    let q = net
        .index_of(query)
        .ok_or_else(|| BnError::UnknownNode(query.to_string()))?;
    let evidence = resolve(net, evidence)?;
    if evidence.iter().any(|&(v, _)| v == q) {
        return Err(BnError::QueryInEvidence(query.to_string()));
    }
    let factor = eliminate(net, Some(q), &evidence);
    debug_assert_eq!(factor.vars, vec![q]);
    let z: f64 = factor.values.iter().sum();
    if !(z >= ZERO_EVIDENCE_THRESHOLD) {
        return Err(BnError::ZeroProbabilityEvidence(z));
    }
    let node = &net.nodes()[q];
    Ok(Posterior {
        node: node.id.clone(),
        states: node.states.clone(),
        probs: factor.values.iter().map(|v| v / z).collect(),
    })
}

fn resolve(net: &BayesNet, evidence: &EvidenceSet) -> Result<Vec<(usize, usize)>, BnError> {
    evidence
        .iter()
        .map(|(node, state)| {
            let i = net
                .index_of(node)
                .ok_or_else(|| BnError::UnknownNode(node.clone()))?;
            let s = net.nodes()[i]
                .state_index(state)
                .ok_or_else(|| BnError::UnknownState {
                    node: node.clone(),
                    state: state.clone(),
                })?;
            Ok((i, s))
        })
        .collect()
}

/// Unnormalized factor over `keep` (or a scalar) with evidence applied.
fn eliminate(net: &BayesNet, keep: Option<usize>, evidence: &[(usize, usize)]) -> Factor {
    // Nodes outside the ancestral set of query and evidence sum to one.
    let mut relevant = BTreeSet::new();
    let mut stack: Vec<usize> = keep.into_iter().chain(evidence.iter().map(|e| e.0)).collect();
    while let Some(v) = stack.pop() {
        if relevant.insert(v) {
            stack.extend_from_slice(net.parent_indices(v));
        }
    }

    let mut factors: Vec<Factor> = relevant
        .iter()
        .map(|&i| {
            evidence
                .iter()
                .fold(Factor::from_cpt(net, i), |f, &(v, s)| f.reduce(v, s))
        })
        .collect();

    let observed: BTreeSet<usize> = evidence.iter().map(|e| e.0).collect();
    let hidden: BTreeSet<usize> = relevant
        .iter()
        .copied()
        .filter(|v| Some(*v) != keep && !observed.contains(v))
        .collect();

    for var in elimination_order(&factors, hidden) {
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.contains(var));
        factors = rest;
        let merged = touching
            .iter()
            .fold(Factor::scalar(1.0), |acc, f| acc.product(f));
        factors.push(merged.sum_out(var));
    }
    factors
        .iter()
        .fold(Factor::scalar(1.0), |acc, f| acc.product(f))
}

/// Greedy min-fill order; ties go to fewer neighbours, then lower index.
fn elimination_order(factors: &[Factor], mut hidden: BTreeSet<usize>) -> Vec<usize> {
    let mut adj: std::collections::BTreeMap<usize, BTreeSet<usize>> = Default::default();
    for f in factors {
        for &a in &f.vars {
            let entry = adj.entry(a).or_default();
            entry.extend(f.vars.iter().copied().filter(|&b| b != a));
        }
    }
    let mut order = Vec::with_capacity(hidden.len());
    while !hidden.is_empty() {
        let best = hidden
            .iter()
            .copied()
            .min_by_key(|v| {
                let ns: Vec<usize> = adj.get(v).map_or_else(Vec::new, |s| s.iter().copied().collect());
                let mut fill = 0usize;
                for (k, a) in ns.iter().enumerate() {
                    for b in &ns[k + 1..] {
                        if !adj[a].contains(b) {
                            fill += 1;
                        }
                    }
                }
                (fill, ns.len(), *v)
            })
            .expect("hidden is non-empty");
        hidden.remove(&best);
        let ns: Vec<usize> = adj.remove(&best).unwrap_or_default().into_iter().collect();
        for &a in &ns {
            let entry = adj.get_mut(&a).expect("adjacency is symmetric");
            entry.remove(&best);
            entry.extend(ns.iter().copied().filter(|&b| b != a));
        }
        order.push(best);
    }
    order
}
