//! Compilation of fault trees into Bayesian networks.

use std::collections::{BTreeMap, BTreeSet};

use super::{BayesNet, BnError, BnNode, Cpt};
use crate::hara::{validate_fta, Fta, GateOp};

/// State index 0 of every compiled event node.
pub const OCCURS: &str = "occurs";
/// State index 1 of every compiled event node.
pub const NOT_OCCURS: &str = "not_occurs";

/// Deterministic CPT rows for a gate over `n` binary parents.
///
/// Row `r` encodes parent `k` in bit `n - 1 - k`, with 0 meaning the parent
/// occurs, which matches the row-major layout with the last parent fastest.
pub fn gate_cpt(op: GateOp, n: usize) -> Vec<Vec<f64>> {
    let all_absent = (1usize << n) - 1;
    (0..1usize << n)
        .map(|r| {
            let occurs = match op {
                GateOp::And => r == 0,
                GateOp::Or => r != all_absent,
            };
            if occurs {
                vec![1.0, 0.0]
            } else {
                vec![0.0, 1.0]
            }
        })
        .collect()
}

/// Compile a fault tree; each atomic event gets a prior of occurring.
pub fn compile_fta_to_bn(fta: &Fta, leaf_priors: &BTreeMap<String, f64>) -> Result<BayesNet, BnError> {
    compile_fta_to_bn_with(fta, leaf_priors, &BTreeMap::new())
}

/// As [`compile_fta_to_bn`], replacing the gate tables of selected events
/// with explicit (for example noisy) CPTs over the same parents.
pub fn compile_fta_to_bn_with(
    fta: &Fta,
    leaf_priors: &BTreeMap<String, f64>,
    overrides: &BTreeMap<String, Cpt>,
) -> Result<BayesNet, BnError> {
    let defects = validate_fta(fta);
    if !defects.is_empty() {
        return Err(BnError::InvalidFta(defects));
    }
    let atomic: BTreeSet<&str> = fta.atomic_events().map(|e| e.id.as_str()).collect();
    for id in leaf_priors.keys() {
        if !atomic.contains(id.as_str()) {
            return Err(BnError::UnexpectedPrior(id.clone()));
        }
    }
    for id in overrides.keys() {
        if fta.gate(id).is_none() {
            return Err(BnError::UnknownNode(id.clone()));
        }
    }

    let mut nodes = Vec::new();
    let mut cpts = Vec::new();
    for event in &fta.events {
        nodes.push(BnNode::new(event.id.clone(), [OCCURS, NOT_OCCURS]));
        if event.atomic {
            let p = *leaf_priors
                .get(&event.id)
                .ok_or_else(|| BnError::MissingPrior(event.id.clone()))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(BnError::InvalidPrior {
                    event: event.id.clone(),
                    value: p,
                });
            }
            cpts.push(Cpt::prior(event.id.clone(), vec![p, 1.0 - p]));
        } else {
            let gate = fta.gate(&event.id).expect("validated tree gates every non-atomic event");
            match overrides.get(&event.id) {
                Some(cpt) => {
                    let want: BTreeSet<&String> = gate.children.iter().collect();
                    let got: BTreeSet<&String> = cpt.parent_order.iter().collect();
                    if want != got || cpt.parent_order.len() != gate.children.len() {
                        return Err(BnError::ParentMismatch {
                            node: event.id.clone(),
                        });
                    }
                    cpts.push(cpt.clone());
                }
                None => cpts.push(Cpt {
                    node: event.id.clone(),
                    parent_order: gate.children.clone(),
                    rows: gate_cpt(gate.op, gate.children.len()),
                }),
            }
        }
    }
    BayesNet::from_parts(nodes, None, cpts, Some(fta.top.clone()))
}
