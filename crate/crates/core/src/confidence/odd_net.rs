//! Conditioning hazard networks on ODD class states.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ConfidenceError;
use crate::bayes::{BayesNet, BnNode, Cpt, NOT_OCCURS, OCCURS};
use crate::odd::OddSpec;

/// Noisy-OR influence of one ODD class on one atomic event; `weights[s]` is
/// the chance that class state `s` alone triggers the event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddLink {
    pub class: String,
    pub event: String,
    pub weights: Vec<f64>,
}

impl OddLink {
    pub fn new(class: &str, event: &str, weights: &[f64]) -> Self {
        Self {
            class: class.into(),
            event: event.into(),
            weights: weights.to_vec(),
        }
    }
}

/// A BN node whose states are the attribute names of an ODD class.
pub fn odd_node(odd: &OddSpec, class: &str) -> Result<BnNode, ConfidenceError> {
    let c = odd
        .class(class)
        .ok_or_else(|| ConfidenceError::UnknownClass(class.to_string()))?;
    if c.attributes.len() < 2 {
        return Err(ConfidenceError::InvalidConfig(format!(
            "class {class:?} needs at least two attributes to become a node"
        )));
    }
    Ok(BnNode::new(class, c.attributes.iter().map(|a| a.name.clone())))
}

/// Add ODD class nodes (uniform priors) as parents of root events.
///
/// Each linked event must be a parentless `occurs`/`not_occurs` node; its
/// prior `base` becomes the leak term of
/// `P(occurs) = 1 - (1 - base) * prod(1 - w(state))`.
pub fn attach_odd_parents(net: &BayesNet, odd: &OddSpec, links: &[OddLink]) -> Result<BayesNet, ConfidenceError> {
    let invalid = |m: String| ConfidenceError::InvalidConfig(m);
    let mut nodes = net.nodes().to_vec();
    let mut cpts = net.cpts().to_vec();
    let mut cards = BTreeMap::new();
    let mut by_event: BTreeMap<&str, Vec<&OddLink>> = BTreeMap::new();

    for link in links {
        let node = odd_node(odd, &link.class)?;
        if link.weights.len() != node.states.len() || link.weights.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(invalid(format!(
                "link {} -> {} needs one weight in [0, 1] per state",
                link.class, link.event
            )));
        }
        match net.node(&link.class) {
            Some(existing) if existing.states != node.states => {
                return Err(invalid(format!("node {:?} exists with other states", link.class)))
            }
            Some(_) => {}
            None if !cards.contains_key(&link.class) => {
                let n = node.states.len();
                cpts.push(Cpt::prior(link.class.clone(), vec![1.0 / n as f64; n]));
                nodes.push(node.clone());
            }
            None => {}
        }
        cards.insert(link.class.clone(), node.states.len());
        let group = by_event.entry(&link.event).or_default();
        if group.iter().any(|l| l.class == link.class) {
            return Err(invalid(format!("duplicate link {} -> {}", link.class, link.event)));
        }
        group.push(link);
    }

    for (event, group) in by_event {
        let node = net
            .node(event)
            .ok_or_else(|| invalid(format!("unknown event {event:?}")))?;
        let cpt = net.cpt(event).expect("every node has a CPT");
        if node.states != [OCCURS, NOT_OCCURS] || !cpt.parent_order.is_empty() {
            return Err(invalid(format!(
                "event {event:?} must be a parentless occurs/not_occurs node"
            )));
        }
        let base = cpt.rows[0][0];
        let dims: Vec<usize> = group.iter().map(|l| cards[&l.class]).collect();
        let size: usize = dims.iter().product();
        let mut od = vec![0usize; dims.len()];
        let mut rows = Vec::with_capacity(size);
        for _ in 0..size {
            let absent = group
                .iter()
                .zip(&od)
                .fold(1.0 - base, |acc, (l, &s)| acc * (1.0 - l.weights[s]));
            rows.push(vec![1.0 - absent, absent]);
            for k in (0..od.len()).rev() {
                od[k] += 1;
                if od[k] < dims[k] {
                    break;
                }
                od[k] = 0;
            }
        }
        let slot = cpts.iter_mut().find(|c| c.node == event).expect("event has a CPT");
        *slot = Cpt {
            node: event.to_string(),
            parent_order: group.iter().map(|l| l.class.clone()).collect(),
            rows,
        };
    }
    Ok(BayesNet::from_parts(
        nodes,
        None,
        cpts,
        net.objective().map(str::to_string),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{posterior, EvidenceSet};
    use crate::odd::parse_odd_spec;

    fn odd() -> OddSpec {
        parse_odd_spec(
            r#"{"classes": [
                {"name": "ODD"},
                {"name": "Fog", "parent": "ODD", "partition": true, "attributes": [
                    {"name": "Dense", "unit": "m", "interval": "[0, 100["},
                    {"name": "Clear", "unit": "m", "interval": "[100, +["}]}
            ]}"#,
        )
        .unwrap()
    }

    fn base() -> BayesNet {
        BayesNet::builder()
            .node("Miss", [OCCURS, NOT_OCCURS])
            .prior("Miss", vec![0.1, 0.9])
            .objective("Miss")
            .build()
            .unwrap()
    }

    #[test]
    fn noisy_or_rows() {
        let net = attach_odd_parents(&base(), &odd(), &[OddLink::new("Fog", "Miss", &[0.5, 0.0])]).unwrap();
        assert_eq!(net.parents("Miss").unwrap(), ["Fog"]);
        let dense = posterior(&net, "Miss", &EvidenceSet::new().with("Fog", "Dense")).unwrap();
        assert!((dense.probs[0] - (1.0 - 0.9 * 0.5)).abs() < 1e-12);
        let clear = posterior(&net, "Miss", &EvidenceSet::new().with("Fog", "Clear")).unwrap();
        assert!((clear.probs[0] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_links() {
        let n = base();
        assert!(attach_odd_parents(&n, &odd(), &[OddLink::new("Fog", "Miss", &[0.5])]).is_err());
        assert!(attach_odd_parents(&n, &odd(), &[OddLink::new("Rain", "Miss", &[0.5, 0.5])]).is_err());
        assert!(attach_odd_parents(&n, &odd(), &[OddLink::new("Fog", "Hit", &[0.5, 0.5])]).is_err());
    }
}
