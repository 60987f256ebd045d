//! Discrete Bayesian networks.
//!
//! A [`BayesNet`] is a DAG of discrete variables, each with a conditional
//! probability table over its parents. Networks are immutable once built;
//! inference ([`posterior`], [`joint_probability`]) borrows the network and
//! is safe to run concurrently.
//!
//! CPT rows are laid out row-major over the CPT's `parent_order`, with the
//! last parent varying fastest. Each row is a distribution over the node's
//! states in declaration order.

mod factor;
mod fta;
mod infer;
mod learn;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc::{self, DocError};
use crate::hara::FtaDefect;

pub use fta::{compile_fta_to_bn, compile_fta_to_bn_with, gate_cpt, NOT_OCCURS, OCCURS};
pub use infer::{evidence_probability, joint_probability, posterior};
pub use learn::fit_cpts;

/// Rows whose sum is off by more than this are rejected at load.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Evidence with smaller marginal probability is treated as impossible.
pub const ZERO_EVIDENCE_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BnError {
    #[error("duplicate node {0:?}")]
    DuplicateNode(String),
    #[error("node {0:?} needs at least two states")]
    TooFewStates(String),
    #[error("node {node:?} declares state {state:?} twice")]
    DuplicateState { node: String, state: String },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("node {node:?} has no state {state:?}")]
    UnknownState { node: String, state: String },
    #[error("node {0:?} has no CPT")]
    MissingCpt(String),
    #[error("node {0:?} has more than one CPT")]
    DuplicateCpt(String),
    #[error("CPT parents of {node:?} do not match its incoming edges")]
    ParentMismatch { node: String },
    #[error("CPT of {node:?} has {found} rows, expected {expected}")]
    RowCount {
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("CPT of {node:?}, row {row}: expected {expected} entries")]
    RowWidth {
        node: String,
        row: usize,
        expected: usize,
    },
    #[error("CPT of {node:?}, row {row}: entries must lie in [0, 1]")]
    InvalidProbability { node: String, row: usize },
    #[error("CPT of {node:?}, row {row} sums to {sum}")]
    NotNormalized { node: String, row: usize, sum: f64 },
    #[error("network contains a cycle through {0:?}")]
    Cyclic(Vec<String>),
    #[error("objective node {0:?} must not have children")]
    ObjectiveHasChildren(String),
    #[error("assignment does not cover node {0:?}")]
    IncompleteAssignment(String),
    #[error("evidence has probability {0:e}, below the zero threshold")]
    ZeroProbabilityEvidence(f64),
    #[error("query node {0:?} is also in the evidence")]
    QueryInEvidence(String),
    #[error("network has no objective node")]
    NoObjective,
    #[error("no prior for atomic event {0:?}")]
    MissingPrior(String),
    #[error("prior given for {0:?}, which is not an atomic event")]
    UnexpectedPrior(String),
    #[error("prior of {event:?} is {value}, outside [0, 1]")]
    InvalidPrior { event: String, value: f64 },
    #[error("fault tree is invalid: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidFta(Vec<FtaDefect>),
    #[error("no value for state {0:?}")]
    MissingStateValue(String),
    #[error("value {value} for state {state:?} is outside [0, 1]")]
    InvalidStateValue { state: String, value: f64 },
    #[error("no records to fit and no smoothing")]
    EmptyData,
    #[error("smoothing must be a finite value >= 0, got {0}")]
    InvalidSmoothing(f64),
    #[error("BN document, {0}")]
    Document(#[from] DocError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BnNode {
    pub id: String,
    pub states: Vec<String>,
}

impl BnNode {
    pub fn new<S: Into<String>>(id: impl Into<String>, states: impl IntoIterator<Item = S>) -> Self {
        Self {
            id: id.into(),
            states: states.into_iter().map(Into::into).collect(),
        }
    }

    pub fn state_index(&self, state: &str) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub node: String,
    pub parent_order: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(node: impl Into<String>, parent_order: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            node: node.into(),
            parent_order: parent_order.iter().map(|p| p.to_string()).collect(),
            rows,
        }
    }

    /// A parentless CPT.
    pub fn prior(node: impl Into<String>, probs: Vec<f64>) -> Self {
        Self {
            node: node.into(),
            parent_order: Vec::new(),
            rows: vec![probs],
        }
    }
}

/// Node id → state name.
pub type Assignment = BTreeMap<String, String>;

/// Observed node states.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvidenceSet {
    assignments: BTreeMap<String, String>,
}

impl EvidenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, node: impl Into<String>, state: impl Into<String>) {
        self.assignments.insert(node.into(), state.into());
    }

    pub fn with(mut self, node: &str, state: &str) -> Self {
        self.insert(node, state);
        self
    }

    pub fn get(&self, node: &str) -> Option<&str> {
        self.assignments.get(node).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.assignments.iter()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for EvidenceSet {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self {
            assignments: iter.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
        }
    }
}

/// A normalized distribution over one node's states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub node: String,
    pub states: Vec<String>,
    pub probs: Vec<f64>,
}

impl Posterior {
    pub fn prob(&self, state: &str) -> Option<f64> {
        self.states.iter().position(|s| s == state).map(|i| self.probs[i])
    }
}

/// Expected value and variance of a state-valued score under a posterior.
pub fn mean_variance(
    post: &Posterior,
    state_values: &BTreeMap<String, f64>,
) -> Result<(f64, f64), BnError> {
    let mut mean = 0.0;
    let mut second = 0.0;
    for (state, p) in post.states.iter().zip(&post.probs) {
        let v = *state_values
            .get(state)
            .ok_or_else(|| BnError::MissingStateValue(state.clone()))?;
        if !(0.0..=1.0).contains(&v) {
            return Err(BnError::InvalidStateValue {
                state: state.clone(),
                value: v,
            });
        }
        mean += p * v;
        second += p * v * v;
    }
    // Cancellation can leave a tiny negative residue.
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// A validated discrete Bayesian network. Nodes are kept sorted by id so
/// results do not depend on insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    nodes: Vec<BnNode>,
    index: BTreeMap<String, usize>,
    cpts: Vec<Cpt>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    objective: Option<usize>,
}

impl BayesNet {
    pub fn builder() -> BayesNetBuilder {
        BayesNetBuilder::default()
    }

    /// Validate nodes, an explicit edge list and CPTs into a network.
    pub fn from_parts(
        nodes: Vec<BnNode>,
        edges: Option<Vec<(String, String)>>,
        cpts: Vec<Cpt>,
        objective: Option<String>,
    ) -> Result<Self, BnError> {
        let mut nodes = nodes;
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = BTreeMap::new();
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(BnError::DuplicateNode(node.id.clone()));
            }
            if node.states.len() < 2 {
                return Err(BnError::TooFewStates(node.id.clone()));
            }
            let mut seen = BTreeSet::new();
            for s in &node.states {
                if !seen.insert(s) {
                    return Err(BnError::DuplicateState {
                        node: node.id.clone(),
                        state: s.clone(),
                    });
                }
            }
        }

        let mut slots: Vec<Option<Cpt>> = vec![None; nodes.len()];
        for cpt in cpts {
            let i = *index
                .get(&cpt.node)
                .ok_or_else(|| BnError::UnknownNode(cpt.node.clone()))?;
            if slots[i].is_some() {
                return Err(BnError::DuplicateCpt(cpt.node.clone()));
            }
            slots[i] = Some(cpt);
        }
        let mut cpts = Vec::with_capacity(nodes.len());
        for (i, slot) in slots.into_iter().enumerate() {
            cpts.push(slot.ok_or_else(|| BnError::MissingCpt(nodes[i].id.clone()))?);
        }

        let mut parents = vec![Vec::new(); nodes.len()];
        let mut children = vec![Vec::new(); nodes.len()];
        for (i, cpt) in cpts.iter_mut().enumerate() {
            let mut seen = BTreeSet::new();
            for p in &cpt.parent_order {
                let pi = *index.get(p).ok_or_else(|| BnError::UnknownNode(p.clone()))?;
                if !seen.insert(pi) || pi == i {
                    return Err(BnError::ParentMismatch {
                        node: cpt.node.clone(),
                    });
                }
                parents[i].push(pi);
                children[pi].push(i);
            }
            let cards: Vec<usize> = parents[i].iter().map(|&p| nodes[p].states.len()).collect();
            normalize_rows(cpt, &cards, nodes[i].states.len())?;
        }

        if let Some(edges) = edges {
            let mut declared = BTreeSet::new();
            for (from, to) in &edges {
                let f = *index.get(from).ok_or_else(|| BnError::UnknownNode(from.clone()))?;
                let t = *index.get(to).ok_or_else(|| BnError::UnknownNode(to.clone()))?;
                declared.insert((f, t));
            }
            let implied: BTreeSet<(usize, usize)> = parents
                .iter()
                .enumerate()
                .flat_map(|(c, ps)| ps.iter().map(move |&p| (p, c)))
                .collect();
            if let Some(&(_, node)) = declared.symmetric_difference(&implied).next() {
                return Err(BnError::ParentMismatch {
                    node: nodes[node].id.clone(),
                });
            }
        }

        let objective = match objective {
            None => None,
            Some(id) => {
                let i = *index.get(&id).ok_or(BnError::UnknownNode(id.clone()))?;
                if !children[i].is_empty() {
                    return Err(BnError::ObjectiveHasChildren(id));
                }
                Some(i)
            }
        };

        for ch in &mut children {
            ch.sort_unstable();
        }
        let net = Self {
            nodes,
            index,
            cpts,
            parents,
            children,
            objective,
        };
        net.topological_order()?;
        Ok(net)
    }

    pub fn nodes(&self) -> &[BnNode] {
        &self.nodes
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &str) -> Option<&BnNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn cpt(&self, id: &str) -> Option<&Cpt> {
        self.index.get(id).map(|&i| &self.cpts[i])
    }

    pub fn parents(&self, id: &str) -> Option<&[String]> {
        self.cpt(id).map(|c| c.parent_order.as_slice())
    }

    pub fn children(&self, id: &str) -> Vec<&str> {
        self.index.get(id).map_or_else(Vec::new, |&i| {
            self.children[i].iter().map(|&c| self.nodes[c].id.as_str()).collect()
        })
    }

    /// All (parent, child) edges, sorted.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut edges: Vec<(String, String)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(c, ps)| {
                ps.iter()
                    .map(move |&p| (self.nodes[p].id.clone(), self.nodes[c].id.clone()))
            })
            .collect();
        edges.sort();
        edges
    }

    pub fn objective(&self) -> Option<&str> {
        self.objective.map(|i| self.nodes[i].id.as_str())
    }

    /// Node ids in a topological order (parents first, ties by id).
    pub fn topological_order(&self) -> Result<Vec<&str>, BnError> {
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BTreeSet<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(i) = ready.pop_first() {
            order.push(self.nodes[i].id.as_str());
            for &c in &self.children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < self.nodes.len() {
            let stuck = (0..self.nodes.len())
                .filter(|&i| indegree[i] > 0)
                .map(|i| self.nodes[i].id.clone())
                .collect();
            return Err(BnError::Cyclic(stuck));
        }
        Ok(order)
    }

    /// A copy with one CPT replaced; structure must stay the same.
    pub fn with_cpt(&self, cpt: Cpt) -> Result<Self, BnError> {
        let i = *self
            .index
            .get(&cpt.node)
            .ok_or_else(|| BnError::UnknownNode(cpt.node.clone()))?;
        let mut cpts = self.cpts.clone();
        let old: BTreeSet<&String> = cpts[i].parent_order.iter().collect();
        let new: BTreeSet<&String> = cpt.parent_order.iter().collect();
        if old != new || cpt.parent_order.len() != cpts[i].parent_order.len() {
            return Err(BnError::ParentMismatch { node: cpt.node });
        }
        cpts[i] = cpt;
        Self::from_parts(
            self.nodes.clone(),
            None,
            cpts,
            self.objective().map(str::to_string),
        )
    }

    /// A copy with a different (or no) objective node.
    pub fn with_objective(&self, objective: Option<&str>) -> Result<Self, BnError> {
        Self::from_parts(
            self.nodes.clone(),
            None,
            self.cpts.clone(),
            objective.map(str::to_string),
        )
    }

    pub(crate) fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn parent_indices(&self, i: usize) -> &[usize] {
        &self.parents[i]
    }

    pub(crate) fn card(&self, i: usize) -> usize {
        self.nodes[i].states.len()
    }

    /// Row of node `i`'s CPT for a full assignment of state indices.
    pub(crate) fn row_index(&self, i: usize, states: &[usize]) -> usize {
        self.parents[i]
            .iter()
            .fold(0, |acc, &p| acc * self.card(p) + states[p])
    }

    pub fn to_json(&self) -> String {
        doc::to_json(&BnDoc {
            nodes: self.nodes.clone(),
            edges: self.edges(),
            cpts: self.cpts.clone(),
            objective: self.objective().map(str::to_string),
        })
    }
}

fn normalize_rows(cpt: &mut Cpt, parent_cards: &[usize], card: usize) -> Result<(), BnError> {
    let expected: usize = parent_cards.iter().product();
    if cpt.rows.len() != expected {
        return Err(BnError::RowCount {
            node: cpt.node.clone(),
            expected,
            found: cpt.rows.len(),
        });
    }
    for (r, row) in cpt.rows.iter_mut().enumerate() {
        if row.len() != card {
            return Err(BnError::RowWidth {
                node: cpt.node.clone(),
                row: r,
                expected: card,
            });
        }
        if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(BnError::InvalidProbability {
                node: cpt.node.clone(),
                row: r,
            });
        }
        let sum: f64 = row.iter().sum();
        let err = (sum - 1.0).abs();
        if err > NORMALIZATION_TOLERANCE {
            return Err(BnError::NotNormalized {
                node: cpt.node.clone(),
                row: r,
                sum,
            });
        }
        // Leave rows untouched when the residue is plain summation noise, so
        // decimal tables survive a save/load cycle bit for bit.
        if err > 4.0 * f64::EPSILON * card as f64 {
            row.iter_mut().for_each(|p| *p /= sum);
        }
    }
    Ok(())
}

/// Incremental construction of a [`BayesNet`]; edges follow from the CPTs.
#[derive(Debug, Clone, Default)]
pub struct BayesNetBuilder {
    nodes: Vec<BnNode>,
    cpts: Vec<Cpt>,
    objective: Option<String>,
}

impl BayesNetBuilder {
    pub fn node<S: Into<String>>(mut self, id: &str, states: impl IntoIterator<Item = S>) -> Self {
        self.nodes.push(BnNode::new(id, states));
        self
    }

    pub fn cpt(mut self, node: &str, parents: &[&str], rows: Vec<Vec<f64>>) -> Self {
        self.cpts.push(Cpt::new(node, parents, rows));
        self
    }

    pub fn prior(self, node: &str, probs: Vec<f64>) -> Self {
        self.cpt(node, &[], vec![probs])
    }

    pub fn push_node(&mut self, node: BnNode) {
        self.nodes.push(node);
    }

    pub fn push_cpt(&mut self, cpt: Cpt) {
        self.cpts.push(cpt);
    }

    pub fn objective(mut self, id: &str) -> Self {
        self.objective = Some(id.to_string());
        self
    }

    pub fn set_objective(&mut self, id: Option<String>) {
        self.objective = id;
    }

    pub fn build(self) -> Result<BayesNet, BnError> {
        BayesNet::from_parts(self.nodes, None, self.cpts, self.objective)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BnDoc {
    nodes: Vec<BnNode>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    cpts: Vec<Cpt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    objective: Option<String>,
}

/// Parse a BN document. The edge list must agree with the CPT parents.
pub fn parse_bn(document: &str) -> Result<BayesNet, BnError> {
    let doc: BnDoc = doc::from_json(document)?;
    BayesNet::from_parts(doc.nodes, Some(doc.edges), doc.cpts, doc.objective)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> BayesNet {
        BayesNet::builder()
            .node("A", ["t", "f"])
            .node("B", ["t", "f"])
            .prior("A", vec![0.5, 0.5])
            .cpt("B", &["A"], vec![vec![1.0, 0.0], vec![0.0, 1.0]])
            .objective("B")
            .build()
            .unwrap()
    }

    #[test]
    fn builds_and_reports_structure() {
        let net = chain();
        assert_eq!(net.edges(), vec![("A".to_string(), "B".to_string())]);
        assert_eq!(net.children("A"), vec!["B"]);
        assert_eq!(net.objective(), Some("B"));
        assert_eq!(net.topological_order().unwrap(), vec!["A", "B"]);
    }

    #[test]
    fn rejects_bad_tables() {
        let base = || BayesNet::builder().node("A", ["t", "f"]);
        assert!(matches!(
            base().prior("A", vec![0.5, 0.6]).build(),
            Err(BnError::NotNormalized { .. })
        ));
        assert!(matches!(
            base().prior("A", vec![1.5, -0.5]).build(),
            Err(BnError::InvalidProbability { .. })
        ));
        assert!(matches!(
            base().cpt("A", &[], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).build(),
            Err(BnError::RowCount { expected: 1, found: 2, .. })
        ));
        assert!(matches!(base().build(), Err(BnError::MissingCpt(_))));
        assert!(matches!(
            BayesNet::builder().node("A", ["t"]).prior("A", vec![1.0]).build(),
            Err(BnError::TooFewStates(_))
        ));
        assert!(matches!(
            BayesNet::builder().node("A", ["t", "t"]).prior("A", vec![0.5, 0.5]).build(),
            Err(BnError::DuplicateState { .. })
        ));
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let net = BayesNet::builder()
            .node("A", ["t", "f"])
            .prior("A", vec![0.3 + 5e-10, 0.7])
            .build()
            .unwrap();
        let row = &net.cpt("A").unwrap().rows[0];
        assert!((row[0] + row[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_cycles_and_objective_with_children() {
        let cyclic = BayesNet::builder()
            .node("A", ["t", "f"])
            .node("B", ["t", "f"])
            .cpt("A", &["B"], vec![vec![0.5, 0.5]; 2])
            .cpt("B", &["A"], vec![vec![0.5, 0.5]; 2])
            .build();
        assert!(matches!(cyclic, Err(BnError::Cyclic(_))));
        let bad_objective = BayesNet::builder()
            .node("A", ["t", "f"])
            .node("B", ["t", "f"])
            .prior("A", vec![0.5, 0.5])
            .cpt("B", &["A"], vec![vec![0.5, 0.5]; 2])
            .objective("A")
            .build();
        assert_eq!(bad_objective, Err(BnError::ObjectiveHasChildren("A".into())));
    }

    #[test]
    fn edge_list_must_match_parents() {
        let doc = r#"{"nodes": [{"id": "A", "states": ["t", "f"]}, {"id": "B", "states": ["t", "f"]}],
                      "edges": [],
                      "cpts": [{"node": "A", "parent_order": [], "rows": [[0.5, 0.5]]},
                               {"node": "B", "parent_order": ["A"], "rows": [[0.5, 0.5], [0.5, 0.5]]}]}"#;
        assert!(matches!(parse_bn(doc), Err(BnError::ParentMismatch { .. })));
    }

    #[test]
    fn document_round_trip_is_bit_exact() {
        let net = BayesNet::builder()
            .node("A", ["t", "f"])
            .node("B", ["x", "y", "z"])
            .prior("A", vec![0.1, 0.9])
            .cpt("B", &["A"], vec![vec![0.1, 0.2, 0.7], vec![0.3, 0.3, 0.4]])
            .objective("B")
            .build()
            .unwrap();
        let text = net.to_json();
        let back = parse_bn(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.cpt("B").unwrap().rows[0], vec![0.1, 0.2, 0.7]);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn mean_variance_examples() {
        let values: BTreeMap<String, f64> = [("t".to_string(), 1.0), ("f".to_string(), 0.0)].into();
        let post = |p: f64| Posterior {
            node: "A".into(),
            states: vec!["t".into(), "f".into()],
            probs: vec![p, 1.0 - p],
        };
        assert_eq!(mean_variance(&post(1.0), &values).unwrap(), (1.0, 0.0));
        assert_eq!(mean_variance(&post(0.5), &values).unwrap(), (0.5, 0.25));
        let partial: BTreeMap<String, f64> = [("t".to_string(), 1.0)].into();
        assert_eq!(
            mean_variance(&post(0.5), &partial),
            Err(BnError::MissingStateValue("f".into()))
        );
    }
}
