//! Hazard analysis: events, causal chains and fault-tree construction.
//!
//! A hazard is decomposed through a causal relation (event → causes, joined
//! by AND or OR) into a fault tree whose atomic leaves carry the operational
//! conditions that make them likely. Those conditions are references into
//! the ODD and are what ties the tree to runtime observations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc::{self, DocError};
use crate::odd::OddSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateOp {
    #[serde(rename = "AND")]
    And,
    #[serde(rename = "OR")]
    Or,
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateOp::And => "AND",
            GateOp::Or => "OR",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventRole {
    Occurrence,
    Hazardous,
    Consequence,
}

/// Reference from an atomic event to an ODD class and one of its attributes
/// (or one of its sub-classes).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OperCondition {
    pub class: String,
    pub attribute: String,
}

impl OperCondition {
    pub fn new(class: impl Into<String>, attribute: impl Into<String>) -> Self {
        Self {
            class: class.into(),
            attribute: attribute.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub atomic: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<EventRole>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub oper_conditions: Vec<OperCondition>,
}

impl Event {
    pub fn atomic(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            atomic: true,
            role: None,
            oper_conditions: Vec::new(),
        }
    }

    pub fn intermediate(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            atomic: false,
            ..Self::atomic(id, text)
        }
    }

    pub fn with_role(mut self, role: EventRole) -> Self {
        self.role = Some(role);
        self
    }

    pub fn with_conditions(mut self, conditions: impl IntoIterator<Item = OperCondition>) -> Self {
        self.oper_conditions.extend(conditions);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalEntry {
    pub op: GateOp,
    pub children: Vec<String>,
}

/// Event id → the ordered causes of that event and the gate joining them.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CausalRelation {
    entries: BTreeMap<String, CausalEntry>,
}

impl CausalRelation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, parent: impl Into<String>, op: GateOp, children: Vec<String>) {
        self.entries.insert(parent.into(), CausalEntry { op, children });
    }

    pub fn with(mut self, parent: &str, op: GateOp, children: &[&str]) -> Self {
        self.insert(parent, op, children.iter().map(|c| c.to_string()).collect());
        self
    }

    pub fn get(&self, event: &str) -> Option<&CausalEntry> {
        self.entries.get(event)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &CausalEntry)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub parent: String,
    pub op: GateOp,
    pub children: Vec<String>,
}

/// A fault tree: top event, the event set in discovery order and one gate
/// per developed (non-atomic) event. Events may be shared between branches.
#[derive(Debug, Clone, PartialEq)]
pub struct Fta {
    pub top: String,
    pub events: Vec<Event>,
    pub gates: Vec<Gate>,
}

impl Fta {
    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn gate(&self, parent: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.parent == parent)
    }

    pub fn atomic_events(&self) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(|e| e.atomic)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FtaError {
    #[error("hazard {0:?} is not among the events")]
    UnknownHazard(String),
    #[error("causal relation of {parent:?} references unknown event {child:?}")]
    DanglingReference { parent: String, child: String },
    #[error("causal relation entry for {0:?} has no children")]
    EmptyCauses(String),
    #[error("causal relation is cyclic: {}", .0.join(" -> "))]
    CyclicCausality(Vec<String>),
    #[error("non-atomic event {0:?} has no causal relation entry")]
    UndevelopedEvent(String),
    #[error("duplicate event id {0:?}")]
    DuplicateEvent(String),
    #[error("event {0:?} is not part of the hazard chain")]
    NotInChain(String),
    #[error("trigger edge {from:?} -> {to:?} must run from an occurrence event to the hazardous event")]
    InvalidTrigger { from: String, to: String },
    #[error("event {event:?}: declared {declared:?} but its dependency edges admit {admitted:?}")]
    InconsistentChain {
        event: String,
        declared: Option<EventRole>,
        admitted: Vec<EventRole>,
    },
    #[error("HARA document has no hazards")]
    NoHazards,
    #[error("HARA document, {0}")]
    Document(#[from] DocError),
}

/// Build a fault tree from a hazard by worklist expansion of the causal
/// relation. Each event is appended to the event set at most once and each
/// developed event receives exactly one gate.
pub fn compute_fta(
    hazard: &str,
    events: &[Event],
    causal_relation: &CausalRelation,
) -> Result<Fta, FtaError> {
    let mut by_id: BTreeMap<&str, &Event> = BTreeMap::new();
    for e in events {
        if by_id.insert(e.id.as_str(), e).is_some() {
            return Err(FtaError::DuplicateEvent(e.id.clone()));
        }
    }
    if !by_id.contains_key(hazard) {
        return Err(FtaError::UnknownHazard(hazard.to_string()));
    }
    for (parent, entry) in causal_relation.iter() {
        if !by_id.contains_key(parent.as_str()) {
            return Err(FtaError::DanglingReference {
                parent: parent.clone(),
                child: parent.clone(),
            });
        }
        if entry.children.is_empty() {
            return Err(FtaError::EmptyCauses(parent.clone()));
        }
        if let Some(child) = entry.children.iter().find(|c| !by_id.contains_key(c.as_str())) {
            return Err(FtaError::DanglingReference {
                parent: parent.clone(),
                child: child.clone(),
            });
        }
    }

    let expands = |id: &str| !by_id[id].atomic;
    check_acyclic(hazard, causal_relation, &expands)?;

    let gate_for = |id: &str| -> Result<Gate, FtaError> {
        let entry = causal_relation
            .get(id)
            .ok_or_else(|| FtaError::UndevelopedEvent(id.to_string()))?;
        Ok(Gate {
            parent: id.to_string(),
            op: entry.op,
            children: entry.children.clone(),
        })
    };

    let mut in_set: BTreeSet<&str> = BTreeSet::from([hazard]);
    let mut order: Vec<&str> = vec![hazard];
    let mut gates = Vec::new();
    let mut gated: BTreeSet<&str> = BTreeSet::new();
    let mut stack: Vec<&str> = Vec::new();

    if expands(hazard) {
        gates.push(gate_for(hazard)?);
        gated.insert(hazard);
        stack.push(hazard);
    }
    while let Some(current) = stack.pop() {
        let Some(entry) = causal_relation.get(current) else {
            continue;
        };
        for child in &entry.children {
            let child = child.as_str();
            if in_set.insert(child) {
                order.push(child);
            }
            if expands(child) && gated.insert(child) {
                gates.push(gate_for(child)?);
                stack.push(child);
            }
        }
    }

    Ok(Fta {
        top: hazard.to_string(),
        events: order.into_iter().map(|id| by_id[id].clone()).collect(),
        gates,
    })
}

fn check_acyclic(
    start: &str,
    relation: &CausalRelation,
    expands: &dyn Fn(&str) -> bool,
) -> Result<(), FtaError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Active,
        Done,
    }
    fn visit<'a>(
        id: &'a str,
        relation: &'a CausalRelation,
        expands: &dyn Fn(&str) -> bool,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Result<(), FtaError> {
        match marks.get(id) {
            Some(Mark::Done) => return Ok(()),
            Some(Mark::Active) => {
                let from = path.iter().position(|p| *p == id).unwrap_or(0);
                let mut cycle: Vec<String> = path[from..].iter().map(|s| s.to_string()).collect();
                cycle.push(id.to_string());
                return Err(FtaError::CyclicCausality(cycle));
            }
            None => {}
        }
        marks.insert(id, Mark::Active);
        path.push(id);
        if expands(id) {
            if let Some(entry) = relation.get(id) {
                for child in &entry.children {
                    visit(child, relation, expands, marks, path)?;
                }
            }
        }
        path.pop();
        marks.insert(id, Mark::Done);
        Ok(())
    }
    visit(start, relation, expands, &mut BTreeMap::new(), &mut Vec::new())
}

/// A violated fault-tree invariant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum FtaDefect {
    UnknownTop(String),
    DuplicateEvent(String),
    UnknownGateEvent { gate: String, event: String },
    AtomicWithGate(String),
    MissingGate(String),
    DuplicateGate(String),
    EmptyGate(String),
    Cycle(Vec<String>),
    Unreachable(String),
    ConditionsOnNonAtomic(String),
    UnknownOperCondition { event: String, condition: OperCondition },
}

impl fmt::Display for FtaDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FtaDefect::UnknownTop(id) => write!(f, "UnknownTop: top event {id:?} is not an event"),
            FtaDefect::DuplicateEvent(id) => write!(f, "DuplicateEvent: {id:?}"),
            FtaDefect::UnknownGateEvent { gate, event } => {
                write!(f, "UnknownGateEvent: gate of {gate:?} references {event:?}")
            }
            FtaDefect::AtomicWithGate(id) => write!(f, "AtomicWithGate: atomic event {id:?} has a gate"),
            FtaDefect::MissingGate(id) => write!(f, "MissingGate: non-atomic event {id:?} has no gate"),
            FtaDefect::DuplicateGate(id) => write!(f, "DuplicateGate: {id:?} has several gates"),
            FtaDefect::EmptyGate(id) => write!(f, "EmptyGate: gate of {id:?} has no children"),
            FtaDefect::Cycle(ids) => write!(f, "Cycle: {}", ids.join(" -> ")),
            FtaDefect::Unreachable(id) => write!(f, "Unreachable: {id:?} has no path from the top event"),
            FtaDefect::ConditionsOnNonAtomic(id) => {
                write!(f, "ConditionsOnNonAtomic: {id:?} carries operational conditions")
            }
            FtaDefect::UnknownOperCondition { event, condition } => write!(
                f,
                "UnknownOperCondition: {event:?} references {}.{} which the ODD does not define",
                condition.class, condition.attribute
            ),
        }
    }
}

/// Check every fault-tree invariant. Empty iff the tree is well formed.
pub fn validate_fta(fta: &Fta) -> Vec<FtaDefect> {
    let mut defects = Vec::new();
    let mut events: BTreeMap<&str, &Event> = BTreeMap::new();
    for e in &fta.events {
        if events.insert(e.id.as_str(), e).is_some() {
            defects.push(FtaDefect::DuplicateEvent(e.id.clone()));
        }
        if !e.oper_conditions.is_empty() && !e.atomic {
            defects.push(FtaDefect::ConditionsOnNonAtomic(e.id.clone()));
        }
    }
    if !events.contains_key(fta.top.as_str()) {
        defects.push(FtaDefect::UnknownTop(fta.top.clone()));
    }

    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for gate in &fta.gates {
        if children.contains_key(gate.parent.as_str()) {
            defects.push(FtaDefect::DuplicateGate(gate.parent.clone()));
            continue;
        }
        match events.get(gate.parent.as_str()) {
            None => defects.push(FtaDefect::UnknownGateEvent {
                gate: gate.parent.clone(),
                event: gate.parent.clone(),
            }),
            Some(e) if e.atomic => defects.push(FtaDefect::AtomicWithGate(e.id.clone())),
            Some(_) => {}
        }
        if gate.children.is_empty() {
            defects.push(FtaDefect::EmptyGate(gate.parent.clone()));
        }
        for child in &gate.children {
            if !events.contains_key(child.as_str()) {
                defects.push(FtaDefect::UnknownGateEvent {
                    gate: gate.parent.clone(),
                    event: child.clone(),
                });
            }
        }
        children.insert(
            gate.parent.as_str(),
            gate.children.iter().map(String::as_str).collect(),
        );
    }
    for e in &fta.events {
        if !e.atomic && !children.contains_key(e.id.as_str()) {
            defects.push(FtaDefect::MissingGate(e.id.clone()));
        }
    }

    if let Some(cycle) = find_cycle(&children) {
        defects.push(FtaDefect::Cycle(cycle));
    }

    let mut reached: BTreeSet<&str> = BTreeSet::new();
    let mut frontier = vec![fta.top.as_str()];
    while let Some(id) = frontier.pop() {
        if reached.insert(id) {
            frontier.extend(children.get(id).into_iter().flatten().copied());
        }
    }
    for e in &fta.events {
        if !reached.contains(e.id.as_str()) {
            defects.push(FtaDefect::Unreachable(e.id.clone()));
        }
    }
    defects
}

fn find_cycle(children: &BTreeMap<&str, Vec<&str>>) -> Option<Vec<String>> {
    let mut done: BTreeSet<&str> = BTreeSet::new();
    for &start in children.keys() {
        if done.contains(start) {
            continue;
        }
        // Iterative DFS keeping the active path.
        let mut path: Vec<(&str, usize)> = vec![(start, 0)];
        let mut on_path: BTreeSet<&str> = BTreeSet::from([start]);
        while let Some((node, next)) = path.last_mut() {
            let kids = children.get(*node).map_or(&[][..], Vec::as_slice);
            if *next < kids.len() {
                let child = kids[*next];
                *next += 1;
                if on_path.contains(child) {
                    let from = path.iter().position(|(n, _)| *n == child).unwrap_or(0);
                    let mut cycle: Vec<String> =
                        path[from..].iter().map(|(n, _)| n.to_string()).collect();
                    cycle.push(child.to_string());
                    return Some(cycle);
                }
                if !done.contains(child) {
                    on_path.insert(child);
                    path.push((child, 0));
                }
            } else {
                let (finished, _) = path.pop().expect("non-empty path");
                on_path.remove(finished);
                done.insert(finished);
            }
        }
    }
    None
}

/// Cross-check the operational conditions of every atomic event against an
/// ODD. A condition resolves when its attribute is an attribute of the class
/// or names a sub-class of it.
pub fn check_oper_conditions(fta: &Fta, odd: &OddSpec) -> Vec<FtaDefect> {
    let mut defects = Vec::new();
    for event in fta.atomic_events() {
        for cond in &event.oper_conditions {
            let resolves = odd.class(&cond.class).is_some_and(|class| {
                class.attribute(&cond.attribute).is_some()
                    || odd.is_descendant(&cond.attribute, &cond.class)
            });
            if !resolves {
                defects.push(FtaDefect::UnknownOperCondition {
                    event: event.id.clone(),
                    condition: cond.clone(),
                });
            }
        }
    }
    defects
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ChainEdgeKind {
    #[serde(rename = "dependsOnOccurrence")]
    DependsOnOccurrence,
    #[serde(rename = "dependsOnHazardous")]
    DependsOnHazardous,
    #[serde(rename = "dependsOnConsequence")]
    DependsOnConsequence,
    #[serde(rename = "trigger")]
    Trigger,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainEdge {
    pub from: String,
    pub to: String,
    pub kind: ChainEdgeKind,
}

impl ChainEdge {
    pub fn new(from: &str, kind: ChainEdgeKind, to: &str) -> Self {
        Self {
            from: from.to_string(),
            to: to.to_string(),
            kind,
        }
    }
}

/// Occurrence events leading to a hazardous event and the consequence
/// events following it, with typed dependency edges between them.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardChain {
    occurrence_events: Vec<String>,
    hazardous_event: String,
    consequence_events: Vec<String>,
    edges: Vec<ChainEdge>,
}

impl HazardChain {
    pub fn new(
        occurrence_events: Vec<String>,
        hazardous_event: String,
        consequence_events: Vec<String>,
        edges: Vec<ChainEdge>,
    ) -> Result<Self, FtaError> {
        let mut seen = BTreeSet::new();
        for id in occurrence_events
            .iter()
            .chain(std::iter::once(&hazardous_event))
            .chain(&consequence_events)
        {
            if !seen.insert(id.as_str()) {
                return Err(FtaError::DuplicateEvent(id.clone()));
            }
        }
        for edge in &edges {
            for end in [&edge.from, &edge.to] {
                if !seen.contains(end.as_str()) {
                    return Err(FtaError::NotInChain(end.clone()));
                }
            }
            if edge.kind == ChainEdgeKind::Trigger
                && !(occurrence_events.contains(&edge.from) && edge.to == hazardous_event)
            {
                return Err(FtaError::InvalidTrigger {
                    from: edge.from.clone(),
                    to: edge.to.clone(),
                });
            }
        }
        Ok(Self {
            occurrence_events,
            hazardous_event,
            consequence_events,
            edges,
        })
    }

    pub fn hazardous_event(&self) -> &str {
        &self.hazardous_event
    }

    pub fn occurrence_events(&self) -> &[String] {
        &self.occurrence_events
    }

    pub fn consequence_events(&self) -> &[String] {
        &self.consequence_events
    }

    pub fn edges(&self) -> &[ChainEdge] {
        &self.edges
    }

    pub fn declared_role(&self, event: &str) -> Option<EventRole> {
        if self.hazardous_event == event {
            Some(EventRole::Hazardous)
        } else if self.occurrence_events.iter().any(|e| e == event) {
            Some(EventRole::Occurrence)
        } else if self.consequence_events.iter().any(|e| e == event) {
            Some(EventRole::Consequence)
        } else {
            None
        }
    }

    /// Roles admitted by the event's outgoing dependency edges, read
    /// closed-world: an absent edge is a negated edge.
    pub fn admitted_roles(&self, event: &str) -> Vec<EventRole> {
        let has = |kind| self.edges.iter().any(|e| e.from == event && e.kind == kind);
        let on_occ = has(ChainEdgeKind::DependsOnOccurrence);
        let on_haz = has(ChainEdgeKind::DependsOnHazardous);
        let on_cons = has(ChainEdgeKind::DependsOnConsequence);
        let mut roles = Vec::new();
        if !on_haz && !on_cons {
            roles.push(EventRole::Occurrence);
        }
        if !on_cons {
            roles.push(EventRole::Hazardous);
        }
        if !on_occ {
            roles.push(EventRole::Consequence);
        }
        roles
    }
}

/// Classify an event of a hazard chain. The declared role wins whenever the
/// dependency edges admit it; otherwise the chain is inconsistent.
pub fn classify_event(chain: &HazardChain, event: &str) -> Result<EventRole, FtaError> {
    let declared = chain
        .declared_role(event)
        .ok_or_else(|| FtaError::NotInChain(event.to_string()))?;
    let admitted = chain.admitted_roles(event);
    if admitted.contains(&declared) {
        Ok(declared)
    } else {
        Err(FtaError::InconsistentChain {
            event: event.to_string(),
            declared: Some(declared),
            admitted,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hazard {
    pub event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ability: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CausalDoc {
    parent: String,
    op: GateOp,
    children: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HaraDoc {
    hazards: Vec<Hazard>,
    events: Vec<Event>,
    #[serde(default)]
    causal: Vec<CausalDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    chain: Vec<ChainEdge>,
}

/// The content of a HARA file: hazards, events, causal relation and the
/// optional typed dependency edges of the hazard chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Hara {
    pub hazards: Vec<Hazard>,
    pub events: Vec<Event>,
    pub causal: CausalRelation,
    pub chain_edges: Vec<ChainEdge>,
}

impl Hara {
    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id == id)
    }

    pub fn compute_fta(&self, hazard: &str) -> Result<Fta, FtaError> {
        compute_fta(hazard, &self.events, &self.causal)
    }

    /// Hazard chain around `hazard`, built from the declared event roles.
    pub fn chain(&self, hazard: &str) -> Result<HazardChain, FtaError> {
        if self.event(hazard).is_none() {
            return Err(FtaError::UnknownHazard(hazard.to_string()));
        }
        let with_role = |role| {
            self.events
                .iter()
                .filter(|e| e.role == Some(role) && e.id != hazard)
                .map(|e| e.id.clone())
                .collect::<Vec<_>>()
        };
        HazardChain::new(
            with_role(EventRole::Occurrence),
            hazard.to_string(),
            with_role(EventRole::Consequence),
            self.chain_edges.clone(),
        )
    }

    pub fn to_json(&self) -> String {
        let doc = HaraDoc {
            hazards: self.hazards.clone(),
            events: self.events.clone(),
            causal: self
                .causal
                .iter()
                .map(|(parent, entry)| CausalDoc {
                    parent: parent.clone(),
                    op: entry.op,
                    children: entry.children.clone(),
                })
                .collect(),
            chain: self.chain_edges.clone(),
        };
        doc::to_json(&doc)
    }
}

/// Parse a HARA document. Requires at least one hazard and unique ids; the
/// causal relation itself is checked when a tree is computed.
pub fn parse_hara(document: &str) -> Result<Hara, FtaError> {
    let doc: HaraDoc = doc::from_json(document)?;
    if doc.hazards.is_empty() {
        return Err(FtaError::NoHazards);
    }
    let mut ids = BTreeSet::new();
    for e in &doc.events {
        if !ids.insert(e.id.as_str()) {
            return Err(FtaError::DuplicateEvent(e.id.clone()));
        }
    }
    for h in &doc.hazards {
        if !ids.contains(h.event.as_str()) {
            return Err(FtaError::UnknownHazard(h.event.clone()));
        }
    }
    let mut causal = CausalRelation::new();
    for entry in doc.causal {
        if causal.get(&entry.parent).is_some() {
            return Err(FtaError::DuplicateEvent(entry.parent));
        }
        causal.insert(entry.parent, entry.op, entry.children);
    }
    Ok(Hara {
        hazards: doc.hazards,
        events: doc.events,
        causal,
        chain_edges: doc.chain,
    })
}
