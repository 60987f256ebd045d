//! Conversion of ODD, HARA, GSN and BN content into triples, and the
//! passes that tie the ontology back to the other models.

use std::fmt;

use super::axioms::Types;
use super::{class, pred, OntologyError, Term, Triple, TripleGraph};
use crate::bayes::BayesNet;
use crate::hara::{ChainEdgeKind, EventRole, Hara};
use crate::odd::{format_interval, parse_interval, Interval, OddAttribute, OddSpec};

/// Literal form of an interval: `≥x`, `>x`, `≤x`, `<x`, or bracket form.
fn constraint_literal(interval: &Interval) -> String {
    match (interval.lo(), interval.hi()) {
        (Some(lo), None) if interval.lo_inclusive() => format!("≥{lo}"),
        (Some(lo), None) => format!(">{lo}"),
        (None, Some(hi)) if interval.hi_inclusive() => format!("≤{hi}"),
        (None, Some(hi)) => format!("<{hi}"),
        _ => format_interval(interval),
    }
}

fn parse_constraint(text: &str) -> Option<Interval> {
    let text = text.trim();
    type Make = fn(f64) -> Result<Interval, crate::odd::OddError>;
    let forms: [(&str, Make); 6] = [
        ("≥", Interval::at_least),
        (">=", Interval::at_least),
        ("≤", Interval::at_most),
        ("<=", Interval::at_most),
        (">", Interval::greater_than),
        ("<", Interval::below),
    ];
    for (prefix, make) in forms {
        if let Some(rest) = text.strip_prefix(prefix) {
            return rest.trim().parse::<f64>().ok().and_then(|v| make(v).ok());
        }
    }
    parse_interval(text).ok()
}

/// Class hierarchy, attributes, units and constraint literals.
pub fn odd_triples(odd: &OddSpec) -> Vec<Triple> {
    let mut out = Vec::new();
    for c in odd.classes() {
        out.push(Triple::typed(Term::iri(&c.name), class::ODD_CLASS));
        if let Some(parent) = &c.parent {
            out.push(Triple::link(&c.name, pred::SUB_CLASS_OF, parent));
        }
        for a in &c.attributes {
            let unit = Term::str(&a.unit);
            let constraint = Term::str(constraint_literal(&a.bounds));
            out.push(Triple::link(&c.name, pred::HAS_ATTRIBUTE, &a.name));
            out.push(Triple::typed(Term::iri(&a.name), class::ODD_ATTRIBUTE));
            out.push(Triple::new(Term::iri(&a.name), pred::HAS_DOMAIN, unit.clone()));
            out.push(Triple::typed(unit, class::UNIT));
            out.push(Triple::new(Term::iri(&a.name), pred::HAS_DOMAIN, constraint.clone()));
            out.push(Triple::typed(constraint, class::CONSTRAINT));
        }
    }
    out
}

/// Attributes of `class` and of every class below it.
fn attributes_under<'a>(odd: &'a OddSpec, class: &str) -> Vec<&'a OddAttribute> {
    odd.classes()
        .filter(|c| c.name == class || odd.is_descendant(&c.name, class))
        .flat_map(|c| c.attributes.iter())
        .collect()
}

/// Events with their roles, texts and operating conditions, plus the typed
/// dependency edges of the chain around `hazard`.
///
/// A condition naming a sub-class rather than an attribute expands to every
/// attribute below that sub-class.
pub fn hara_triples(hara: &Hara, hazard: &str, odd: &OddSpec) -> Result<Vec<Triple>, OntologyError> {
    let chain = hara.chain(hazard).map_err(|e| OntologyError::TypeViolation {
        axiom: "A13".into(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for e in &hara.events {
        let role = chain.declared_role(&e.id).or(e.role);
        let cls = match role {
            Some(EventRole::Occurrence) => class::OCCURRENCE_EVENT,
            Some(EventRole::Hazardous) => class::HAZARDOUS_EVENT,
            Some(EventRole::Consequence) => class::CONSEQUENCE_EVENT,
            None => class::EVENT,
        };
        out.push(Triple::typed(Term::iri(&e.id), cls));
        if !e.text.is_empty() {
            out.push(Triple::new(Term::iri(&e.id), pred::HAS_TEXT, Term::str(&e.text)));
        }
        for cond in &e.oper_conditions {
            let direct = odd
                .class(&cond.class)
                .and_then(|c| c.attribute(&cond.attribute))
                .map(|a| vec![a]);
            let attrs = match direct {
                Some(a) => a,
                None if odd.is_descendant(&cond.attribute, &cond.class) => {
                    attributes_under(odd, &cond.attribute)
                }
                None => {
                    return Err(OntologyError::TypeViolation {
                        axiom: "A7".into(),
                        message: format!(
                            "condition ({}, {}) of {} resolves to no ODD attribute",
                            cond.class, cond.attribute, e.id
                        ),
                    })
                }
            };
            for a in attrs {
                out.push(Triple::link(&e.id, pred::HAS_OPER_COND, &a.name));
            }
        }
    }
    for occ in chain.occurrence_events() {
        out.push(Triple::link(hazard, pred::HAS_OCCURRENCE_EVENT, occ));
    }
    for cons in chain.consequence_events() {
        out.push(Triple::link(hazard, pred::HAS_CONSEQUENCE_EVENT, cons));
    }
    for edge in chain.edges() {
        let p = match edge.kind {
            ChainEdgeKind::DependsOnOccurrence => pred::DEPENDS_ON_OCCURRENCE,
            ChainEdgeKind::DependsOnHazardous => pred::DEPENDS_ON_HAZARDOUS,
            ChainEdgeKind::DependsOnConsequence => pred::DEPENDS_ON_CONSEQUENCE,
            ChainEdgeKind::Trigger => pred::TRIGGER,
        };
        out.push(Triple::link(&edge.from, p, &edge.to));
    }
    Ok(out)
}

/// Nodes, `parent dependsOn child` edges, CPT handles and the objective.
pub fn bn_triples(net: &BayesNet) -> Vec<Triple> {
    let mut out = Vec::new();
    for n in net.nodes() {
        let cpt = format!("CPT_{}", n.id);
        out.push(Triple::typed(Term::iri(&n.id), class::NODE));
        out.push(Triple::link(&n.id, pred::HAS_CPT, &cpt));
        out.push(Triple::typed(Term::iri(&cpt), class::CPT_TABLE));
    }
    for (parent, child) in net.edges() {
        out.push(Triple::link(&parent, pred::DEPENDS_ON, &child));
    }
    if let Some(obj) = net.objective() {
        out.push(Triple::typed(Term::iri(obj), class::OBJ_NODE));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsnKind {
    Goal,
    Strategy,
    Solution,
}

/// Incremental construction of goal-structure triples.
#[derive(Debug, Clone, Default)]
pub struct Gsn {
    triples: Vec<Triple>,
}

impl Gsn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn element(mut self, id: &str, kind: GsnKind, text: &str) -> Self {
        let cls = match kind {
            GsnKind::Goal => class::GOAL,
            GsnKind::Strategy => class::STRATEGY,
            GsnKind::Solution => class::SOLUTION,
        };
        self.triples.push(Triple::typed(Term::iri(id), cls));
        if !text.is_empty() {
            self.triples.push(Triple::new(Term::iri(id), pred::HAS_TEXT, Term::str(text)));
        }
        self
    }

    pub fn supported_by(mut self, from: &str, to: &str) -> Self {
        self.triples.push(Triple::link(from, pred::SUPPORTED_BY, to));
        self
    }

    pub fn inference(mut self, goal: &str, subgoal: &str) -> Self {
        self.triples.push(Triple::link(goal, pred::HAS_INFERENCE, subgoal));
        self
    }

    pub fn evidence(mut self, goal: &str, solution: &str) -> Self {
        self.triples.push(Triple::link(goal, pred::HAS_EVIDENCE, solution));
        self
    }

    pub fn related_to(mut self, goal: &str, hazard: &str) -> Self {
        self.triples.push(Triple::link(goal, pred::RELATED_TO, hazard));
        self
    }

    pub fn into_triples(self) -> Vec<Triple> {
        self.triples
    }
}

/// Record the confidence of `solution` as the ACP value of `objective`,
/// replacing any earlier value of that node.
pub fn attach_confidence(
    graph: &TripleGraph,
    solution: &str,
    objective: &str,
    value: f64,
) -> Result<TripleGraph, OntologyError> {
    let types = Types::of_graph(graph);
    let violation = |axiom: &str, message: String| OntologyError::TypeViolation {
        axiom: axiom.into(),
        message,
    };
    if !types.has(&Term::iri(solution), class::SOLUTION) {
        return Err(violation("A37", format!("{solution} is not a Solution")));
    }
    if !types.has(&Term::iri(objective), class::OBJ_NODE) {
        return Err(violation("A47", format!("{objective} is not an objective node")));
    }
    if !(0.0..=1.0).contains(&value) {
        return Err(violation("A46", format!("confidence {value} is outside [0, 1]")));
    }
    let mut next = graph.clone();
    let stale: Vec<Triple> = graph
        .triples()
        .filter(|t| t.subject == Term::iri(objective) && t.predicate == pred::HAS_ACP)
        .cloned()
        .collect();
    for t in &stale {
        next.remove(t)?;
    }
    next.insert(Triple::link(solution, pred::HAS_CONFIDENCE, objective))?;
    next.insert(Triple::new(Term::iri(objective), pred::HAS_ACP, Term::Num(value)))?;
    Ok(next)
}

/// A `hasDomain` literal that disagrees with the ODD model.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkDefect {
    pub attribute: String,
    pub literal: String,
    pub reason: String,
}

impl fmt::Display for LinkDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}: {}", self.attribute, self.literal, self.reason)
    }
}

/// Cross-check unit and constraint literals against the ODD attributes.
pub fn link_constraints(graph: &TripleGraph, odd: &OddSpec) -> Vec<LinkDefect> {
    let types = Types::of_graph(graph);
    let mut out = Vec::new();
    for t in graph.triples().filter(|t| t.predicate == pred::HAS_DOMAIN) {
        let (Term::Iri(attr), Term::Str(lit)) = (&t.subject, &t.object) else {
            continue;
        };
        let defect = |reason: String| LinkDefect {
            attribute: attr.clone(),
            literal: lit.clone(),
            reason,
        };
        let Some(found) = odd.classes().find_map(|c| c.attribute(attr)) else {
            out.push(defect("not an attribute of the ODD model".into()));
            continue;
        };
        if types.has(&t.object, class::UNIT) && *lit != found.unit {
            out.push(defect(format!("unit differs from {:?}", found.unit)));
        }
        if types.has(&t.object, class::CONSTRAINT) {
            match parse_constraint(lit) {
                None => out.push(defect("constraint does not parse".into())),
                Some(iv) if iv != found.bounds => {
                    out.push(defect(format!("constraint differs from {}", found.bounds)))
                }
                Some(_) => {}
            }
        }
    }
    out
}
