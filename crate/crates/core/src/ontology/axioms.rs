//! Closed-world axiom checks and goal classification.

use std::collections::{BTreeMap, BTreeSet};

use super::{class, pred, Term, Triple, TripleGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct AxiomViolation {
    /// `A1` through `A48`.
    pub axiom: String,
    pub triple: Triple,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GoalClass {
    TopLevelGoal,
    SupportGoal,
}

/// Built-in subclass edges (child, parent); Evidence and Solution coincide.
const HIERARCHY: [(&str, &str); 8] = [
    (class::OBJ_NODE, class::NODE),
    (class::TOP_LEVEL_GOAL, class::GOAL),
    (class::SUPPORT_GOAL, class::GOAL),
    (class::OCCURRENCE_EVENT, class::EVENT),
    (class::HAZARDOUS_EVENT, class::EVENT),
    (class::CONSEQUENCE_EVENT, class::EVENT),
    (class::EVIDENCE, class::SOLUTION),
    (class::SOLUTION, class::EVIDENCE),
];

/// Closed-world class memberships over the closure, keyed by term line.
pub(crate) struct Types {
    of: BTreeMap<String, BTreeSet<&'static str>>,
    asserted: BTreeMap<String, BTreeSet<String>>,
}

impl Types {
    pub(crate) fn of_graph(graph: &TripleGraph) -> Self {
        Self::build(&graph.closure())
    }

    fn build(closure: &[Triple]) -> Self {
        let mut asserted: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for t in closure {
            if let (pred::RDF_TYPE, Term::Iri(c)) = (t.predicate.as_str(), &t.object) {
                asserted.entry(t.subject.to_string()).or_default().insert(c.clone());
            }
        }
        let builtin: BTreeSet<&'static str> = HIERARCHY
            .iter()
            .flat_map(|(a, b)| [*a, *b])
            .chain([
                class::ODD_CLASS,
                class::ODD_ATTRIBUTE,
                class::UNIT,
                class::CONSTRAINT,
                class::STRATEGY,
                class::STATEMENT,
                class::CPT_TABLE,
                class::VALUE,
            ])
            .collect();
        let mut of: BTreeMap<String, BTreeSet<&'static str>> = BTreeMap::new();
        for (ind, classes) in &asserted {
            let set = of.entry(ind.clone()).or_default();
            for c in classes {
                if let Some(&b) = builtin.get(c.as_str()) {
                    set.insert(b);
                }
            }
            close_upwards(set);
        }

        let mut types = Self { of, asserted };
        // Goal classes follow from supports edges.
        let supporters: BTreeSet<String> = closure
            .iter()
            .filter(|t| t.predicate == pred::SUPPORTS)
            .map(|t| t.subject.to_string())
            .collect();
        let goals: Vec<String> = types
            .of
            .iter()
            .filter(|(_, c)| c.contains(class::GOAL))
            .map(|(k, _)| k.clone())
            .collect();
        for g in goals {
            let set = types.of.get_mut(&g).expect("goal is typed");
            set.insert(if supporters.contains(&g) {
                class::SUPPORT_GOAL
            } else {
                class::TOP_LEVEL_GOAL
            });
        }
        for n in objective_nodes(closure, &types) {
            let set = types.of.entry(n).or_default();
            set.insert(class::OBJ_NODE);
            close_upwards(set);
        }
        types
    }

    pub(crate) fn has(&self, term: &Term, class: &str) -> bool {
        self.of.get(&term.to_string()).is_some_and(|s| s.contains(class))
    }

    fn has_any(&self, term: &Term, classes: &[&str]) -> bool {
        classes.iter().any(|c| self.has(term, c))
    }

    fn asserted(&self, term: &Term, class: &str) -> bool {
        self.asserted.get(&term.to_string()).is_some_and(|s| s.contains(class))
    }
}

fn close_upwards(set: &mut BTreeSet<&'static str>) {
    loop {
        let before = set.len();
        for (child, parent) in HIERARCHY {
            if set.contains(child) {
                set.insert(parent);
            }
        }
        if set.len() == before {
            return;
        }
    }
}

/// Nodes that are the target of a `dependsOn` edge and the source of none.
fn objective_nodes(closure: &[Triple], types: &Types) -> BTreeSet<String> {
    let edges: Vec<&Triple> = closure.iter().filter(|t| t.predicate == pred::DEPENDS_ON).collect();
    let sources: BTreeSet<String> = edges.iter().map(|t| t.subject.to_string()).collect();
    edges
        .iter()
        .map(|t| t.object.to_string())
        .filter(|o| !sources.contains(o))
        .filter(|o| {
            types
                .of
                .get(o)
                .is_some_and(|s| s.contains(class::NODE))
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Side {
    Subject,
    Object,
}

/// Domain (subject) and range (object) constraints: axiom, predicate,
/// side, admissible classes.
const TYPING: [(&str, &str, Side, &[&str]); 33] = [
    ("A1", pred::SUB_CLASS_OF, Side::Object, &[class::ODD_CLASS]),
    ("A2", pred::SUB_CLASS_OF, Side::Subject, &[class::ODD_CLASS]),
    ("A3", pred::HAS_ATTRIBUTE, Side::Object, &[class::ODD_ATTRIBUTE]),
    ("A4", pred::HAS_ATTRIBUTE, Side::Subject, &[class::ODD_CLASS]),
    ("A5", pred::HAS_DOMAIN, Side::Object, &[class::UNIT, class::CONSTRAINT]),
    ("A6", pred::HAS_DOMAIN, Side::Subject, &[class::ODD_ATTRIBUTE]),
    ("A7", pred::HAS_OPER_COND, Side::Object, &[class::ODD_ATTRIBUTE]),
    ("A8", pred::HAS_OPER_COND, Side::Subject, &[class::EVENT]),
    ("A9", pred::HAS_OCCURRENCE_EVENT, Side::Object, &[class::OCCURRENCE_EVENT]),
    ("A10", pred::HAS_OCCURRENCE_EVENT, Side::Subject, &[class::EVENT]),
    ("A11", pred::HAS_CONSEQUENCE_EVENT, Side::Object, &[class::CONSEQUENCE_EVENT]),
    ("A12", pred::HAS_CONSEQUENCE_EVENT, Side::Subject, &[class::EVENT]),
    ("A13", pred::TRIGGER, Side::Object, &[class::HAZARDOUS_EVENT]),
    ("A14", pred::TRIGGER, Side::Subject, &[class::OCCURRENCE_EVENT]),
    ("A15", pred::DEPENDS_ON_OCCURRENCE, Side::Object, &[class::OCCURRENCE_EVENT]),
    (
        "A16",
        pred::DEPENDS_ON_OCCURRENCE,
        Side::Subject,
        &[class::OCCURRENCE_EVENT, class::HAZARDOUS_EVENT],
    ),
    ("A17", pred::DEPENDS_ON_HAZARDOUS, Side::Object, &[class::HAZARDOUS_EVENT]),
    (
        "A18",
        pred::DEPENDS_ON_HAZARDOUS,
        Side::Subject,
        &[class::HAZARDOUS_EVENT, class::CONSEQUENCE_EVENT],
    ),
    ("A19", pred::DEPENDS_ON_CONSEQUENCE, Side::Object, &[class::CONSEQUENCE_EVENT]),
    ("A20", pred::DEPENDS_ON_CONSEQUENCE, Side::Subject, &[class::CONSEQUENCE_EVENT]),
    ("A24", pred::RELATED_TO, Side::Object, &[class::HAZARDOUS_EVENT]),
    ("A25", pred::RELATED_TO, Side::Subject, &[class::TOP_LEVEL_GOAL]),
    (
        "A26",
        pred::SUPPORTED_BY,
        Side::Object,
        &[class::GOAL, class::STRATEGY, class::SOLUTION],
    ),
    ("A27", pred::SUPPORTED_BY, Side::Subject, &[class::GOAL, class::STRATEGY]),
    ("A30", pred::HAS_INFERENCE, Side::Object, &[class::GOAL]),
    ("A31", pred::HAS_INFERENCE, Side::Subject, &[class::GOAL]),
    ("A33", pred::HAS_EVIDENCE, Side::Object, &[class::EVIDENCE]),
    ("A34", pred::HAS_EVIDENCE, Side::Subject, &[class::GOAL]),
    ("A36", pred::HAS_CONFIDENCE, Side::Object, &[class::OBJ_NODE]),
    ("A37", pred::HAS_CONFIDENCE, Side::Subject, &[class::GOAL, class::SOLUTION]),
    ("A42", pred::DEPENDS_ON, Side::Object, &[class::NODE]),
    ("A43", pred::DEPENDS_ON, Side::Subject, &[class::NODE]),
    ("A47", pred::HAS_ACP, Side::Subject, &[class::OBJ_NODE]),
];

/// Every violation of the implemented checks, sorted by axiom then triple.
///
/// Besides the domain and range constraints this covers: event
/// classification by dependency edges (A21-A23, necessary direction), `hasText`
/// objects being strings (A40), CPT tables (A44, A45), ACP values (A46),
/// asserted goal classes (A38, A39) and asserted objective nodes (A48).
/// A28, A32 and A35 are realized by the closure; A29 and A41 constrain
/// nothing.
pub fn check_axioms(graph: &TripleGraph) -> Vec<AxiomViolation> {
    let closure = graph.closure();
    let types = Types::build(&closure);
    let mut out = Vec::new();
    let mut flag = |axiom: &str, t: &Triple, message: String| {
        out.push(AxiomViolation {
            axiom: axiom.to_string(),
            triple: t.clone(),
            message,
        });
    };

    for t in &closure {
        for (axiom, p, side, classes) in TYPING {
            if t.predicate != p {
                continue;
            }
            let term = match side {
                Side::Subject => &t.subject,
                Side::Object => &t.object,
            };
            if !types.has_any(term, classes) {
                let role = match side {
                    Side::Subject => "subject",
                    Side::Object => "object",
                };
                flag(axiom, t, format!("{role} {term} of {p} must be {}", classes.join(" or ")));
            }
        }
        match t.predicate.as_str() {
            pred::HAS_TEXT if !matches!(t.object, Term::Str(_)) => {
                flag("A40", t, format!("object of hasText must be a string, got {}", t.object));
            }
            pred::HAS_CPT => {
                if !types.has(&t.object, class::CPT_TABLE) {
                    flag("A44", t, format!("object {} of hasCPT must be CptTable", t.object));
                }
                if !types.has(&t.subject, class::NODE) {
                    flag("A45", t, format!("subject {} of hasCPT must be Node", t.subject));
                }
            }
            pred::HAS_ACP => {
                let ok = match t.object {
                    Term::Num(v) => (0.0..=1.0).contains(&v),
                    _ => types.has(&t.object, class::VALUE),
                };
                if !ok {
                    flag("A46", t, format!("object {} of hasACP must be a value in [0, 1]", t.object));
                }
            }
            pred::DEPENDS_ON_HAZARDOUS | pred::DEPENDS_ON_CONSEQUENCE
                if types.asserted(&t.subject, class::OCCURRENCE_EVENT) =>
            {
                flag("A21", t, format!("occurrence event {} must not have {}", t.subject, t.predicate));
            }
            _ => {}
        }
        if t.predicate == pred::DEPENDS_ON_OCCURRENCE && types.asserted(&t.subject, class::CONSEQUENCE_EVENT) {
            flag("A22", t, format!("consequence event {} must not have dependsOnOccurrence", t.subject));
        }
        if t.predicate == pred::DEPENDS_ON_CONSEQUENCE && types.asserted(&t.subject, class::HAZARDOUS_EVENT) {
            flag("A23", t, format!("hazardous event {} must not have dependsOnConsequence", t.subject));
        }
        if let (pred::RDF_TYPE, Term::Iri(c)) = (t.predicate.as_str(), &t.object) {
            let computed_support = types.has(&t.subject, class::GOAL)
                && closure
                    .iter()
                    .any(|u| u.predicate == pred::SUPPORTS && u.subject == t.subject);
            match c.as_str() {
                class::SUPPORT_GOAL if !computed_support => {
                    flag("A38", t, format!("{} supports nothing", t.subject));
                }
                class::TOP_LEVEL_GOAL if computed_support => {
                    flag("A39", t, format!("{} supports another element", t.subject));
                }
                class::OBJ_NODE if !objective_nodes(&closure, &types).contains(&t.subject.to_string()) => {
                    flag(
                        "A48",
                        t,
                        format!("{} is not a sink of the dependsOn graph", t.subject),
                    );
                }
                _ => {}
            }
        }
    }

    out.sort_by(|a, b| {
        axiom_number(&a.axiom)
            .cmp(&axiom_number(&b.axiom))
            .then_with(|| a.triple.line().cmp(&b.triple.line()))
    });
    out.dedup_by(|a, b| a.axiom == b.axiom && a.triple == b.triple);
    out
}

fn axiom_number(label: &str) -> u32 {
    label[1..].parse().unwrap_or(u32::MAX)
}

/// Goal individuals split by whether they support anything.
pub fn classify_goals(graph: &TripleGraph) -> BTreeMap<String, GoalClass> {
    let closure = graph.closure();
    let types = Types::build(&closure);
    types
        .of
        .iter()
        .filter(|(_, c)| c.contains(class::GOAL))
        .filter_map(|(k, c)| {
            let id = k.strip_prefix('<')?.strip_suffix('>')?.to_string();
            let cls = if c.contains(class::SUPPORT_GOAL) {
                GoalClass::SupportGoal
            } else {
                GoalClass::TopLevelGoal
            };
            Some((id, cls))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(triples: Vec<Triple>) -> TripleGraph {
        let mut g = TripleGraph::new();
        g.insert_all(triples).unwrap();
        g
    }

    fn labels(g: &TripleGraph) -> Vec<String> {
        check_axioms(g).into_iter().map(|v| v.axiom).collect()
    }

    fn rain_abox() -> Vec<Triple> {
        vec![
            Triple::typed(Term::iri("Rain"), class::ODD_CLASS),
            Triple::typed(Term::iri("Rain_heavy"), class::ODD_ATTRIBUTE),
            Triple::link("Rain", pred::HAS_ATTRIBUTE, "Rain_heavy"),
            Triple::new(Term::iri("Rain_heavy"), pred::HAS_DOMAIN, Term::str("cm/h")),
            Triple::new(Term::iri("Rain_heavy"), pred::HAS_DOMAIN, Term::str("≥0.77")),
            Triple::typed(Term::str("cm/h"), class::UNIT),
            Triple::typed(Term::str("≥0.77"), class::CONSTRAINT),
        ]
    }

    #[test]
    fn rain_abox_is_consistent() {
        assert!(check_axioms(&graph(rain_abox())).is_empty());
    }

    #[test]
    fn untyped_subject_violates_domain() {
        let mut abox = rain_abox();
        abox.remove(0);
        let g = graph(abox);
        let v = check_axioms(&g);
        assert_eq!(labels(&g), vec!["A4"]);
        assert_eq!(v[0].triple, Triple::link("Rain", pred::HAS_ATTRIBUTE, "Rain_heavy"));
        // Removing the offending triple removes the violation.
        let g2 = g.retract_triple(&v[0].triple).unwrap();
        assert!(check_axioms(&g2).is_empty());
    }

    #[test]
    fn unmatched_constraint_literal_is_flagged() {
        let mut abox = rain_abox();
        abox[6] = Triple::typed(Term::str(">=0.77"), class::CONSTRAINT);
        assert_eq!(labels(&graph(abox)), vec!["A5"]);
    }

    #[test]
    fn goal_classification() {
        let g = graph(vec![
            Triple::typed(Term::iri("G1"), class::GOAL),
            Triple::typed(Term::iri("G2"), class::GOAL),
            Triple::typed(Term::iri("G3"), class::GOAL),
            Triple::typed(Term::iri("S1"), class::STRATEGY),
            Triple::link("G1", pred::SUPPORTED_BY, "S1"),
            Triple::link("S1", pred::SUPPORTED_BY, "G2"),
        ]);
        let classes = classify_goals(&g);
        assert_eq!(classes["G1"], GoalClass::TopLevelGoal);
        assert_eq!(classes["G2"], GoalClass::SupportGoal);
        assert_eq!(classes["G3"], GoalClass::TopLevelGoal);
        assert!(check_axioms(&g).is_empty());
    }

    #[test]
    fn asserted_goal_class_must_agree() {
        let g = graph(vec![
            Triple::typed(Term::iri("G1"), class::SUPPORT_GOAL),
            Triple::typed(Term::iri("G2"), class::TOP_LEVEL_GOAL),
            Triple::typed(Term::iri("G3"), class::GOAL),
            Triple::link("G3", pred::SUPPORTED_BY, "G2"),
        ]);
        assert_eq!(labels(&g), vec!["A38", "A39"]);
    }

    #[test]
    fn related_to_needs_top_level_goal() {
        let g = graph(vec![
            Triple::typed(Term::iri("G1"), class::GOAL),
            Triple::typed(Term::iri("G2"), class::GOAL),
            Triple::typed(Term::iri("H"), class::HAZARDOUS_EVENT),
            Triple::link("G1", pred::SUPPORTED_BY, "G2"),
            Triple::link("G1", pred::RELATED_TO, "H"),
            Triple::link("G2", pred::RELATED_TO, "H"),
        ]);
        let v = check_axioms(&g);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].axiom, "A25");
        assert_eq!(v[0].triple.subject, Term::iri("G2"));
    }

    #[test]
    fn objective_node_is_the_sink() {
        let g = graph(vec![
            Triple::typed(Term::iri("A"), class::NODE),
            Triple::typed(Term::iri("B"), class::NODE),
            Triple::typed(Term::iri("A"), class::OBJ_NODE),
            Triple::link("A", pred::DEPENDS_ON, "B"),
            Triple::new(Term::iri("B"), pred::HAS_ACP, Term::Num(0.5)),
        ]);
        assert_eq!(labels(&g), vec!["A48"]);
    }

    #[test]
    fn event_classification_uses_asserted_roles() {
        let g = graph(vec![
            Triple::typed(Term::iri("O"), class::OCCURRENCE_EVENT),
            Triple::typed(Term::iri("H"), class::HAZARDOUS_EVENT),
            Triple::link("O", pred::DEPENDS_ON_HAZARDOUS, "H"),
        ]);
        // A18 wants a hazardous or consequence subject, A21 forbids the edge.
        assert_eq!(labels(&g), vec!["A18", "A21"]);
    }
}
