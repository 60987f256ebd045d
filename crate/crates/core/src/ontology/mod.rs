//! Safety ontology stored as subject/predicate/object triples.
//!
//! Predicates come from a fixed vocabulary ([`pred`]) or are declared as
//! extensions by asserting `<name> <rdf_type> <Predicate> .`. Class
//! membership uses `rdf_type`. The axioms are enforced as closed-world
//! integrity constraints: a required type holds only if it is asserted or
//! follows from the built-in class hierarchy ([`check_axioms`]).
//!
//! Reads and checks run over the closure of the asserted triples, which adds
//! `supports` for every `supportedBy` (and back) and `supportedBy` for every
//! `hasInference` and `hasEvidence`. Export writes asserted triples only.

mod axioms;
mod build;
mod io;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

pub use axioms::{check_axioms, classify_goals, AxiomViolation, GoalClass};
pub use build::{
    attach_confidence, bn_triples, hara_triples, link_constraints, odd_triples, Gsn, GsnKind,
    LinkDefect,
};
pub use io::{export_graph, import_graph, parse_pattern, parse_term};

/// The fixed predicate vocabulary.
pub mod pred {
    pub const SUB_CLASS_OF: &str = "subClassOf";
    pub const HAS_ATTRIBUTE: &str = "hasAttribute";
    pub const HAS_DOMAIN: &str = "hasDomain";
    pub const HAS_OPER_COND: &str = "hasOperCond";
    pub const HAS_OCCURRENCE_EVENT: &str = "hasOccurrenceEvent";
    pub const HAS_CONSEQUENCE_EVENT: &str = "hasConsequenceEvent";
    pub const TRIGGER: &str = "trigger";
    pub const DEPENDS_ON_OCCURRENCE: &str = "dependsOnOccurrence";
    pub const DEPENDS_ON_HAZARDOUS: &str = "dependsOnHazardous";
    pub const DEPENDS_ON_CONSEQUENCE: &str = "dependsOnConsequence";
    pub const RELATED_TO: &str = "relatedTo";
    pub const SUPPORTED_BY: &str = "supportedBy";
    pub const SUPPORTS: &str = "supports";
    pub const HAS_INFERENCE: &str = "hasInference";
    pub const HAS_EVIDENCE: &str = "hasEvidence";
    pub const HAS_CONFIDENCE: &str = "hasConfidence";
    pub const HAS_TEXT: &str = "hasText";
    pub const DEPENDS_ON: &str = "dependsOn";
    pub const HAS_CPT: &str = "hasCPT";
    pub const HAS_ACP: &str = "hasACP";
    pub const RDF_TYPE: &str = "rdf_type";

    pub const ALL: [&str; 21] = [
        SUB_CLASS_OF,
        HAS_ATTRIBUTE,
        HAS_DOMAIN,
        HAS_OPER_COND,
        HAS_OCCURRENCE_EVENT,
        HAS_CONSEQUENCE_EVENT,
        TRIGGER,
        DEPENDS_ON_OCCURRENCE,
        DEPENDS_ON_HAZARDOUS,
        DEPENDS_ON_CONSEQUENCE,
        RELATED_TO,
        SUPPORTED_BY,
        SUPPORTS,
        HAS_INFERENCE,
        HAS_EVIDENCE,
        HAS_CONFIDENCE,
        HAS_TEXT,
        DEPENDS_ON,
        HAS_CPT,
        HAS_ACP,
        RDF_TYPE,
    ];
}

/// Class names with built-in meaning.
pub mod class {
    pub const ODD_CLASS: &str = "OddClass";
    pub const ODD_ATTRIBUTE: &str = "OddAttribute";
    pub const UNIT: &str = "Unit";
    pub const CONSTRAINT: &str = "Constraint";
    pub const EVENT: &str = "Event";
    pub const OCCURRENCE_EVENT: &str = "OccurrenceEvent";
    pub const HAZARDOUS_EVENT: &str = "HazardousEvent";
    pub const CONSEQUENCE_EVENT: &str = "ConsequenceEvent";
    pub const GOAL: &str = "Goal";
    pub const TOP_LEVEL_GOAL: &str = "TopLevelGoal";
    pub const SUPPORT_GOAL: &str = "SupportGoal";
    pub const STRATEGY: &str = "Strategy";
    pub const SOLUTION: &str = "Solution";
    pub const EVIDENCE: &str = "Evidence";
    pub const STATEMENT: &str = "Statement";
    pub const NODE: &str = "Node";
    pub const OBJ_NODE: &str = "ObjNode";
    pub const CPT_TABLE: &str = "CptTable";
    pub const VALUE: &str = "Value";
    /// Declares its subject as an extension predicate.
    pub const PREDICATE: &str = "Predicate";
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OntologyError {
    #[error("unknown predicate {0:?}")]
    UnknownPredicate(String),
    #[error("invalid identifier {0:?}")]
    InvalidIdentifier(String),
    #[error("numbers must be finite and may only appear as objects")]
    BadNumber,
    #[error("extension predicate {0:?} is still in use")]
    ExtensionInUse(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("type violation ({axiom}): {message}")]
    TypeViolation { axiom: String, message: String },
}

/// An individual, a string literal, or a numeric literal.
#[derive(Debug, Clone, PartialEq)]
pub enum Term {
    Iri(String),
    Str(String),
    Num(f64),
}

impl Term {
    pub fn iri(id: impl Into<String>) -> Self {
        Term::Iri(id.into())
    }

    pub fn str(text: impl Into<String>) -> Self {
        Term::Str(text.into())
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            _ => None,
        }
    }

    fn check(&self) -> Result<(), OntologyError> {
        match self {
            Term::Iri(id) => check_identifier(id),
            Term::Str(_) => Ok(()),
            Term::Num(v) if v.is_finite() => Ok(()),
            Term::Num(_) => Err(OntologyError::BadNumber),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Iri(id) => write!(f, "<{id}>"),
            Term::Str(text) => {
                f.write_str("\"")?;
                for c in text.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\r' => f.write_str("\\r")?,
                        '\t' => f.write_str("\\t")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
            Term::Num(v) => write!(f, "{v}"),
        }
    }
}

pub(crate) fn check_identifier(id: &str) -> Result<(), OntologyError> {
    if id.is_empty() || id.chars().any(|c| c.is_whitespace() || matches!(c, '<' | '>' | '"')) {
        return Err(OntologyError::InvalidIdentifier(id.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triple {
    pub subject: Term,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: Term, predicate: &str, object: Term) -> Self {
        Self {
            subject,
            predicate: predicate.to_string(),
            object,
        }
    }

    /// A triple between two individuals.
    pub fn link(subject: &str, predicate: &str, object: &str) -> Self {
        Self::new(Term::iri(subject), predicate, Term::iri(object))
    }

    /// `subject rdf_type class`.
    pub fn typed(subject: Term, class: &str) -> Self {
        Self::new(subject, pred::RDF_TYPE, Term::iri(class))
    }

    /// The canonical line form, without the trailing newline.
    pub fn line(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <{}> {} .", self.subject, self.predicate, self.object)
    }
}

/// Wildcard pattern; `None` matches anything.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Pattern {
    pub subject: Option<Term>,
    pub predicate: Option<String>,
    pub object: Option<Term>,
}

impl Pattern {
    pub fn matches(&self, t: &Triple) -> bool {
        self.subject.as_ref().is_none_or(|s| *s == t.subject)
            && self.predicate.as_ref().is_none_or(|p| *p == t.predicate)
            && self.object.as_ref().is_none_or(|o| *o == t.object)
    }
}

/// A set of asserted triples keyed by canonical line.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TripleGraph {
    triples: BTreeMap<String, Triple>,
    extensions: BTreeSet<String>,
}

impl TripleGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// A new graph with `triple` added.
    pub fn assert_triple(&self, triple: Triple) -> Result<Self, OntologyError> {
        let mut next = self.clone();
        next.insert(triple)?;
        Ok(next)
    }

    /// A new graph without `triple`.
    pub fn retract_triple(&self, triple: &Triple) -> Result<Self, OntologyError> {
        let mut next = self.clone();
        next.remove(triple)?;
        Ok(next)
    }

    /// Add in place; returns false if the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> Result<bool, OntologyError> {
        triple.subject.check()?;
        triple.object.check()?;
        if matches!(triple.subject, Term::Num(_)) {
            return Err(OntologyError::BadNumber);
        }
        if let Some(name) = declared_extension(&triple) {
            check_identifier(name)?;
            if !pred::ALL.contains(&name) {
                self.extensions.insert(name.to_string());
            }
        }
        if !self.is_known_predicate(&triple.predicate) {
            return Err(OntologyError::UnknownPredicate(triple.predicate.clone()));
        }
        Ok(self.triples.insert(triple.line(), triple).is_none())
    }

    pub fn insert_all(&mut self, triples: impl IntoIterator<Item = Triple>) -> Result<(), OntologyError> {
        for t in triples {
            self.insert(t)?;
        }
        Ok(())
    }

    /// Remove in place; returns false if the triple was absent.
    pub fn remove(&mut self, triple: &Triple) -> Result<bool, OntologyError> {
        if let Some(name) = declared_extension(triple) {
            if self.triples.values().any(|t| t.predicate == name) {
                return Err(OntologyError::ExtensionInUse(name.to_string()));
            }
            self.extensions.remove(name);
        }
        Ok(self.triples.remove(&triple.line()).is_some())
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains_key(&triple.line())
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// Asserted triples in canonical order.
    pub fn triples(&self) -> impl Iterator<Item = &Triple> {
        self.triples.values()
    }

    pub fn is_known_predicate(&self, name: &str) -> bool {
        pred::ALL.contains(&name) || self.extensions.contains(name)
    }

    /// Asserted triples plus the inverse and sub-property entailments.
    pub fn closure(&self) -> Vec<Triple> {
        let mut all: BTreeMap<String, Triple> = self.triples.clone();
        let mut add = |t: Triple| {
            all.entry(t.line()).or_insert(t);
        };
        for t in self.triples.values() {
            let flipped = |p: &str| Triple::new(t.object.clone(), p, t.subject.clone());
            match t.predicate.as_str() {
                pred::SUPPORTED_BY => add(flipped(pred::SUPPORTS)),
                pred::SUPPORTS => add(flipped(pred::SUPPORTED_BY)),
                pred::HAS_INFERENCE | pred::HAS_EVIDENCE => {
                    add(Triple::new(t.subject.clone(), pred::SUPPORTED_BY, t.object.clone()));
                    add(flipped(pred::SUPPORTS));
                }
                _ => {}
            }
        }
        all.into_values().collect()
    }

    /// Closure triples matching `pattern`, in canonical line order.
    pub fn query(&self, pattern: &Pattern) -> Vec<Triple> {
        self.closure().into_iter().filter(|t| pattern.matches(t)).collect()
    }
}

fn declared_extension(t: &Triple) -> Option<&str> {
    match (&t.subject, t.predicate.as_str(), &t.object) {
        (Term::Iri(name), pred::RDF_TYPE, Term::Iri(c)) if c == class::PREDICATE => Some(name),
        _ => None,
    }
}
