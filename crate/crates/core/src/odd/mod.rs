//! Operational Design Domain model.
//!
//! An [`OddSpec`] is a tree of ODD classes (`Environment_conditions` →
//! `Weather_conditions` → `Rain`, ...). Measurable classes carry
//! attributes, each a named interval over the raw measurement
//! (`Rain_Heavy` = `[0.77, +[` cm/h). At runtime a raw reading is mapped to
//! the attribute whose interval contains it, or to [`Discretized::OutOfOdd`]
//! when no interval does.

mod interval;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc::{self, DocError};

pub use interval::{format_interval, parse_interval, Interval};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OddError {
    #[error("malformed interval {text:?}: {reason}")]
    MalformedInterval { text: String, reason: String },
    #[error("empty interval {0:?}")]
    EmptyInterval(String),
    #[error("duplicate name {0:?}")]
    DuplicateName(String),
    #[error("class {class:?} names unknown parent {parent:?}")]
    UnknownParent { class: String, parent: String },
    #[error("partition class {class:?}: intervals of {first:?} and {second:?} overlap")]
    OverlappingIntervals {
        class: String,
        first: String,
        second: String,
    },
    #[error("leaf class {0:?} has no attributes")]
    EmptyClass(String),
    #[error("expected exactly one root class, found {0:?}")]
    RootCount(Vec<String>),
    #[error("class hierarchy contains a cycle through {0:?}")]
    CyclicHierarchy(String),
    #[error("unknown ODD class {0:?}")]
    UnknownClass(String),
    #[error("class {0:?} has no attributes to discretize against")]
    NotMeasurable(String),
    #[error("value {value} of class {class:?} falls in several attributes: {states:?}")]
    AmbiguousState {
        class: String,
        value: f64,
        states: Vec<String>,
    },
    #[error("ODD document, {0}")]
    Document(#[from] DocError),
}

/// A named, unit-typed interval state of an ODD class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddAttribute {
    pub name: String,
    pub unit: String,
    #[serde(rename = "interval")]
    pub bounds: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddClass {
    pub name: String,
    #[serde(default)]
    pub parent: Option<String>,
    /// Declares the attribute intervals pairwise disjoint.
    #[serde(default)]
    pub partition: bool,
    #[serde(default)]
    pub attributes: Vec<OddAttribute>,
}

impl OddClass {
    pub fn attribute(&self, name: &str) -> Option<&OddAttribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    /// Every pair of attributes whose intervals share a point.
    pub fn overlapping_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        for (i, a) in self.attributes.iter().enumerate() {
            for b in &self.attributes[i + 1..] {
                if a.bounds.intersects(&b.bounds) {
                    pairs.push((a.name.clone(), b.name.clone()));
                }
            }
        }
        pairs
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct OddSpecDoc {
    classes: Vec<OddClass>,
}

/// A validated, fully linked ODD class hierarchy. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct OddSpec {
    root: String,
    order: Vec<String>,
    classes: BTreeMap<String, OddClass>,
    children: BTreeMap<String, Vec<String>>,
}

/// Outcome of mapping one raw reading onto its class's attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Discretized {
    State(String),
    OutOfOdd,
}

impl Discretized {
    pub fn state(&self) -> Option<&str> {
        match self {
            Discretized::State(s) => Some(s),
            Discretized::OutOfOdd => None,
        }
    }
}

/// One timestamped, located set of raw measurements keyed by ODD class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    #[serde(rename = "t")]
    pub time: f64,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    #[serde(default)]
    pub readings: BTreeMap<String, f64>,
}

impl Observation {
    pub fn new(time: f64, readings: impl IntoIterator<Item = (String, f64)>) -> Self {
        Self {
            time,
            x: 0.0,
            y: 0.0,
            readings: readings.into_iter().collect(),
        }
    }
}

/// Per-class discretization of an observation. Failed entries are kept
/// apart rather than aborting the whole observation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Interpretation {
    pub states: BTreeMap<String, Discretized>,
    pub errors: BTreeMap<String, OddError>,
}

impl Interpretation {
    pub fn out_of_odd(&self) -> impl Iterator<Item = &str> {
        self.states
            .iter()
            .filter(|(_, d)| **d == Discretized::OutOfOdd)
            .map(|(c, _)| c.as_str())
    }
}

impl OddSpec {
    /// Link and validate a list of classes, reporting the first defect.
    pub fn from_classes(classes: Vec<OddClass>) -> Result<Self, OddError> {
        match check_classes(&classes).into_iter().next() {
            Some(defect) => Err(defect),
            None => Ok(Self::link(classes)),
        }
    }

    fn link(list: Vec<OddClass>) -> Self {
        let order = list.iter().map(|c| c.name.clone()).collect();
        let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut root = String::new();
        for class in &list {
            match &class.parent {
                Some(p) => children.entry(p.clone()).or_default().push(class.name.clone()),
                None => root = class.name.clone(),
            }
        }
        let classes = list.into_iter().map(|c| (c.name.clone(), c)).collect();
        Self {
            root,
            order,
            classes,
            children,
        }
    }

    pub fn root(&self) -> &OddClass {
        &self.classes[&self.root]
    }

    pub fn class(&self, name: &str) -> Option<&OddClass> {
        self.classes.get(name)
    }

    /// Classes in document order.
    pub fn classes(&self) -> impl Iterator<Item = &OddClass> {
        self.order.iter().map(|n| &self.classes[n])
    }

    pub fn children(&self, class: &str) -> &[String] {
        self.children.get(class).map_or(&[], Vec::as_slice)
    }

    pub fn is_leaf(&self, class: &str) -> bool {
        self.children(class).is_empty()
    }

    /// True when `descendant` lies strictly below `ancestor` in the hierarchy.
    pub fn is_descendant(&self, descendant: &str, ancestor: &str) -> bool {
        let mut cursor = self.classes.get(descendant).and_then(|c| c.parent.as_deref());
        while let Some(name) = cursor {
            if name == ancestor {
                return true;
            }
            cursor = self.classes.get(name).and_then(|c| c.parent.as_deref());
        }
        false
    }

    /// Runs the partition validator over every class, whether or not it is
    /// declared a partition.
    pub fn overlaps(&self) -> Vec<OddError> {
        self.classes()
            .flat_map(|class| {
                class
                    .overlapping_pairs()
                    .into_iter()
                    .map(|(first, second)| OddError::OverlappingIntervals {
                        class: class.name.clone(),
                        first,
                        second,
                    })
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        doc::to_json(&OddSpecDoc {
            classes: self.classes().cloned().collect(),
        })
    }
}

/// Every structural defect in a class list, in a stable order.
pub fn check_classes(classes: &[OddClass]) -> Vec<OddError> {
    let mut defects = Vec::new();
    let mut seen = BTreeSet::new();
    for class in classes {
        if !seen.insert(class.name.as_str()) {
            defects.push(OddError::DuplicateName(class.name.clone()));
        }
        let mut attr_names = BTreeSet::new();
        for attr in &class.attributes {
            if !attr_names.insert(attr.name.as_str()) {
                defects.push(OddError::DuplicateName(format!("{}.{}", class.name, attr.name)));
            }
        }
    }
    let by_name: BTreeMap<&str, &OddClass> =
        classes.iter().map(|c| (c.name.as_str(), c)).collect();

    for class in classes {
        if let Some(parent) = &class.parent {
            if !by_name.contains_key(parent.as_str()) {
                defects.push(OddError::UnknownParent {
                    class: class.name.clone(),
                    parent: parent.clone(),
                });
            }
        }
    }
    let roots: Vec<String> = classes
        .iter()
        .filter(|c| c.parent.is_none())
        .map(|c| c.name.clone())
        .collect();
    if roots.len() != 1 {
        defects.push(OddError::RootCount(roots));
    }
    for class in classes {
        let mut steps = 0;
        let mut cursor = class.parent.as_deref();
        while let Some(name) = cursor {
            steps += 1;
            if name == class.name || steps > classes.len() {
                defects.push(OddError::CyclicHierarchy(class.name.clone()));
                break;
            }
            cursor = by_name.get(name).and_then(|c| c.parent.as_deref());
        }
    }

    let parents: BTreeSet<&str> = classes.iter().filter_map(|c| c.parent.as_deref()).collect();
    for class in classes {
        if class.attributes.is_empty() && !parents.contains(class.name.as_str()) {
            defects.push(OddError::EmptyClass(class.name.clone()));
        }
        if class.partition {
            defects.extend(class.overlapping_pairs().into_iter().map(|(first, second)| {
                OddError::OverlappingIntervals {
                    class: class.name.clone(),
                    first,
                    second,
                }
            }));
        }
    }
    defects
}

/// Parse and validate an ODD document (`{"classes": [...]}`).
pub fn parse_odd_spec(document: &str) -> Result<OddSpec, OddError> {
    let doc: OddSpecDoc = doc::from_json(document)?;
    OddSpec::from_classes(doc.classes)
}

/// Parse a document and collect all defects instead of stopping at the first.
pub fn check_odd_document(document: &str) -> Result<Vec<OddError>, OddError> {
    let doc: OddSpecDoc = doc::from_json(document)?;
    Ok(check_classes(&doc.classes))
}

/// Map a raw value of `class_name` onto the unique attribute containing it.
pub fn discretize(spec: &OddSpec, class_name: &str, value: f64) -> Result<Discretized, OddError> {
    let class = spec
        .class(class_name)
        .ok_or_else(|| OddError::UnknownClass(class_name.to_string()))?;
    if class.attributes.is_empty() {
        return Err(OddError::NotMeasurable(class_name.to_string()));
    }
    let mut hits = class.attributes.iter().filter(|a| a.bounds.contains(value));
    match (hits.next(), hits.next()) {
        (None, _) => Ok(Discretized::OutOfOdd),
        (Some(only), None) => Ok(Discretized::State(only.name.clone())),
        (Some(first), Some(second)) => {
            let mut states = vec![first.name.clone(), second.name.clone()];
            states.extend(hits.map(|a| a.name.clone()));
            Err(OddError::AmbiguousState {
                class: class_name.to_string(),
                value,
                states,
            })
        }
    }
}

/// Discretize every reading of an observation.
pub fn interpret(spec: &OddSpec, obs: &Observation) -> Interpretation {
    let mut out = Interpretation::default();
    for (class, &value) in &obs.readings {
        match discretize(spec, class, value) {
            Ok(d) => {
                out.states.insert(class.clone(), d);
            }
            Err(e) => {
                out.errors.insert(class.clone(), e);
            }
        }
    }
    out
}

/// True iff every reading lands inside some attribute interval.
pub fn in_odd(spec: &OddSpec, obs: &Observation) -> Result<bool, OddError> {
    let interp = interpret(spec, obs);
    if let Some((_, err)) = interp.errors.into_iter().next() {
        return Err(err);
    }
    Ok(interp.states.values().all(|d| *d != Discretized::OutOfOdd))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rain_doc(partition: bool, light: &str) -> String {
        format!(
            r#"{{"classes": [
                {{"name": "Weather_conditions"}},
                {{"name": "Rain", "parent": "Weather_conditions", "partition": {partition},
                  "attributes": [
                    {{"name": "Rain_light", "unit": "cm/h", "interval": "{light}"}},
                    {{"name": "Rain_Moderate", "unit": "cm/h", "interval": "[0.25, 0.77["}},
                    {{"name": "Rain_Heavy", "unit": "cm/h", "interval": "[0.77, +["}}
                  ]}}
            ]}}"#
        )
    }

    fn rain_spec() -> OddSpec {
        parse_odd_spec(&rain_doc(true, "[0, 0.25[")).unwrap()
    }

    #[test]
    fn parses_rain_class() {
        let spec = rain_spec();
        assert_eq!(spec.root().name, "Weather_conditions");
        let rain = spec.class("Rain").unwrap();
        assert_eq!(rain.attributes.len(), 3);
        assert_eq!(rain.attributes[1].bounds, parse_interval("[0.25, 0.77[").unwrap());
        assert!(spec.is_leaf("Rain"));
        assert!(spec.is_descendant("Rain", "Weather_conditions"));
    }

    #[test]
    fn single_class_without_attributes_is_empty() {
        let err = parse_odd_spec(r#"{"classes": [{"name": "ODD"}]}"#).unwrap_err();
        assert_eq!(err, OddError::EmptyClass("ODD".into()));
    }

    #[test]
    fn partition_overlap_is_rejected() {
        let err = parse_odd_spec(&rain_doc(true, "[0, 0.30[")).unwrap_err();
        assert!(matches!(
            err,
            OddError::OverlappingIntervals { ref first, ref second, .. }
                if first == "Rain_light" && second == "Rain_Moderate"
        ));
        // Without the partition flag the same document loads, and the
        // validator still reports the overlap on request.
        let spec = parse_odd_spec(&rain_doc(false, "[0, 0.30[")).unwrap();
        assert_eq!(spec.overlaps().len(), 1);
    }

    #[test]
    fn structural_errors() {
        let dup = r#"{"classes": [{"name": "A", "attributes": [{"name": "x", "unit": "u", "interval": "[0, 1]"}]},
                                   {"name": "A", "parent": "A"}]}"#;
        assert!(matches!(parse_odd_spec(dup), Err(OddError::DuplicateName(_))));
        let unknown = r#"{"classes": [{"name": "A", "attributes": [{"name": "x", "unit": "u", "interval": "[0, 1]"}]},
                                       {"name": "B", "parent": "Z", "attributes": [{"name": "y", "unit": "u", "interval": "[0, 1]"}]}]}"#;
        assert!(matches!(parse_odd_spec(unknown), Err(OddError::UnknownParent { .. })));
        let bad_interval = r#"{"classes": [{"name": "A", "attributes": [{"name": "x", "unit": "u", "interval": "[1, 0]"}]}]}"#;
        assert!(matches!(parse_odd_spec(bad_interval), Err(OddError::Document(_))));
        let cyclic = r#"{"classes": [{"name": "R", "attributes": [{"name": "x", "unit": "u", "interval": "[0, 1]"}]},
                                      {"name": "A", "parent": "B", "attributes": [{"name": "x", "unit": "u", "interval": "[0, 1]"}]},
                                      {"name": "B", "parent": "A", "attributes": [{"name": "x", "unit": "u", "interval": "[0, 1]"}]}]}"#;
        assert!(matches!(parse_odd_spec(cyclic), Err(OddError::CyclicHierarchy(_))));
    }

    #[test]
    fn document_errors_carry_position() {
        let err = parse_odd_spec("{\n  \"classes\": [\n    {\"nam\": 3}\n  ]\n}").unwrap_err();
        match err {
            OddError::Document(d) => assert_eq!(d.line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn discretize_examples() {
        let spec = rain_spec();
        assert_eq!(discretize(&spec, "Rain", 1.0).unwrap(), Discretized::State("Rain_Heavy".into()));
        assert_eq!(discretize(&spec, "Rain", 0.25).unwrap(), Discretized::State("Rain_Moderate".into()));
        assert_eq!(discretize(&spec, "Rain", 0.77).unwrap(), Discretized::State("Rain_Heavy".into()));
        assert_eq!(discretize(&spec, "Rain", -1.0).unwrap(), Discretized::OutOfOdd);
        assert_eq!(discretize(&spec, "Rain", f64::NAN).unwrap(), Discretized::OutOfOdd);
        assert_eq!(discretize(&spec, "Fog", 1.0), Err(OddError::UnknownClass("Fog".into())));
        assert_eq!(
            discretize(&spec, "Weather_conditions", 1.0),
            Err(OddError::NotMeasurable("Weather_conditions".into()))
        );
    }

    #[test]
    fn ambiguous_state_in_non_partition_class() {
        let spec = parse_odd_spec(&rain_doc(false, "[0, 0.30[")).unwrap();
        let err = discretize(&spec, "Rain", 0.27).unwrap_err();
        assert!(matches!(err, OddError::AmbiguousState { ref states, .. } if states.len() == 2));
    }

    #[test]
    fn interpret_and_in_odd() {
        let spec = rain_spec();
        let empty = Observation::new(0.0, []);
        assert!(interpret(&spec, &empty).states.is_empty());
        assert!(in_odd(&spec, &empty).unwrap());

        let inside = Observation::new(1.0, [("Rain".to_string(), 0.1)]);
        assert_eq!(
            interpret(&spec, &inside).states["Rain"],
            Discretized::State("Rain_light".into())
        );
        assert!(in_odd(&spec, &inside).unwrap());

        let outside = Observation::new(2.0, [("Rain".to_string(), -5.0)]);
        assert!(!in_odd(&spec, &outside).unwrap());

        let unknown = Observation::new(3.0, [("Rain".to_string(), 0.1), ("Hail".to_string(), 2.0)]);
        let interp = interpret(&spec, &unknown);
        assert_eq!(interp.states.len(), 1);
        assert_eq!(interp.errors["Hail"], OddError::UnknownClass("Hail".into()));
        assert!(in_odd(&spec, &unknown).is_err());
    }

    #[test]
    fn observation_wire_format() {
        let obs: Observation =
            serde_json::from_str(r#"{"t": 1.5, "x": 2.0, "y": -1.0, "readings": {"Fog": 30.0}}"#).unwrap();
        assert_eq!(obs.time, 1.5);
        assert_eq!(obs.readings["Fog"], 30.0);
        let minimal: Observation = serde_json::from_str(r#"{"t": 0}"#).unwrap();
        assert!(minimal.readings.is_empty());
    }

    #[test]
    fn json_round_trip() {
        let spec = rain_spec();
        assert_eq!(parse_odd_spec(&spec.to_json()).unwrap(), spec);
    }
}
