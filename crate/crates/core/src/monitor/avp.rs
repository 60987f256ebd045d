//! Automated valet parking fixture: obstacle-detection hazard, its ODD, and
//! the hazard network conditioned on five measurable ODD classes.
//!
//! The ODD and HARA documents are the files under `fixtures/avp/`; the
//! network and bundle manifest stored there are regenerated from this module
//! and checked for equality in tests.

use std::collections::BTreeMap;

use super::ModelBundle;
use crate::bayes::{compile_fta_to_bn, BayesNet, NOT_OCCURS, OCCURS};
use crate::confidence::{attach_odd_parents, AcpBinding, OddLink};
use crate::hara::{parse_hara, Hara};
use crate::odd::{parse_odd_spec, OddSpec};

pub const ODD_JSON: &str = include_str!("../../fixtures/avp/odd.json");
pub const HARA_JSON: &str = include_str!("../../fixtures/avp/hara.json");
pub const PRIORS_JSON: &str = include_str!("../../fixtures/avp/priors.json");

pub const HAZARD: &str = "H";
pub const SOLUTION_ID: &str = "Sn1";

pub fn odd_spec() -> OddSpec {
    parse_odd_spec(ODD_JSON).expect("fixture ODD is valid")
}

pub fn hara() -> Hara {
    parse_hara(HARA_JSON).expect("fixture HARA is valid")
}

pub fn priors() -> BTreeMap<String, f64> {
    serde_json::from_str(PRIORS_JSON).expect("fixture priors are valid")
}

/// Weights are non-decreasing from the benign to the severe state.
pub fn odd_links() -> Vec<OddLink> {
    vec![
        OddLink::new("Rain", "E2", &[0.0, 0.1, 0.3]),
        OddLink::new("Fog", "E2", &[0.0, 0.05, 0.15, 0.3, 0.5]),
        OddLink::new("Snow", "E2", &[0.0, 0.1, 0.3]),
        OddLink::new("Vehicle_lighting", "E2", &[0.0, 0.2]),
        OddLink::new("Ego_speed", "E2", &[0.2, 0.1, 0.0]),
        OddLink::new("Ego_speed", "E3", &[0.3, 0.1, 0.0]),
        OddLink::new("Ego_speed", "E4", &[0.3, 0.1, 0.0]),
    ]
}

/// Compiled fault tree with ODD parents; objective is the hazard.
pub fn bayes_net() -> BayesNet {
    let fta = hara().compute_fta(HAZARD).expect("fixture tree");
    let tree = compile_fta_to_bn(&fta, &priors()).expect("fixture priors cover leaves");
    attach_odd_parents(&tree, &odd_spec(), &odd_links()).expect("fixture links are valid")
}

/// The hazard not occurring is full confidence.
pub fn state_values() -> BTreeMap<String, f64> {
    [(OCCURS.to_string(), 0.0), (NOT_OCCURS.to_string(), 1.0)].into()
}

pub fn bindings() -> BTreeMap<String, String> {
    ["Rain", "Fog", "Snow", "Vehicle_lighting", "Ego_speed"]
        .iter()
        .map(|c| (c.to_string(), c.to_string()))
        .collect()
}

pub fn worst_case() -> BTreeMap<String, String> {
    [
        ("Rain", "Rain_Heavy"),
        ("Fog", "Fog_Severity_5"),
        ("Snow", "Snow_Heavy"),
        ("Vehicle_lighting", "Vehicle_lighting_Low"),
        ("Ego_speed", "Speed_High"),
    ]
    .iter()
    .map(|(c, s)| (c.to_string(), s.to_string()))
    .collect()
}

pub fn bundle() -> ModelBundle {
    let net = bayes_net();
    let acp = AcpBinding::new(SOLUTION_ID, &net, state_values()).expect("fixture binding");
    ModelBundle::new(odd_spec(), net, bindings(), acp, worst_case()).expect("fixture bundle")
}
