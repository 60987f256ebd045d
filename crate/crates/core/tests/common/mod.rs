//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use odd_assure::bayes::{Assignment, BayesNet, BayesNetBuilder, EvidenceSet};
use odd_assure::hara::{compute_fta, CausalRelation, Event, Fta, GateOp};
use rand::seq::SliceRandom;
use rand::Rng;

/// CPT entry by direct lookup: rows are enumerated with the first parent
/// slowest.
pub fn cpt_entry(net: &BayesNet, node: &str, full: &Assignment) -> f64 {
    let cpt = net.cpt(node).unwrap();
    let mut row = 0;
    for p in &cpt.parent_order {
        let states = &net.node(p).unwrap().states;
        let idx = states.iter().position(|s| *s == full[p]).unwrap();
        row = row * states.len() + idx;
    }
    let own = net.node(node).unwrap().states.iter().position(|s| *s == full[node]).unwrap();
    cpt.rows[row][own]
}

/// Every full assignment of the network, in odometer order.
pub fn all_assignments(net: &BayesNet) -> Vec<Assignment> {
    let nodes = net.nodes();
    let mut out = vec![Assignment::new()];
    for n in nodes {
        let mut next = Vec::with_capacity(out.len() * n.states.len());
        for a in &out {
            for s in &n.states {
                let mut b = a.clone();
                b.insert(n.id.clone(), s.clone());
                next.push(b);
            }
        }
        out = next;
    }
    out
}

pub fn joint(net: &BayesNet, full: &Assignment) -> f64 {
    net.nodes().iter().map(|n| cpt_entry(net, &n.id, full)).product()
}

/// P(query | evidence) by summing the full joint.
pub fn enumerate_posterior(net: &BayesNet, query: &str, evidence: &EvidenceSet) -> Vec<f64> {
    let states = &net.node(query).unwrap().states;
    let mut mass = vec![0.0; states.len()];
    for a in all_assignments(net) {
        if evidence.iter().all(|(n, s)| a[n] == *s) {
            let i = states.iter().position(|s| *s == a[query]).unwrap();
            mass[i] += joint(net, &a);
        }
    }
    let z: f64 = mass.iter().sum();
    mass.iter().map(|m| m / z).collect()
}

fn random_row<R: Rng>(rng: &mut R, card: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..card).map(|_| rng.gen_range(0.05..1.0)).collect();
    let z: f64 = raw.iter().sum();
    raw.iter().map(|x| x / z).collect()
}

/// Random DAG over `X0..X{n-1}` (edges only from lower to higher index),
/// at most `max_parents` parents, strictly positive CPTs.
pub fn random_net<R: Rng>(rng: &mut R, n: usize, max_parents: usize, max_card: usize) -> BayesNet {
    let names: Vec<String> = (0..n).map(|i| format!("X{i}")).collect();
    let cards: Vec<usize> = (0..n).map(|_| rng.gen_range(2..=max_card)).collect();
    let mut b = BayesNetBuilder::default();
    for i in 0..n {
        b = b.node(&names[i], (0..cards[i]).map(|s| format!("s{s}")));
    }
    for i in 0..n {
        let mut candidates: Vec<usize> = (0..i).collect();
        candidates.shuffle(rng);
        let k = rng.gen_range(0..=max_parents.min(i));
        let parents: Vec<usize> = candidates.into_iter().take(k).collect();
        let rows = parents.iter().map(|&p| cards[p]).product::<usize>();
        let table = (0..rows).map(|_| random_row(rng, cards[i])).collect();
        let pnames: Vec<&str> = parents.iter().map(|&p| names[p].as_str()).collect();
        b = b.cpt(&names[i], &pnames, table);
    }
    b.build().unwrap()
}

/// Evidence on up to `max_nodes` distinct nodes other than `exclude`.
pub fn random_evidence<R: Rng>(rng: &mut R, net: &BayesNet, max_nodes: usize, exclude: &str) -> EvidenceSet {
    let mut ids: Vec<&str> = net.nodes().iter().map(|n| n.id.as_str()).filter(|id| *id != exclude).collect();
    ids.shuffle(rng);
    let k = rng.gen_range(0..=max_nodes.min(ids.len()));
    let mut ev = EvidenceSet::new();
    for id in ids.into_iter().take(k) {
        let states = &net.node(id).unwrap().states;
        ev.insert(id, states[rng.gen_range(0..states.len())].clone());
    }
    ev
}

/// Ancestral sampling in topological order.
pub fn forward_sample<R: Rng>(net: &BayesNet, rng: &mut R, n: usize) -> Vec<Assignment> {
    let order: Vec<String> = net.topological_order().unwrap().into_iter().map(str::to_string).collect();
    (0..n)
        .map(|_| {
            let mut a = Assignment::new();
            for id in &order {
                let states = &net.node(id).unwrap().states;
                let mut u: f64 = rng.gen();
                let mut pick = states.len() - 1;
                for (i, s) in states.iter().enumerate() {
                    a.insert(id.clone(), s.clone());
                    let p = cpt_entry(net, id, &a);
                    if u < p {
                        pick = i;
                        break;
                    }
                    u -= p;
                }
                a.insert(id.clone(), states[pick].clone());
            }
            a
        })
        .collect()
}

/// A strict random fault tree with at most `max_events` events, every gate
/// having two or three children, plus leaf priors in (0, 1).
pub fn random_tree_fta<R: Rng>(rng: &mut R, max_events: usize) -> (Fta, BTreeMap<String, f64>) {
    let total = rng.gen_range(3..=max_events.max(3));
    let mut kids: Vec<Vec<usize>> = vec![Vec::new()];
    let mut frontier = vec![0usize];
    while kids.len() + 2 <= total && !frontier.is_empty() {
        let i = rng.gen_range(0..frontier.len());
        let node = frontier.swap_remove(i);
        let k = rng.gen_range(2..=3).min(total - kids.len());
        for _ in 0..k {
            kids.push(Vec::new());
            let c = kids.len() - 1;
            kids[node].push(c);
            frontier.push(c);
        }
    }
    let name = |i: usize| format!("T{i}");
    let mut events = Vec::new();
    let mut rel = CausalRelation::new();
    let mut priors = BTreeMap::new();
    for (i, ch) in kids.iter().enumerate() {
        if ch.is_empty() {
            events.push(Event::atomic(name(i), ""));
            priors.insert(name(i), rng.gen_range(0.01..0.99));
        } else {
            events.push(Event::intermediate(name(i), ""));
            let op = if rng.gen_bool(0.5) { GateOp::And } else { GateOp::Or };
            rel.insert(name(i), op, ch.iter().map(|&c| name(c)).collect());
        }
    }
    (compute_fta("T0", &events, &rel).unwrap(), priors)
}

/// P(event occurs) by the product rules for AND and OR, tree-recursively.
pub fn gate_formula(fta: &Fta, priors: &BTreeMap<String, f64>, event: &str) -> f64 {
    match fta.gates.iter().find(|g| g.parent == event) {
        None => priors[event],
        Some(g) => {
            let ps = g.children.iter().map(|c| gate_formula(fta, priors, c));
            match g.op {
                GateOp::And => ps.product(),
                GateOp::Or => 1.0 - ps.map(|p| 1.0 - p).product::<f64>(),
            }
        }
    }
}

/// AVP attribute intervals as literals (class, attribute, lo, lo_closed, hi, hi_closed); an
/// infinite `hi` is unbounded.
pub const AVP_INTERVALS: [(&str, &str, f64, bool, f64, bool); 21] = [
    ("Vehicle_lighting", "Vehicle_lighting_High", 50.0, true, 150.0, true),
    ("Vehicle_lighting", "Vehicle_lighting_Low", 0.0, true, 50.0, false),
    ("Env_lighting", "Sunlight", 107.527, true, f64::INFINITY, false),
    ("Env_lighting", "Very_Dark_Day", 10.8, true, 107.527, false),
    ("Env_lighting", "Twilight", 0.0011, true, 10.8, false),
    ("Env_lighting", "Starlight", 0.0001, true, 0.0011, false),
    ("Env_lighting", "Overcast_Night", 0.0, true, 0.0001, false),
    ("Rain", "Rain_light", 0.0, true, 0.25, false),
    ("Rain", "Rain_Moderate", 0.25, true, 0.77, false),
    ("Rain", "Rain_Heavy", 0.77, true, f64::INFINITY, false),
    ("Fog", "Fog_Severity_1", 1610.0, true, f64::INFINITY, false),
    ("Fog", "Fog_Severity_2", 805.0, true, 1610.0, false),
    ("Fog", "Fog_Severity_3", 244.0, true, 805.0, false),
    ("Fog", "Fog_Severity_4", 60.0, true, 244.0, false),
    ("Fog", "Fog_Severity_5", 0.0, true, 60.0, false),
    ("Snow", "Snow_Light", 1.0, true, f64::INFINITY, false),
    ("Snow", "Snow_Moderate", 0.5, true, 1.0, false),
    ("Snow", "Snow_Heavy", 0.0, true, 0.5, false),
    ("Ego_speed", "Speed_High", 60.0, true, f64::INFINITY, false),
    ("Ego_speed", "Speed_Medium", 31.0, true, 60.0, true),
    ("Ego_speed", "Speed_Low", 0.0, true, 31.0, false),
];

/// Attributes of `class` whose literal interval holds `v`.
pub fn avp_interval_states(class: &str, v: f64) -> Vec<&'static str> {
    AVP_INTERVALS
        .iter()
        .filter(|r| r.0 == class)
        .filter(|&&(_, _, lo, lc, hi, hc)| (if lc { v >= lo } else { v > lo }) && (if hc { v <= hi } else { v < hi }))
        .map(|r| r.1)
        .collect()
}

/// Rain ABox plus a small safety argument with a bound network objective.
pub const RAIN_GSN: &str = r#"# ODD
<Rain> <rdf_type> <OddClass> .
<Rain_heavy> <rdf_type> <OddAttribute> .
<Rain> <hasAttribute> <Rain_heavy> .
<Rain_heavy> <hasDomain> "cm/h" .
<Rain_heavy> <hasDomain> "≥0.77" .
"cm/h" <rdf_type> <Unit> .
"≥0.77" <rdf_type> <Constraint> .
# hazard
<H> <rdf_type> <HazardousEvent> .
<H> <hasText> "Failure to adequately detect object" .
# argument
<G1> <rdf_type> <Goal> .
<G1> <hasText> "Obstacle detection is acceptably safe in rain" .
<G1> <relatedTo> <H> .
<S1> <rdf_type> <Strategy> .
<G1> <supportedBy> <S1> .
<G2> <rdf_type> <Goal> .
<S1> <supportedBy> <G2> .
<Sn1> <rdf_type> <Solution> .
<G2> <hasEvidence> <Sn1> .
<Sn2> <rdf_type> <Solution> .
<Sn2> <hasText> "Rain test campaign report" .
<G2> <supportedBy> <Sn2> .
# confidence network
<E1n> <rdf_type> <Node> .
<Hn> <rdf_type> <Node> .
<E1n> <dependsOn> <Hn> .
<CPT_E1n> <rdf_type> <CptTable> .
<CPT_Hn> <rdf_type> <CptTable> .
<E1n> <hasCPT> <CPT_E1n> .
<Hn> <hasCPT> <CPT_Hn> .
<Sn1> <hasConfidence> <Hn> .
<Hn> <hasACP> 0.8 .
"#;

/// Single-triple edits of [`RAIN_GSN`]: (expected axiom, removed line,
/// added line). Empty strings mean no removal or no addition.
pub const RAIN_GSN_MUTATIONS: [(&str, &str, &str); 20] = [
    ("A4", "<Rain> <rdf_type> <OddClass> .", "<Rain> <rdf_type> <OddAttribute> ."),
    ("A4", "<Rain> <rdf_type> <OddClass> .", ""),
    ("A4", "", "<Fog> <hasAttribute> <Rain_heavy> ."),
    ("A4", "", "<G1> <hasAttribute> <Rain_heavy> ."),
    ("A5", r#""≥0.77" <rdf_type> <Constraint> ."#, r#"">=0.77" <rdf_type> <Constraint> ."#),
    ("A5", r#""cm/h" <rdf_type> <Unit> ."#, ""),
    ("A5", "", r#"<Rain_heavy> <hasDomain> "mm/h" ."#),
    ("A5", "", "<Rain_heavy> <hasDomain> <G1> ."),
    ("A26", "", "<G1> <supportedBy> <Rain> ."),
    ("A26", "<Sn2> <rdf_type> <Solution> .", ""),
    ("A26", "", r#"<S1> <supportedBy> "see annex" ."#),
    ("A26", "", "<G2> <supportedBy> <Hn> ."),
    ("A37", "", "<S1> <hasConfidence> <Hn> ."),
    ("A37", "", "<Rain> <hasConfidence> <Hn> ."),
    ("A37", "", "<E1n> <hasConfidence> <Hn> ."),
    ("A45", "", "<Rain> <hasCPT> <CPT_Hn> ."),
    ("A45", "", "<G1> <hasCPT> <CPT_E1n> ."),
    ("A45", "", "<Sn1> <hasCPT> <CPT_Hn> ."),
    ("A47", "", "<E1n> <hasACP> 0.5 ."),
    ("A47", "", "<G1> <hasACP> 0.9 ."),
];

/// Apply one mutation to the fixture text.
pub fn mutate(text: &str, remove: &str, add: &str) -> String {
    let mut lines: Vec<&str> = text.lines().filter(|l| *l != remove).collect();
    assert!(remove.is_empty() || lines.len() + 1 == text.lines().count(), "line {remove:?} not found");
    if !add.is_empty() {
        lines.push(add);
    }
    lines.join("\n") + "\n"
}

/// Subset of `items` chosen by `mask` bits, for tiny exhaustive checks.
pub fn subset<T: Clone>(items: &[T], mask: u64) -> Vec<T> {
    items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, x)| x.clone()).collect()
}

pub fn sorted<T: Ord>(it: impl IntoIterator<Item = T>) -> Vec<T> {
    it.into_iter().collect::<BTreeSet<_>>().into_iter().collect()
}
