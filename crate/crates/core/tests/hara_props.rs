mod common;

use std::collections::{BTreeSet, VecDeque};

use odd_assure::hara::{compute_fta, validate_fta, CausalRelation, Event, GateOp};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random acyclic causal relation over `E0..En`; children always have a
/// larger index, so events can be shared and some are unreachable from `E0`.
fn random_dag(seed: u64, n: usize) -> (Vec<Event>, CausalRelation) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut rel = CausalRelation::new();
    for i in 0..n {
        let later = n - i - 1;
        if later >= 2 && (i == 0 || rng.gen_bool(0.5)) {
            let k = rng.gen_range(2..=later.min(3));
            let mut kids = BTreeSet::new();
            while kids.len() < k {
                kids.insert(rng.gen_range(i + 1..n));
            }
            let op = if rng.gen_bool(0.5) { GateOp::And } else { GateOp::Or };
            rel.insert(format!("E{i}"), op, kids.iter().map(|c| format!("E{c}")).collect());
            events.push(Event::intermediate(format!("E{i}"), ""));
        } else {
            events.push(Event::atomic(format!("E{i}"), ""));
        }
    }
    (events, rel)
}

fn reachable(rel: &CausalRelation, from: &str) -> BTreeSet<String> {
    let mut seen = BTreeSet::from([from.to_string()]);
    let mut queue = VecDeque::from([from.to_string()]);
    while let Some(e) = queue.pop_front() {
        for c in rel.get(&e).map(|g| g.children.clone()).unwrap_or_default() {
            if seen.insert(c.clone()) {
                queue.push_back(c);
            }
        }
    }
    seen
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn fault_tree_is_the_reachable_subgraph(seed in any::<u64>(), n in 3usize..14) {
        let (events, rel) = random_dag(seed, n);
        let fta = compute_fta("E0", &events, &rel).unwrap();
        let reach = reachable(&rel, "E0");
        let got: BTreeSet<String> = fta.events.iter().map(|e| e.id.clone()).collect();
        prop_assert_eq!(got.len(), fta.events.len());
        prop_assert_eq!(&got, &reach);
        let gated: BTreeSet<String> = fta.gates.iter().map(|g| g.parent.clone()).collect();
        prop_assert_eq!(gated.len(), fta.gates.len());
        let developed: BTreeSet<String> = reach.iter().filter(|e| rel.get(e).is_some()).cloned().collect();
        prop_assert_eq!(gated, developed);
        for g in &fta.gates {
            let entry = rel.get(&g.parent).unwrap();
            prop_assert_eq!(&g.children, &entry.children);
            prop_assert_eq!(g.op, entry.op);
        }
        prop_assert!(validate_fta(&fta).is_empty());
    }
}
