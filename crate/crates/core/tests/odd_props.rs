mod common;

use odd_assure::monitor::avp;
use odd_assure::odd::{discretize, in_odd, Discretized, Observation, OddError};
use proptest::prelude::*;

use common::*;

const CLASSES: [&str; 5] = ["Rain", "Fog", "Snow", "Vehicle_lighting", "Ego_speed"];

fn scan(class: &str, v: f64) -> Result<Discretized, Vec<&'static str>> {
    match avp_interval_states(class, v).as_slice() {
        [] => Ok(Discretized::OutOfOdd),
        [one] => Ok(Discretized::State(one.to_string())),
        many => Err(many.to_vec()),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn random_readings_agree_with_interval_scan(c in 0usize..5, v in -50.0f64..2500.0) {
        let spec = avp::odd_spec();
        let class = CLASSES[c];
        match (scan(class, v), discretize(&spec, class, v)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(states), Err(OddError::AmbiguousState { states: got, .. })) => {
                prop_assert_eq!(sorted(states), sorted(got.iter().map(String::as_str)));
            }
            (a, b) => prop_assert!(false, "{class} {v}: oracle {a:?}, got {b:?}"),
        }
    }

    #[test]
    fn in_odd_is_conjunction_of_readings(vals in prop::collection::vec(-1.0f64..120.0, 5)) {
        let spec = avp::odd_spec();
        let obs = Observation::new(0.0, CLASSES.iter().map(|c| c.to_string()).zip(vals.iter().cloned()));
        let oracle: Vec<_> = CLASSES.iter().zip(&vals).map(|(c, v)| scan(c, *v)).collect();
        match in_odd(&spec, &obs) {
            Ok(inside) => {
                prop_assert!(oracle.iter().all(|o| o.is_ok()));
                prop_assert_eq!(inside, oracle.iter().all(|o| *o != Ok(Discretized::OutOfOdd)));
            }
            Err(OddError::AmbiguousState { .. }) => prop_assert!(oracle.iter().any(|o| o.is_err())),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }
}

#[test]
fn ego_speed_sixty_is_ambiguous() {
    let spec = avp::odd_spec();
    match discretize(&spec, "Ego_speed", 60.0) {
        Err(OddError::AmbiguousState { states, .. }) => {
            assert_eq!(sorted(states), ["Speed_High", "Speed_Medium"]);
        }
        other => panic!("expected ambiguity, got {other:?}"),
    }
}
