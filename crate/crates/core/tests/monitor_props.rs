mod common;

use odd_assure::bayes::EvidenceSet;
use odd_assure::monitor::{avp, run, step, Monitor, MonitorOptions, OodPolicy};
use odd_assure::odd::Observation;
use proptest::prelude::*;

use common::*;

fn obs(t: f64, fog: f64, rain: f64) -> Observation {
    Observation::new(t, [("Fog".to_string(), fog), ("Rain".to_string(), rain)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn reports_are_stateless_under_concatenation(
        readings in prop::collection::vec((10.0f64..2500.0, -0.5f64..2.0), 2..30),
        cut in 0usize..30,
    ) {
        let bundle = avp::bundle();
        let trace: Vec<Observation> = readings.iter().enumerate().map(|(i, (f, r))| obs(i as f64, *f, *r)).collect();
        let cut = cut.min(trace.len());
        let opts = MonitorOptions::default();
        let whole = run(&bundle, &trace, opts).unwrap().reports;
        let mut parts = run(&bundle, &trace[..cut], opts).unwrap().reports;
        parts.extend(run(&bundle, &trace[cut..], opts).unwrap().reports);
        prop_assert_eq!(&whole, &parts);
        let mut m = Monitor::new(&bundle, opts);
        for (o, r) in trace.iter().zip(&whole) {
            prop_assert_eq!(&m.push(o).unwrap(), r);
        }
    }
}

#[test]
fn fog_extremes_match_enumeration() {
    let bundle = avp::bundle();
    for (fog, state) in [(30.0, "Fog_Severity_5"), (2000.0, "Fog_Severity_1")] {
        let rep = step(&bundle, &Observation::new(0.0, [("Fog".to_string(), fog)]), OodPolicy::DropAndFlag);
        let ev = EvidenceSet::new().with("Fog", state);
        assert_eq!(rep.evidence, ev);
        let want = enumerate_posterior(bundle.net(), avp::HAZARD, &ev);
        let got = rep.posterior.unwrap();
        for (a, b) in got.probs.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-9, "fog {fog}: {a} vs {b}");
        }
    }
}
