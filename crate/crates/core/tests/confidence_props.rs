mod common;

use std::collections::BTreeMap;

use odd_assure::confidence::{model_uncertainty_from_samples, scenario_coverage, test_distance, DistanceMetric, Sample, ScenarioSpec};
use odd_assure::monitor::avp;
use proptest::prelude::*;

const RAIN: [&str; 3] = ["Rain_light", "Rain_Moderate", "Rain_Heavy"];
const SNOW: [&str; 3] = ["Snow_Light", "Snow_Moderate", "Snow_Heavy"];

proptest! {
    #[test]
    fn coverage_matches_linear_scan(rows in prop::collection::vec((0usize..3, 0usize..3), 1..300)) {
        let odd = avp::odd_spec();
        let scenario = ScenarioSpec::new("s", &[("Rain", "Rain_Heavy"), ("Snow", "Snow_Light")], &odd).unwrap();
        let records: Vec<BTreeMap<String, String>> = rows
            .iter()
            .map(|&(r, s)| [("Rain".to_string(), RAIN[r].to_string()), ("Snow".to_string(), SNOW[s].to_string())].into())
            .collect();
        let mut hits = 0;
        for &(r, s) in &rows {
            if RAIN[r] == "Rain_Heavy" && SNOW[s] == "Snow_Light" {
                hits += 1;
            }
        }
        let c = scenario_coverage(&records, &scenario).unwrap();
        prop_assert_eq!(c.n_occurrences, hits);
        prop_assert_eq!(c.n_total, rows.len());
        prop_assert_eq!(c.m, hits as f64 / rows.len() as f64);
    }

    #[test]
    fn euclidean_distance_matches_direct_formula(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..20),
    ) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
        let d = test_distance(&Sample::Vector(a.clone()), &Sample::Vector(b.clone()), DistanceMetric::Euclidean).unwrap();
        let mut sq = 0.0;
        for i in 0..a.len() {
            sq += (a[i] - b[i]).powi(2);
        }
        prop_assert!((d - sq.sqrt()).abs() <= 1e-9 * (1.0 + d));
        let m = test_distance(&Sample::Vector(a.clone()), &Sample::Vector(b.clone()), DistanceMetric::Manhattan).unwrap();
        prop_assert!(d <= m + 1e-9);
    }

    #[test]
    fn uncertainty_matches_two_pass_variance(
        samples in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 2..40),
    ) {
        let n = samples.len() as f64;
        let mut total = 0.0;
        for d in 0..3 {
            let mean = samples.iter().map(|s| s[d]).sum::<f64>() / n;
            total += samples.iter().map(|s| (s[d] - mean).powi(2)).sum::<f64>() / n;
        }
        let got = model_uncertainty_from_samples(&samples).unwrap();
        prop_assert!((got - total / 3.0).abs() <= 1e-9);
    }
}
