//! Evidence-feeding metrics: scenario coverage, test distances, model
//! uncertainty, and binning of real-valued metrics into node states.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::ConfidenceError;
use crate::odd::{discretize, Discretized, OddSpec};

/// One `class = state` requirement of a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub class: String,
    pub state: String,
}

/// A conjunction of ODD class states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    pub conditions: Vec<Condition>,
}

impl ScenarioSpec {
    /// Build a scenario whose conditions resolve against `odd`.
    pub fn new(
        id: impl Into<String>,
        conditions: &[(&str, &str)],
        odd: &OddSpec,
    ) -> Result<Self, ConfidenceError> {
        let spec = Self {
            id: id.into(),
            conditions: conditions
                .iter()
                .map(|(c, s)| Condition {
                    class: c.to_string(),
                    state: s.to_string(),
                })
                .collect(),
        };
        spec.check(odd)?;
        Ok(spec)
    }

    pub fn check(&self, odd: &OddSpec) -> Result<(), ConfidenceError> {
        if self.conditions.is_empty() {
            return Err(ConfidenceError::EmptyScenario(self.id.clone()));
        }
        for cond in &self.conditions {
            let class = odd
                .class(&cond.class)
                .ok_or_else(|| ConfidenceError::UnknownClass(cond.class.clone()))?;
            if class.attribute(&cond.state).is_none() {
                return Err(ConfidenceError::UnknownState {
                    class: cond.class.clone(),
                    state: cond.state.clone(),
                });
            }
        }
        Ok(())
    }

    pub fn matches(&self, row: &BTreeMap<String, String>) -> bool {
        self.conditions
            .iter()
            .all(|c| row.get(&c.class).is_some_and(|s| *s == c.state))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    pub scenario: String,
    pub n_occurrences: usize,
    pub n_total: usize,
    pub m: f64,
}

/// Fraction of rows (class → state) that satisfy every scenario condition.
pub fn scenario_coverage(
    records: &[BTreeMap<String, String>],
    scenario: &ScenarioSpec,
) -> Result<CoverageResult, ConfidenceError> {
    if records.is_empty() {
        return Err(ConfidenceError::EmptyDataset);
    }
    let n = records.iter().filter(|r| scenario.matches(r)).count();
    Ok(CoverageResult {
        scenario: scenario.id.clone(),
        n_occurrences: n,
        n_total: records.len(),
        m: n as f64 / records.len() as f64,
    })
}

/// Read a delimited table whose header names ODD classes. A numeric cell
/// is discretized against `odd` and omitted from its row when out of the
/// ODD; any other cell must name an attribute of its column's class.
pub fn parse_state_records<R: Read>(
    reader: R,
    odd: &OddSpec,
) -> Result<Vec<BTreeMap<String, String>>, ConfidenceError> {
    let table = |line: u64, message: String| ConfidenceError::Table { line, message };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| table(1, e.to_string()))?.clone();
    for h in &headers {
        let class = odd.class(h).ok_or_else(|| ConfidenceError::UnknownClass(h.to_string()))?;
        if class.attributes.is_empty() {
            return Err(table(1, format!("class {h:?} has no attributes")));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| table(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut row = BTreeMap::new();
        for (class, cell) in headers.iter().zip(rec.iter()) {
            let state = match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => match discretize(odd, class, v) {
                    Ok(Discretized::State(s)) => Some(s),
                    Ok(Discretized::OutOfOdd) => None,
                    Err(e) => return Err(table(line, e.to_string())),
                },
                _ if odd.class(class).is_some_and(|c| c.attribute(cell).is_some()) => Some(cell.to_string()),
                _ => return Err(table(line, format!("{class}: {cell:?} is neither a number nor a state"))),
            };
            if let Some(s) = state {
                row.insert(class.to_string(), s);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// State of the lower-inclusive bin holding `value`: `states[0]` below the
/// first cut point, `states[i]` on `[thresholds[i-1], thresholds[i][`.
pub fn metric_to_state(value: f64, thresholds: &[f64], states: &[String]) -> Result<String, ConfidenceError> {
    if states.len() != thresholds.len() + 1 {
        return Err(ConfidenceError::BadThresholds(format!(
            "{} cut points need {} states, got {}",
            thresholds.len(),
            thresholds.len() + 1,
            states.len()
        )));
    }
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfidenceError::BadThresholds(
            "cut points must be finite and strictly increasing".into(),
        ));
    }
    if value.is_nan() {
        return Err(ConfidenceError::NonFiniteMetric);
    }
    let bin = thresholds.partition_point(|t| *t <= value);
    Ok(states[bin].clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceMetric {
    Jaccard,
    Hamming,
    Manhattan,
    Euclidean,
}

/// A prediction or ground truth: a numeric vector or a label set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Sample {
    Vector(Vec<f64>),
    Labels(BTreeSet<String>),
}

/// Distance between prediction and truth; Jaccard is `1 - |A∩B| / |A∪B|`.
pub fn test_distance(pred: &Sample, truth: &Sample, metric: DistanceMetric) -> Result<f64, ConfidenceError> {
    match (pred, truth, metric) {
        (Sample::Labels(a), Sample::Labels(b), DistanceMetric::Jaccard) => {
            let union = a.union(b).count();
            if union == 0 {
                return Ok(0.0);
            }
            Ok(1.0 - a.intersection(b).count() as f64 / union as f64)
        }
        (Sample::Vector(a), Sample::Vector(b), DistanceMetric::Hamming | DistanceMetric::Manhattan | DistanceMetric::Euclidean) => {
            if a.len() != b.len() {
                return Err(ConfidenceError::LengthMismatch {
                    left: a.len(),
                    right: b.len(),
                });
            }
            let pairs = a.iter().zip(b);
            Ok(match metric {
                DistanceMetric::Hamming => pairs.filter(|(x, y)| x != y).count() as f64,
                DistanceMetric::Manhattan => pairs.map(|(x, y)| (x - y).abs()).sum(),
                _ => pairs.map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            })
        }
        _ => Err(ConfidenceError::KindMismatch { metric }),
    }
}

/// Mean over output dimensions of the population variance across samples.
pub fn model_uncertainty_from_samples(samples: &[Vec<f64>]) -> Result<f64, ConfidenceError> {
    if samples.len() < 2 {
        return Err(ConfidenceError::TooFewSamples(samples.len()));
    }
    let dim = samples[0].len();
    for (index, s) in samples.iter().enumerate() {
        if s.len() != dim || dim == 0 {
            return Err(ConfidenceError::DimMismatch {
                index,
                expected: dim,
                found: s.len(),
            });
        }
    }
    let n = samples.len() as f64;
    let total: f64 = (0..dim)
        .map(|d| {
            // Welford update per dimension.
            let (mut mean, mut m2) = (0.0, 0.0);
            for (k, s) in samples.iter().enumerate() {
                let delta = s[d] - mean;
                mean += delta / (k + 1) as f64;
                m2 += delta * (s[d] - mean);
            }
            m2 / n
        })
        .sum();
    Ok((total / dim as f64).max(0.0))
}
