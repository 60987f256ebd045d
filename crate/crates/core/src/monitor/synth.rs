//! Scripted synthetic observation traces.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MonitorError;
use crate::doc;
use crate::odd::Observation;

/// One piece of a per-class value profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Constant { value: f64, ticks: usize },
    /// Linear from `from` at the first tick to `to` at the last.
    Ramp { from: f64, to: f64, ticks: usize },
}

impl Segment {
    fn ticks(&self) -> usize {
        match self {
            Segment::Constant { ticks, .. } | Segment::Ramp { ticks, .. } => *ticks,
        }
    }

    fn value(&self, i: usize) -> f64 {
        match *self {
            Segment::Constant { value, .. } => value,
            Segment::Ramp { from, to, ticks } if ticks > 1 => from + (to - from) * i as f64 / (ticks - 1) as f64,
            Segment::Ramp { from, .. } => from,
        }
    }
}

/// Every class profile must span the same number of ticks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioScript {
    #[serde(default)]
    pub start: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    pub classes: BTreeMap<String, Vec<Segment>>,
    /// Half-width of uniform additive noise per class.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub noise: BTreeMap<String, f64>,
}

fn default_dt() -> f64 {
    1.0
}

pub fn parse_script(text: &str) -> Result<ScenarioScript, MonitorError> {
    doc::from_json(text).map_err(|e| MonitorError::BadScript(e.to_string()))
}

/// Observations at `start + k * dt`. A fixed seed gives an identical trace;
/// classes with zero noise draw no random numbers.
pub fn synth_trace(script: &ScenarioScript, seed: u64) -> Result<Vec<Observation>, MonitorError> {
    let bad = |m: String| Err(MonitorError::BadScript(m));
    if !script.start.is_finite() || !(script.dt.is_finite() && script.dt > 0.0) {
        return bad("start must be finite and dt positive".into());
    }
    if !script.x.is_finite() || !script.y.is_finite() {
        return bad("position must be finite".into());
    }
    let mut len = None;
    for (class, segs) in &script.classes {
        if segs.is_empty() {
            return bad(format!("{class}: no segments"));
        }
        for s in segs {
            let finite = match s {
                Segment::Constant { value, .. } => value.is_finite(),
                Segment::Ramp { from, to, .. } => from.is_finite() && to.is_finite(),
            };
            if s.ticks() == 0 || !finite {
                return bad(format!("{class}: segments need finite values and at least one tick"));
            }
        }
        let n: usize = segs.iter().map(Segment::ticks).sum();
        match len {
            Some(m) if m != n => return bad(format!("{class}: spans {n} ticks, expected {m}")),
            _ => len = Some(n),
        }
    }
    for (class, a) in &script.noise {
        if !script.classes.contains_key(class) {
            return bad(format!("noise for unscripted class {class}"));
        }
        if !(a.is_finite() && *a >= 0.0) {
            return bad(format!("{class}: noise amplitude must be finite and non-negative"));
        }
    }

    let values: BTreeMap<&str, Vec<f64>> = script
        .classes
        .iter()
        .map(|(c, segs)| {
            let v = segs.iter().flat_map(|s| (0..s.ticks()).map(move |i| s.value(i))).collect();
            (c.as_str(), v)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(len.unwrap_or(0));
    for k in 0..len.unwrap_or(0) {
        let mut readings = BTreeMap::new();
        for (class, v) in &values {
            let a = script.noise.get(*class).copied().unwrap_or(0.0);
            let noise = if a > 0.0 { rng.gen_range(-a..=a) } else { 0.0 };
            readings.insert(class.to_string(), v[k] + noise);
        }
        out.push(Observation {
            time: script.start + k as f64 * script.dt,
            x: script.x,
            y: script.y,
            readings,
        });
    }
    Ok(out)
}
