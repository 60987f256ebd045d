//! Runtime confidence monitoring.
//!
//! A [`ModelBundle`] ties an ODD to a Bayesian network: each bound ODD class
//! is a network node whose states are the class's attribute names. Every
//! observation is discretized, turned into evidence and evaluated against the
//! bundle's assurance point independently of all other ticks.

pub mod avp;
mod synth;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{parse_bn, BayesNet, BnError, EvidenceSet, Posterior};
use crate::confidence::{AcpBinding, ConfidenceError};
use crate::doc::{self, DocError};
use crate::odd::{interpret, parse_odd_spec, Discretized, Observation, OddError, OddSpec};

pub use synth::{parse_script, synth_trace, ScenarioScript, Segment};

#[derive(Debug, Error)]
pub enum MonitorError {
    #[error("binding {class:?}: {reason}")]
    BindingMismatch { class: String, reason: String },
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Odd { path: PathBuf, source: OddError },
    #[error("{path}: {source}")]
    Bn { path: PathBuf, source: BnError },
    #[error("{path}: {source}")]
    Manifest { path: PathBuf, source: DocError },
    #[error(transparent)]
    Confidence(#[from] ConfidenceError),
    #[error("observation {index}: time {time} precedes {previous}")]
    OutOfOrderTimestamp { index: usize, previous: f64, time: f64 },
    #[error("observation line {line}: {message}")]
    BadObservation { line: usize, message: String },
    #[error("bad scenario script: {0}")]
    BadScript(String),
}

/// Treatment of readings that fall outside every attribute interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OodPolicy {
    /// Leave the class out of the evidence and list it as dropped.
    #[default]
    DropAndFlag,
    /// Substitute the class's declared worst state, if it has one.
    WorstCase,
}

/// Treatment of a timestamp earlier than its predecessor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderPolicy {
    #[default]
    Reject,
    Warn,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MonitorOptions {
    pub ood: OodPolicy,
    pub order: OrderPolicy,
}

/// Validated, immutable monitoring model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    odd: OddSpec,
    net: BayesNet,
    bindings: BTreeMap<String, String>,
    acp: AcpBinding,
    worst_case: BTreeMap<String, String>,
}

/// On-disk bundle description; file paths are relative to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub odd: PathBuf,
    pub bn: PathBuf,
    /// ODD class name to network node id.
    pub bindings: BTreeMap<String, String>,
    pub acp: AcpBinding,
    /// ODD class name to the attribute treated as its worst state.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub worst_case: BTreeMap<String, String>,
}

impl ModelBundle {
    pub fn new(
        odd: OddSpec,
        net: BayesNet,
        bindings: BTreeMap<String, String>,
        acp: AcpBinding,
        worst_case: BTreeMap<String, String>,
    ) -> Result<Self, MonitorError> {
        let mismatch = |class: &str, reason: String| MonitorError::BindingMismatch {
            class: class.to_string(),
            reason,
        };
        for (class, node) in &bindings {
            let c = odd
                .class(class)
                .ok_or_else(|| mismatch(class, "not an ODD class".into()))?;
            let n = net
                .node(node)
                .ok_or_else(|| mismatch(class, format!("no network node {node:?}")))?;
            let attrs: BTreeSet<&str> = c.attributes.iter().map(|a| a.name.as_str()).collect();
            let states: BTreeSet<&str> = n.states.iter().map(String::as_str).collect();
            if attrs != states || attrs.len() != n.states.len() {
                return Err(mismatch(
                    class,
                    format!("attributes {attrs:?} differ from states of {node:?} {states:?}"),
                ));
            }
            if Some(node.as_str()) == net.objective() {
                return Err(mismatch(class, "bound to the objective node".into()));
            }
        }
        for (class, state) in &worst_case {
            if !bindings.contains_key(class) {
                return Err(mismatch(class, "worst case declared for an unbound class".into()));
            }
            if odd.class(class).and_then(|c| c.attribute(state)).is_none() {
                return Err(mismatch(class, format!("worst case {state:?} is not an attribute")));
            }
        }
        acp.check(&net)?;
        Ok(Self {
            odd,
            net,
            bindings,
            acp,
            worst_case,
        })
    }

    pub fn odd(&self) -> &OddSpec {
        &self.odd
    }

    pub fn net(&self) -> &BayesNet {
        &self.net
    }

    pub fn bindings(&self) -> &BTreeMap<String, String> {
        &self.bindings
    }

    pub fn acp(&self) -> &AcpBinding {
        &self.acp
    }

    pub fn worst_case(&self) -> &BTreeMap<String, String> {
        &self.worst_case
    }

    /// States of the objective node, in network order.
    pub fn objective_states(&self) -> &[String] {
        &self.net.node(&self.acp.objective).expect("checked objective").states
    }
}

fn read(path: &Path) -> Result<String, MonitorError> {
    std::fs::read_to_string(path).map_err(|e| MonitorError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Load a bundle manifest and the ODD and network files it names.
pub fn load_bundle(manifest: &Path) -> Result<ModelBundle, MonitorError> {
    let text = read(manifest)?;
    let m: BundleManifest = doc::from_json(&text).map_err(|source| MonitorError::Manifest {
        path: manifest.to_path_buf(),
        source,
    })?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let odd_path = base.join(&m.odd);
    let odd = parse_odd_spec(&read(&odd_path)?).map_err(|source| MonitorError::Odd {
        path: odd_path,
        source,
    })?;
    let bn_path = base.join(&m.bn);
    let net = parse_bn(&read(&bn_path)?).map_err(|source| MonitorError::Bn { path: bn_path, source })?;
    ModelBundle::new(odd, net, m.bindings, m.acp, m.worst_case)
}

/// Confidence at one tick. A tick whose evidence has zero probability is
/// reported as degenerate, with no posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceReport {
    #[serde(rename = "t")]
    pub time: f64,
    pub evidence: EvidenceSet,
    pub posterior: Option<Posterior>,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub in_odd: bool,
    /// Classes whose reading did not become evidence.
    pub dropped_readings: Vec<String>,
    /// Out-of-ODD classes replaced by their worst state.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub substituted: Vec<String>,
    #[serde(default)]
    pub degenerate: bool,
}

/// Evaluate one observation. Pure in `(bundle, obs, policy)`.
pub fn step(bundle: &ModelBundle, obs: &Observation, policy: OodPolicy) -> ConfidenceReport {
    let interp = interpret(&bundle.odd, obs);
    let mut evidence = EvidenceSet::new();
    let mut dropped = Vec::new();
    let mut substituted = Vec::new();
    for (class, d) in &interp.states {
        let Some(node) = bundle.bindings.get(class) else {
            if *d == Discretized::OutOfOdd {
                dropped.push(class.clone());
            }
            continue;
        };
        match d {
            Discretized::State(s) => evidence.insert(node.clone(), s.clone()),
            Discretized::OutOfOdd => match (policy, bundle.worst_case.get(class)) {
                (OodPolicy::WorstCase, Some(worst)) => {
                    evidence.insert(node.clone(), worst.clone());
                    substituted.push(class.clone());
                }
                _ => dropped.push(class.clone()),
            },
        }
    }
    dropped.extend(interp.errors.keys().cloned());
    dropped.sort();
    let in_odd = interp.errors.is_empty() && interp.out_of_odd().next().is_none();
    let (posterior, mean, variance, degenerate) = match bundle.acp.evaluate(&bundle.net, &evidence) {
        Ok(est) => (Some(est.posterior), Some(est.mean), Some(est.variance), false),
        Err(_) => (None, None, None, true),
    };
    ConfidenceReport {
        time: obs.time,
        evidence,
        posterior,
        mean,
        variance,
        in_odd,
        dropped_readings: dropped,
        substituted,
        degenerate,
    }
}

/// Streaming front end: checks timestamp order and steps each observation.
#[derive(Debug)]
pub struct Monitor<'a> {
    bundle: &'a ModelBundle,
    options: MonitorOptions,
    index: usize,
    last: Option<f64>,
    warnings: Vec<MonitorError>,
}

impl<'a> Monitor<'a> {
    pub fn new(bundle: &'a ModelBundle, options: MonitorOptions) -> Self {
        Self {
            bundle,
            options,
            index: 0,
            last: None,
            warnings: Vec::new(),
        }
    }

    pub fn push(&mut self, obs: &Observation) -> Result<ConfidenceReport, MonitorError> {
        self.check_order(obs.time)?;
        Ok(step(self.bundle, obs, self.options.ood))
    }

    /// Out-of-order warnings collected under [`OrderPolicy::Warn`].
    pub fn take_warnings(&mut self) -> Vec<MonitorError> {
        std::mem::take(&mut self.warnings)
    }

    fn check_order(&mut self, time: f64) -> Result<(), MonitorError> {
        let index = self.index;
        self.index += 1;
        if let Some(previous) = self.last {
            if time < previous {
                let err = MonitorError::OutOfOrderTimestamp { index, previous, time };
                match self.options.order {
                    OrderPolicy::Reject => return Err(err),
                    OrderPolicy::Warn => self.warnings.push(err),
                }
            }
        }
        self.last = Some(self.last.map_or(time, |p| p.max(time)));
        Ok(())
    }
}

/// Reports for a whole stream, one per observation, in order.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub reports: Vec<ConfidenceReport>,
    pub warnings: Vec<MonitorError>,
}

/// Sequential run over a finite stream.
pub fn run(bundle: &ModelBundle, stream: &[Observation], options: MonitorOptions) -> Result<RunOutput, MonitorError> {
    let mut monitor = Monitor::new(bundle, options);
    let reports = stream.iter().map(|o| monitor.push(o)).collect::<Result<_, _>>()?;
    Ok(RunOutput {
        reports,
        warnings: monitor.take_warnings(),
    })
}

/// Same contract as [`run`], with ticks evaluated in parallel.
pub fn run_batch(
    bundle: &ModelBundle,
    stream: &[Observation],
    options: MonitorOptions,
) -> Result<RunOutput, MonitorError> {
    let mut monitor = Monitor::new(bundle, options);
    for obs in stream {
        monitor.check_order(obs.time)?;
    }
    let reports = stream.par_iter().map(|o| step(bundle, o, options.ood)).collect();
    Ok(RunOutput {
        reports,
        warnings: monitor.take_warnings(),
    })
}

/// Parse one line of an observation stream; `line` is 1-based.
pub fn parse_observation(text: &str, line: usize) -> Result<Observation, MonitorError> {
    let obs: Observation = serde_json::from_str(text).map_err(|e| MonitorError::BadObservation {
        line,
        message: e.to_string(),
    })?;
    let finite = obs.time.is_finite() && obs.x.is_finite() && obs.y.is_finite();
    if !finite || obs.readings.values().any(|v| !v.is_finite()) {
        return Err(MonitorError::BadObservation {
            line,
            message: "values must be finite".into(),
        });
    }
    Ok(obs)
}

/// One JSON object per line, no trailing newline.
pub fn report_json_line(report: &ConfidenceReport) -> String {
    serde_json::to_string(report).expect("reports always serialize")
}

/// Column names for [`report_csv_row`].
pub fn report_csv_header(bundle: &ModelBundle) -> String {
    let mut out = String::from("t,in_odd,degenerate,mean,variance");
    for s in bundle.objective_states() {
        let _ = write!(out, ",P({}={})", bundle.acp.objective, s);
    }
    out.push_str(",evidence,dropped_readings");
    out
}

/// Fixed column order: time, flags, mean, variance, one probability per
/// objective state, then `node=state` evidence and dropped classes, each
/// `;`-separated. Missing numbers are empty fields.
pub fn report_csv_row(bundle: &ModelBundle, report: &ConfidenceReport) -> String {
    let num = |v: Option<f64>| v.map(|x| format!("{x:.9}")).unwrap_or_default();
    let mut out = format!(
        "{},{},{},{},{}",
        report.time,
        report.in_odd,
        report.degenerate,
        num(report.mean),
        num(report.variance)
    );
    for s in bundle.objective_states() {
        out.push(',');
        out.push_str(&num(report.posterior.as_ref().and_then(|p| p.prob(s))));
    }
    let evidence: Vec<String> = report.evidence.iter().map(|(n, s)| format!("{n}={s}")).collect();
    let _ = write!(out, ",{},{}", evidence.join(";"), report.dropped_readings.join(";"));
    out
}
