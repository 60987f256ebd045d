//! Assurance confidence networks and the metrics that feed them.
//!
//! Three stacked templates quantify data appropriateness (objective
//! `DataComp`), model robustness (`ModelUnc`) and testing adequacy
//! (`TestUnc`). An [`AcpBinding`] ties a template objective to a solution in
//! the safety argument and turns its posterior into a mean and variance.

mod metrics;
mod odd_net;
mod templates;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bayes::{mean_variance, posterior, BayesNet, BnError, EvidenceSet, Posterior};
use crate::doc::DocError;

pub use metrics::{
    metric_to_state, model_uncertainty_from_samples, scenario_coverage, test_distance, Condition,
    CoverageResult, DistanceMetric, parse_state_records, Sample, ScenarioSpec,
};
pub use odd_net::{attach_odd_parents, odd_node, OddLink};
pub use templates::{
    build_data_appropriateness_bn, build_model_robustness_bn, build_template,
    build_testing_adequacy_bn, parse_template_config, NodeProfile, TemplateConfig, TemplateDoc,
    TemplateKind, FEATURE_AGGREGATE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfidenceError {
    #[error("invalid template config: {0}")]
    InvalidConfig(String),
    #[error("scenario {0:?} has no conditions")]
    EmptyScenario(String),
    #[error("unknown ODD class {0:?}")]
    UnknownClass(String),
    #[error("class {class:?} has no state {state:?}")]
    UnknownState { class: String, state: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("table line {line}: {message}")]
    Table { line: u64, message: String },
    #[error("bad thresholds: {0}")]
    BadThresholds(String),
    #[error("metric value is not a number")]
    NonFiniteMetric,
    #[error("{metric:?} does not apply to these inputs")]
    KindMismatch { metric: DistanceMetric },
    #[error("inputs have lengths {left} and {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample {index} has dimension {found}, expected {expected}")]
    DimMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("binding objective {binding:?} is not the network objective {net:?}")]
    ObjectiveMismatch { binding: String, net: Option<String> },
    #[error(transparent)]
    Bn(#[from] BnError),
    #[error("template config, {0}")]
    Document(#[from] DocError),
}

/// Ties a network objective to a solution node of the safety argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcpBinding {
    pub solution_id: String,
    pub objective: String,
    pub state_values: BTreeMap<String, f64>,
}

/// Confidence estimate at one assurance point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcpEstimate {
    pub solution_id: String,
    pub posterior: Posterior,
    pub mean: f64,
    pub variance: f64,
}

impl AcpBinding {
    /// Bind to `net`'s objective; every objective state needs a value.
    pub fn new(
        solution_id: impl Into<String>,
        net: &BayesNet,
        state_values: BTreeMap<String, f64>,
    ) -> Result<Self, ConfidenceError> {
        let objective = net.objective().ok_or(BnError::NoObjective)?.to_string();
        let binding = Self {
            solution_id: solution_id.into(),
            objective,
            state_values,
        };
        binding.check(net)?;
        Ok(binding)
    }

    pub fn check(&self, net: &BayesNet) -> Result<(), ConfidenceError> {
        if net.objective() != Some(self.objective.as_str()) {
            return Err(ConfidenceError::ObjectiveMismatch {
                binding: self.objective.clone(),
                net: net.objective().map(str::to_string),
            });
        }
        let node = net.node(&self.objective).expect("objective is a node");
        for state in &node.states {
            match self.state_values.get(state) {
                None => return Err(BnError::MissingStateValue(state.clone()).into()),
                Some(v) if !(0.0..=1.0).contains(v) => {
                    return Err(BnError::InvalidStateValue {
                        state: state.clone(),
                        value: *v,
                    }
                    .into())
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, net: &BayesNet, evidence: &EvidenceSet) -> Result<AcpEstimate, ConfidenceError> {
        self.check(net)?;
        let post = posterior(net, &self.objective, evidence)?;
        let (mean, variance) = mean_variance(&post, &self.state_values)?;
        Ok(AcpEstimate {
            solution_id: self.solution_id.clone(),
            posterior: post,
            mean,
            variance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binding_checks_objective_and_values() {
        let cfg = TemplateConfig::default();
        let net = build_data_appropriateness_bn(&cfg).unwrap();
        let values = cfg.default_state_values("DataComp").unwrap();
        let acp = AcpBinding::new("Sn8.1", &net, values.clone()).unwrap();
        let est = acp.evaluate(&net, &EvidenceSet::new()).unwrap();
        assert!(est.variance >= 0.0 && (0.0..=1.0).contains(&est.mean));

        let other = build_model_robustness_bn(&cfg).unwrap();
        assert!(matches!(acp.check(&other), Err(ConfidenceError::ObjectiveMismatch { .. })));

        let mut partial = values;
        partial.pop_first();
        assert!(AcpBinding::new("Sn8.1", &net, partial).is_err());
    }
}
