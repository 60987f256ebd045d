//! The three stacked assurance network templates.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{metric_to_state, AcpBinding, ConfidenceError};
use crate::bayes::{BayesNet, BnNode, Cpt, NOT_OCCURS, OCCURS};
use crate::doc;

/// Aggregate node collecting two or more feature nodes.
pub const FEATURE_AGGREGATE: &str = "Feat_i";

const OBJ_FUN: &str = "ObjFun";
const ODD_FC: &str = "OddFC";
const ODD_SUFF: &str = "OddSuff";
const DATA_METRIC: &str = "DataMetric";
const DATA_COMP: &str = "DataComp";
const BN_MODEL_UNC: &str = "BnModelUnc";
const MODEL_UNC: &str = "ModelUnc";
const TEST_DIST: &str = "TestDist";
const TEST_UNC: &str = "TestUnc";

const FIXTURE_PRESET: &str = "fixture";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    DataAppropriateness,
    ModelRobustness,
    TestingAdequacy,
}

impl TemplateKind {
    pub fn objective(self) -> &'static str {
        match self {
            TemplateKind::DataAppropriateness => DATA_COMP,
            TemplateKind::ModelRobustness => MODEL_UNC,
            TemplateKind::TestingAdequacy => TEST_UNC,
        }
    }

    /// Solution node the objective backs by default.
    pub fn default_solution(self) -> &'static str {
        match self {
            TemplateKind::DataAppropriateness => "Sn8.1",
            TemplateKind::ModelRobustness => "Sn9.1",
            TemplateKind::TestingAdequacy => "Sn11.1",
        }
    }
}

/// States of a template node and the quality score of each state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeProfile {
    pub states: Vec<String>,
    pub scores: Vec<f64>,
}

impl NodeProfile {
    pub fn new(states: &[&str], scores: &[f64]) -> Self {
        Self {
            states: states.iter().map(|s| s.to_string()).collect(),
            scores: scores.to_vec(),
        }
    }

    fn binary(good: &str, bad: &str) -> Self {
        Self::new(&[good, bad], &[1.0, 0.0])
    }

    fn check(&self, node: &str) -> Result<(), ConfidenceError> {
        if self.states.len() < 2 || self.scores.len() != self.states.len() {
            return Err(invalid(format!(
                "node {node:?} needs at least two states and one score per state"
            )));
        }
        if self.scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(invalid(format!("node {node:?} has a score outside [0, 1]")));
        }
        Ok(())
    }

    fn best(&self) -> usize {
        let mut best = 0;
        for (i, s) in self.scores.iter().enumerate() {
            if *s > self.scores[best] {
                best = i;
            }
        }
        best
    }
}

fn invalid(msg: impl Into<String>) -> ConfidenceError {
    ConfidenceError::InvalidConfig(msg.into())
}

/// Inputs shared by all three templates.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateConfig {
    /// Feature nodes feeding the objective function.
    pub features: Vec<String>,
    /// Profiles of the fixed template nodes, plus optional feature overrides.
    pub nodes: BTreeMap<String, NodeProfile>,
    pub preset: String,
    /// Tables replacing preset CPTs, matched by node.
    pub cpts: Vec<Cpt>,
    /// Scenario coverage used to set the `DataMetric` prior.
    pub coverage: Option<f64>,
    /// Cut points binning coverage into `DataMetric` states.
    pub thresholds: Vec<f64>,
    /// Hazard network whose objective becomes an extra parent of `OddSuff`.
    pub hazard: Option<BayesNet>,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        let nodes = [
            (OBJ_FUN, NodeProfile::binary("met", "not_met")),
            (ODD_FC, NodeProfile::binary("covered", "not_covered")),
            (ODD_SUFF, NodeProfile::binary("sufficient", "insufficient")),
            (DATA_METRIC, NodeProfile::new(&["Low", "Medium", "High"], &[0.0, 0.5, 1.0])),
            (DATA_COMP, NodeProfile::binary("complete", "incomplete")),
            (BN_MODEL_UNC, NodeProfile::binary("low", "high")),
            (MODEL_UNC, NodeProfile::binary("low", "high")),
            (TEST_DIST, NodeProfile::binary("low", "high")),
            (TEST_UNC, NodeProfile::binary("low", "high")),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self {
            features: vec!["Feat_1".into(), "Feat_2".into()],
            nodes,
            preset: FIXTURE_PRESET.into(),
            cpts: Vec::new(),
            coverage: None,
            thresholds: vec![0.3, 0.7],
            hazard: None,
        }
    }
}

impl TemplateConfig {
    /// State scores of `node` as ACP state values.
    pub fn default_state_values(&self, node: &str) -> Option<BTreeMap<String, f64>> {
        self.profile(node)
            .map(|p| p.states.iter().cloned().zip(p.scores.iter().copied()).collect())
    }

    fn profile(&self, node: &str) -> Option<NodeProfile> {
        if let Some(p) = self.nodes.get(node) {
            return Some(p.clone());
        }
        if self.features.iter().any(|f| f == node) || node == FEATURE_AGGREGATE {
            return Some(NodeProfile::binary("present", "absent"));
        }
        let hazard = self.hazard.as_ref()?;
        let n = hazard.node(node)?;
        (n.states == [OCCURS, NOT_OCCURS]).then(|| NodeProfile::new(&[OCCURS, NOT_OCCURS], &[0.0, 1.0]))
    }
}

pub fn build_data_appropriateness_bn(config: &TemplateConfig) -> Result<BayesNet, ConfidenceError> {
    build_template(TemplateKind::DataAppropriateness, config)
}

pub fn build_model_robustness_bn(config: &TemplateConfig) -> Result<BayesNet, ConfidenceError> {
    build_template(TemplateKind::ModelRobustness, config)
}

pub fn build_testing_adequacy_bn(config: &TemplateConfig) -> Result<BayesNet, ConfidenceError> {
    build_template(TemplateKind::TestingAdequacy, config)
}

/// Build the template of `kind`, including every lower layer.
pub fn build_template(kind: TemplateKind, config: &TemplateConfig) -> Result<BayesNet, ConfidenceError> {
    if config.preset != FIXTURE_PRESET {
        return Err(invalid(format!("unknown CPT preset {:?}", config.preset)));
    }
    if config.features.is_empty() {
        return Err(invalid("at least one feature node is required"));
    }
    let fixed = [
        FEATURE_AGGREGATE,
        OBJ_FUN,
        ODD_FC,
        ODD_SUFF,
        DATA_METRIC,
        DATA_COMP,
        BN_MODEL_UNC,
        MODEL_UNC,
        TEST_DIST,
        TEST_UNC,
    ];
    let mut seen = BTreeSet::new();
    for f in &config.features {
        if fixed.contains(&f.as_str()) || !seen.insert(f) {
            return Err(invalid(format!("feature name {f:?} is reserved or repeated")));
        }
    }

    let mut layout: Vec<(String, Vec<String>)> = Vec::new();
    let mut push = |node: &str, parents: &[&str]| {
        layout.push((node.to_string(), parents.iter().map(|p| p.to_string()).collect()));
    };
    for f in &config.features {
        push(f, &[]);
    }
    if config.features.len() >= 2 {
        let feats: Vec<&str> = config.features.iter().map(String::as_str).collect();
        push(FEATURE_AGGREGATE, &feats);
        push(OBJ_FUN, &[FEATURE_AGGREGATE]);
    } else {
        push(OBJ_FUN, &[config.features[0].as_str()]);
    }
    push(ODD_FC, &[]);
    let hazard_top = match &config.hazard {
        None => None,
        Some(h) => Some(
            h.objective()
                .ok_or_else(|| invalid("hazard network has no objective"))?
                .to_string(),
        ),
    };
    match &hazard_top {
        Some(top) => push(ODD_SUFF, &[OBJ_FUN, ODD_FC, top.as_str()]),
        None => push(ODD_SUFF, &[OBJ_FUN, ODD_FC]),
    }
    push(DATA_METRIC, &[]);
    push(DATA_COMP, &[ODD_SUFF, DATA_METRIC]);
    if kind >= TemplateKind::ModelRobustness {
        push(BN_MODEL_UNC, &[]);
        push(MODEL_UNC, &[DATA_COMP, BN_MODEL_UNC]);
    }
    if kind >= TemplateKind::TestingAdequacy {
        push(TEST_DIST, &[]);
        push(TEST_UNC, &[MODEL_UNC, TEST_DIST]);
    }

    let lookup = |node: &str| -> Result<NodeProfile, ConfidenceError> {
        let p = config
            .profile(node)
            .ok_or_else(|| invalid(format!("missing mandatory node {node:?}")))?;
        p.check(node)?;
        Ok(p)
    };

    let mut nodes = Vec::new();
    let mut cpts = Vec::new();
    for (node, parents) in &layout {
        let profile = lookup(node)?;
        let rows = if !parents.is_empty() {
            let parent_profiles = parents.iter().map(|p| lookup(p)).collect::<Result<Vec<_>, _>>()?;
            fixture_rows(&profile, &parent_profiles)
        } else if node == DATA_METRIC && config.coverage.is_some() {
            vec![coverage_prior(&profile, config)?]
        } else {
            vec![vec![1.0 / profile.states.len() as f64; profile.states.len()]]
        };
        nodes.push(BnNode {
            id: node.clone(),
            states: profile.states,
        });
        cpts.push(Cpt {
            node: node.clone(),
            parent_order: parents.clone(),
            rows,
        });
    }

    if let Some(h) = &config.hazard {
        for n in h.nodes() {
            if layout.iter().any(|(id, _)| *id == n.id) {
                return Err(invalid(format!("hazard node {:?} clashes with a template node", n.id)));
            }
            nodes.push(n.clone());
        }
        cpts.extend(h.cpts().iter().cloned());
        let top = hazard_top.as_deref().expect("hazard has an objective");
        let stated = &nodes.iter().find(|n| n.id == top).expect("top is a node").states;
        if lookup(top)?.states != *stated {
            return Err(invalid(format!("profile of {top:?} does not match its states")));
        }
    }

    for over in &config.cpts {
        let slot = cpts
            .iter_mut()
            .find(|c| c.node == over.node)
            .ok_or_else(|| invalid(format!("CPT override for unknown node {:?}", over.node)))?;
        *slot = over.clone();
    }

    Ok(BayesNet::from_parts(nodes, None, cpts, Some(kind.objective().to_string()))?)
}

/// Fixture table: the best state gets `0.05 + 0.9 * q` where `q` is the
/// mean score of the parent states; the rest share the remaining mass.
fn fixture_rows(profile: &NodeProfile, parents: &[NodeProfile]) -> Vec<Vec<f64>> {
    let cards: Vec<usize> = parents.iter().map(|p| p.states.len()).collect();
    let size: usize = cards.iter().product();
    let n = profile.states.len();
    let best = profile.best();
    let mut od = vec![0usize; parents.len()];
    let mut rows = Vec::with_capacity(size);
    for _ in 0..size {
        let q = od
            .iter()
            .zip(parents)
            .map(|(&s, p)| p.scores[s])
            .sum::<f64>()
            / parents.len() as f64;
        let p_best = 0.05 + 0.9 * q;
        let rest = (1.0 - p_best) / (n - 1) as f64;
        rows.push((0..n).map(|i| if i == best { p_best } else { rest }).collect());
        for k in (0..od.len()).rev() {
            od[k] += 1;
            if od[k] < cards[k] {
                break;
            }
            od[k] = 0;
        }
    }
    rows
}

/// Prior putting 0.8 on the coverage bin and spreading the rest evenly.
fn coverage_prior(profile: &NodeProfile, config: &TemplateConfig) -> Result<Vec<f64>, ConfidenceError> {
    let m = config.coverage.expect("checked by caller");
    if !(0.0..=1.0).contains(&m) {
        return Err(invalid(format!("coverage {m} is outside [0, 1]")));
    }
    let state = metric_to_state(m, &config.thresholds, &profile.states)?;
    let n = profile.states.len();
    let rest = 0.2 / (n - 1) as f64;
    Ok(profile
        .states
        .iter()
        .map(|s| if *s == state { 0.8 } else { rest })
        .collect())
}

/// Template config document, merged over [`TemplateConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateDoc {
    pub template: TemplateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub nodes: BTreeMap<String, NodeProfile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cpts: Vec<Cpt>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acp: Option<AcpDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcpDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_values: Option<BTreeMap<String, f64>>,
}

impl TemplateDoc {
    pub fn config(&self) -> TemplateConfig {
        let mut cfg = TemplateConfig::default();
        if let Some(f) = &self.features {
            cfg.features = f.clone();
        }
        if let Some(p) = &self.preset {
            cfg.preset = p.clone();
        }
        cfg.nodes.extend(self.nodes.clone());
        cfg.cpts = self.cpts.clone();
        cfg.coverage = self.coverage;
        if let Some(t) = &self.thresholds {
            cfg.thresholds = t.clone();
        }
        cfg
    }

    /// Build the network and its assurance binding.
    pub fn build(&self) -> Result<(BayesNet, AcpBinding), ConfidenceError> {
        let cfg = self.config();
        let net = build_template(self.template, &cfg)?;
        let acp = self.acp.clone().unwrap_or(AcpDoc {
            solution_id: None,
            state_values: None,
        });
        let objective = self.template.objective();
        let values = match acp.state_values {
            Some(v) => v,
            None => cfg
                .default_state_values(objective)
                .ok_or_else(|| invalid(format!("missing mandatory node {objective:?}")))?,
        };
        let solution = acp
            .solution_id
            .unwrap_or_else(|| self.template.default_solution().to_string());
        let binding = AcpBinding::new(solution, &net, values)?;
        Ok((net, binding))
    }

    pub fn to_json(&self) -> String {
        doc::to_json(self)
    }
}

pub fn parse_template_config(document: &str) -> Result<TemplateDoc, ConfidenceError> {
    Ok(doc::from_json(document)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::posterior;
    use crate::bayes::EvidenceSet;

    fn parents(net: &BayesNet, node: &str) -> BTreeSet<String> {
        net.parents(node).unwrap().iter().cloned().collect()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn data_appropriateness_structure() {
        let net = build_data_appropriateness_bn(&TemplateConfig::default()).unwrap();
        assert_eq!(net.len(), 8);
        assert_eq!(net.objective(), Some("DataComp"));
        assert_eq!(parents(&net, "DataComp"), set(&["OddSuff", "DataMetric"]));
        assert_eq!(parents(&net, "OddSuff"), set(&["ObjFun", "OddFC"]));
        assert_eq!(parents(&net, "ObjFun"), set(&["Feat_i"]));
        assert_eq!(parents(&net, "Feat_i"), set(&["Feat_1", "Feat_2"]));
    }

    #[test]
    fn single_feature_feeds_objective_function() {
        let cfg = TemplateConfig {
            features: vec!["Feat_1".into()],
            ..TemplateConfig::default()
        };
        let net = build_data_appropriateness_bn(&cfg).unwrap();
        assert_eq!(net.len(), 6);
        assert!(net.node(FEATURE_AGGREGATE).is_none());
        assert_eq!(parents(&net, "ObjFun"), set(&["Feat_1"]));
    }

    #[test]
    fn upper_templates_stack() {
        let cfg = TemplateConfig::default();
        let mr = build_model_robustness_bn(&cfg).unwrap();
        assert_eq!(parents(&mr, "ModelUnc"), set(&["DataComp", "BnModelUnc"]));
        assert!(mr.children("ModelUnc").is_empty());
        let ta = build_testing_adequacy_bn(&cfg).unwrap();
        assert_eq!(parents(&ta, "TestUnc"), set(&["ModelUnc", "TestDist"]));
        assert_eq!(ta.objective(), Some("TestUnc"));
    }

    #[test]
    fn missing_mandatory_node() {
        let mut cfg = TemplateConfig::default();
        cfg.nodes.remove("BnModelUnc");
        assert!(build_data_appropriateness_bn(&cfg).is_ok());
        assert!(matches!(
            build_model_robustness_bn(&cfg),
            Err(ConfidenceError::InvalidConfig(_))
        ));
    }

    #[test]
    fn coverage_changes_tables_not_structure() {
        let train = TemplateConfig {
            coverage: Some(0.9),
            ..TemplateConfig::default()
        };
        let test = TemplateConfig {
            coverage: Some(0.1),
            ..TemplateConfig::default()
        };
        let a = build_testing_adequacy_bn(&train).unwrap();
        let b = build_testing_adequacy_bn(&test).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_ne!(a.cpts(), b.cpts());
        let pa = posterior(&a, "TestUnc", &EvidenceSet::new()).unwrap();
        let pb = posterior(&b, "TestUnc", &EvidenceSet::new()).unwrap();
        assert!(pa.prob("low").unwrap() > pb.prob("low").unwrap());
    }

    #[test]
    fn config_document() {
        let doc = parse_template_config(
            r#"{"template": "model_robustness", "coverage": 0.5,
                "acp": {"solution_id": "Sn9.2"}}"#,
        )
        .unwrap();
        let (net, acp) = doc.build().unwrap();
        assert_eq!(net.objective(), Some("ModelUnc"));
        assert_eq!(acp.solution_id, "Sn9.2");
        assert_eq!(acp.state_values["low"], 1.0);
        assert_eq!(parse_template_config(&doc.to_json()).unwrap(), doc);
        assert!(matches!(
            parse_template_config(r#"{"template": "nope"}"#),
            Err(ConfidenceError::Document(_))
        ));
    }

    #[test]
    fn unknown_preset_and_reserved_features() {
        let bad_preset = TemplateConfig {
            preset: "expert".into(),
            ..TemplateConfig::default()
        };
        assert!(build_data_appropriateness_bn(&bad_preset).is_err());
        let clash = TemplateConfig {
            features: vec!["ObjFun".into()],
            ..TemplateConfig::default()
        };
        assert!(build_data_appropriateness_bn(&clash).is_err());
    }
}
