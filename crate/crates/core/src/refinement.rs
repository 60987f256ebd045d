//! ODD boundary refinement from labeled traces.
//!
//! A binary Gini decision tree separates in-ODD (`Yes`) from out-of-ODD
//! (`No`) trace records. Its leaves become `IF ... THEN Yes|No` rules, and
//! the `Yes` rules are projected per feature onto proposed attribute
//! intervals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::odd::{Interval, OddSpec};

pub const DEFAULT_MAX_DEPTH: usize = 6;
pub const DEFAULT_MIN_LEAF: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefineError {
    #[error("need at least {needed} records, got {found}")]
    TooFewRecords { needed: usize, found: usize },
    #[error("record {index} has a different feature set")]
    InconsistentFeatures { index: usize },
    #[error("record {index}: feature {feature:?} is not finite")]
    NonFiniteFeature { index: usize, feature: String },
    #[error("missing feature {0:?}")]
    MissingFeature(String),
    #[error("rule feature {0:?} is not an ODD class")]
    UnknownFeature(String),
    #[error("rule {0} has an empty region")]
    EmptyRegion(usize),
    #[error("min_leaf must be at least 1")]
    BadParameters,
    #[error("trace line {line}: {message}")]
    Trace { line: u64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Yes,
    No,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Yes => "Yes",
            Label::No => "No",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub features: BTreeMap<String, f64>,
    pub label: Label,
}

impl TraceRecord {
    pub fn new(features: &[(&str, f64)], label: Label) -> Self {
        Self {
            features: features.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DecisionTree {
    Leaf {
        label: Label,
        yes: usize,
        no: usize,
    },
    /// Values `<= threshold` go left.
    Split {
        feature: String,
        threshold: f64,
        left: Box<DecisionTree>,
        right: Box<DecisionTree>,
    },
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 0,
            DecisionTree::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            DecisionTree::Leaf { .. } => 1,
            DecisionTree::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }

    /// (feature, threshold) of every split, pre-order.
    pub fn splits(&self) -> Vec<(&str, f64)> {
        match self {
            DecisionTree::Leaf { .. } => Vec::new(),
            DecisionTree::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let mut out = vec![(feature.as_str(), *threshold)];
                out.extend(left.splits());
                out.extend(right.splits());
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeFit {
    pub tree: DecisionTree,
    /// The root was impure but no feature admitted a valid split.
    pub constant_features: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: DEFAULT_MAX_DEPTH,
            min_leaf: DEFAULT_MIN_LEAF,
        }
    }
}

/// Greedy Gini tree. Records are sorted canonically first, so the result
/// does not depend on input order.
pub fn fit_tree(records: &[TraceRecord], params: TreeParams) -> Result<TreeFit, RefineError> {
    if params.min_leaf == 0 {
        return Err(RefineError::BadParameters);
    }
    let needed = 2 * params.min_leaf;
    if records.len() < needed {
        return Err(RefineError::TooFewRecords {
            needed,
            found: records.len(),
        });
    }
    let names: Vec<String> = records[0].features.keys().cloned().collect();
    for (index, r) in records.iter().enumerate() {
        if !r.features.keys().eq(names.iter()) {
            return Err(RefineError::InconsistentFeatures { index });
        }
        if let Some((feature, _)) = r.features.iter().find(|(_, v)| !v.is_finite()) {
            return Err(RefineError::NonFiniteFeature {
                index,
                feature: feature.clone(),
            });
        }
    }

    let mut rows: Vec<(Vec<f64>, Label)> = records
        .iter()
        .map(|r| (r.features.values().copied().collect(), r.label))
        .collect();
    rows.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });

    let fitter = Fitter {
        rows: &rows,
        names: &names,
        params,
    };
    let all: Vec<usize> = (0..rows.len()).collect();
    let (tree, stuck) = fitter.grow(&all, 0);
    Ok(TreeFit {
        constant_features: stuck,
        tree,
    })
}

struct Fitter<'a> {
    rows: &'a [(Vec<f64>, Label)],
    names: &'a [String],
    params: TreeParams,
}

/// Sum of squared class counts over size for each side: the quantity a
/// Gini split maximizes, kept as an exact fraction `num / den`.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn side(yes: usize, no: usize) -> Self {
        let (y, n) = (yes as u128, no as u128);
        Self {
            num: y * y + n * n,
            den: y + n,
        }
    }

    fn plus(self, other: Score) -> Self {
        Self {
            num: self.num * other.den + other.num * self.den,
            den: self.den * other.den,
        }
    }

    fn gt(self, other: Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    score: Score,
}

impl Fitter<'_> {
    /// Returns the subtree and whether an impure root found no split.
    fn grow(&self, idx: &[usize], depth: usize) -> (DecisionTree, bool) {
        let yes = idx.iter().filter(|&&i| self.rows[i].1 == Label::Yes).count();
        let no = idx.len() - yes;
        let leaf = || DecisionTree::Leaf {
            // Ties resolve to the conservative outcome.
            label: if yes > no { Label::Yes } else { Label::No },
            yes,
            no,
        };
        if yes == 0 || no == 0 || depth >= self.params.max_depth {
            return (leaf(), false);
        }
        let parent = Score::side(yes, no);
        let best = (0..self.names.len())
            .into_par_iter()
            .filter_map(|f| self.best_for(idx, f))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(None::<Candidate>, |acc, c| match acc {
                Some(a) if !c.score.gt(a.score) => Some(a),
                _ => Some(c),
            });
        let Some(best) = best.filter(|c| c.score.gt(parent)) else {
            return (leaf(), depth == 0);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.rows[i].0[best.feature] <= best.threshold);
        let (left, _) = self.grow(&l, depth + 1);
        let (right, _) = self.grow(&r, depth + 1);
        (
            DecisionTree::Split {
                feature: self.names[best.feature].clone(),
                threshold: best.threshold,
                left: Box::new(left),
                right: Box::new(right),
            },
            false,
        )
    }

    /// Best midpoint split on one feature; ties keep the lower threshold.
    fn best_for(&self, idx: &[usize], f: usize) -> Option<Candidate> {
        let mut sorted: Vec<(f64, bool)> = idx
            .iter()
            .map(|&i| (self.rows[i].0[f], self.rows[i].1 == Label::Yes))
            .collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total_yes = sorted.iter().filter(|s| s.1).count();
        let n = sorted.len();
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Candidate> = None;
        let mut left_yes = 0;
        for k in 1..n {
            left_yes += usize::from(sorted[k - 1].1);
            let (a, b) = (sorted[k - 1].0, sorted[k].0);
            if a == b || k < min_leaf || n - k < min_leaf {
                continue;
            }
            let score = Score::side(left_yes, k - left_yes)
                .plus(Score::side(total_yes - left_yes, n - k - (total_yes - left_yes)));
            if best.as_ref().is_none_or(|c| score.gt(c.score)) {
                let mid = a + (b - a) / 2.0;
                best = Some(Candidate {
                    feature: f,
                    threshold: if mid < b { mid } else { a },
                    score,
                });
            }
        }
        best
    }
}

/// Leaf label reached by threshold descent.
pub fn predict(tree: &DecisionTree, features: &BTreeMap<String, f64>) -> Result<Label, RefineError> {
    match tree {
        DecisionTree::Leaf { label, .. } => Ok(*label),
        DecisionTree::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            let v = *features
                .get(feature)
                .ok_or_else(|| RefineError::MissingFeature(feature.clone()))?;
            predict(if v <= *threshold { left } else { right }, features)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Op {
    Le,
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conjunct {
    pub feature: String,
    pub op: Op,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conjuncts: Vec<Conjunct>,
    pub outcome: Label,
}

impl Rule {
    pub fn matches(&self, features: &BTreeMap<String, f64>) -> Result<bool, RefineError> {
        for c in &self.conjuncts {
            let v = *features
                .get(&c.feature)
                .ok_or_else(|| RefineError::MissingFeature(c.feature.clone()))?;
            let ok = match c.op {
                Op::Le => v <= c.threshold,
                Op::Gt => v > c.threshold,
            };
            if !ok {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Projection of the rule region onto `feature`, as `]lo, hi]`.
    pub fn projection(&self, feature: &str) -> Result<Interval, crate::odd::OddError> {
        let mut lo: Option<f64> = None;
        let mut hi: Option<f64> = None;
        for c in self.conjuncts.iter().filter(|c| c.feature == feature) {
            match c.op {
                Op::Gt => lo = Some(lo.map_or(c.threshold, |l| l.max(c.threshold))),
                Op::Le => hi = Some(hi.map_or(c.threshold, |h| h.min(c.threshold))),
            }
        }
        Interval::new(lo, false, hi, hi.is_some())
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("IF ")?;
        if self.conjuncts.is_empty() {
            f.write_str("TRUE")?;
        }
        for (i, c) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" AND ")?;
            }
            let op = match c.op {
                Op::Le => "<=",
                Op::Gt => ">",
            };
            write!(f, "{} {} {:.2}", c.feature, op, c.threshold)?;
        }
        write!(f, " THEN {}", self.outcome)
    }
}

/// One rule per leaf, left to right, keeping the tightest bound per
/// feature and direction.
pub fn extract_rules(tree: &DecisionTree) -> Vec<Rule> {
    fn walk(tree: &DecisionTree, path: &mut Vec<Conjunct>, out: &mut Vec<Rule>) {
        match tree {
            DecisionTree::Leaf { label, .. } => out.push(Rule {
                conjuncts: collapse(path),
                outcome: *label,
            }),
            DecisionTree::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                for (op, child) in [(Op::Le, left), (Op::Gt, right)] {
                    path.push(Conjunct {
                        feature: feature.clone(),
                        op,
                        threshold: *threshold,
                    });
                    walk(child, path, out);
                    path.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    walk(tree, &mut Vec::new(), &mut out);
    out
}

fn collapse(path: &[Conjunct]) -> Vec<Conjunct> {
    let mut out: Vec<Conjunct> = Vec::new();
    for c in path {
        match out.iter_mut().find(|o| o.feature == c.feature && o.op == c.op) {
            Some(o) => {
                o.threshold = match c.op {
                    Op::Le => o.threshold.min(c.threshold),
                    Op::Gt => o.threshold.max(c.threshold),
                }
            }
            None => out.push(c.clone()),
        }
    }
    out
}

/// Proposed in-ODD intervals for one ODD class.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryProposal {
    pub class: String,
    pub current: Vec<(String, Interval)>,
    pub proposed: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryReport {
    pub proposals: Vec<BoundaryProposal>,
    /// Full conjunctive regions of the `Yes` rules.
    pub regions: Vec<Rule>,
    /// No rule admits any point: the learned ODD is empty.
    pub exit_everywhere: bool,
}

/// Project the `Yes` rules onto each tested feature and merge the pieces.
/// The ODD is left untouched; the report is advisory.
pub fn refine_boundaries(spec: &OddSpec, rules: &[Rule]) -> Result<BoundaryReport, RefineError> {
    let features: BTreeSet<&str> = rules
        .iter()
        .flat_map(|r| r.conjuncts.iter().map(|c| c.feature.as_str()))
        .collect();
    for f in &features {
        if spec.class(f).is_none() {
            return Err(RefineError::UnknownFeature(f.to_string()));
        }
    }
    let regions: Vec<Rule> = rules.iter().filter(|r| r.outcome == Label::Yes).cloned().collect();
    if regions.is_empty() {
        return Ok(BoundaryReport {
            proposals: Vec::new(),
            regions,
            exit_everywhere: true,
        });
    }
    let mut proposals = Vec::new();
    for f in features {
        let mut pieces = Vec::new();
        for (i, r) in regions.iter().enumerate() {
            pieces.push(r.projection(f).map_err(|_| RefineError::EmptyRegion(i))?);
        }
        let class = spec.class(f).expect("checked above");
        proposals.push(BoundaryProposal {
            class: f.to_string(),
            current: class.attributes.iter().map(|a| (a.name.clone(), a.bounds)).collect(),
            proposed: merge(pieces),
        });
    }
    Ok(BoundaryReport {
        proposals,
        regions,
        exit_everywhere: false,
    })
}

fn merge(mut pieces: Vec<Interval>) -> Vec<Interval> {
    pieces.sort_by(|a, b| {
        let key = |i: &Interval| i.lo().unwrap_or(f64::NEG_INFINITY);
        key(a).total_cmp(&key(b)).then(b.lo_inclusive().cmp(&a.lo_inclusive()))
    });
    let mut out: Vec<Interval> = Vec::new();
    for p in pieces {
        match out.last().and_then(|last| last.union_if_connected(&p)) {
            Some(u) => *out.last_mut().expect("non-empty") = u,
            None => out.push(p),
        }
    }
    out
}

/// Read a delimited trace with a header of feature names and a `label`
/// column holding `Yes` or `No`.
pub fn parse_traces<R: Read>(reader: R) -> Result<Vec<TraceRecord>, RefineError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let trace_err = |line: u64, message: String| RefineError::Trace { line, message };
    let headers = rdr.headers().map_err(|e| trace_err(1, e.to_string()))?.clone();
    let label_col = headers
        .iter()
        .position(|h| h == "label")
        .ok_or_else(|| trace_err(1, "no `label` column".into()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            trace_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut features = BTreeMap::new();
        let mut label = None;
        for (i, (h, v)) in headers.iter().zip(rec.iter()).enumerate() {
            if i == label_col {
                label = Some(match v {
                    "Yes" => Label::Yes,
                    "No" => Label::No,
                    _ => return Err(trace_err(line, format!("label must be Yes or No, got {v:?}"))),
                });
            } else {
                let x: f64 = v
                    .parse()
                    .map_err(|_| trace_err(line, format!("{h}: not a number: {v:?}")))?;
                features.insert(h.to_string(), x);
            }
        }
        out.push(TraceRecord {
            features,
            label: label.expect("label column present"),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(max_depth: usize, min_leaf: usize) -> TreeParams {
        TreeParams { max_depth, min_leaf }
    }

    fn one_feature() -> Vec<TraceRecord> {
        (0..=10)
            .map(|v| {
                let label = if v > 5 { Label::No } else { Label::Yes };
                TraceRecord::new(&[("x", v as f64)], label)
            })
            .collect()
    }

    #[test]
    fn single_split_between_straddling_values() {
        let fit = fit_tree(&one_feature(), params(6, 1)).unwrap();
        assert_eq!(fit.tree.depth(), 1);
        assert_eq!(fit.tree.splits(), vec![("x", 5.5)]);
        let rules: Vec<String> = extract_rules(&fit.tree).iter().map(|r| r.to_string()).collect();
        assert_eq!(rules, vec!["IF x <= 5.50 THEN Yes", "IF x > 5.50 THEN No"]);
    }

    #[test]
    fn pure_root_is_a_single_leaf() {
        let recs: Vec<_> = (0..10).map(|v| TraceRecord::new(&[("x", v as f64)], Label::Yes)).collect();
        let fit = fit_tree(&recs, params(6, 1)).unwrap();
        assert_eq!(fit.tree.leaves(), 1);
        assert!(!fit.constant_features);
        assert_eq!(extract_rules(&fit.tree)[0].to_string(), "IF TRUE THEN Yes");
    }

    #[test]
    fn constant_features_warn() {
        let recs: Vec<_> = (0..10)
            .map(|i| TraceRecord::new(&[("x", 1.0)], if i < 6 { Label::Yes } else { Label::No }))
            .collect();
        let fit = fit_tree(&recs, params(6, 1)).unwrap();
        assert!(fit.constant_features);
        assert_eq!(fit.tree, DecisionTree::Leaf { label: Label::Yes, yes: 6, no: 4 });
    }

    #[test]
    fn too_few_records() {
        assert_eq!(
            fit_tree(&one_feature(), params(6, 20)).unwrap_err(),
            RefineError::TooFewRecords { needed: 40, found: 11 }
        );
    }

    #[test]
    fn threshold_ties_go_left() {
        let fit = fit_tree(&one_feature(), params(6, 1)).unwrap();
        let at = |v: f64| predict(&fit.tree, &[("x".to_string(), v)].into()).unwrap();
        assert_eq!(at(5.5), Label::Yes);
        assert_eq!(at(5.5000001), Label::No);
        assert_eq!(predict(&fit.tree, &BTreeMap::new()), Err(RefineError::MissingFeature("x".into())));
    }

    #[test]
    fn bounds_collapse_per_feature() {
        let path = vec![
            Conjunct { feature: "a".into(), op: Op::Le, threshold: 9.0 },
            Conjunct { feature: "b".into(), op: Op::Gt, threshold: 1.0 },
            Conjunct { feature: "a".into(), op: Op::Le, threshold: 4.0 },
            Conjunct { feature: "b".into(), op: Op::Gt, threshold: 2.0 },
        ];
        let rule = Rule { conjuncts: collapse(&path), outcome: Label::Yes };
        assert_eq!(rule.to_string(), "IF a <= 4.00 AND b > 2.00 THEN Yes");
    }

    #[test]
    fn boundary_projection() {
        let spec = crate::odd::parse_odd_spec(
            r#"{"classes": [{"name": "ODD"}, {"name": "Vehicle_lighting", "parent": "ODD",
                "attributes": [{"name": "Low", "unit": "lux", "interval": "[0, 100["}]}]}"#,
        )
        .unwrap();
        let rule = Rule {
            conjuncts: vec![Conjunct { feature: "Vehicle_lighting".into(), op: Op::Le, threshold: 60.48 }],
            outcome: Label::Yes,
        };
        let report = refine_boundaries(&spec, std::slice::from_ref(&rule)).unwrap();
        assert!(!report.exit_everywhere);
        assert_eq!(report.proposals[0].proposed, vec![Interval::at_most(60.48).unwrap()]);

        let none = refine_boundaries(&spec, &[Rule { outcome: Label::No, ..rule.clone() }]).unwrap();
        assert!(none.exit_everywhere && none.proposals.is_empty());

        let bad = Rule {
            conjuncts: vec![Conjunct { feature: "Fog".into(), op: Op::Le, threshold: 1.0 }],
            outcome: Label::Yes,
        };
        assert_eq!(refine_boundaries(&spec, &[bad]), Err(RefineError::UnknownFeature("Fog".into())));
    }

    #[test]
    fn merge_joins_touching_pieces() {
        let a = Interval::new(None, false, Some(2.0), true).unwrap();
        let b = Interval::new(Some(2.0), false, Some(5.0), true).unwrap();
        let c = Interval::new(Some(7.0), false, None, false).unwrap();
        assert_eq!(merge(vec![c, b, a]), vec![Interval::at_most(5.0).unwrap(), c]);
    }

    #[test]
    fn trace_csv() {
        let text = "Fog,Vehicle_lighting,label\n100,20.5,Yes\n3000,80,No\n";
        let recs = parse_traces(text.as_bytes()).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].label, Label::No);
        assert_eq!(recs[0].features["Vehicle_lighting"], 20.5);
        let bad = "Fog,label\n1,Maybe\n";
        assert!(matches!(parse_traces(bad.as_bytes()), Err(RefineError::Trace { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn rules_partition_and_agree_with_tree(
            pts in prop::collection::vec((0u8..20, 0u8..20, any::<bool>()), 4..60),
            probe in (0u8..25, 0u8..25),
        ) {
            let recs: Vec<TraceRecord> = pts
                .iter()
                .map(|&(a, b, y)| TraceRecord::new(
                    &[("a", a as f64), ("b", b as f64)],
                    if y { Label::Yes } else { Label::No },
                ))
                .collect();
            let fit = fit_tree(&recs, params(4, 2)).unwrap();
            let rules = extract_rules(&fit.tree);
            let mut points: Vec<BTreeMap<String, f64>> = recs.iter().map(|r| r.features.clone()).collect();
            points.push([("a".to_string(), probe.0 as f64), ("b".to_string(), probe.1 as f64)].into());
            for p in points {
                let hits: Vec<&Rule> = rules.iter().filter(|r| r.matches(&p).unwrap()).collect();
                prop_assert_eq!(hits.len(), 1);
                prop_assert_eq!(hits[0].outcome, predict(&fit.tree, &p).unwrap());
            }
            let mut shuffled = recs.clone();
            shuffled.reverse();
            prop_assert_eq!(fit_tree(&shuffled, params(4, 2)).unwrap(), fit);
        }
    }
}
