//! Decision tree ingestion and conversion of root-to-leaf paths into interval rules.
//!
//! Every internal node tests `feature <= threshold`; the true branch is `left`.
//! A rule keeps, per feature, the tightest half-open interval `(lower, upper]`
//! implied by the branches taken along its path.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::FeatureSource;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", bound = "T: Scalar")]
pub enum TreeNode<T> {
    Internal { feature: String, threshold: T, left: usize, right: usize },
    Leaf { label: String },
}

/// A validated binary threshold tree.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct TreeModel<T> {
    features: Vec<String>,
    classes: Vec<String>,
    nodes: Vec<TreeNode<T>>,
    root: usize,
}

#[derive(Deserialize)]
#[serde(bound = "T: Scalar")]
struct TreeDocument<T> {
    features: Vec<String>,
    classes: Vec<String>,
    nodes: Vec<TreeNode<T>>,
    root: usize,
}

/// Parse and validate a tree interchange document.
pub fn load_tree<T: Scalar>(document: &str) -> Result<TreeModel<T>> {
    let doc: TreeDocument<T> =
        serde_json::from_str(document).map_err(|e| Error::MalformedTree(e.to_string()))?;
    TreeModel::new(doc.features, doc.classes, doc.nodes, doc.root)
}

impl<T: Scalar> TreeModel<T> {
    pub fn new(
        features: Vec<String>,
        classes: Vec<String>,
        nodes: Vec<TreeNode<T>>,
        root: usize,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::EmptyTree);
        }
        if root >= nodes.len() {
            return Err(Error::NotATree(format!("root {root} is out of range")));
        }
        let mut parents = vec![0usize; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            match node {
                TreeNode::Internal { feature, threshold, left, right } => {
                    if !features.iter().any(|f| f == feature) {
                        return Err(Error::UnknownFeature { node: i, feature: feature.clone() });
                    }
                    if !threshold.is_finite() {
                        return Err(Error::NonFiniteThreshold { node: i });
                    }
                    for &child in [left, right] {
                        if child >= nodes.len() {
                            return Err(Error::DanglingChild { node: i, child });
                        }
                        parents[child] += 1;
                    }
                }
                TreeNode::Leaf { label } => {
                    if !classes.iter().any(|c| c == label) {
                        return Err(Error::UnknownClass { node: i, label: label.clone() });
                    }
                }
            }
        }
        if parents[root] != 0 {
            return Err(Error::NotATree(format!("root {root} has a parent")));
        }
        if let Some((i, n)) =
            parents.iter().enumerate().find(|&(i, &n)| i != root && n != 1)
        {
            return Err(Error::NotATree(format!("node {i} has {n} parents")));
        }
        // With unique parents, every node is reachable from the root iff there is no cycle.
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            seen[i] = true;
            if let TreeNode::Internal { left, right, .. } = &nodes[i] {
                stack.push(*left);
                stack.push(*right);
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::NotATree(format!("node {i} is unreachable from the root")));
        }
        Ok(TreeModel { features, classes, nodes, root })
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn nodes(&self) -> &[TreeNode<T>] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    /// Follows the tree from the root, taking the true branch iff `value <= threshold`.
    pub fn predict<S: FeatureSource<T> + ?Sized>(&self, instance: &S) -> Result<&str> {
        let mut at = self.root;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { label } => return Ok(label),
                TreeNode::Internal { feature, threshold, left, right } => {
                    let v = instance
                        .value(feature)
                        .ok_or_else(|| Error::MissingFeature(feature.clone()))?;
                    at = if v <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

/// Convenience wrapper around [`TreeModel::predict`].
pub fn predict<'m, T: Scalar, S: FeatureSource<T> + ?Sized>(
    model: &'m TreeModel<T>,
    instance: &S,
) -> Result<&'m str> {
    model.predict(instance)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    True,
    False,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub node: usize,
    pub branch: Branch,
}

/// Root-to-leaf conjunction of branch decisions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionPath {
    pub steps: Vec<PathStep>,
    pub leaf: usize,
    pub label: String,
}

/// One path per leaf, in depth-first order with the true branch first.
pub fn extract_paths<T: Scalar>(model: &TreeModel<T>) -> Vec<DecisionPath> {
    let mut out = Vec::with_capacity(model.leaf_count());
    let mut stack: Vec<(usize, Vec<PathStep>)> = vec![(model.root, Vec::new())];
    while let Some((at, steps)) = stack.pop() {
        match &model.nodes[at] {
            TreeNode::Leaf { label } => {
                out.push(DecisionPath { steps, leaf: at, label: label.clone() })
            }
            TreeNode::Internal { left, right, .. } => {
                let mut f = steps.clone();
                f.push(PathStep { node: at, branch: Branch::False });
                stack.push((*right, f));
                let mut t = steps;
                t.push(PathStep { node: at, branch: Branch::True });
                stack.push((*left, t));
            }
        }
    }
    out
}

/// Half-open interval `(lower, upper]`; `None` stands for the infinite end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Interval<T> {
    pub lower: Option<T>,
    pub upper: Option<T>,
}

impl<T: Scalar> Interval<T> {
    pub const UNBOUNDED: Interval<T> = Interval { lower: None, upper: None };

    pub fn contains(&self, v: T) -> bool {
        self.lower.is_none_or(|l| v > l) && self.upper.is_none_or(|u| v <= u)
    }

    pub fn is_empty(&self) -> bool {
        matches!((self.lower, self.upper), (Some(l), Some(u)) if l >= u)
    }
}

impl<T: Scalar> fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lower {
            Some(l) => write!(f, "({l}, ")?,
            None => write!(f, "(-inf, ")?,
        }
        match self.upper {
            Some(u) => write!(f, "{u}]"),
            None => write!(f, "+inf)"),
        }
    }
}

/// Per-feature interval constraints plus the class reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Rule<T> {
    pub constraints: BTreeMap<String, Interval<T>>,
    pub label: String,
}

impl<T: Scalar> Rule<T> {
    /// Does the instance satisfy every constraint? Unconstrained features are not read.
    pub fn accepts<S: FeatureSource<T> + ?Sized>(&self, instance: &S) -> Result<bool> {
        for (feature, iv) in &self.constraints {
            let v = instance
                .value(feature)
                .ok_or_else(|| Error::MissingFeature(feature.clone()))?;
            if !iv.contains(v) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Normalizes a path into a rule; repeated tests on one feature intersect.
pub fn path_to_rule<T: Scalar>(path: &DecisionPath, model: &TreeModel<T>) -> Result<Rule<T>> {
    let mut constraints: BTreeMap<String, Interval<T>> = BTreeMap::new();
    for step in &path.steps {
        let TreeNode::Internal { feature, threshold, .. } = &model.nodes[step.node] else {
            return Err(Error::NotATree(format!("path step {} is a leaf", step.node)));
        };
        let iv = constraints.entry(feature.clone()).or_insert(Interval::UNBOUNDED);
        match step.branch {
            Branch::True => iv.upper = Some(iv.upper.map_or(*threshold, |u| u.min(*threshold))),
            Branch::False => iv.lower = Some(iv.lower.map_or(*threshold, |l| l.max(*threshold))),
        }
        if iv.is_empty() {
            return Err(Error::ContradictoryPath {
                feature: feature.clone(),
                lower: iv.lower.map(|v| v.to_string()).unwrap_or_default(),
                upper: iv.upper.map(|v| v.to_string()).unwrap_or_default(),
            });
        }
    }
    Ok(Rule { constraints, label: path.label.clone() })
}

/// The rules of a model, in path order, with the model's declared feature and class order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RuleSet<T> {
    pub features: Vec<String>,
    pub classes: Vec<String>,
    pub rules: Vec<Rule<T>>,
}

impl<T: Scalar> RuleSet<T> {
    pub fn from_tree(model: &TreeModel<T>) -> Result<Self> {
        let rules = extract_paths(model)
            .iter()
            .map(|p| path_to_rule(p, model))
            .collect::<Result<Vec<_>>>()?;
        Ok(RuleSet { features: model.features.clone(), classes: model.classes.clone(), rules })
    }

    /// Keeps only rules whose label is listed.
    pub fn with_labels<S: AsRef<str>>(&self, labels: &[S]) -> Self {
        RuleSet {
            features: self.features.clone(),
            classes: self.classes.clone(),
            rules: self
                .rules
                .iter()
                .filter(|r| labels.iter().any(|l| l.as_ref() == r.label))
                .cloned()
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    /// Label of the first rule accepting the instance.
    pub fn classify<S: FeatureSource<T> + ?Sized>(&self, instance: &S) -> Result<Option<&str>> {
        for r in &self.rules {
            if r.accepts(instance)? {
                return Ok(Some(&r.label));
            }
        }
        Ok(None)
    }
}
