//! Seeded synthetic trees and flows for fixtures and property tests.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::Result;
use crate::eval::Dataset;
use crate::model::{TreeModel, TreeNode};
use crate::scalar::Scalar;

/// Thresholds tested anywhere in the tree, per feature, ascending.
pub fn tree_thresholds<T: Scalar>(tree: &TreeModel<T>) -> BTreeMap<String, Vec<T>> {
    let mut out: BTreeMap<String, Vec<T>> = BTreeMap::new();
    for n in tree.nodes() {
        if let TreeNode::Internal { feature, threshold, .. } = n {
            out.entry(feature.clone()).or_default().push(*threshold);
        }
    }
    for ts in out.values_mut() {
        ts.sort_by(T::cmp_finite);
        ts.dedup();
    }
    out
}

/// Draws `n` flows labelled by the tree. Values fall in every interval the
/// tree induces and hit thresholds exactly now and then.
pub fn synthetic_flows<T: Scalar>(tree: &TreeModel<T>, n: usize, seed: u64) -> Result<Dataset<T>> {
    let mut rng = StdRng::seed_from_u64(seed);
    let grid = tree_thresholds(tree);
    let features = tree.features().to_vec();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<T> = features
            .iter()
            .map(|f| sample_value(&mut rng, grid.get(f).map(Vec::as_slice).unwrap_or(&[])))
            .collect();
        let view: Vec<(String, T)> = features.iter().cloned().zip(row.iter().copied()).collect();
        labels.push(tree.predict(&view)?.to_string());
        rows.push(row);
    }
    Dataset::new(features, rows, Some(labels))
}

fn sample_value<T: Scalar, R: Rng>(rng: &mut R, ts: &[T]) -> T {
    let f = |x: f64| T::from_f64(x).expect("finite");
    if ts.is_empty() {
        return f(rng.gen_range(0.0..100.0));
    }
    if rng.gen_bool(0.1) {
        return ts[rng.gen_range(0..ts.len())];
    }
    let lo = ts[0].to_f64().expect("finite");
    let hi = ts[ts.len() - 1].to_f64().expect("finite");
    let span = (hi - lo).abs().max(1.0);
    let j = rng.gen_range(0..=ts.len());
    let v = if j == 0 {
        lo - rng.gen_range(0.0..span)
    } else if j == ts.len() {
        hi + rng.gen_range(0.0..span) + f64::EPSILON * hi.abs().max(1.0)
    } else {
        let a = ts[j - 1].to_f64().expect("finite");
        let b = ts[j].to_f64().expect("finite");
        a + (b - a) * rng.gen_range(0.0..1.0)
    };
    let v = f(v);
    // Rounding may push a value onto its lower bound; take the upper bound then.
    if j > 0 && j < ts.len() && v <= ts[j - 1] {
        ts[j]
    } else if j == ts.len() && v <= ts[ts.len() - 1] {
        ts[ts.len() - 1].step_above()
    } else {
        v
    }
}

/// Shape of a random tree.
#[derive(Debug, Clone, Copy)]
pub struct TreeShape {
    pub features: usize,
    /// Candidate thresholds per feature; a feature ends up with at most this many + 1 intervals.
    pub thresholds: usize,
    pub depth: usize,
    pub classes: usize,
}

/// A random consistent tree: every split falls strictly inside the region
/// its path has left open, so no path is contradictory.
pub fn random_tree<R: Rng>(rng: &mut R, shape: TreeShape) -> TreeModel<f64> {
    let features: Vec<String> = (0..shape.features).map(|i| format!("F{i}")).collect();
    let classes: Vec<String> = (0..shape.classes.max(1)).map(|i| format!("c{i}")).collect();
    let mut nodes = Vec::new();
    // Open region per feature as an index range over thresholds 1..=k.
    let region = vec![(0usize, shape.thresholds + 1); shape.features];
    let root = grow(rng, &shape, &classes, &features, &mut nodes, region, 0);
    TreeModel::new(features, classes, nodes, root).expect("generated tree is valid")
}

fn grow<R: Rng>(
    rng: &mut R,
    shape: &TreeShape,
    classes: &[String],
    features: &[String],
    nodes: &mut Vec<TreeNode<f64>>,
    region: Vec<(usize, usize)>,
    depth: usize,
) -> usize {
    let open: Vec<usize> = (0..features.len()).filter(|&f| region[f].1 - region[f].0 > 1).collect();
    let stop = depth >= shape.depth || open.is_empty() || (depth > 0 && rng.gen_bool(0.2));
    if stop {
        nodes.push(TreeNode::Leaf { label: classes[rng.gen_range(0..classes.len())].clone() });
        return nodes.len() - 1;
    }
    let f = open[rng.gen_range(0..open.len())];
    let (lo, hi) = region[f];
    let t = rng.gen_range(lo + 1..hi);
    let mut left_region = region.clone();
    left_region[f] = (lo, t);
    let mut right_region = region;
    right_region[f] = (t, hi);
    let left = grow(rng, shape, classes, features, nodes, left_region, depth + 1);
    let right = grow(rng, shape, classes, features, nodes, right_region, depth + 1);
    nodes.push(TreeNode::Internal { feature: features[f].clone(), threshold: t as f64, left, right });
    nodes.len() - 1
}

/// Convenience wrapper seeding the generator.
pub fn random_tree_seeded(seed: u64, shape: TreeShape) -> TreeModel<f64> {
    random_tree(&mut StdRng::seed_from_u64(seed), shape)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::load_tree;

    #[test]
    fn flows_are_tree_labelled_and_reproducible() {
        let tree = load_tree::<f64>(include_str!("../fixtures/demo_tree.json")).unwrap();
        let a = synthetic_flows(&tree, 200, 7).unwrap();
        let b = synthetic_flows(&tree, 200, 7).unwrap();
        assert_eq!(a, b);
        for (i, row) in a.rows().enumerate() {
            assert_eq!(tree.predict(&row).unwrap(), a.labels().unwrap()[i]);
        }
        let labels = a.labels().unwrap();
        assert!(labels.iter().any(|l| l == "0") && labels.iter().any(|l| l == "1"));
    }

    #[test]
    fn random_trees_are_valid() {
        for seed in 0..50 {
            let shape = TreeShape { features: 4, thresholds: 3, depth: 5, classes: 3 };
            let t = random_tree_seeded(seed, shape);
            assert!(t.leaf_count() >= 1);
            for ts in tree_thresholds(&t).values() {
                assert!(ts.len() <= 3);
            }
        }
    }
}
