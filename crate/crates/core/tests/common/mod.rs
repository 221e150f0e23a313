//! Independent oracles shared by the integration tests. None of these call
//! into the algorithms they check; they enumerate or recompute by hand.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use mnm_core::model::{TreeModel, TreeNode};

pub const DEMO: &str = include_str!("../../fixtures/demo_tree.json");
pub const DDOS: &str = include_str!("../../fixtures/ddos_tree.json");
pub const BENIGN_TRITS: &str = include_str!("../../fixtures/benign_trits.json");
pub const SAMPLE_FLOW: &str = include_str!("../../fixtures/sample_flow.csv");
pub const CIC_ALIASES: &str = include_str!("../../fixtures/cic_aliases.json");

pub const ATTACKS: [&str; 3] = ["DDoS-LOIC-HTTP", "DDoS-LOIC-UDP", "DDoS-HOIC"];

/// Recursive descent straight over the node list.
pub fn oracle_predict(tree: &TreeModel<f64>, values: &HashMap<String, f64>) -> String {
    fn walk(nodes: &[TreeNode<f64>], i: usize, values: &HashMap<String, f64>) -> String {
        match &nodes[i] {
            TreeNode::Leaf { label } => label.clone(),
            TreeNode::Internal { feature, threshold, left, right } => {
                if values[feature] <= *threshold {
                    walk(nodes, *left, values)
                } else {
                    walk(nodes, *right, values)
                }
            }
        }
    }
    walk(tree.nodes(), tree.root(), values)
}

pub fn leaf_count(tree: &TreeModel<f64>) -> usize {
    tree.nodes().iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
}

/// Every tuple of the mixed-radix space, first coordinate most significant.
pub fn all_points(sizes: &[usize]) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..s as u32).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    out
}

/// A cube as plain per-group value sets.
pub type Sets = Vec<BTreeSet<usize>>;

pub fn in_sets(sets: &Sets, p: &[u32]) -> bool {
    sets.iter().zip(p).all(|(s, &j)| s.contains(&(j as usize)))
}

pub fn union_contains(cubes: &[Sets], p: &[u32]) -> bool {
    cubes.iter().any(|c| in_sets(c, p))
}

pub fn to_sets(v: Vec<Vec<usize>>) -> Sets {
    v.into_iter().map(|g| g.into_iter().collect()).collect()
}

/// Every cube (tuple of non-empty subsets) over the space.
pub fn all_cubes(sizes: &[usize]) -> Vec<Sets> {
    let mut out: Vec<Sets> = vec![Vec::new()];
    for &s in sizes {
        out = out
            .into_iter()
            .flat_map(|c| {
                (1u32..(1 << s)).map(move |mask| {
                    let mut d = c.clone();
                    d.push((0..s).filter(|v| mask >> v & 1 == 1).collect());
                    d
                })
            })
            .collect();
    }
    out
}

fn subset(a: &Sets, b: &Sets) -> bool {
    a.iter().zip(b).all(|(x, y)| x.is_subset(y))
}

/// Primes by definition over an explicit on-set predicate.
pub fn oracle_primes(sizes: &[usize], on: impl Fn(&[u32]) -> bool) -> BTreeSet<Vec<Vec<usize>>> {
    let points = all_points(sizes);
    let implicants: Vec<Sets> = all_cubes(sizes)
        .into_iter()
        .filter(|c| points.iter().filter(|p| in_sets(c, p)).all(|p| on(p)))
        .collect();
    implicants
        .iter()
        .filter(|c| !implicants.iter().any(|d| d != *c && subset(c, d)))
        .map(|c| c.iter().map(|s| s.iter().copied().collect()).collect())
        .collect()
}

/// Confusion counts by plain counting: (tp, fp, tn, fn) for `positive`.
pub fn confusion(truth: &[String], predicted: &[String], positive: &str) -> (u64, u64, u64, u64) {
    let mut c = (0, 0, 0, 0);
    for (t, p) in truth.iter().zip(predicted) {
        match (t == positive, p == positive) {
            (true, true) => c.0 += 1,
            (false, true) => c.1 += 1,
            (false, false) => c.2 += 1,
            (true, false) => c.3 += 1,
        }
    }
    c
}

/// Threshold union per feature with plain sets.
pub fn union_thresholds(a: &[(String, Vec<f64>)], b: &[(String, Vec<f64>)]) -> BTreeMap<String, Vec<f64>> {
    let mut m: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (f, ts) in a.iter().chain(b) {
        m.entry(f.clone()).or_default().extend(ts);
    }
    for ts in m.values_mut() {
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ts.dedup();
    }
    m
}

/// Interval index of `v` by linear scan, first feature of `(lo, hi]` semantics.
pub fn oracle_locate(thresholds: &[f64], v: f64) -> usize {
    let mut j = 0;
    for t in thresholds {
        if v > *t {
            j += 1;
        }
    }
    j
}

pub fn to_map(pairs: &[(String, f64)]) -> HashMap<String, f64> {
    pairs.iter().cloned().collect()
}
