//! Sufficient reasons: the primes of the decided side that contain a flow.

use rayon::prelude::*;
use serde::Serialize;

use crate::compile::{complement, compile_rules, render_trits};
use crate::discretize::{discretize_instance, DiscretePoint, DiscreteSpace};
use crate::error::{Error, Result};
use crate::instance::FeatureSource;
use crate::model::{RuleSet, TreeModel};
use crate::primes::{prime_pair, verify_cover, PrimeImplicant, PrimeMode, PrimeSet, Side};
use crate::scalar::Scalar;

/// Positive and negative prime sets checked against a tree.
///
/// Construction fails unless the positive primes cover exactly the points the
/// tree assigns to the target and the negative primes exactly the rest.
#[derive(Debug, Clone)]
pub struct VerifiedRules<T> {
    positive: PrimeSet<T>,
    negative: PrimeSet<T>,
}

impl<T: Scalar> VerifiedRules<T> {
    pub fn verify(tree: &TreeModel<T>, positive: PrimeSet<T>, negative: PrimeSet<T>, budget: u128) -> Result<Self> {
        if positive.side != Side::Positive || negative.side != Side::Negative {
            return Err(Error::Unverified("expected one positive and one negative prime set".into()));
        }
        if positive.target != negative.target {
            return Err(Error::Unverified(format!(
                "prime sets target `{}` and `{}`",
                positive.target, negative.target
            )));
        }
        if positive.space() != negative.space() {
            return Err(Error::SpaceMismatch("positive and negative primes use different spaces".into()));
        }
        if !tree.classes().contains(&positive.target) {
            return Err(Error::Unverified(format!("target `{}` is not a class of the tree", positive.target)));
        }
        let rules = RuleSet::from_tree(tree)?;
        let delta = compile_rules(&rules, positive.space(), &positive.target)?;
        if !verify_cover(&positive, &delta, budget)? {
            return Err(Error::Unverified(format!("positive primes do not cover `{}` exactly", positive.target)));
        }
        if !verify_cover(&negative, &complement(&delta), budget)? {
            return Err(Error::Unverified(format!("negative primes do not cover `{}` exactly", negative.label)));
        }
        Ok(VerifiedRules { positive, negative })
    }

    /// Computes both prime sets for `target` over `space` and verifies them.
    pub fn from_tree(
        tree: &TreeModel<T>,
        space: &DiscreteSpace<T>,
        target: &str,
        mode: PrimeMode,
        budget: u128,
    ) -> Result<Self> {
        let (pos, neg) = prime_pair(&RuleSet::from_tree(tree)?, space, target, mode, budget)?;
        Self::verify(tree, pos, neg, budget)
    }

    pub fn positive(&self) -> &PrimeSet<T> {
        &self.positive
    }

    pub fn negative(&self) -> &PrimeSet<T> {
        &self.negative
    }

    pub fn space(&self) -> &DiscreteSpace<T> {
        self.positive.space()
    }

    pub fn target(&self) -> &str {
        &self.positive.target
    }

    pub fn side(&self, side: Side) -> &PrimeSet<T> {
        match side {
            Side::Positive => &self.positive,
            Side::Negative => &self.negative,
        }
    }

    /// Decision of the prime classifier: positive iff some positive prime holds the point.
    pub fn decide(&self, point: &DiscretePoint) -> Side {
        if self.positive.matching(&point.0).next().is_some() {
            Side::Positive
        } else {
            Side::Negative
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Match {
    pub tau: usize,
    pub trits: Vec<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct FeatureValue<T> {
    pub feature: String,
    pub value: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct Explanation<T> {
    pub instance: Vec<FeatureValue<T>>,
    /// Class predicted by the tree.
    pub decision: String,
    pub side: Side,
    /// Label of the side, e.g. the other class or `not <target>`.
    pub side_label: String,
    pub encoding: String,
    pub matches: Vec<Match>,
}

impl<T: Scalar> Explanation<T> {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "decision: {} ({} side, {})\nencoding: {}\n",
            self.decision, self.side, self.side_label, self.encoding
        );
        for m in &self.matches {
            out.push_str(&format!("τ{} {}: {}\n", m.tau, m.trits.join(","), m.text));
        }
        out
    }
}

/// Explains the tree's decision on one flow by every prime of that side containing it.
pub fn explain_instance<T: Scalar, S: FeatureSource<T> + ?Sized>(
    instance: &S,
    tree: &TreeModel<T>,
    rules: &VerifiedRules<T>,
) -> Result<Explanation<T>> {
    let space = rules.space();
    let point = discretize_instance(instance, space)?;
    let decision = tree.predict(instance)?.to_string();
    let side = if decision == rules.target() { Side::Positive } else { Side::Negative };
    let set = rules.side(side);
    let matches: Vec<Match> = set
        .matching(&point.0)
        .map(|p| Match {
            tau: p.tau,
            trits: render_trits(&p.cube, space.layout()),
            text: render_human(p, space, &set.label),
        })
        .collect();
    if matches.is_empty() {
        return Err(Error::Unverified(format!("no {side} prime contains the flow")));
    }
    let mut echo: Vec<String> = space.features().iter().map(|f| f.name.clone()).collect();
    for f in tree.features() {
        if !echo.contains(f) {
            echo.push(f.clone());
        }
    }
    let instance = echo
        .into_iter()
        .filter_map(|feature| instance.value(&feature).map(|value| FeatureValue { feature, value }))
        .collect();
    Ok(Explanation {
        instance,
        decision,
        side,
        side_label: set.label.clone(),
        encoding: point.encoding(space.layout()),
        matches,
    })
}

/// Explains many flows in parallel; output order follows input order.
pub fn explain_batch<T: Scalar, S: FeatureSource<T> + Sync>(
    instances: &[S],
    tree: &TreeModel<T>,
    rules: &VerifiedRules<T>,
) -> Result<Vec<Explanation<T>>> {
    instances.par_iter().map(|i| explain_instance(i, tree, rules)).collect()
}

/// Sentence form of a prime, e.g. `if X is at most 2 and Y is at most 3 then 1`.
pub fn render_human<T: Scalar>(prime: &PrimeImplicant, space: &DiscreteSpace<T>, label: &str) -> String {
    let layout = space.layout();
    let mut clauses = Vec::new();
    for g in 0..layout.groups() {
        if layout.is_full(&prime.cube, g) {
            continue;
        }
        let axis = space.feature(g);
        let values: Vec<usize> = layout.values(&prime.cube, g).collect();
        let mut runs: Vec<(usize, usize)> = Vec::new();
        for v in values {
            match runs.last_mut() {
                Some((_, last)) if *last + 1 == v => *last = v,
                _ => runs.push((v, v)),
            }
        }
        let parts: Vec<String> = runs
            .iter()
            .map(|&(a, b)| {
                let lo = axis.interval(a).lower;
                let hi = axis.interval(b).upper;
                match (lo, hi) {
                    (Some(l), Some(h)) => format!("{} is larger than {l} and at most {h}", axis.name),
                    (Some(l), None) => format!("{} is larger than {l}", axis.name),
                    (None, Some(h)) => format!("{} is at most {h}", axis.name),
                    (None, None) => format!("{} is any value", axis.name),
                }
            })
            .collect();
        clauses.push(if parts.len() == 1 {
            parts.into_iter().next().expect("one run")
        } else {
            format!("({})", parts.join(" or "))
        });
    }
    if clauses.is_empty() {
        format!("any flow is {label}")
    } else {
        format!("if {} then {label}", clauses.join(" and "))
    }
}

/// Does a one-hot encoding agree with a trit pattern on every fixed position?
pub fn match_trits(encoding: &str, pattern: &str) -> Result<bool> {
    if encoding.chars().count() != pattern.chars().count() {
        return Err(Error::InvalidTrits(format!(
            "encoding has {} positions, pattern has {}",
            encoding.chars().count(),
            pattern.chars().count()
        )));
    }
    let mut ok = true;
    for (e, p) in encoding.chars().zip(pattern.chars()) {
        if !matches!(e, '0' | '1') {
            return Err(Error::InvalidTrits(format!("illegal encoding character `{e}`")));
        }
        if !matches!(p, '0' | '1' | '-') {
            return Err(Error::InvalidTrits(format!("illegal pattern character `{p}`")));
        }
        ok &= p == '-' || p == e;
    }
    Ok(ok)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::map_features;
    use crate::model::load_tree;
    use std::collections::HashMap;

    fn demo() -> (TreeModel<f64>, VerifiedRules<f64>) {
        let tree = load_tree::<f64>(include_str!("../fixtures/demo_tree.json")).unwrap();
        let space = map_features(&RuleSet::from_tree(&tree).unwrap()).unwrap();
        let rules = VerifiedRules::from_tree(&tree, &space, "1", PrimeMode::Exact, 1000).unwrap();
        (tree, rules)
    }

    fn flow(x: f64, y: f64, z: f64) -> HashMap<String, f64> {
        [("X", x), ("Y", y), ("Z", z)].iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn demo_explanations() {
        let (tree, rules) = demo();
        let e = explain_instance(&flow(7.0, 5.0, 0.0), &tree, &rules).unwrap();
        assert_eq!(e.decision, "1");
        assert_eq!(e.side, Side::Positive);
        assert_eq!(e.encoding, "010110");
        assert_eq!(e.matches.len(), 1);
        assert_eq!(e.matches[0].trits, ["01----"]);
        assert_eq!(e.matches[0].text, "if X is larger than 2 then 1");

        // Both y1 and x2 are sufficient here.
        let e = explain_instance(&flow(7.0, 0.0, 0.0), &tree, &rules).unwrap();
        let taus: Vec<usize> = e.matches.iter().map(|m| m.tau).collect();
        assert_eq!(taus, [1, 2]);

        let e = explain_instance(&flow(1.0, 5.0, 9.0), &tree, &rules).unwrap();
        assert_eq!(e.decision, "0");
        assert_eq!(e.side, Side::Negative);
        assert_eq!(e.matches[0].text, "if X is at most 2 and Y is larger than 3 then 0");
    }

    #[test]
    fn human_text() {
        let (_, rules) = demo();
        let pos = rules.positive();
        let texts: Vec<String> = pos.primes().iter().map(|p| render_human(p, pos.space(), "1")).collect();
        assert_eq!(texts, ["if Y is at most 3 then 1", "if X is larger than 2 then 1"]);
        let x1y1 = PrimeImplicant { tau: 9, cube: pos.layout().cube_from_sets(&[vec![0], vec![0], vec![0, 1]]).unwrap() };
        assert_eq!(render_human(&x1y1, pos.space(), "1"), "if X is at most 2 and Y is at most 3 then 1");
        let free = PrimeImplicant { tau: 1, cube: pos.layout().full() };
        assert_eq!(render_human(&free, pos.space(), "Benign"), "any flow is Benign");

        let space = DiscreteSpace::<f64>::from_thresholds(vec![("D", vec![1.5, 4997.5, 5440.5])]).unwrap();
        let split = PrimeImplicant { tau: 1, cube: space.layout().cube_from_sets(&[vec![0, 2, 3]]).unwrap() };
        assert_eq!(
            render_human(&split, &space, "a"),
            "if (D is at most 1.5 or D is larger than 4997.5) then a"
        );
        let mid = PrimeImplicant { tau: 1, cube: space.layout().cube_from_sets(&[vec![1, 2]]).unwrap() };
        assert_eq!(render_human(&mid, &space, "a"), "if D is larger than 1.5 and at most 5440.5 then a");
    }

    #[test]
    fn rejects_swapped_sets() {
        let (tree, rules) = demo();
        let mut pos = rules.negative().clone();
        pos.side = Side::Positive;
        let mut neg = rules.positive().clone();
        neg.side = Side::Negative;
        assert!(matches!(VerifiedRules::verify(&tree, pos, neg, 1000), Err(Error::Unverified(_))));
        let (p, n) = (rules.positive().clone(), rules.negative().clone());
        assert!(matches!(VerifiedRules::verify(&tree, n, p, 1000), Err(Error::Unverified(_))));
    }

    #[test]
    fn missing_feature() {
        let (tree, rules) = demo();
        let mut f = flow(1.0, 1.0, 1.0);
        f.remove("Z");
        assert!(matches!(explain_instance(&f, &tree, &rules), Err(Error::MissingFeature(_))));
    }

    #[test]
    fn trit_matching() {
        assert!(match_trits("0011", "00-1").unwrap());
        assert!(!match_trits("0011", "01-1").unwrap());
        assert!(match_trits("0110", "----").unwrap());
        assert!(match_trits("011", "0110").is_err());
        assert!(match_trits("01-", "011").is_err());
        assert!(match_trits("011", "01x").is_err());
    }
}
