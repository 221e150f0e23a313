//! Interval partitions of continuous features: map, combine and merge.
//!
//! A feature with sorted thresholds `t1 < ... < tk` is split into the
//! intervals `(-inf, t1], (t1, t2], ..., (tk, +inf)`. Each interval is one
//! boolean variable and the variables of a feature form a one-hot group.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::cube::Layout;
use crate::error::{Error, Result};
use crate::instance::FeatureSource;
use crate::model::{Interval, RuleSet};
use crate::scalar::Scalar;

/// One feature of a [`DiscreteSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureAxis<T> {
    pub name: String,
    thresholds: Vec<T>,
    /// For every interval, the 1-based indices of the intervals it was merged from.
    provenance: Vec<Vec<usize>>,
}

impl<T: Scalar> FeatureAxis<T> {
    /// Sorts and deduplicates the thresholds. Rejects non-finite values.
    pub fn new(name: impl Into<String>, mut thresholds: Vec<T>) -> Result<Self> {
        let name = name.into();
        if thresholds.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFiniteValue(name));
        }
        thresholds.sort_by(T::cmp_finite);
        thresholds.dedup();
        let provenance = (1..=thresholds.len() + 1).map(|i| vec![i]).collect();
        Ok(FeatureAxis { name, thresholds, provenance })
    }

    pub fn thresholds(&self) -> &[T] {
        &self.thresholds
    }

    pub fn provenance(&self) -> &[Vec<usize>] {
        &self.provenance
    }

    pub fn interval_count(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn interval(&self, j: usize) -> Interval<T> {
        Interval {
            lower: j.checked_sub(1).map(|i| self.thresholds[i]),
            upper: self.thresholds.get(j).copied(),
        }
    }

    /// Index of the interval holding `v`; a value equal to a threshold goes low.
    pub fn locate(&self, v: T) -> usize {
        self.thresholds.partition_point(|t| *t < v)
    }

    /// A value inside interval `j`.
    pub fn representative(&self, j: usize) -> T {
        match (j.checked_sub(1).map(|i| self.thresholds[i]), self.thresholds.get(j)) {
            (_, Some(&hi)) => hi,
            (Some(lo), None) => lo.step_above(),
            (None, None) => T::zero(),
        }
    }

    /// Index range `first..=last` of the intervals covered by `(lower, upper]`.
    pub fn covered_range(&self, iv: &Interval<T>) -> Result<(usize, usize)> {
        let position = |b: T| {
            self.thresholds.iter().position(|t| *t == b).ok_or_else(|| Error::BoundNotInSpace {
                feature: self.name.clone(),
                bound: b.to_string(),
            })
        };
        let first = match iv.lower {
            Some(l) => position(l)? + 1,
            None => 0,
        };
        let last = match iv.upper {
            Some(u) => position(u)?,
            None => self.thresholds.len(),
        };
        if first > last {
            return Err(Error::ContradictoryPath {
                feature: self.name.clone(),
                lower: iv.lower.map(|v| v.to_string()).unwrap_or_default(),
                upper: iv.upper.map(|v| v.to_string()).unwrap_or_default(),
            });
        }
        Ok((first, last))
    }

    fn merge_pair(&mut self, i: usize) {
        self.thresholds.remove(i);
        let upper = self.provenance.remove(i + 1);
        self.provenance[i].extend(upper);
    }
}

/// Ordered interval partitions for a set of features.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpace<T> {
    features: Vec<FeatureAxis<T>>,
    layout: Layout,
}

impl<T: Scalar> DiscreteSpace<T> {
    pub fn new(features: Vec<FeatureAxis<T>>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for f in &features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::SpaceMismatch(format!("duplicate feature `{}`", f.name)));
            }
        }
        let layout = Layout::new(features.iter().map(|f| f.interval_count()).collect());
        Ok(DiscreteSpace { features, layout })
    }

    pub fn empty() -> Self {
        DiscreteSpace { features: Vec::new(), layout: Layout::new(Vec::new()) }
    }

    /// Builds a space from `(name, thresholds)` pairs.
    pub fn from_thresholds<S: Into<String>>(axes: Vec<(S, Vec<T>)>) -> Result<Self> {
        Self::new(
            axes.into_iter()
                .map(|(n, t)| FeatureAxis::new(n, t))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn features(&self) -> &[FeatureAxis<T>] {
        &self.features
    }

    pub fn feature(&self, i: usize) -> &FeatureAxis<T> {
        &self.features[i]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn variable_count(&self) -> usize {
        self.layout.width()
    }

    /// Number of assignments satisfying every one-hot constraint.
    pub fn feasible_count(&self) -> u128 {
        self.layout.feasible_count()
    }

    /// Short lowercase symbol for feature `i`: the name itself when it is a
    /// single letter, otherwise a positional letter (`a`, `b`, ..., `aa`, ...).
    pub fn symbol(&self, i: usize) -> String {
        let name = &self.features[i].name;
        let mut chars = name.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if c.is_ascii_alphabetic() {
                return c.to_ascii_lowercase().to_string();
            }
        }
        positional_letters(i)
    }

    /// Name of interval `j` of feature `i`, e.g. `d4` or `d1-3` after merging.
    pub fn variable_name(&self, i: usize, j: usize) -> String {
        let sym = self.symbol(i);
        let prov = &self.features[i].provenance[j];
        match prov.as_slice() {
            [one] => format!("{sym}{one}"),
            [first, .., last] if last - first + 1 == prov.len() => format!("{sym}{first}-{last}"),
            many => {
                let parts: Vec<String> = many.iter().map(|p| p.to_string()).collect();
                format!("{sym}{}", parts.join("+"))
            }
        }
    }

    pub fn variable_names(&self) -> Vec<String> {
        (0..self.features.len())
            .flat_map(|i| (0..self.features[i].interval_count()).map(move |j| (i, j)))
            .map(|(i, j)| self.variable_name(i, j))
            .collect()
    }

    /// A concrete feature vector inside the given point.
    pub fn representative(&self, point: &DiscretePoint) -> Vec<(String, T)> {
        self.features
            .iter()
            .zip(&point.0)
            .map(|(f, &j)| (f.name.clone(), f.representative(j as usize)))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&SpaceDoc::from(self)).expect("space serializes")
    }

    pub fn from_json(doc: &str) -> Result<Self> {
        let doc: SpaceDoc<T> = serde_json::from_str(doc)?;
        doc.try_into()
    }
}

fn positional_letters(mut i: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push(b'a' + (i % 26) as u8);
        if i < 26 {
            break;
        }
        i = i / 26 - 1;
    }
    out.reverse();
    String::from_utf8(out).expect("ascii")
}

/// Serialized form of a [`DiscreteSpace`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SpaceDoc<T> {
    pub features: Vec<AxisDoc<T>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct AxisDoc<T> {
    pub name: String,
    pub thresholds: Vec<T>,
    #[serde(default)]
    pub variables: Vec<String>,
    #[serde(default)]
    pub provenance: Vec<Vec<usize>>,
}

impl<T: Scalar> From<&DiscreteSpace<T>> for SpaceDoc<T> {
    fn from(space: &DiscreteSpace<T>) -> Self {
        SpaceDoc {
            features: space
                .features
                .iter()
                .enumerate()
                .map(|(i, f)| AxisDoc {
                    name: f.name.clone(),
                    thresholds: f.thresholds.clone(),
                    variables: (0..f.interval_count()).map(|j| space.variable_name(i, j)).collect(),
                    provenance: f.provenance.clone(),
                })
                .collect(),
        }
    }
}

impl<T: Scalar> TryFrom<SpaceDoc<T>> for DiscreteSpace<T> {
    type Error = Error;

    fn try_from(doc: SpaceDoc<T>) -> Result<Self> {
        let mut axes = Vec::with_capacity(doc.features.len());
        for a in doc.features {
            if a.thresholds.iter().any(|t| !t.is_finite()) {
                return Err(Error::NonFiniteValue(a.name));
            }
            if a.thresholds.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::SpaceMismatch(format!(
                    "thresholds of `{}` are not strictly increasing",
                    a.name
                )));
            }
            let provenance = if a.provenance.is_empty() {
                (1..=a.thresholds.len() + 1).map(|i| vec![i]).collect()
            } else if a.provenance.len() == a.thresholds.len() + 1 {
                a.provenance
            } else {
                return Err(Error::SpaceMismatch(format!(
                    "provenance of `{}` does not match its interval count",
                    a.name
                )));
            };
            axes.push(FeatureAxis { name: a.name, thresholds: a.thresholds, provenance });
        }
        DiscreteSpace::new(axes)
    }
}

/// One interval index per feature of a space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiscretePoint(pub Vec<u32>);

impl DiscretePoint {
    /// Concatenated one-hot groups in declared feature order.
    pub fn encoding(&self, layout: &Layout) -> String {
        let mut s = String::with_capacity(layout.width());
        for (g, &j) in self.0.iter().enumerate() {
            for k in 0..layout.size(g) {
                s.push(if k == j as usize { '1' } else { '0' });
            }
        }
        s
    }
}

/// Collects, per constrained feature, every finite rule bound as a threshold.
pub fn map_features<T: Scalar>(rules: &RuleSet<T>) -> Result<DiscreteSpace<T>> {
    if rules.is_empty() {
        return Err(Error::EmptyRuleSet);
    }
    let mut order: Vec<String> = Vec::new();
    let mut values: Vec<Vec<T>> = Vec::new();
    let mut slot = |name: &str| match order.iter().position(|n| n == name) {
        Some(i) => i,
        None => {
            order.push(name.to_string());
            values.push(Vec::new());
            order.len() - 1
        }
    };
    // Declared order first, so the partition lines up with the model's feature list.
    let declared: Vec<usize> = rules
        .features
        .iter()
        .filter(|f| rules.rules.iter().any(|r| r.constraints.contains_key(*f)))
        .map(|f| slot(f))
        .collect();
    drop(declared);
    let mut bounds: Vec<(usize, T)> = Vec::new();
    for r in &rules.rules {
        for (name, iv) in &r.constraints {
            let i = slot(name);
            bounds.extend(iv.lower.into_iter().chain(iv.upper).map(|b| (i, b)));
        }
    }
    for (i, b) in bounds {
        values[i].push(b);
    }
    DiscreteSpace::new(
        order
            .into_iter()
            .zip(values)
            .map(|(n, v)| FeatureAxis::new(n, v))
            .collect::<Result<Vec<_>>>()?,
    )
}

/// Union of two partitions: shared features get the union of their thresholds.
/// Order is `a`'s features followed by the features only `b` has.
pub fn combine_spaces<T: Scalar>(a: &DiscreteSpace<T>, b: &DiscreteSpace<T>) -> DiscreteSpace<T> {
    let mut axes: Vec<FeatureAxis<T>> = a
        .features
        .iter()
        .map(|fa| match b.feature_index(&fa.name) {
            None => fa.clone(),
            Some(j) => {
                let mut ts = fa.thresholds.clone();
                ts.extend_from_slice(&b.features[j].thresholds);
                FeatureAxis::new(fa.name.clone(), ts).expect("finite thresholds")
            }
        })
        .collect();
    axes.extend(b.features.iter().filter(|fb| a.feature_index(&fb.name).is_none()).cloned());
    DiscreteSpace::new(axes).expect("feature names are unique")
}

/// Coalesces adjacent intervals that no rule tells apart, to a fixed point.
///
/// Intervals `x_i` and `x_{i+1}` of a feature are merged unless some rule's
/// interval on that feature contains exactly one of them. The returned rules
/// are the input rules expressed over the reduced space; their bounds are
/// all still thresholds of it.
pub fn merge_intervals<T: Scalar>(
    space: &DiscreteSpace<T>,
    rules: &RuleSet<T>,
) -> Result<(DiscreteSpace<T>, RuleSet<T>)> {
    for r in &rules.rules {
        for (name, iv) in &r.constraints {
            let i = space.feature_index(name).ok_or_else(|| Error::FeatureNotInSpace(name.clone()))?;
            space.features[i].covered_range(iv)?;
        }
    }
    let mut axes = space.features.clone();
    for axis in &mut axes {
        let constraints: Vec<&Interval<T>> =
            rules.rules.iter().filter_map(|r| r.constraints.get(&axis.name)).collect();
        loop {
            let ranges: Vec<(usize, usize)> = constraints
                .iter()
                .map(|iv| axis.covered_range(iv).expect("validated above"))
                .collect();
            let separated = |i: usize| {
                ranges.iter().any(|&(first, last)| (first..=last).contains(&i) != (first..=last).contains(&(i + 1)))
            };
            match (0..axis.thresholds.len()).find(|&i| !separated(i)) {
                Some(i) => axis.merge_pair(i),
                None => break,
            }
        }
    }
    Ok((DiscreteSpace::new(axes)?, rules.clone()))
}

/// Locates each feature value in its interval.
pub fn discretize_instance<T: Scalar, S: FeatureSource<T> + ?Sized>(
    instance: &S,
    space: &DiscreteSpace<T>,
) -> Result<DiscretePoint> {
    space
        .features
        .iter()
        .map(|f| {
            let v = instance.value(&f.name).ok_or_else(|| Error::MissingFeature(f.name.clone()))?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue(f.name.clone()));
            }
            Ok(f.locate(v) as u32)
        })
        .collect::<Result<Vec<_>>>()
        .map(DiscretePoint)
}
