//! Rules to multi-valued DNF, on-set enumeration, complement and trit strings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cube::{absorb, Cube, Layout};
use crate::discretize::{DiscretePoint, DiscreteSpace, SpaceDoc};
use crate::error::{Error, Result};
use crate::model::{Rule, RuleSet};
use crate::scalar::Scalar;

/// A union of cubes over one space; true on the points of any cube.
#[derive(Debug, Clone, PartialEq)]
pub struct Dnf<T> {
    pub label: String,
    space: DiscreteSpace<T>,
    cubes: Vec<Cube>,
}

impl<T: Scalar> Dnf<T> {
    /// Rejects cubes with an empty group or a foreign width.
    pub fn new(label: impl Into<String>, space: DiscreteSpace<T>, cubes: Vec<Cube>) -> Result<Self> {
        if let Some(bad) = cubes.iter().position(|c| !space.layout().is_valid(c)) {
            return Err(Error::InvalidCube(format!("cube {bad} has an empty group")));
        }
        Ok(Dnf { label: label.into(), space, cubes })
    }

    pub fn space(&self) -> &DiscreteSpace<T> {
        &self.space
    }

    pub fn layout(&self) -> &Layout {
        self.space.layout()
    }

    pub fn cubes(&self) -> &[Cube] {
        &self.cubes
    }

    pub fn is_false(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn to_doc(&self) -> DnfDoc<T> {
        let layout = self.layout();
        DnfDoc {
            label: self.label.clone(),
            space: SpaceDoc::from(&self.space),
            cubes: self.cubes.iter().map(|c| layout.sets(c)).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("dnf serializes")
    }

    pub fn from_json(doc: &str) -> Result<Self> {
        let doc: DnfDoc<T> = serde_json::from_str(doc)?;
        doc.try_into()
    }
}

/// Serialized form of a [`Dnf`]; cubes are per-feature interval index lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DnfDoc<T> {
    pub label: String,
    pub space: SpaceDoc<T>,
    pub cubes: Vec<Vec<Vec<usize>>>,
}

impl<T: Scalar> TryFrom<DnfDoc<T>> for Dnf<T> {
    type Error = Error;

    fn try_from(doc: DnfDoc<T>) -> Result<Self> {
        let space: DiscreteSpace<T> = doc.space.try_into()?;
        let cubes = doc
            .cubes
            .iter()
            .map(|sets| space.layout().cube_from_sets(sets))
            .collect::<Result<Vec<_>>>()?;
        Dnf::new(doc.label, space, cubes)
    }
}

/// The cube of points whose intervals satisfy every constraint of the rule.
pub fn rule_cube<T: Scalar>(rule: &Rule<T>, space: &DiscreteSpace<T>) -> Result<Cube> {
    let layout = space.layout();
    let mut cube = layout.full();
    for (name, iv) in &rule.constraints {
        let g = space.feature_index(name).ok_or_else(|| Error::FeatureNotInSpace(name.clone()))?;
        let (first, last) = space.feature(g).covered_range(iv)?;
        cube = layout.with_group(&cube, g, first..=last);
    }
    Ok(cube)
}

/// One cube per rule labelled `target`; other rules are ignored.
pub fn compile_rules<T: Scalar>(rules: &RuleSet<T>, space: &DiscreteSpace<T>, target: &str) -> Result<Dnf<T>> {
    let cubes = rules
        .rules
        .iter()
        .filter(|r| r.label == target)
        .map(|r| rule_cube(r, space))
        .collect::<Result<Vec<_>>>()?;
    Dnf::new(target, space.clone(), cubes)
}

fn check_point(layout: &Layout, p: &DiscretePoint) -> Result<()> {
    if p.0.len() != layout.groups() || p.0.iter().enumerate().any(|(g, &j)| j as usize >= layout.size(g)) {
        return Err(Error::SpaceMismatch("point does not belong to the space".into()));
    }
    Ok(())
}

pub fn eval_point<T: Scalar>(dnf: &Dnf<T>, p: &DiscretePoint) -> Result<bool> {
    let layout = dnf.layout();
    check_point(layout, p)?;
    Ok(dnf.cubes.iter().any(|c| layout.contains_point(c, &p.0)))
}

/// Explicit membership bitset over the feasible points of a space.
///
/// Points are indexed in mixed radix with the first feature most significant,
/// so ascending index order is lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OnSet {
    sizes: Vec<usize>,
    strides: Vec<u64>,
    total: u64,
    bits: Vec<u64>,
}

impl OnSet {
    pub fn empty(layout: &Layout, budget: u128) -> Result<Self> {
        let total = layout.feasible_count();
        if total > budget {
            return Err(Error::capacity("feasible points", total, budget));
        }
        let total = u64::try_from(total).map_err(|_| Error::capacity("feasible points", total, u64::MAX as u128))?;
        let sizes = layout.sizes().to_vec();
        let mut strides = vec![1u64; sizes.len()];
        for g in (0..sizes.len().saturating_sub(1)).rev() {
            strides[g] = strides[g + 1] * sizes[g + 1] as u64;
        }
        Ok(OnSet { sizes, strides, total, bits: vec![0; total.div_ceil(64) as usize] })
    }

    pub fn feasible(&self) -> u64 {
        self.total
    }

    pub fn index(&self, point: &[u32]) -> u64 {
        point.iter().zip(&self.strides).map(|(&j, s)| j as u64 * s).sum()
    }

    pub fn point(&self, mut index: u64) -> DiscretePoint {
        DiscretePoint(
            self.strides
                .iter()
                .map(|s| {
                    let j = index / s;
                    index %= s;
                    j as u32
                })
                .collect(),
        )
    }

    pub fn insert_index(&mut self, i: u64) {
        self.bits[(i / 64) as usize] |= 1 << (i % 64);
    }

    pub fn contains_index(&self, i: u64) -> bool {
        i < self.total && self.bits[(i / 64) as usize] >> (i % 64) & 1 == 1
    }

    pub fn contains(&self, p: &DiscretePoint) -> bool {
        p.0.len() == self.sizes.len()
            && p.0.iter().zip(&self.sizes).all(|(&j, &s)| (j as usize) < s)
            && self.contains_index(self.index(&p.0))
    }

    pub fn insert_cube(&mut self, layout: &Layout, cube: &Cube) {
        let strides = &self.strides;
        let bits = &mut self.bits;
        layout.for_each_point(cube, |p| {
            let i: u64 = p.iter().zip(strides).map(|(&j, s)| j as u64 * s).sum();
            bits[(i / 64) as usize] |= 1 << (i % 64);
        });
    }

    pub fn len(&self) -> u64 {
        self.bits.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    /// On-set indices in ascending (lexicographic) order.
    pub fn indices(&self) -> impl Iterator<Item = u64> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as u64;
                rest &= rest - 1;
                Some(w as u64 * 64 + b)
            })
        })
    }

    pub fn points(&self) -> impl Iterator<Item = DiscretePoint> + '_ {
        self.indices().map(|i| self.point(i))
    }

    /// Feasible points outside the set.
    pub fn complement(&self) -> OnSet {
        let mut out = self.clone();
        for w in out.bits.iter_mut() {
            *w = !*w;
        }
        let tail = self.total % 64;
        if tail != 0 {
            if let Some(last) = out.bits.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        out
    }

    /// Same points as `other`; shapes must agree.
    pub fn same_points(&self, other: &OnSet) -> bool {
        self.sizes == other.sizes && self.bits == other.bits
    }
}

/// Materializes the on-set, refusing spaces larger than `budget`.
pub fn enumerate_onset<T: Scalar>(dnf: &Dnf<T>, budget: u128) -> Result<OnSet> {
    cubes_onset(dnf.layout(), &dnf.cubes, budget)
}

pub fn cubes_onset(layout: &Layout, cubes: &[Cube], budget: u128) -> Result<OnSet> {
    let mut set = OnSet::empty(layout, budget)?;
    for c in cubes {
        set.insert_cube(layout, c);
    }
    Ok(set)
}

/// Exact complement as a cube list, computed structurally.
pub fn complement<T: Scalar>(dnf: &Dnf<T>) -> Dnf<T> {
    let cubes = complement_cubes(dnf.layout(), &dnf.cubes);
    Dnf { label: format!("not {}", dnf.label), space: dnf.space.clone(), cubes }
}

/// Group that is restricted in the most cubes, if any cube restricts one.
fn split_group(layout: &Layout, cubes: &[Cube]) -> Option<usize> {
    (0..layout.groups())
        .map(|g| (cubes.iter().filter(|c| !layout.is_full(c, g)).count(), g))
        .filter(|&(n, _)| n > 0)
        .max_by_key(|&(n, g)| (n, std::cmp::Reverse(g)))
        .map(|(_, g)| g)
}

/// Cubes with `g = v` cofactored out: those allowing `v`, with `g` freed.
fn cofactor_value(layout: &Layout, cubes: &[Cube], g: usize, v: usize) -> Vec<Cube> {
    cubes.iter().filter(|c| layout.has(c, g, v)).map(|c| layout.with_full_group(c, g)).collect()
}

pub fn complement_cubes(layout: &Layout, cubes: &[Cube]) -> Vec<Cube> {
    if cubes.is_empty() {
        return vec![layout.full()];
    }
    if cubes.iter().any(|c| layout.is_universe(c)) {
        return Vec::new();
    }
    if let [single] = cubes {
        return (0..layout.groups())
            .filter(|&g| !layout.is_full(single, g))
            .map(|g| layout.group_complement(single, g))
            .collect();
    }
    let g = split_group(layout, cubes).expect("some cube is restricted");
    // Results for different values that agree elsewhere fold back into one cube.
    let mut by_rest: BTreeMap<Cube, Vec<usize>> = BTreeMap::new();
    for v in 0..layout.size(g) {
        for c in complement_cubes(layout, &cofactor_value(layout, cubes, g, v)) {
            by_rest.entry(c).or_default().push(v);
        }
    }
    absorb(by_rest.into_iter().map(|(rest, vs)| layout.with_group(&rest, g, vs)).collect())
}

/// Does the union of `cubes` cover every feasible point?
pub fn tautology(layout: &Layout, cubes: &[Cube]) -> bool {
    if cubes.iter().any(|c| layout.is_universe(c)) {
        return true;
    }
    if cubes.is_empty() {
        return false;
    }
    // A value of some group that no cube allows leaves points uncovered.
    for g in 0..layout.groups() {
        if (0..layout.size(g)).any(|v| cubes.iter().all(|c| !layout.has(c, g, v))) {
            return false;
        }
    }
    let g = split_group(layout, cubes).expect("some cube is restricted");
    (0..layout.size(g)).all(|v| tautology(layout, &cofactor_value(layout, cubes, g, v)))
}

/// Is every point of `cube` covered by `cubes`?
pub fn covers(layout: &Layout, cubes: &[Cube], cube: &Cube) -> bool {
    let restricted: Vec<Cube> = cubes
        .iter()
        .filter(|c| layout.intersect(c, cube).is_some())
        .map(|c| c.union(&layout.outside(cube)))
        .collect();
    tautology(layout, &restricted)
}

/// Trit strings for a cube: `-` for a free group, one-hot for a singleton.
/// A group allowing several but not all intervals yields one string per interval.
pub fn render_trits(cube: &Cube, layout: &Layout) -> Vec<String> {
    let mut out = vec![String::with_capacity(layout.width())];
    for g in 0..layout.groups() {
        let n = layout.size(g);
        if layout.is_full(cube, g) {
            for s in &mut out {
                s.extend(std::iter::repeat_n('-', n));
            }
            continue;
        }
        let values: Vec<usize> = layout.values(cube, g).collect();
        out = out
            .iter()
            .flat_map(|s| {
                values.iter().map(move |&v| {
                    let mut t = s.clone();
                    t.extend((0..n).map(|k| if k == v { '1' } else { '0' }));
                    t
                })
            })
            .collect();
    }
    out
}

/// Inverse of [`render_trits`] for a single string.
pub fn parse_trits(trits: &str, layout: &Layout) -> Result<Cube> {
    let chars: Vec<char> = trits.chars().collect();
    if chars.len() != layout.width() {
        return Err(Error::InvalidTrits(format!(
            "expected {} positions, got {}",
            layout.width(),
            chars.len()
        )));
    }
    let mut sets = Vec::with_capacity(layout.groups());
    for g in 0..layout.groups() {
        let part = &chars[layout.offset(g)..layout.offset(g) + layout.size(g)];
        if let Some(bad) = part.iter().find(|c| !matches!(c, '0' | '1' | '-')) {
            return Err(Error::InvalidTrits(format!("illegal character `{bad}`")));
        }
        if part.iter().all(|&c| c == '-') {
            sets.push((0..part.len()).collect());
        } else if part.iter().filter(|&&c| c == '1').count() == 1 && !part.contains(&'-') {
            sets.push(vec![part.iter().position(|&c| c == '1').expect("one set bit")]);
        } else {
            return Err(Error::InvalidTrits(format!(
                "group {g} `{}` is neither free nor one-hot",
                part.iter().collect::<String>()
            )));
        }
    }
    layout.cube_from_sets(&sets)
}

/// Sort key for canonical ordering: `-` per position of a free group,
/// otherwise the group's membership bits.
pub fn positional_key(cube: &Cube, layout: &Layout) -> String {
    let mut s = String::with_capacity(layout.width());
    for g in 0..layout.groups() {
        let free = layout.is_full(cube, g);
        for v in 0..layout.size(g) {
            s.push(match (free, layout.has(cube, g, v)) {
                (true, _) => '-',
                (false, true) => '1',
                (false, false) => '0',
            });
        }
    }
    s
}
