//! Multi-valued cubes in positional notation.
//!
//! Every feature owns a contiguous run of bits, one per interval. A cube keeps
//! the set of allowed intervals per feature as set bits; an all-ones group is
//! a don't-care and an empty group makes the cube empty.

use crate::error::{Error, Result};

const WORD: usize = 64;

/// Group sizes and bit offsets shared by every cube of one space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    width: usize,
    words: usize,
    masks: Vec<Box<[u64]>>,
}

impl Layout {
    pub fn new(sizes: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut width = 0;
        for &s in &sizes {
            assert!(s > 0, "a group needs at least one value");
            offsets.push(width);
            width += s;
        }
        let words = width.div_ceil(WORD).max(1);
        let masks = sizes
            .iter()
            .zip(&offsets)
            .map(|(&s, &o)| {
                let mut m = vec![0u64; words].into_boxed_slice();
                for b in o..o + s {
                    m[b / WORD] |= 1 << (b % WORD);
                }
                m
            })
            .collect();
        Layout { sizes, offsets, width, words, masks }
    }

    pub fn groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, g: usize) -> usize {
        self.sizes[g]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offset(&self, g: usize) -> usize {
        self.offsets[g]
    }

    /// Total number of variables.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Product of group sizes, saturating at `u128::MAX`.
    pub fn feasible_count(&self) -> u128 {
        self.sizes.iter().fold(1u128, |acc, &s| acc.saturating_mul(s as u128))
    }

    fn blank(&self) -> Cube {
        Cube { bits: vec![0u64; self.words].into_boxed_slice() }
    }

    /// The cube allowing every interval of every feature.
    pub fn full(&self) -> Cube {
        let mut c = self.blank();
        for m in &self.masks {
            c.or_assign(m);
        }
        c
    }

    /// The single-point cube for one interval index per group.
    pub fn minterm(&self, point: &[u32]) -> Result<Cube> {
        if point.len() != self.groups() {
            return Err(Error::SpaceMismatch(format!(
                "point has {} coordinates, space has {} features",
                point.len(),
                self.groups()
            )));
        }
        let mut c = self.blank();
        for (g, &j) in point.iter().enumerate() {
            if j as usize >= self.sizes[g] {
                return Err(Error::SpaceMismatch(format!("interval {j} out of range for feature {g}")));
            }
            c.set(self.offsets[g] + j as usize);
        }
        Ok(c)
    }

    /// Builds a cube from per-group value lists.
    pub fn cube_from_sets<S: AsRef<[usize]>>(&self, sets: &[S]) -> Result<Cube> {
        if sets.len() != self.groups() {
            return Err(Error::InvalidCube(format!(
                "{} groups given, space has {}",
                sets.len(),
                self.groups()
            )));
        }
        let mut c = self.blank();
        for (g, set) in sets.iter().enumerate() {
            let set = set.as_ref();
            if set.is_empty() {
                return Err(Error::InvalidCube(format!("group {g} is empty")));
            }
            for &v in set {
                if v >= self.sizes[g] {
                    return Err(Error::InvalidCube(format!("value {v} out of range in group {g}")));
                }
                c.set(self.offsets[g] + v);
            }
        }
        Ok(c)
    }

    /// Per-group value lists, ascending.
    pub fn sets(&self, c: &Cube) -> Vec<Vec<usize>> {
        (0..self.groups()).map(|g| self.values(c, g).collect()).collect()
    }

    pub fn values<'a>(&'a self, c: &'a Cube, g: usize) -> impl Iterator<Item = usize> + 'a {
        let o = self.offsets[g];
        (0..self.sizes[g]).filter(move |&j| c.bit(o + j))
    }

    pub fn count(&self, c: &Cube, g: usize) -> usize {
        c.bits.iter().zip(self.masks[g].iter()).map(|(a, m)| (a & m).count_ones() as usize).sum()
    }

    pub fn has(&self, c: &Cube, g: usize, v: usize) -> bool {
        c.bit(self.offsets[g] + v)
    }

    pub fn is_full(&self, c: &Cube, g: usize) -> bool {
        c.bits.iter().zip(self.masks[g].iter()).all(|(a, m)| a & m == *m)
    }

    pub fn is_group_empty(&self, c: &Cube, g: usize) -> bool {
        c.bits.iter().zip(self.masks[g].iter()).all(|(a, m)| a & m == 0)
    }

    /// True when no group is empty.
    pub fn is_valid(&self, c: &Cube) -> bool {
        c.bits.len() == self.words && (0..self.groups()).all(|g| !self.is_group_empty(c, g))
    }

    pub fn is_universe(&self, c: &Cube) -> bool {
        (0..self.groups()).all(|g| self.is_full(c, g))
    }

    /// Number of feasible points inside the cube.
    pub fn volume(&self, c: &Cube) -> u128 {
        (0..self.groups()).fold(1u128, |acc, g| acc.saturating_mul(self.count(c, g) as u128))
    }

    pub fn contains_point(&self, c: &Cube, point: &[u32]) -> bool {
        point.len() == self.groups() && point.iter().enumerate().all(|(g, &j)| self.has(c, g, j as usize))
    }

    /// Intersection, or `None` when some group becomes empty.
    pub fn intersect(&self, a: &Cube, b: &Cube) -> Option<Cube> {
        let c = a.and(b);
        self.is_valid(&c).then_some(c)
    }

    /// Consensus of `a` and `b` on group `g`: union on `g`, intersection elsewhere.
    pub fn consensus(&self, a: &Cube, b: &Cube, g: usize) -> Option<Cube> {
        let mut c = a.and(b);
        for ((w, m), (x, y)) in c.bits.iter_mut().zip(self.masks[g].iter()).zip(a.bits.iter().zip(b.bits.iter())) {
            *w = (*w & !m) | ((x | y) & m);
        }
        self.is_valid(&c).then_some(c)
    }

    /// Every value `c` does not allow. Or-ing this into a cube `d` gives the
    /// cofactor of `d` with respect to `c`. The result is a mask, not a valid cube.
    pub fn outside(&self, c: &Cube) -> Cube {
        let mut out = self.full();
        for (w, x) in out.bits.iter_mut().zip(c.bits.iter()) {
            *w &= !x;
        }
        out
    }

    /// Is group `g` of `a` a subset of group `g` of `b`?
    pub fn group_subset(&self, a: &Cube, b: &Cube, g: usize) -> bool {
        a.bits.iter().zip(b.bits.iter()).zip(self.masks[g].iter()).all(|((x, y), m)| x & !y & m == 0)
    }

    /// Replaces group `g` of `c` with the given values.
    pub fn with_group(&self, c: &Cube, g: usize, values: impl IntoIterator<Item = usize>) -> Cube {
        let mut out = c.clone();
        for (w, m) in out.bits.iter_mut().zip(self.masks[g].iter()) {
            *w &= !m;
        }
        for v in values {
            out.set(self.offsets[g] + v);
        }
        out
    }

    pub fn with_full_group(&self, c: &Cube, g: usize) -> Cube {
        let mut out = c.clone();
        out.or_assign(&self.masks[g]);
        out
    }

    /// Group `g` of `c` complemented within the group, other groups full.
    pub fn group_complement(&self, c: &Cube, g: usize) -> Cube {
        let mut out = self.full();
        for ((w, m), x) in out.bits.iter_mut().zip(self.masks[g].iter()).zip(c.bits.iter()) {
            *w &= !(x & m);
        }
        out
    }

    /// Visits every point of the cube in lexicographic order.
    pub fn for_each_point(&self, c: &Cube, mut f: impl FnMut(&[u32])) {
        let sets = self.sets(c);
        if sets.iter().any(|s| s.is_empty()) {
            return;
        }
        let mut pos = vec![0usize; sets.len()];
        let mut point: Vec<u32> = sets.iter().map(|s| s[0] as u32).collect();
        loop {
            f(&point);
            let mut g = sets.len();
            loop {
                if g == 0 {
                    return;
                }
                g -= 1;
                pos[g] += 1;
                if pos[g] < sets[g].len() {
                    point[g] = sets[g][pos[g]] as u32;
                    break;
                }
                pos[g] = 0;
                point[g] = sets[g][0] as u32;
            }
        }
    }
}

/// A product term: allowed intervals per feature as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cube {
    bits: Box<[u64]>,
}

impl Cube {
    fn bit(&self, i: usize) -> bool {
        self.bits[i / WORD] >> (i % WORD) & 1 == 1
    }

    fn set(&mut self, i: usize) {
        self.bits[i / WORD] |= 1 << (i % WORD);
    }

    fn and(&self, other: &Cube) -> Cube {
        Cube { bits: self.bits.iter().zip(other.bits.iter()).map(|(a, b)| a & b).collect() }
    }

    fn or_assign(&mut self, other: &[u64]) {
        for (a, b) in self.bits.iter_mut().zip(other) {
            *a |= b;
        }
    }

    /// Superset test on the point sets of two valid cubes.
    pub fn contains(&self, other: &Cube) -> bool {
        self.bits.iter().zip(other.bits.iter()).all(|(a, b)| b & !a == 0)
    }

    pub fn union(&self, other: &Cube) -> Cube {
        let mut c = self.clone();
        c.or_assign(&other.bits);
        c
    }
}

/// Drops cubes contained in another cube of the list, and duplicates.
pub fn absorb(mut cubes: Vec<Cube>) -> Vec<Cube> {
    cubes.sort();
    cubes.dedup();
    let mut keep = vec![true; cubes.len()];
    for i in 0..cubes.len() {
        for j in 0..cubes.len() {
            if i != j && keep[j] && cubes[j].contains(&cubes[i]) {
                keep[i] = false;
                break;
            }
        }
    }
    cubes.into_iter().zip(keep).filter_map(|(c, k)| k.then_some(c)).collect()
}
