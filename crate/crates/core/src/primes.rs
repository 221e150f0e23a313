//! Prime implicants of a multi-valued DNF, verification and minimal covers.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compile::{complement, compile_rules, covers, cubes_onset, enumerate_onset, positional_key, render_trits, Dnf};
use crate::cube::{absorb, Cube, Layout};
use crate::discretize::{DiscreteSpace, SpaceDoc};
use crate::error::{Error, Result};
use crate::model::RuleSet;
use crate::scalar::Scalar;

/// Which function a prime set belongs to: the target class or its complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Positive => "positive",
            Side::Negative => "negative",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrimeMode {
    /// Complete prime set; refuses spaces above the budget.
    #[default]
    Exact,
    /// Greedy expansion of each cube. Every result is prime but some primes may be missing.
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeImplicant {
    pub tau: usize,
    pub cube: Cube,
}

/// Primes of one side, numbered τ1, τ2, ... in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeSet<T> {
    /// Decision reported when a point falls in one of these primes.
    pub label: String,
    /// The class the positive side was compiled for.
    pub target: String,
    pub side: Side,
    /// False when the set came from heuristic expansion or a greedy cover.
    pub complete: bool,
    space: DiscreteSpace<T>,
    primes: Vec<PrimeImplicant>,
}

impl<T: Scalar> PrimeSet<T> {
    /// Sorts cubes canonically and numbers them from 1.
    pub fn from_cubes(
        label: impl Into<String>,
        target: impl Into<String>,
        side: Side,
        complete: bool,
        space: DiscreteSpace<T>,
        cubes: Vec<Cube>,
    ) -> Result<Self> {
        let layout = space.layout();
        if let Some(bad) = cubes.iter().position(|c| !layout.is_valid(c)) {
            return Err(Error::InvalidCube(format!("prime {bad} has an empty group")));
        }
        let mut keyed: Vec<(String, Cube)> = cubes.into_iter().map(|c| (positional_key(&c, layout), c)).collect();
        keyed.sort();
        keyed.dedup();
        let primes = keyed
            .into_iter()
            .enumerate()
            .map(|(i, (_, cube))| PrimeImplicant { tau: i + 1, cube })
            .collect();
        Ok(PrimeSet { label: label.into(), target: target.into(), side, complete, space, primes })
    }

    pub fn primes(&self) -> &[PrimeImplicant] {
        &self.primes
    }

    pub fn cubes(&self) -> Vec<Cube> {
        self.primes.iter().map(|p| p.cube.clone()).collect()
    }

    pub fn space(&self) -> &DiscreteSpace<T> {
        &self.space
    }

    pub fn layout(&self) -> &Layout {
        self.space.layout()
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Primes containing the point, in τ order.
    pub fn matching(&self, point: &[u32]) -> impl Iterator<Item = &PrimeImplicant> + '_ {
        let point = point.to_vec();
        self.primes.iter().filter(move |p| self.layout().contains_point(&p.cube, &point))
    }

    /// Keeps the listed primes, preserving their τ numbers.
    pub fn retain_taus(&self, keep: &[usize], complete: bool) -> Self {
        PrimeSet {
            primes: self.primes.iter().filter(|p| keep.contains(&p.tau)).cloned().collect(),
            complete,
            ..self.clone()
        }
    }

    /// Literal form such as `x1 & (y1|y2)`; a free prime is `1`.
    pub fn literals(&self, cube: &Cube) -> String {
        let layout = self.layout();
        let parts: Vec<String> = (0..layout.groups())
            .filter(|&g| !layout.is_full(cube, g))
            .map(|g| {
                let names: Vec<String> = layout.values(cube, g).map(|j| self.space.variable_name(g, j)).collect();
                if names.len() == 1 {
                    names.into_iter().next().expect("one name")
                } else {
                    format!("({})", names.join("|"))
                }
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" & ")
        }
    }

    /// Plain-text table: τ id, literals, trit strings.
    pub fn render_table(&self) -> String {
        let layout = self.layout();
        let rows: Vec<(String, String, Vec<String>)> = self
            .primes
            .iter()
            .map(|p| (format!("τ{}", p.tau), self.literals(&p.cube), render_trits(&p.cube, layout)))
            .collect();
        let w_tau = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0).max(3);
        let w_lit = rows.iter().map(|r| r.1.chars().count()).max().unwrap_or(0).max(8);
        let mut out = format!(
            "{} primes for {} ({} side{}): {}\n",
            self.primes.len(),
            self.label,
            self.side,
            if self.complete { "" } else { ", possibly incomplete" },
            self.space.variable_names().join(" ")
        );
        out.push_str(&format!("{:<w_tau$}  {:<w_lit$}  trits\n", "tau", "literals"));
        for (tau, lits, trits) in rows {
            for (k, t) in trits.iter().enumerate() {
                let (a, b) = if k == 0 { (tau.as_str(), lits.as_str()) } else { ("", "") };
                out.push_str(&format!("{a:<w_tau$}  {b:<w_lit$}  {t}\n"));
            }
        }
        out
    }

    pub fn to_doc(&self) -> PrimeSetDoc<T> {
        let layout = self.layout();
        PrimeSetDoc {
            label: self.label.clone(),
            target: self.target.clone(),
            side: self.side,
            complete: self.complete,
            space: SpaceDoc::from(&self.space),
            primes: self
                .primes
                .iter()
                .map(|p| PrimeDoc {
                    tau: p.tau,
                    intervals: layout.sets(&p.cube),
                    literals: self.literals(&p.cube),
                    trits: render_trits(&p.cube, layout),
                })
                .collect(),
        }
    }
}

/// Serialized form of a [`PrimeSet`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PrimeSetDoc<T> {
    pub label: String,
    pub target: String,
    pub side: Side,
    pub complete: bool,
    pub space: SpaceDoc<T>,
    pub primes: Vec<PrimeDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimeDoc {
    pub tau: usize,
    pub intervals: Vec<Vec<usize>>,
    #[serde(default)]
    pub literals: String,
    #[serde(default)]
    pub trits: Vec<String>,
}

impl<T: Scalar> TryFrom<PrimeSetDoc<T>> for PrimeSet<T> {
    type Error = Error;

    /// τ numbers are taken from the document, so a minimal cover keeps its original ids.
    fn try_from(doc: PrimeSetDoc<T>) -> Result<Self> {
        let space: DiscreteSpace<T> = doc.space.try_into()?;
        let mut primes = Vec::with_capacity(doc.primes.len());
        for p in &doc.primes {
            primes.push(PrimeImplicant { tau: p.tau, cube: space.layout().cube_from_sets(&p.intervals)? });
        }
        let mut taus: Vec<usize> = primes.iter().map(|p| p.tau).collect();
        taus.sort_unstable();
        taus.dedup();
        if taus.len() != primes.len() {
            return Err(Error::InvalidCube("duplicate τ id".into()));
        }
        primes.sort_by_key(|p| p.tau);
        Ok(PrimeSet {
            label: doc.label,
            target: doc.target,
            side: doc.side,
            complete: doc.complete,
            space,
            primes,
        })
    }
}

/// Both sides of one target together with the verification outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PrimesDoc<T> {
    pub target: String,
    pub verified: bool,
    pub positive: PrimeSetDoc<T>,
    pub negative: PrimeSetDoc<T>,
}

impl<T: Scalar> PrimesDoc<T> {
    pub fn new(positive: &PrimeSet<T>, negative: &PrimeSet<T>, verified: bool) -> Self {
        PrimesDoc { target: positive.target.clone(), verified, positive: positive.to_doc(), negative: negative.to_doc() }
    }

    pub fn into_sets(self) -> Result<(PrimeSet<T>, PrimeSet<T>)> {
        let pos: PrimeSet<T> = self.positive.try_into()?;
        let neg: PrimeSet<T> = self.negative.try_into()?;
        if pos.side != Side::Positive || neg.side != Side::Negative {
            return Err(Error::Unverified("prime sets are not a positive/negative pair".into()));
        }
        if pos.space != neg.space {
            return Err(Error::SpaceMismatch("positive and negative primes use different spaces".into()));
        }
        Ok((pos, neg))
    }
}

/// Computes the primes of `dnf`. Exact mode needs the space within `budget`.
pub fn prime_implicants<T: Scalar>(dnf: &Dnf<T>, mode: PrimeMode, budget: u128) -> Result<PrimeSet<T>> {
    let layout = dnf.layout();
    let (cubes, complete) = match mode {
        PrimeMode::Exact => {
            let needed = layout.feasible_count();
            if needed > budget {
                return Err(Error::capacity("feasible points for exact primes", needed, budget));
            }
            (consensus_closure(layout, dnf.cubes()), true)
        }
        PrimeMode::Heuristic => (expand_all(layout, dnf.cubes()), false),
    };
    PrimeSet::from_cubes(dnf.label.clone(), dnf.label.clone(), Side::Positive, complete, dnf.space().clone(), cubes)
}

/// Iterated consensus with absorption until no new cube appears.
///
/// Consensus on a group unions that group and intersects the others, so two
/// cubes identical except on one group merge into their union. At the fixed
/// point every prime of the function is in the set and nothing else is.
fn consensus_closure(layout: &Layout, cubes: &[Cube]) -> Vec<Cube> {
    let mut set = absorb(cubes.to_vec());
    let mut queue: VecDeque<Cube> = set.iter().cloned().collect();
    while let Some(c) = queue.pop_front() {
        if !set.contains(&c) {
            continue;
        }
        let others = set.clone();
        for d in &others {
            for g in 0..layout.groups() {
                // A group where one side contains the other gives a cube inside that side.
                if layout.group_subset(&c, d, g) || layout.group_subset(d, &c, g) {
                    continue;
                }
                let Some(k) = layout.consensus(&c, d, g) else { continue };
                if set.iter().any(|e| e.contains(&k)) {
                    continue;
                }
                set.retain(|e| !k.contains(e));
                set.push(k.clone());
                queue.push_back(k);
            }
        }
    }
    set
}

/// Greedy single-value expansion of every cube against the function itself.
fn expand_all(layout: &Layout, cubes: &[Cube]) -> Vec<Cube> {
    let cubes = absorb(cubes.to_vec());
    let expanded: Vec<Cube> = cubes
        .par_iter()
        .map(|c| {
            let mut cur = c.clone();
            for g in 0..layout.groups() {
                for v in 0..layout.size(g) {
                    if layout.has(&cur, g, v) {
                        continue;
                    }
                    let wider = layout.with_group(&cur, g, layout.values(&cur, g).chain([v]).collect::<Vec<_>>());
                    if covers(layout, &cubes, &wider) {
                        cur = wider;
                    }
                }
            }
            cur
        })
        .collect();
    absorb(expanded)
}

/// Primes by definition: every cube whose points all lie in the on-set,
/// keeping those not contained in another. Only for tiny spaces.
pub fn brute_force_primes<T: Scalar>(dnf: &Dnf<T>, budget: u128) -> Result<PrimeSet<T>> {
    let layout = dnf.layout();
    let candidates = layout
        .sizes()
        .iter()
        .fold(1u128, |acc, &s| acc.saturating_mul(if s >= 127 { u128::MAX } else { (1u128 << s) - 1 }));
    if candidates > budget {
        return Err(Error::capacity("candidate cubes", candidates, budget));
    }
    let onset = enumerate_onset(dnf, budget)?;
    let groups = layout.groups();
    let mut masks = vec![1u64; groups];
    let mut implicants = Vec::new();
    'outer: loop {
        let sets: Vec<Vec<usize>> = (0..groups)
            .map(|g| (0..layout.size(g)).filter(|&v| masks[g] >> v & 1 == 1).collect())
            .collect();
        let cube = layout.cube_from_sets(&sets)?;
        let mut inside = true;
        layout.for_each_point(&cube, |p| inside &= onset.contains_index(onset.index(p)));
        if inside {
            implicants.push(cube);
        }
        let mut g = groups;
        loop {
            if g == 0 {
                break 'outer;
            }
            g -= 1;
            masks[g] += 1;
            if masks[g] < 1u64 << layout.size(g) {
                break;
            }
            masks[g] = 1;
        }
    }
    PrimeSet::from_cubes(dnf.label.clone(), dnf.label.clone(), Side::Positive, true, dnf.space().clone(), absorb(implicants))
}

fn check_same_space<T: Scalar>(primes: &PrimeSet<T>, dnf: &Dnf<T>) -> Result<()> {
    if primes.space() != dnf.space() {
        return Err(Error::SpaceMismatch("prime set and function use different spaces".into()));
    }
    Ok(())
}

/// True iff the union of the primes has exactly the on-set of `dnf`.
pub fn verify_cover<T: Scalar>(primes: &PrimeSet<T>, dnf: &Dnf<T>, budget: u128) -> Result<bool> {
    check_same_space(primes, dnf)?;
    let want = enumerate_onset(dnf, budget)?;
    let got = cubes_onset(dnf.layout(), &primes.cubes(), budget)?;
    Ok(want.same_points(&got))
}

/// A smallest sub-cover, exact up to 64 primes and greedy above.
#[derive(Debug, Clone)]
pub struct Cover<T> {
    pub set: PrimeSet<T>,
    pub exact: bool,
}

/// Picks a minimum number of primes still covering the on-set.
///
/// Rows of the covering chart are classes of on-set points that lie in the
/// same primes; points differing only in values no prime tells apart share
/// a row, so the chart stays small even on large spaces.
pub fn minimal_cover<T: Scalar>(primes: &PrimeSet<T>, dnf: &Dnf<T>, budget: u128) -> Result<Cover<T>> {
    if !verify_cover(primes, dnf, budget)? {
        return Err(Error::Unverified("prime set does not cover the function exactly".into()));
    }
    let rows = chart_rows(primes);
    let n = primes.len();
    let (chosen, exact) = if n <= 64 {
        let rows: Vec<u64> = rows.iter().map(|r| r[0]).collect();
        (exact_cover(&rows, n), true)
    } else {
        (greedy_cover(&rows, n), false)
    };
    let taus: Vec<usize> = chosen.iter().map(|&i| primes.primes()[i].tau).collect();
    Ok(Cover { set: primes.retain_taus(&taus, primes.complete && exact), exact })
}

/// Distinct, non-dominated prime signatures of on-set points.
fn chart_rows<T: Scalar>(primes: &PrimeSet<T>) -> Vec<Vec<u64>> {
    let layout = primes.layout();
    let n = primes.len();
    let words = n.div_ceil(64).max(1);
    // Per group: values that no prime distinguishes collapse into one class.
    let classes: Vec<Vec<Vec<u64>>> = (0..layout.groups())
        .map(|g| {
            let mut sigs: Vec<Vec<u64>> = (0..layout.size(g))
                .map(|v| {
                    let mut s = vec![0u64; words];
                    for (i, p) in primes.primes().iter().enumerate() {
                        if layout.has(&p.cube, g, v) {
                            s[i / 64] |= 1 << (i % 64);
                        }
                    }
                    s
                })
                .collect();
            sigs.sort();
            sigs.dedup();
            sigs
        })
        .collect();
    let mut rows: HashSet<Vec<u64>> = HashSet::new();
    let mut pos = vec![0usize; classes.len()];
    loop {
        let mut sig = vec![0u64; words];
        for i in 0..n {
            sig[i / 64] |= 1 << (i % 64);
        }
        for (g, &k) in pos.iter().enumerate() {
            for (w, c) in sig.iter_mut().zip(&classes[g][k]) {
                *w &= c;
            }
        }
        if sig.iter().any(|&w| w != 0) {
            rows.insert(sig);
        }
        let mut g = classes.len();
        loop {
            if g == 0 {
                let mut rows: Vec<Vec<u64>> = rows.into_iter().collect();
                rows.sort_by_key(|r| (r.iter().map(|w| w.count_ones()).sum::<u32>(), r.clone()));
                let mut kept: Vec<Vec<u64>> = Vec::new();
                for r in rows {
                    // Covering a row with fewer primes also covers any superset row.
                    if !kept.iter().any(|k| k.iter().zip(&r).all(|(a, b)| a & !b == 0)) {
                        kept.push(r);
                    }
                }
                return kept;
            }
            g -= 1;
            pos[g] += 1;
            if pos[g] < classes[g].len() {
                break;
            }
            pos[g] = 0;
        }
    }
}

fn greedy_cover(rows: &[Vec<u64>], n: usize) -> Vec<usize> {
    let mut open: Vec<&Vec<u64>> = rows.iter().collect();
    let mut chosen = Vec::new();
    while !open.is_empty() {
        let best = (0..n)
            .max_by_key(|&i| (open.iter().filter(|r| r[i / 64] >> (i % 64) & 1 == 1).count(), std::cmp::Reverse(i)))
            .expect("rows imply primes");
        chosen.push(best);
        open.retain(|r| r[best / 64] >> (best % 64) & 1 == 0);
    }
    chosen.sort_unstable();
    chosen
}

fn exact_cover(rows: &[u64], n: usize) -> Vec<usize> {
    let wide: Vec<Vec<u64>> = rows.iter().map(|&r| vec![r]).collect();
    let greedy = greedy_cover(&wide, n);
    let mut best = greedy.iter().fold(0u64, |m, &i| m | 1 << i);
    search(rows, 0, &mut best);
    (0..n).filter(|&i| best >> i & 1 == 1).collect()
}

fn search(rows: &[u64], chosen: u64, best: &mut u64) {
    let open: Vec<u64> = rows.iter().copied().filter(|r| r & chosen == 0).collect();
    if open.is_empty() {
        if chosen.count_ones() < best.count_ones() || (chosen.count_ones() == best.count_ones() && chosen < *best) {
            *best = chosen;
        }
        return;
    }
    // Pairwise disjoint open rows each need their own prime.
    let mut bound = 0;
    let mut used = 0u64;
    for r in &open {
        if r & used == 0 {
            used |= r;
            bound += 1;
        }
    }
    if chosen.count_ones() + bound > best.count_ones() {
        return;
    }
    let row = *open.iter().min_by_key(|r| r.count_ones()).expect("open row");
    let mut options: Vec<u32> = (0..64).filter(|i| row >> i & 1 == 1).collect();
    options.sort_by_key(|&i| std::cmp::Reverse(open.iter().filter(|r| *r >> i & 1 == 1).count()));
    for i in options {
        search(rows, chosen | 1 << i, best);
    }
}

/// Labels for the two sides: the other class of a binary model, else `not <target>`.
pub fn negative_label(classes: &[String], target: &str) -> String {
    match classes {
        [a, b] if a == target => b.clone(),
        [a, b] if b == target => a.clone(),
        _ => format!("not {target}"),
    }
}

/// Compiles `target` and its complement and returns both prime sets.
pub fn prime_pair<T: Scalar>(
    rules: &RuleSet<T>,
    space: &DiscreteSpace<T>,
    target: &str,
    mode: PrimeMode,
    budget: u128,
) -> Result<(PrimeSet<T>, PrimeSet<T>)> {
    let dnf = compile_rules(rules, space, target)?;
    let pos = prime_implicants(&dnf, mode, budget)?;
    let mut neg = prime_implicants(&complement(&dnf), mode, budget)?;
    neg.label = negative_label(&rules.classes, target);
    neg.target = target.to_string();
    neg.side = Side::Negative;
    Ok((pos, neg))
}
