mod common;

use mnm_core::compile::{
    complement, complement_cubes, compile_rules, covers, cubes_onset, enumerate_onset, eval_point, parse_trits,
    render_trits, tautology,
};
use mnm_core::cube::{Cube, Layout};
use mnm_core::discretize::{map_features, DiscretePoint, DiscreteSpace};
use mnm_core::model::RuleSet;
use mnm_core::synth::{random_tree, TreeShape};
use mnm_core::DEFAULT_BUDGET;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64, depth: usize) -> Option<(RuleSet<f64>, DiscreteSpace<f64>)> {
    let tree = random_tree(
        &mut ChaCha8Rng::seed_from_u64(seed),
        TreeShape { features: 4, thresholds: 4, depth, classes: 3 },
    );
    let rules = RuleSet::from_tree(&tree).unwrap();
    if rules.rules.iter().all(|r| r.constraints.is_empty()) {
        return None;
    }
    let space = map_features(&rules).unwrap();
    Some((rules, space))
}

fn random_cubes(layout: &Layout, rng: &mut impl Rng, n: usize) -> Vec<Cube> {
    (0..n)
        .map(|_| {
            let sets: Vec<Vec<usize>> = layout
                .sizes()
                .iter()
                .map(|&s| {
                    if rng.gen_bool(0.4) {
                        return (0..s).collect();
                    }
                    let mut v: Vec<usize> = (0..s).filter(|_| rng.gen_bool(0.5)).collect();
                    if v.is_empty() {
                        v.push(rng.gen_range(0..s));
                    }
                    v
                })
                .collect();
            layout.cube_from_sets(&sets).unwrap()
        })
        .collect()
}

fn random_layout(rng: &mut impl Rng) -> Layout {
    Layout::new((0..rng.gen_range(1..=4)).map(|_| rng.gen_range(1..=4)).collect())
}

fn points_in(layout: &Layout, cubes: &[Cube]) -> Vec<bool> {
    let sets: Vec<common::Sets> = cubes.iter().map(|c| common::to_sets(layout.sets(c))).collect();
    common::all_points(layout.sizes()).iter().map(|p| common::union_contains(&sets, p)).collect()
}

#[test]
fn random_points_agree_with_rule_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    for seed in 0.. {
        let Some((rules, space)) = setup(seed, 5) else { continue };
        let dnfs: Vec<_> = rules.classes.iter().map(|c| compile_rules(&rules, &space, c).unwrap()).collect();
        for _ in 0..1000 {
            let p = DiscretePoint(space.layout().sizes().iter().map(|&s| rng.gen_range(0..s as u32)).collect());
            let values = space.representative(&p);
            for dnf in &dnfs {
                let direct = rules.rules.iter().any(|r| r.label == dnf.label && r.accepts(&values).unwrap());
                assert_eq!(eval_point(dnf, &p).unwrap(), direct);
            }
            checked += 1;
        }
        if checked >= 10_000 {
            break;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn onset_matches_pointwise_evaluation(seed in any::<u64>(), depth in 1usize..6) {
        let Some((rules, space)) = setup(seed, depth) else { return Ok(()) };
        for class in &rules.classes {
            let dnf = compile_rules(&rules, &space, class).unwrap();
            let on = enumerate_onset(&dnf, DEFAULT_BUDGET).unwrap();
            for p in common::all_points(space.layout().sizes()) {
                let p = DiscretePoint(p);
                prop_assert_eq!(on.contains(&p), eval_point(&dnf, &p).unwrap());
            }
        }
    }

    #[test]
    fn class_dnfs_partition_the_space(seed in any::<u64>(), depth in 1usize..6) {
        let Some((rules, space)) = setup(seed, depth) else { return Ok(()) };
        let ons: Vec<_> = rules
            .classes
            .iter()
            .map(|c| enumerate_onset(&compile_rules(&rules, &space, c).unwrap(), DEFAULT_BUDGET).unwrap())
            .collect();
        for p in common::all_points(space.layout().sizes()) {
            let p = DiscretePoint(p);
            prop_assert_eq!(ons.iter().filter(|o| o.contains(&p)).count(), 1);
        }
    }

    #[test]
    fn complement_matches_enumeration(seed in any::<u64>(), n in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng);
        let cubes = random_cubes(&layout, &mut rng, n);
        let inside = points_in(&layout, &cubes);
        let outside = points_in(&layout, &complement_cubes(&layout, &cubes));
        for (a, b) in inside.iter().zip(&outside) {
            prop_assert_ne!(a, b);
        }
        prop_assert_eq!(tautology(&layout, &cubes), inside.iter().all(|&b| b));
    }

    #[test]
    fn covers_matches_enumeration(seed in any::<u64>(), n in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng);
        let cubes = random_cubes(&layout, &mut rng, n);
        let probe = random_cubes(&layout, &mut rng, 1).pop().unwrap();
        let inside = points_in(&layout, &cubes);
        let probe_pts = points_in(&layout, std::slice::from_ref(&probe));
        let oracle = inside.iter().zip(&probe_pts).all(|(&on, &p)| on || !p);
        prop_assert_eq!(covers(&layout, &cubes, &probe), oracle);
    }

    #[test]
    fn trits_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = random_layout(&mut rng);
        let cube = random_cubes(&layout, &mut rng, 1).pop().unwrap();
        let strings = render_trits(&cube, &layout);
        let expected: usize = (0..layout.groups())
            .map(|g| if layout.is_full(&cube, g) { 1 } else { layout.count(&cube, g) })
            .product();
        prop_assert_eq!(strings.len(), expected);
        let parts: Vec<Cube> = strings.iter().map(|s| parse_trits(s, &layout).unwrap()).collect();
        prop_assert_eq!(points_in(&layout, &parts), points_in(&layout, std::slice::from_ref(&cube)));
        if strings.len() == 1 {
            prop_assert_eq!(&parts[0], &cube);
        }
    }
}

#[test]
fn dnf_complement_is_labelled_and_exact() {
    let (rules, space) = (0..).find_map(|s| setup(s, 4)).unwrap();
    let dnf = compile_rules(&rules, &space, "c0").unwrap();
    let not = complement(&dnf);
    assert_eq!(not.label, "not c0");
    let a = cubes_onset(space.layout(), dnf.cubes(), DEFAULT_BUDGET).unwrap();
    let b = cubes_onset(space.layout(), not.cubes(), DEFAULT_BUDGET).unwrap();
    assert!(a.complement().same_points(&b));
}

#[test]
fn over_budget_enumeration_is_refused() {
    let layout = Layout::new(vec![10; 6]);
    assert!(cubes_onset(&layout, &[layout.full()], 1000).is_err());
}

#[test]
fn malformed_trits_are_rejected() {
    let layout = Layout::new(vec![2, 3]);
    assert!(parse_trits("01-", &layout).is_err());
    assert!(parse_trits("01x01", &layout).is_err());
    assert!(parse_trits("11---", &layout).is_err());
    assert!(parse_trits("0-001", &layout).is_err());
    assert!(parse_trits("10---", &layout).is_ok());
}
