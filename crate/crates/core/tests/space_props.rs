mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use scenario_core::id::Id;
use scenario_core::space::encoding::{encode_tree, Component, Descriptor, Discrepancy, EncodingSpec, Extractor, RealizedPath};
use scenario_core::space::{bundle_distance, descriptor_distance, epsilon_neighborhood, tree_distance, DistanceSpec};
use scenario_core::testkit::{random_tree, TreeShape};
use scenario_core::tree::mlp::{mlp, MlpTieBreak};
use scenario_core::tree::model::ScenarioTree;

use common::rng;

fn ids(xs: &[&str]) -> Vec<Id> {
    xs.iter().map(|x| Id::new(*x).unwrap()).collect()
}

fn component(name: &str, extractor: Extractor, discrepancy: Discrepancy) -> Component {
    Component { name: name.into(), extractor, discrepancy }
}

fn components() -> Vec<Component> {
    let outcomes = || Extractor::TerminalOutcomeVector { entities: ids(&["e0", "e1", "e2"]), rank_min: 1.0, rank_max: 4.0 };
    let flags = || Extractor::CoalitionTrajectoryFlags { coalitions: ids(&["e0", "e2"]) };
    let actions = || Extractor::DominantActionLabels { entities: ids(&["e0", "e1", "e2"]) };
    vec![
        component("outcomes_l1", outcomes(), Discrepancy::NormalizedL1),
        component("outcomes_01", outcomes(), Discrepancy::ZeroOne),
        component("flags_l1", flags(), Discrepancy::NormalizedL1),
        component("flags_01", flags(), Discrepancy::ZeroOne),
        component("actions_01", actions(), Discrepancy::ZeroOne),
        component("actions_jaccard", actions(), Discrepancy::MultisetJaccard),
        component("events", Extractor::EventPatternMultiset, Discrepancy::MultisetJaccard),
    ]
}

fn full(path: RealizedPath) -> DistanceSpec {
    let all = components();
    let weights = (1..=all.len()).map(|k| k as f64).collect();
    DistanceSpec::new(EncodingSpec::new(all, path).unwrap(), weights).unwrap()
}

/// Every single-component configuration under both realized paths, plus the full mix.
/// Each configuration is paired with the components it reads from a full descriptor.
fn configurations() -> Vec<(DistanceSpec, Vec<usize>)> {
    let mut out = Vec::new();
    for path in [RealizedPath::MostLikely, RealizedPath::MostRational] {
        for (k, c) in components().into_iter().enumerate() {
            out.push((DistanceSpec::uniform(EncodingSpec::new(vec![c], path).unwrap()).unwrap(), vec![k]));
        }
        out.push((full(path), (0..components().len()).collect()));
    }
    out
}

/// Descriptors of `trees` per realized path, encoded once.
fn encoded(trees: &[ScenarioTree]) -> Vec<(RealizedPath, Vec<Descriptor>)> {
    [RealizedPath::MostLikely, RealizedPath::MostRational]
        .into_iter()
        .map(|path| (path, trees.iter().map(|t| encode_tree(t, &full(path).encoding).unwrap()).collect()))
        .collect()
}

fn project(d: &Descriptor, keep: &[usize]) -> Descriptor {
    Descriptor { components: keep.iter().map(|k| d.components[*k].clone()).collect(), ..d.clone() }
}

fn trees(seed: u64, n: usize) -> Vec<ScenarioTree> {
    let mut r = rng(seed);
    let shape = TreeShape { max_depth: 5, ..TreeShape::default() };
    (0..n).map(|k| random_tree(&mut r, &shape, &format!("t{k}"))).collect()
}

const SLACK: f64 = 1e-12;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn tree_distance_is_a_pseudo_metric(seed in any::<u64>()) {
        let t = trees(seed, 3);
        let enc = encoded(&t);
        for (spec, keep) in configurations() {
            let (_, full_ds) = enc.iter().find(|(p, _)| *p == spec.encoding.path).unwrap();
            let ds: Vec<Descriptor> = full_ds.iter().map(|d| project(d, &keep)).collect();
            let d = |a: usize, b: usize| descriptor_distance(&ds[a], &ds[b], &spec).unwrap();
            let (ab, bc, ac) = (d(0, 1), d(1, 2), d(0, 2));
            prop_assert_eq!(d(0, 0), 0.0);
            prop_assert_eq!(ab, d(1, 0));
            prop_assert!(ab >= 0.0);
            prop_assert!(ac <= ab + bc + SLACK, "{} > {} + {}", ac, ab, bc);
            prop_assert!(ab <= ac + bc + SLACK);
            prop_assert!(bc <= ab + ac + SLACK);
            if keep.len() > 1 {
                prop_assert_eq!(ab, tree_distance(&t[0], &t[1], &spec).unwrap());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bundle_distance_is_a_pseudo_metric(seed in any::<u64>()) {
        let pool = trees(seed, 8);
        let mut r = rng(seed ^ 0x5eed);
        let mut pick = || {
            let n = r.gen_range(1..=4);
            pool.choose_multiple(&mut r, n).cloned().collect::<Vec<_>>()
        };
        let (a, b, c) = (pick(), pick(), pick());
        for (spec, _) in configurations().into_iter().filter(|(_, keep)| keep.len() > 1) {
            let d = |x: &[ScenarioTree], y: &[ScenarioTree]| bundle_distance(x, y, &spec).unwrap();
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + SLACK);
        }
    }

    #[test]
    fn neighborhoods_grow_with_epsilon(seed in any::<u64>(), e1 in 0.0f64..1.2, e2 in 0.0f64..1.2) {
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let t = trees(seed, 10);
        for (spec, _) in configurations().into_iter().filter(|(_, keep)| keep.len() > 1) {
            let inner = epsilon_neighborhood(&t[0], small, &t, &spec).unwrap();
            let outer = epsilon_neighborhood(&t[0], large, &t, &spec).unwrap();
            prop_assert!(inner.iter().all(|x| outer.contains(x)));
        }
    }
}

/// Same tree under fresh position ids, with positions and edges reordered.
fn relabel(tree: &ScenarioTree, r: &mut impl Rng) -> ScenarioTree {
    let mut fresh: Vec<usize> = (0..tree.positions.len()).collect();
    fresh.shuffle(r);
    let map: BTreeMap<Id, Id> =
        tree.positions.iter().zip(fresh).map(|(p, k)| (p.id.clone(), Id::new(format!("q{k}")).unwrap())).collect();
    let mut out = tree.clone();
    out.root = map[&tree.root].clone();
    for p in &mut out.positions {
        p.id = map[&p.id].clone();
    }
    for e in &mut out.edges {
        e.tail = map[&e.tail].clone();
        e.head = map[&e.head].clone();
    }
    out.positions.shuffle(r);
    out.edges.shuffle(r);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn descriptors_ignore_position_ids(seed in any::<u64>()) {
        let tree = trees(seed, 1).remove(0);
        let copy = relabel(&tree, &mut rng(seed.wrapping_add(1)));
        copy.validate().unwrap();
        for path in [RealizedPath::MostLikely, RealizedPath::MostRational] {
            let spec = full(path);
            prop_assert_eq!(encode_tree(&tree, &spec.encoding).unwrap(), encode_tree(&copy, &spec.encoding).unwrap());
            prop_assert_eq!(tree_distance(&tree, &copy, &spec).unwrap(), 0.0);
        }
    }
}

#[test]
fn zero_distance_does_not_identify_trees() {
    let spec = &configurations()[0].0;
    let mut checked = 0;
    for seed in 0..50 {
        let tree = trees(seed, 1).remove(0);
        let on_path = mlp(&tree, &MlpTieBreak::Lexicographic).unwrap().leaves.remove(0);
        let Some(off) = tree.leaves().into_iter().map(|p| p.id.clone()).find(|l| *l != on_path) else { continue };
        let mut other = tree.clone();
        other.id = "other".into();
        for rank in other.position_mut(off.as_str()).unwrap().ranks.values_mut() {
            *rank = 5 - *rank;
        }
        assert_ne!(tree.positions, other.positions);
        assert_eq!(tree_distance(&tree, &other, spec).unwrap(), 0.0);
        checked += 1;
    }
    assert!(checked >= 40);
}
