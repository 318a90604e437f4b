mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use scenario_core::domain::{
    aggregate_attribute, aggregate_relation, by_closure, derive_aims, derive_perception, triad_balance,
    validate_assessment_state, Actor, AssessmentState, AttitudeRecord, AttrValue, AxiomConfig, Coalition, DyadicTie,
    LevelMap, Operator, ScoreRule, Sign, Threshold, Visibility, VisibilityRule, WeightRule,
};
use scenario_core::id::Id;

use common::rng;

fn id(s: &str) -> Id {
    Id::new(s).unwrap()
}

fn base() -> AssessmentState {
    common::load("border_state.json")
}

/// Coalition `X` over fresh members `p0..` holding the given readiness levels.
fn coalition_state(levels: &[i64], rule: &ScoreRule, map: &LevelMap) -> AssessmentState {
    let mut db = base();
    let template = db.actors[0].clone();
    let assignment = db.assignments[0].clone();
    let mut members = BTreeSet::new();
    for (k, level) in levels.iter().enumerate() {
        let member = id(&format!("p{k}"));
        db.actors.push(Actor { id: member.clone(), ..template.clone() });
        let mut a = assignment.clone();
        a.subject = member.clone();
        a.value = AttrValue::Number(*level as f64);
        db.assignments.push(a);
        members.insert(member);
    }
    db.coalitions = vec![Coalition { id: id("X"), members }];
    let ty = &mut db.attribute_types[0];
    ty.aggregative = true;
    ty.score_rule = Some(rule.clone());
    ty.level_map = Some(map.clone());
    db
}

fn level_maps() -> Vec<LevelMap> {
    let steps = [(0.0, 1), (3.0, 2), (6.0, 3), (9.0, 4), (12.0, 5)];
    vec![LevelMap::RoundHalfUp, LevelMap::Thresholds(steps.iter().map(|&(at, level)| Threshold { at, level }).collect())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn raising_a_member_never_lowers_the_coalition(levels in prop::collection::vec(1i64..=5, 2..=5),
                                                   k in any::<prop::sample::Index>(), up in 1i64..=4) {
        let k = k.index(levels.len());
        let mut raised = levels.clone();
        raised[k] = (raised[k] + up).min(5);
        for rule in [ScoreRule::Sum, ScoreRule::Mean, ScoreRule::Max, ScoreRule::Min] {
            for map in level_maps() {
                let level = |ls: &[i64]| aggregate_attribute(&coalition_state(ls, &rule, &map), &id("X"), &id("readiness")).unwrap();
                let (before, after) = (level(&levels), level(&raised));
                prop_assert!(after >= before, "{:?} {:?}: {:?} -> {} but {:?} -> {}", rule, map, levels, before, raised, after);
            }
        }
    }
}

/// The fixture plus an undirected relation and random ties among its actors.
fn tie_state(seed: u64) -> AssessmentState {
    let mut r = rng(seed);
    let mut db = base();
    let mut allied = db.relation_types[0].clone();
    allied.id = id("allied");
    allied.directed = false;
    allied.layers = ["military".to_string(), "political".to_string()].into();
    db.relation_types.push(allied);
    let template = db.ties[0].clone();
    let actors: Vec<Id> = db.actors.iter().map(|a| a.id.clone()).collect();
    for _ in 0..r.gen_range(1..12) {
        let pair: Vec<&Id> = actors.choose_multiple(&mut r, 2).collect();
        db.ties.push(DyadicTie {
            relation: id(if r.gen_bool(0.5) { "allied" } else { "deters" }),
            source: pair[0].clone(),
            target: pair[1].clone(),
            weight: r.gen_range(1..=8) as f64 / 8.0,
            sign: *[Sign::Positive, Sign::Negative, Sign::Neutral].choose(&mut r).unwrap(),
            layer: if r.gen_bool(0.5) { "military" } else { "political" }.into(),
            visibility: match r.gen_range(0..3) {
                0 => Visibility::Observed,
                1 => Visibility::Signalled,
                _ => Visibility::Perceived([pair[0].clone()].into()),
            },
            ..template.clone()
        });
    }
    let props: Vec<Id> = db.propositions.iter().map(|p| p.id.clone()).collect();
    let attitude = db.attitudes[0].clone();
    for _ in 0..r.gen_range(0..6) {
        db.attitudes.push(AttitudeRecord {
            holder: actors.choose(&mut r).unwrap().clone(),
            operator: *[Operator::W, Operator::B].choose(&mut r).unwrap(),
            content: props.choose(&mut r).unwrap().clone(),
            params: None,
            ..attitude.clone()
        });
    }
    db
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn relation_aggregate_ignores_tie_order(seed in any::<u64>()) {
        let db = tie_state(seed);
        let mut shuffled = db.clone();
        shuffled.ties.shuffle(&mut rng(seed.wrapping_mul(3)));
        let entities = [id("a"), id("b"), id("m"), id("X")];
        for rel in [id("allied"), id("deters")] {
            for x in &entities {
                for y in &entities {
                    let one = aggregate_relation(&db, x, y, &rel, WeightRule::Mean, VisibilityRule::Mode).unwrap();
                    let two = aggregate_relation(&shuffled, x, y, &rel, WeightRule::Mean, VisibilityRule::Mode).unwrap();
                    prop_assert_eq!(one.sign, two.sign);
                    prop_assert!((one.weight - two.weight).abs() < 1e-12);
                    if rel.as_str() == "allied" {
                        let back = aggregate_relation(&db, y, x, &rel, WeightRule::Mean, VisibilityRule::Mode).unwrap();
                        prop_assert_eq!(one.sign, back.sign);
                        prop_assert!((one.weight - back.weight).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn triad_balance_is_rotation_invariant(seed in any::<u64>()) {
        let db = tie_state(seed);
        let (a, b, m) = (id("a"), id("b"), id("m"));
        for rel in [id("allied"), id("deters")] {
            for layer in ["military", "political"] {
                let abc = triad_balance(&db, &a, &b, &m, &rel, layer).unwrap();
                prop_assert_eq!(abc, triad_balance(&db, &b, &m, &a, &rel, layer).unwrap());
                prop_assert_eq!(abc, triad_balance(&db, &m, &a, &b, &rel, layer).unwrap());
            }
        }
    }

    #[test]
    fn validation_is_repeatable(seed in any::<u64>()) {
        let db = tie_state(seed);
        let copy = db.clone();
        let config = AxiomConfig::default();
        prop_assert_eq!(validate_assessment_state(&db, &config), validate_assessment_state(&db, &config));
        prop_assert_eq!(db, copy);
    }

    #[test]
    fn aims_come_from_wants(seed in any::<u64>()) {
        let db = tie_state(seed);
        for (holder, content) in derive_aims(&db) {
            prop_assert!(db.holds(holder.as_str(), Operator::W, content.as_str()));
        }
    }

    #[test]
    fn perception_only_removes_records(seed in any::<u64>()) {
        let db = tie_state(seed);
        for actor in db.actors.iter().map(|a| a.id.clone()) {
            let view = derive_perception(&db, &actor);
            prop_assert!(view.ties.iter().all(|t| db.ties.contains(t)));
            prop_assert!(view.events.iter().all(|e| db.events.contains(e)));
            prop_assert!(view.hyperedges.iter().all(|h| db.hyperedges.contains(h)));
            prop_assert_eq!(&view.attitudes, &db.attitudes);
        }
    }

    #[test]
    fn by_order_is_a_strict_partial_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = 7;
        let nodes: Vec<Id> = (0..n).map(|k| id(&format!("act{k}"))).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut r);
        // Edges only run forward in a random topological order, so every set is acyclic.
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if r.gen_bool(0.3) {
                    edges.push((&nodes[order[i]], &nodes[order[j]]));
                }
            }
        }
        let by = by_closure(edges.iter().copied()).unwrap();
        let mut reach = vec![vec![false; n]; n];
        for (a, b) in &edges {
            let (i, j) = (nodes.iter().position(|x| x == *a).unwrap(), nodes.iter().position(|x| x == *b).unwrap());
            reach[i][j] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    reach[i][j] |= reach[i][k] && reach[k][j];
                }
            }
        }
        for i in 0..n {
            prop_assert!(!by.precedes(&nodes[i], &nodes[i]));
            for j in 0..n {
                prop_assert_eq!(by.precedes(&nodes[i], &nodes[j]), reach[i][j]);
            }
        }
        if let Some((a, b)) = edges.first() {
            prop_assert!(by_closure(edges.iter().copied().chain([(*b, *a)])).is_err());
        }
    }
}
