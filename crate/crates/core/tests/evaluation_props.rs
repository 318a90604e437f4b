use std::collections::BTreeMap;

use proptest::prelude::*;

use scenario_core::evaluation::{
    conditional_eu_threshold, dominance_graph, pareto_frontier, Cell, DominanceCriterion, EvaluationMatrix,
    OptionOutcomes, Verdict,
};

fn matrix(values: &[Vec<Option<i32>>]) -> EvaluationMatrix {
    let rows = (0..values.len()).map(|i| format!("a{i}")).collect();
    let columns = (0..values[0].len()).map(|j| format!("s{j}")).collect();
    let entries = values
        .iter()
        .map(|row| row.iter().map(|v| v.map_or_else(|| Cell::unknown("missing"), |x| Cell::Value(x as f64))).collect())
        .collect();
    EvaluationMatrix { rows, columns, entries, provenance: BTreeMap::new(), sources: BTreeMap::new() }
}

fn values() -> impl Strategy<Value = Vec<Vec<Option<i32>>>> {
    (1usize..=4, 1usize..=10).prop_flat_map(|(actors, scenarios)| {
        let cell = prop_oneof![9 => (-3i32..=3).prop_map(Some), 1 => Just(None)];
        prop::collection::vec(prop::collection::vec(cell, scenarios), actors)
    })
}

/// Pairwise comparison of every column against every other, over every actor.
fn oracle(values: &[Vec<Option<i32>>]) -> (Vec<String>, BTreeMap<String, Vec<String>>, Vec<String>) {
    let n = values[0].len();
    let column = |j: usize| -> Option<Vec<i32>> { values.iter().map(|row| row[j]).collect() };
    let mut frontier = Vec::new();
    let mut dominated = BTreeMap::new();
    let mut excluded = Vec::new();
    for j in 0..n {
        let Some(u) = column(j) else {
            excluded.push(format!("s{j}"));
            continue;
        };
        let mut by = Vec::new();
        for i in 0..n {
            let Some(w) = column(i) else { continue };
            let mut weakly = true;
            let mut strictly = false;
            for k in 0..u.len() {
                weakly &= w[k] >= u[k];
                strictly |= w[k] > u[k];
            }
            if weakly && strictly {
                by.push(format!("s{i}"));
            }
        }
        if by.is_empty() {
            frontier.push(format!("s{j}"));
        } else {
            dominated.insert(format!("s{j}"), by);
        }
    }
    (frontier, dominated, excluded)
}

fn actor_rows(m: &EvaluationMatrix) -> Vec<String> {
    m.rows.clone()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn frontier_matches_pairwise_oracle(v in values()) {
        let m = matrix(&v);
        let got = pareto_frontier(&m, &actor_rows(&m));
        let (frontier, dominated, excluded) = oracle(&v);
        prop_assert_eq!(got.frontier, frontier);
        prop_assert_eq!(got.dominated, dominated);
        prop_assert_eq!(got.excluded, excluded);
    }

    #[test]
    fn frontier_survives_increasing_transforms(v in values(), scales in prop::collection::vec((0.1f64..5.0, -10.0f64..10.0, 0.0f64..2.0), 4)) {
        let m = matrix(&v);
        let mut moved = m.clone();
        for (row, (a, b, c)) in moved.entries.iter_mut().zip(&scales) {
            for cell in row.iter_mut() {
                if let Cell::Value(x) = cell {
                    *x = a * *x + b + c * x.powi(3);
                }
            }
        }
        let rows = actor_rows(&m);
        prop_assert_eq!(pareto_frontier(&moved, &rows).frontier, pareto_frontier(&m, &rows).frontier);
    }

    #[test]
    fn numeric_dominance_is_acyclic(v in values()) {
        let m = matrix(&v);
        let pareto = dominance_graph(&m, &DominanceCriterion::Pareto { rows: actor_rows(&m) });
        prop_assert!(pareto.is_acyclic());
        let single = dominance_graph(&m, &DominanceCriterion::SingleActor { entity: "a0".into() });
        prop_assert!(single.is_acyclic());
        let undominated = pareto.undominated();
        let excluded = &pareto.excluded;
        let frontier = pareto_frontier(&m, &actor_rows(&m)).frontier;
        let known: Vec<String> = undominated.into_iter().filter(|s| !excluded.contains(s)).collect();
        prop_assert_eq!(known, frontier);
    }

    #[test]
    fn threshold_verdict_flips_once(r in 0.0f64..=1.0, yield_first in 0.0f64..10.0, gap in 0.1f64..10.0,
                                    yield_second in -5.0f64..10.0, resist_second in -5.0f64..5.0) {
        let first = OptionOutcomes { option: "first".into(), if_yield: yield_first, if_resist: yield_first - gap };
        let second = OptionOutcomes { option: "second".into(), if_yield: yield_second, if_resist: resist_second };
        let t = conditional_eu_threshold(&first, &second, 0.5, r).unwrap().threshold.unwrap();
        let mut flips = 0;
        let mut last: Option<Verdict> = None;
        for k in 0..=200 {
            let q = k as f64 / 200.0;
            let verdict = conditional_eu_threshold(&first, &second, q, r).unwrap().verdict;
            if (q - t).abs() > 1e-9 {
                prop_assert_eq!(&verdict, if q > t { &Verdict::First } else { &Verdict::Second });
            }
            if verdict == Verdict::Indifferent {
                continue;
            }
            if last.as_ref().is_some_and(|l| *l != verdict) {
                flips += 1;
            }
            last = Some(verdict);
        }
        prop_assert!(flips <= 1);
        if t > 1e-6 && t < 1.0 - 1e-6 {
            prop_assert_eq!(flips, 1);
        } else if t < -1e-6 || t > 1.0 + 1e-6 {
            prop_assert_eq!(flips, 0);
        }
    }
}
