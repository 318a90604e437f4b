//! Most likely path by dynamic programming over conditional edge likelihoods.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::model::{Edge, EdgeLabel, ScenarioTree, TreeError, TreeIndex};
use crate::id::Id;

/// Relative tolerance under which two continuation likelihoods count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum MlpTieBreak {
    #[default]
    Lexicographic,
    /// Prefer the maximizer whose continuation ends at the leaf with the higher value for `entity`.
    Secondary { entity: Id },
    /// Keep every maximizer.
    SetValued,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlpSolution {
    /// One path, or every maximizing path under the set-valued rule.
    pub paths: Vec<Vec<EdgeLabel>>,
    pub leaves: Vec<Id>,
    /// L of the returned path(s), equal to J at the root.
    pub likelihood: f64,
    /// Maximal continuation likelihood J per position.
    pub continuation: BTreeMap<Id, f64>,
}

fn maximizers<'a>(out: &[&'a Edge], j: &BTreeMap<Id, f64>) -> (f64, Vec<&'a Edge>) {
    let score = |e: &Edge| e.likelihood.expect("likelihoods checked") * j[&e.head];
    let best = out.iter().map(|e| score(e)).fold(f64::NEG_INFINITY, f64::max);
    let winners = out.iter().copied().filter(|e| tied(score(e), best)).collect();
    (best, winners)
}

pub fn mlp(tree: &ScenarioTree, tie: &MlpTieBreak) -> Result<MlpSolution, TreeError> {
    tree.validate()?;
    tree.require_likelihoods()?;
    let index = tree.index();
    let order = index.bfs();
    let mut j: BTreeMap<Id, f64> = BTreeMap::new();
    let mut choice: BTreeMap<Id, &Edge> = BTreeMap::new();
    // Leaf reached by following the chosen edges, used by the secondary rule.
    let mut reach: BTreeMap<Id, Id> = BTreeMap::new();
    for p in order.iter().rev() {
        let out = index.children(p.id.as_str());
        if out.is_empty() {
            j.insert(p.id.clone(), 1.0);
            reach.insert(p.id.clone(), p.id.clone());
            continue;
        }
        let (_, winners) = maximizers(out, &j);
        let pick = match tie {
            MlpTieBreak::Secondary { entity } => {
                let value = |e: &Edge| {
                    let leaf = index.position(reach[&e.head].as_str()).expect("leaf exists");
                    leaf.values.get(entity).copied().unwrap_or(f64::NEG_INFINITY)
                };
                let mut best = winners[0];
                for e in &winners[1..] {
                    if value(e) > value(best) {
                        best = e;
                    }
                }
                best
            }
            _ => winners[0],
        };
        j.insert(p.id.clone(), pick.likelihood.expect("checked") * j[&pick.head]);
        reach.insert(p.id.clone(), reach[&pick.head].clone());
        choice.insert(p.id.clone(), pick);
    }

    let mut paths = Vec::new();
    let mut leaves = Vec::new();
    if *tie == MlpTieBreak::SetValued {
        collect_all(&index, &j, tree.root.as_str(), &mut Vec::new(), &mut paths, &mut leaves);
    } else {
        let mut at = tree.root.clone();
        let mut path = Vec::new();
        while let Some(e) = choice.get(&at) {
            path.push(e.label.clone());
            at = e.head.clone();
        }
        paths.push(path);
        leaves.push(at);
    }
    Ok(MlpSolution { paths, leaves, likelihood: j[&tree.root], continuation: j })
}

fn collect_all(
    index: &TreeIndex<'_>,
    j: &BTreeMap<Id, f64>,
    at: &str,
    prefix: &mut Vec<EdgeLabel>,
    paths: &mut Vec<Vec<EdgeLabel>>,
    leaves: &mut Vec<Id>,
) {
    let out = index.children(at);
    if out.is_empty() {
        paths.push(prefix.clone());
        leaves.push(index.position(at).expect("exists").id.clone());
        return;
    }
    for e in maximizers(out, j).1 {
        prefix.push(e.label.clone());
        collect_all(index, j, e.head.as_str(), prefix, paths, leaves);
        prefix.pop();
    }
}

/// Product of edge likelihoods from the root to every leaf.
pub fn leaf_likelihoods(tree: &ScenarioTree) -> Result<BTreeMap<Id, f64>, TreeError> {
    tree.validate()?;
    tree.require_likelihoods()?;
    let index = tree.index();
    let mut acc: BTreeMap<Id, f64> = BTreeMap::from([(tree.root.clone(), 1.0)]);
    let mut leaves = BTreeMap::new();
    for p in index.bfs() {
        let here = acc[&p.id];
        let out = index.children(p.id.as_str());
        if out.is_empty() {
            leaves.insert(p.id.clone(), here);
        }
        for e in out {
            acc.insert(e.head.clone(), here * e.likelihood.expect("checked"));
        }
    }
    Ok(leaves)
}
