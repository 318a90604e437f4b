//! Bundles: the set of scenario trees kept for one stage.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::generate::{generate_tree, GenError, GenerationParams};
use super::mlp::{mlp, MlpTieBreak};
use super::model::{EdgeLabel, ScenarioTree, TreeError};
use crate::domain::state::{AssessmentState, Stage};
use crate::id::Id;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BundleError {
    #[error("tree {tree} belongs to stage {found}, bundle is for stage {expected}")]
    MixedStage { tree: String, expected: Stage, found: Stage },
    #[error("duplicate tree id {0}")]
    DuplicateTree(String),
    #[error("tree {tree}: {source}")]
    Tree { tree: String, source: TreeError },
    #[error(transparent)]
    Generation(#[from] GenError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum SelectionRule {
    #[default]
    All,
    /// The k trees whose most likely path is likeliest.
    TopKByLikelihood { k: usize },
    /// Greedily add the tree covering the most edge labels not yet covered.
    CoverageGreedy { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub stage: Stage,
    pub trees: Vec<ScenarioTree>,
    /// Ids of the selected trees, in selection order.
    pub selection: Vec<String>,
}

impl Bundle {
    pub fn selected(&self) -> impl Iterator<Item = &ScenarioTree> {
        self.selection.iter().filter_map(|id| self.trees.iter().find(|t| t.id == *id))
    }

    pub fn tree(&self, id: &str) -> Option<&ScenarioTree> {
        self.trees.iter().find(|t| t.id == id)
    }
}

pub fn select_bundle(stage: Stage, trees: Vec<ScenarioTree>, rule: &SelectionRule) -> Result<Bundle, BundleError> {
    let mut ids = BTreeSet::new();
    for t in &trees {
        if t.stage != stage {
            return Err(BundleError::MixedStage { tree: t.id.clone(), expected: stage, found: t.stage });
        }
        if !ids.insert(t.id.as_str()) {
            return Err(BundleError::DuplicateTree(t.id.clone()));
        }
        t.validate().map_err(|source| BundleError::Tree { tree: t.id.clone(), source })?;
    }
    let selection = match rule {
        SelectionRule::All => trees.iter().map(|t| t.id.clone()).collect(),
        SelectionRule::TopKByLikelihood { k } => {
            let mut scored = Vec::new();
            for t in &trees {
                let l = mlp(t, &MlpTieBreak::Lexicographic)
                    .map_err(|source| BundleError::Tree { tree: t.id.clone(), source })?
                    .likelihood;
                scored.push((l, t.id.clone()));
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
            scored.into_iter().take(*k).map(|(_, id)| id).collect()
        }
        SelectionRule::CoverageGreedy { k } => {
            let mut covered: BTreeSet<&EdgeLabel> = BTreeSet::new();
            let mut left: Vec<&ScenarioTree> = trees.iter().collect();
            left.sort_by(|a, b| a.id.cmp(&b.id));
            let mut out = Vec::new();
            while out.len() < *k && !left.is_empty() {
                let gain = |t: &ScenarioTree| t.labels().difference(&covered).count();
                let mut best = 0;
                for i in 1..left.len() {
                    if gain(left[i]) > gain(left[best]) {
                        best = i;
                    }
                }
                let t = left.remove(best);
                covered.extend(t.labels());
                out.push(t.id.clone());
            }
            out
        }
    };
    Ok(Bundle { stage, trees, selection })
}

/// Methodological choices: roots, generation thresholds, selection and distance weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodParams {
    #[serde(default)]
    pub name: String,
    /// Roots to grow trees from; every entity when empty.
    #[serde(default)]
    pub roots: Vec<Id>,
    #[serde(default)]
    pub generation: GenerationParams,
    #[serde(default)]
    pub selection: SelectionRule,
    /// Distance weights overriding the encoding's defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneratedBundle {
    pub bundle: Bundle,
    pub warnings: Vec<String>,
}

/// Grows one tree per root and selects the bundle; roots without branches are dropped.
pub fn generate_bundle(db: &AssessmentState, params: &MethodParams) -> Result<GeneratedBundle, BundleError> {
    let roots: Vec<Id> = if params.roots.is_empty() { db.entity_ids().into_iter().collect() } else { params.roots.clone() };
    let mut trees = Vec::new();
    let mut warnings = Vec::new();
    for root in &roots {
        let g = generate_tree(db, root, &params.generation)?;
        if g.tree.edges.is_empty() {
            warnings.push(format!("root {root} dropped: no admissible branches"));
        } else {
            warnings.extend(g.warnings);
            trees.push(g.tree);
        }
    }
    if trees.is_empty() {
        warnings.push("no root produced a tree; the bundle is empty".into());
    }
    let bundle = select_bundle(db.stage, trees, &params.selection)?;
    Ok(GeneratedBundle { bundle, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::id::id;
    use crate::tree::model::{Edge, Position, PositionKind};

    fn two_way(name: &str, stage: Stage, labels: [&str; 2], l: f64) -> ScenarioTree {
        ScenarioTree {
            id: name.into(),
            stage,
            root: id("r"),
            positions: vec![
                Position::new(id("r"), PositionKind::Decision, Some(id("a")), 0),
                Position::new(id("x"), PositionKind::Terminal, None, 1),
                Position::new(id("y"), PositionKind::Terminal, None, 1),
            ],
            edges: vec![
                Edge { tail: id("r"), head: id("x"), label: labels[0].parse().unwrap(), likelihood: Some(l) },
                Edge { tail: id("r"), head: id("y"), label: labels[1].parse().unwrap(), likelihood: Some(1.0 - l) },
            ],
        }
    }

    #[test]
    fn rules() {
        let trees = vec![two_way("t1", 1, ["a", "b"], 0.6), two_way("t2", 1, ["a", "c"], 0.9), two_way("t3", 1, ["d", "e"], 0.5)];
        let all = select_bundle(1, trees.clone(), &SelectionRule::All).unwrap();
        assert_eq!(all.selection, ["t1", "t2", "t3"]);
        let top = select_bundle(1, trees.clone(), &SelectionRule::TopKByLikelihood { k: 2 }).unwrap();
        assert_eq!(top.selection, ["t2", "t1"]);
        let cov = select_bundle(1, trees, &SelectionRule::CoverageGreedy { k: 2 }).unwrap();
        assert_eq!(cov.selection, ["t1", "t3"]);
    }

    #[test]
    fn mixed_stage_rejected() {
        let trees = vec![two_way("t1", 1, ["a", "b"], 0.5), two_way("t2", 2, ["a", "b"], 0.5)];
        assert!(matches!(select_bundle(1, trees, &SelectionRule::All), Err(BundleError::MixedStage { .. })));
    }
}
