//! Most rational path: backward induction under strict preferences or
//! decision rules over world states.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{Edge, EdgeLabel, Position, PositionKind, ScenarioTree, TreeError, TreeIndex};
use crate::id::Id;

pub const PRIOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("no rank for entity {entity} at leaf {leaf}")]
    MissingRank { entity: Id, leaf: Id },
    #[error("no utility for entity {entity} at leaf {leaf}")]
    MissingValue { entity: Id, leaf: Id },
    #[error("entity {entity} at leaf {leaf}: {found} world-state utilities, expected {expected}")]
    WorldCount { entity: Id, leaf: Id, expected: usize, found: usize },
    #[error("invalid prior: {0}")]
    Prior(String),
    #[error("maxmin expected utility needs a non-empty prior set")]
    EmptyPriorSet,
    #[error("policy undefined at reachable position {0}")]
    PolicyUndefined(Id),
    #[error("policy picks {label} at {position}, which is not an outgoing edge there")]
    NotOutgoing { position: Id, label: EdgeLabel },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Smallest edge label wins.
    #[default]
    Lexicographic,
    ReverseLexicographic,
}

/// Picks one realization at every event position.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSelector {
    /// Realization to follow per event; others follow the most likely outcome.
    #[serde(default)]
    pub choices: BTreeMap<Id, String>,
}

impl EventSelector {
    pub fn select<'a>(&self, position: &Position, out: &[&'a Edge]) -> &'a Edge {
        let forced = position.label.as_ref().and_then(|e| self.choices.get(e));
        if let Some(r) = forced {
            if let Some(edge) = out.iter().find(|e| matches!(&e.label, EdgeLabel::Outcome { realization, .. } if realization == r)) {
                return edge;
            }
        }
        let mut best = out[0];
        for e in &out[1..] {
            if e.likelihood.unwrap_or(0.0) > best.likelihood.unwrap_or(0.0) {
                best = e;
            }
        }
        best
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    pub decisions: BTreeMap<Id, EdgeLabel>,
    pub events: BTreeMap<Id, EdgeLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MrpSolution {
    pub policy: Policy,
    pub path: Vec<EdgeLabel>,
    pub leaf: Id,
    /// Terminal position induced from every position.
    pub induced: BTreeMap<Id, Id>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum DecisionRule {
    StrictPreference,
    Seu { prior: Vec<f64> },
    Maximin,
    MaxminEu { priors: Vec<Vec<f64>> },
}

fn check_prior(prior: &[f64]) -> Result<(), SolveError> {
    if prior.is_empty() {
        return Err(SolveError::Prior("empty prior".into()));
    }
    if prior.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(SolveError::Prior("probabilities outside [0,1]".into()));
    }
    let sum: f64 = prior.iter().sum();
    if (sum - 1.0).abs() > PRIOR_TOLERANCE {
        return Err(SolveError::Prior(format!("sums to {sum}")));
    }
    Ok(())
}

/// Generic induction: at each decision position the acting entity picks the
/// child whose induced leaf scores highest.
fn induct<F>(tree: &ScenarioTree, selector: &EventSelector, tie: TieBreak, score: F) -> Result<MrpSolution, SolveError>
where
    F: Fn(&Id, &Position) -> Result<f64, SolveError>,
{
    tree.validate()?;
    let index = tree.index();
    let mut induced: BTreeMap<Id, Id> = BTreeMap::new();
    let mut policy = Policy::default();
    for p in index.bfs().into_iter().rev() {
        let out = index.children(p.id.as_str());
        if out.is_empty() {
            induced.insert(p.id.clone(), p.id.clone());
            continue;
        }
        let chosen = match p.kind {
            PositionKind::Decision => {
                let actor = p.label.as_ref().expect("validated trees label decision positions");
                let mut best: Option<(&Edge, f64)> = None;
                for e in out {
                    let leaf = index.position(induced[&e.head].as_str()).expect("induced leaves exist");
                    let s = score(actor, leaf)?;
                    let better = match (best, tie) {
                        (None, _) => true,
                        (Some((_, b)), TieBreak::Lexicographic) => s > b,
                        (Some((_, b)), TieBreak::ReverseLexicographic) => s >= b,
                    };
                    if better {
                        best = Some((e, s));
                    }
                }
                let e = best.expect("non-empty").0;
                policy.decisions.insert(p.id.clone(), e.label.clone());
                e
            }
            _ => {
                let e = selector.select(p, out);
                policy.events.insert(p.id.clone(), e.label.clone());
                e
            }
        };
        let leaf = induced[&chosen.head].clone();
        induced.insert(p.id.clone(), leaf);
    }
    let path = induced_path(tree, &policy)?;
    let leaf = induced[&tree.root].clone();
    Ok(MrpSolution { policy, path, leaf, induced })
}

/// Backward induction on ordinal leaf ranks.
pub fn backward_induct(tree: &ScenarioTree, selector: &EventSelector, tie: TieBreak) -> Result<MrpSolution, SolveError> {
    induct(tree, selector, tie, |entity, leaf| {
        leaf.ranks
            .get(entity)
            .map(|r| *r as f64)
            .ok_or_else(|| SolveError::MissingRank { entity: entity.clone(), leaf: leaf.id.clone() })
    })
}

fn world_utilities(entity: &Id, leaf: &Position) -> Result<Vec<f64>, SolveError> {
    if let Some(ws) = leaf.world_values.get(entity) {
        return Ok(ws.clone());
    }
    leaf.values
        .get(entity)
        .map(|v| vec![*v])
        .ok_or_else(|| SolveError::MissingValue { entity: entity.clone(), leaf: leaf.id.clone() })
}

fn expected(entity: &Id, leaf: &Position, prior: &[f64]) -> Result<f64, SolveError> {
    let us = world_utilities(entity, leaf)?;
    let us = if us.len() == 1 && leaf.world_values.get(entity).is_none() { vec![us[0]; prior.len()] } else { us };
    if us.len() != prior.len() {
        return Err(SolveError::WorldCount { entity: entity.clone(), leaf: leaf.id.clone(), expected: prior.len(), found: us.len() });
    }
    Ok(us.iter().zip(prior).map(|(u, p)| u * p).sum())
}

/// Backward induction where each decision applies `rule` over world states.
pub fn mrp_under_uncertainty(
    tree: &ScenarioTree,
    rule: &DecisionRule,
    selector: &EventSelector,
    tie: TieBreak,
) -> Result<MrpSolution, SolveError> {
    match rule {
        DecisionRule::StrictPreference => backward_induct(tree, selector, tie),
        DecisionRule::Seu { prior } => {
            check_prior(prior)?;
            induct(tree, selector, tie, |a, leaf| expected(a, leaf, prior))
        }
        DecisionRule::Maximin => induct(tree, selector, tie, |a, leaf| {
            Ok(world_utilities(a, leaf)?.into_iter().fold(f64::INFINITY, f64::min))
        }),
        DecisionRule::MaxminEu { priors } => {
            if priors.is_empty() {
                return Err(SolveError::EmptyPriorSet);
            }
            for p in priors {
                check_prior(p)?;
            }
            induct(tree, selector, tie, |a, leaf| {
                priors.iter().try_fold(f64::INFINITY, |m, p| Ok(m.min(expected(a, leaf, p)?)))
            })
        }
    }
}

/// The root-to-leaf trajectory a policy induces.
pub fn induced_path(tree: &ScenarioTree, policy: &Policy) -> Result<Vec<EdgeLabel>, SolveError> {
    let index = TreeIndex::new(tree);
    let mut at = tree.root.clone();
    let mut path = Vec::new();
    loop {
        let out = index.children(at.as_str());
        if out.is_empty() {
            return Ok(path);
        }
        let pos = index.position(at.as_str()).ok_or_else(|| TreeError::UnknownPosition(at.clone()))?;
        let table = if pos.kind == PositionKind::Decision { &policy.decisions } else { &policy.events };
        let label = table.get(&at).ok_or_else(|| SolveError::PolicyUndefined(at.clone()))?;
        let edge = out
            .iter()
            .find(|e| e.label == *label)
            .ok_or_else(|| SolveError::NotOutgoing { position: at.clone(), label: label.clone() })?;
        path.push(edge.label.clone());
        at = edge.head.clone();
    }
}
