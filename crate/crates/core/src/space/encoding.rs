//! Comparison descriptors of trees: extractors and per-component discrepancies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::id::Id;
use crate::tree::mlp::{mlp, MlpTieBreak};
use crate::tree::model::{EdgeLabel, PositionKind, ScenarioTree, TreeError};
use crate::tree::mrp::{backward_induct, EventSelector, SolveError, TieBreak};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EncodingError {
    #[error("an encoding needs at least one component")]
    NoComponents,
    #[error("component {component}: {reason}")]
    Inapplicable { component: String, reason: String },
    #[error("{weights} weights for {components} components")]
    WeightCount { weights: usize, components: usize },
    #[error("weight {0} is not finite and non-negative")]
    Weight(f64),
    #[error("trees {0} and {1} belong to different stages")]
    StageMismatch(String, String),
    #[error("bundle distance needs non-empty bundles")]
    EmptyBundle,
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Which root-to-leaf trajectory a descriptor reads.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealizedPath {
    #[default]
    MostLikely,
    MostRational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Extractor {
    /// Leaf ranks of the listed entities on the realized path.
    TerminalOutcomeVector { entities: Vec<Id>, rank_min: f64, rank_max: f64 },
    /// 1 when the coalition acts somewhere on the realized path.
    CoalitionTrajectoryFlags { coalitions: Vec<Id> },
    /// First option each entity executes on the realized path, or `none`.
    DominantActionLabels { entities: Vec<Id> },
    /// Event outcomes met on the realized path.
    EventPatternMultiset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discrepancy {
    /// L1 distance divided by the component's maximum, capped at 1.
    NormalizedL1,
    /// Fraction of coordinates that differ.
    ZeroOne,
    /// One minus multiset intersection over union.
    MultisetJaccard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub name: String,
    pub extractor: Extractor,
    pub discrepancy: Discrepancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodingSpec {
    pub components: Vec<Component>,
    #[serde(default)]
    pub path: RealizedPath,
}

impl EncodingSpec {
    pub fn new(components: Vec<Component>, path: RealizedPath) -> Result<Self, EncodingError> {
        let spec = EncodingSpec { components, path };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), EncodingError> {
        if self.components.is_empty() {
            return Err(EncodingError::NoComponents);
        }
        for c in &self.components {
            let fits = matches!(
                (&c.extractor, c.discrepancy),
                (Extractor::TerminalOutcomeVector { .. }, Discrepancy::NormalizedL1 | Discrepancy::ZeroOne)
                    | (Extractor::CoalitionTrajectoryFlags { .. }, Discrepancy::NormalizedL1 | Discrepancy::ZeroOne)
                    | (Extractor::DominantActionLabels { .. }, Discrepancy::ZeroOne | Discrepancy::MultisetJaccard)
                    | (Extractor::EventPatternMultiset, Discrepancy::MultisetJaccard)
            );
            if !fits {
                return Err(EncodingError::Inapplicable {
                    component: c.name.clone(),
                    reason: format!("{:?} does not apply to this extractor", c.discrepancy),
                });
            }
            if let Extractor::TerminalOutcomeVector { rank_min, rank_max, .. } = c.extractor {
                if !(rank_max > rank_min) {
                    return Err(EncodingError::Inapplicable { component: c.name.clone(), reason: "empty rank range".into() });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComponentValue {
    Vector(Vec<f64>),
    Labels(Vec<String>),
    Multiset(BTreeMap<String, usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub tree: String,
    pub stage: u32,
    pub components: Vec<ComponentValue>,
}

pub const NO_ACTION: &str = "none";

/// Decision-position actors and edge labels along the realized path, plus its leaf.
fn realized(tree: &ScenarioTree, path: RealizedPath) -> Result<(Vec<(Option<Id>, EdgeLabel)>, Id), EncodingError> {
    let labels = match path {
        RealizedPath::MostLikely => mlp(tree, &MlpTieBreak::Lexicographic)?.paths.remove(0),
        RealizedPath::MostRational => backward_induct(tree, &EventSelector::default(), TieBreak::Lexicographic)?.path,
    };
    let index = tree.index();
    let mut at = tree.root.clone();
    let mut steps = Vec::new();
    for l in labels {
        let pos = index.position(at.as_str()).expect("path positions exist");
        let actor = (pos.kind == PositionKind::Decision).then(|| pos.label.clone()).flatten();
        let e = index.children(at.as_str()).iter().find(|e| e.label == l).expect("path follows edges");
        steps.push((actor, l));
        at = e.head.clone();
    }
    Ok((steps, at))
}

pub fn encode_tree(tree: &ScenarioTree, spec: &EncodingSpec) -> Result<Descriptor, EncodingError> {
    spec.check()?;
    let (steps, leaf) = realized(tree, spec.path)?;
    let leaf = tree.position(leaf.as_str()).expect("leaf exists");
    let mut components = Vec::new();
    for c in &spec.components {
        let value = match &c.extractor {
            Extractor::TerminalOutcomeVector { entities, .. } => {
                let ranks: Option<Vec<f64>> = entities.iter().map(|e| leaf.ranks.get(e).map(|r| *r as f64)).collect();
                ComponentValue::Vector(ranks.ok_or_else(|| EncodingError::Inapplicable {
                    component: c.name.clone(),
                    reason: format!("leaf {} lacks ranks for some of {entities:?}", leaf.id),
                })?)
            }
            Extractor::CoalitionTrajectoryFlags { coalitions } => ComponentValue::Vector(
                coalitions
                    .iter()
                    .map(|x| if steps.iter().any(|(a, _)| a.as_ref() == Some(x)) { 1.0 } else { 0.0 })
                    .collect(),
            ),
            Extractor::DominantActionLabels { entities } => ComponentValue::Labels(
                entities
                    .iter()
                    .map(|x| {
                        steps
                            .iter()
                            .find_map(|(a, l)| match l {
                                EdgeLabel::Option(o) if a.as_ref() == Some(x) => Some(o.to_string()),
                                _ => None,
                            })
                            .unwrap_or_else(|| NO_ACTION.to_string())
                    })
                    .collect(),
            ),
            Extractor::EventPatternMultiset => {
                let mut m = BTreeMap::new();
                for (_, l) in &steps {
                    if let EdgeLabel::Outcome { .. } = l {
                        *m.entry(l.to_string()).or_insert(0) += 1;
                    }
                }
                ComponentValue::Multiset(m)
            }
        };
        components.push(value);
    }
    Ok(Descriptor { tree: tree.id.clone(), stage: tree.stage, components })
}

fn multiset(v: &ComponentValue) -> BTreeMap<String, usize> {
    match v {
        ComponentValue::Multiset(m) => m.clone(),
        ComponentValue::Labels(ls) => {
            let mut m = BTreeMap::new();
            for l in ls {
                *m.entry(l.clone()).or_insert(0) += 1;
            }
            m
        }
        ComponentValue::Vector(xs) => {
            let mut m = BTreeMap::new();
            for x in xs {
                *m.entry(x.to_string()).or_insert(0) += 1;
            }
            m
        }
    }
}

/// Discrepancy of one component, in [0, 1].
pub fn component_discrepancy(component: &Component, a: &ComponentValue, b: &ComponentValue) -> f64 {
    match component.discrepancy {
        Discrepancy::NormalizedL1 => {
            let (ComponentValue::Vector(x), ComponentValue::Vector(y)) = (a, b) else { return 1.0 };
            if x.len() != y.len() {
                return 1.0;
            }
            let range = match component.extractor {
                Extractor::TerminalOutcomeVector { rank_min, rank_max, .. } => rank_max - rank_min,
                _ => 1.0,
            };
            let norm = x.len() as f64 * range;
            if norm == 0.0 {
                return 0.0;
            }
            let l1: f64 = x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum();
            (l1 / norm).min(1.0)
        }
        Discrepancy::ZeroOne => {
            let differ: Vec<bool> = match (a, b) {
                (ComponentValue::Vector(x), ComponentValue::Vector(y)) if x.len() == y.len() => {
                    x.iter().zip(y).map(|(p, q)| p != q).collect()
                }
                (ComponentValue::Labels(x), ComponentValue::Labels(y)) if x.len() == y.len() => {
                    x.iter().zip(y).map(|(p, q)| p != q).collect()
                }
                _ if a == b => return 0.0,
                _ => return 1.0,
            };
            if differ.is_empty() {
                0.0
            } else {
                differ.iter().filter(|d| **d).count() as f64 / differ.len() as f64
            }
        }
        Discrepancy::MultisetJaccard => {
            let (x, y) = (multiset(a), multiset(b));
            let mut inter = 0;
            let mut union = 0;
            for k in x.keys().chain(y.keys()).collect::<std::collections::BTreeSet<_>>() {
                let (p, q) = (x.get(k).copied().unwrap_or(0), y.get(k).copied().unwrap_or(0));
                inter += p.min(q);
                union += p.max(q);
            }
            if union == 0 {
                0.0
            } else {
                1.0 - inter as f64 / union as f64
            }
        }
    }
}
