//! Scenario trees: positions, labeled edges, structural validation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::state::Stage;
use crate::id::Id;

/// Tolerance for outgoing likelihoods summing to one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

pub const NOT: char = '¬';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PositionKind {
    Decision,
    Event,
    Terminal,
}

/// Option execution, its non-execution, or an event outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum EdgeLabel {
    Option(Id),
    NotOption(Id),
    Outcome { event: Id, realization: String },
}

impl EdgeLabel {
    /// The option an option or non-execution edge refers to.
    pub fn option(&self) -> Option<&Id> {
        match self {
            EdgeLabel::Option(o) | EdgeLabel::NotOption(o) => Some(o),
            EdgeLabel::Outcome { .. } => None,
        }
    }

    pub fn event(&self) -> Option<&Id> {
        match self {
            EdgeLabel::Outcome { event, .. } => Some(event),
            _ => None,
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EdgeLabel::Option(o) => write!(f, "{o}"),
            EdgeLabel::NotOption(o) => write!(f, "{NOT}{o}"),
            EdgeLabel::Outcome { event, realization } => write!(f, "{event}={realization}"),
        }
    }
}

impl FromStr for EdgeLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |e: crate::id::IdError| format!("edge label {s:?}: {e}");
        if let Some((event, realization)) = s.split_once('=') {
            if realization.is_empty() {
                return Err(format!("edge label {s:?}: empty realization"));
            }
            return Ok(EdgeLabel::Outcome { event: Id::new(event).map_err(bad)?, realization: realization.into() });
        }
        match s.strip_prefix(NOT) {
            Some(o) => Ok(EdgeLabel::NotOption(Id::new(o).map_err(bad)?)),
            None => Ok(EdgeLabel::Option(Id::new(s).map_err(bad)?)),
        }
    }
}

// Edge labels compare by their printed form; that order is the default tie-break.
impl Ord for EdgeLabel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

impl PartialOrd for EdgeLabel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for EdgeLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EdgeLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Position {
    pub id: Id,
    pub kind: PositionKind,
    /// Acting entity or event; terminal positions usually carry none.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Id>,
    pub depth: u32,
    /// Numeric leaf evaluations per entity.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<Id, f64>,
    /// Ordinal leaf ranks per entity, higher is better.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ranks: BTreeMap<Id, i64>,
    /// Per-entity utilities under each world state, for decisions under uncertainty.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub world_values: BTreeMap<Id, Vec<f64>>,
    /// Named scenario indicators read by evaluation.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub indicators: BTreeMap<String, f64>,
}

impl Position {
    pub fn new(id: Id, kind: PositionKind, label: Option<Id>, depth: u32) -> Self {
        Position {
            id,
            kind,
            label,
            depth,
            values: BTreeMap::new(),
            ranks: BTreeMap::new(),
            world_values: BTreeMap::new(),
            indicators: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub tail: Id,
    pub head: Id,
    pub label: EdgeLabel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub likelihood: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTree {
    pub id: String,
    pub stage: Stage,
    pub root: Id,
    pub positions: Vec<Position>,
    #[serde(default)]
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("duplicate position {0}")]
    DuplicatePosition(Id),
    #[error("unknown position {0}")]
    UnknownPosition(Id),
    #[error("position {0} has more than one incoming edge")]
    MultipleParents(Id),
    #[error("the root {0} has an incoming edge")]
    RootHasParent(Id),
    #[error("position {0} is not reachable from the root")]
    Unreachable(Id),
    #[error("position {position}: depth {found}, expected {expected}")]
    Depth { position: Id, found: u32, expected: u32 },
    #[error("position {0}: duplicate outgoing edge label {1}")]
    DuplicateLabel(Id, EdgeLabel),
    #[error("position {0}: terminal positions have no outgoing edges and only they are leaves")]
    LeafKind(Id),
    #[error("position {position}: edge {label} does not fit a {kind:?} position")]
    LabelKind { position: Id, label: EdgeLabel, kind: PositionKind },
    #[error("position {0}: non-terminal position without a label")]
    MissingLabel(Id),
    #[error("position {0}: likelihoods given on some outgoing edges only")]
    PartialLikelihoods(Id),
    #[error("position {position}: outgoing likelihoods sum to {sum}")]
    Unnormalized { position: Id, sum: f64 },
    #[error("position {position}: likelihood {value} outside [0,1]")]
    LikelihoodRange { position: Id, value: f64 },
}

/// Adjacency built once per solve.
pub struct TreeIndex<'a> {
    pub tree: &'a ScenarioTree,
    positions: BTreeMap<&'a str, &'a Position>,
    children: BTreeMap<&'a str, Vec<&'a Edge>>,
}

impl<'a> TreeIndex<'a> {
    pub fn new(tree: &'a ScenarioTree) -> Self {
        let positions = tree.positions.iter().map(|p| (p.id.as_str(), p)).collect();
        let mut children: BTreeMap<&str, Vec<&Edge>> = BTreeMap::new();
        for e in &tree.edges {
            children.entry(e.tail.as_str()).or_default().push(e);
        }
        for v in children.values_mut() {
            v.sort_by(|a, b| a.label.cmp(&b.label));
        }
        TreeIndex { tree, positions, children }
    }

    pub fn position(&self, id: &str) -> Option<&'a Position> {
        self.positions.get(id).copied()
    }

    /// Outgoing edges in label order.
    pub fn children(&self, id: &str) -> &[&'a Edge] {
        self.children.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.children(id).is_empty()
    }

    /// Positions in breadth-first order from the root.
    pub fn bfs(&self) -> Vec<&'a Position> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([self.tree.root.as_str()]);
        while let Some(v) = queue.pop_front() {
            if let Some(p) = self.position(v) {
                out.push(p);
            }
            for e in self.children(v) {
                queue.push_back(e.head.as_str());
            }
        }
        out
    }
}

impl ScenarioTree {
    pub fn index(&self) -> TreeIndex<'_> {
        TreeIndex::new(self)
    }

    pub fn position(&self, id: &str) -> Option<&Position> {
        self.positions.iter().find(|p| p.id.as_str() == id)
    }

    pub fn position_mut(&mut self, id: &str) -> Option<&mut Position> {
        self.positions.iter_mut().find(|p| p.id.as_str() == id)
    }

    pub fn leaves(&self) -> Vec<&Position> {
        let tails: BTreeSet<&str> = self.edges.iter().map(|e| e.tail.as_str()).collect();
        self.positions.iter().filter(|p| !tails.contains(p.id.as_str())).collect()
    }

    /// Every edge label in the tree.
    pub fn labels(&self) -> BTreeSet<&EdgeLabel> {
        self.edges.iter().map(|e| &e.label).collect()
    }

    /// Options executed somewhere in the tree.
    pub fn options_used(&self) -> BTreeSet<&Id> {
        self.edges
            .iter()
            .filter_map(|e| match &e.label {
                EdgeLabel::Option(o) => Some(o),
                _ => None,
            })
            .collect()
    }

    /// Checks that the tree is rooted, connected and acyclic, with consistent
    /// depths, kinds and per-position likelihoods.
    pub fn validate(&self) -> Result<(), TreeError> {
        let mut ids = BTreeSet::new();
        for p in &self.positions {
            if !ids.insert(p.id.as_str()) {
                return Err(TreeError::DuplicatePosition(p.id.clone()));
            }
        }
        if !ids.contains(self.root.as_str()) {
            return Err(TreeError::UnknownPosition(self.root.clone()));
        }
        let mut heads = BTreeSet::new();
        for e in &self.edges {
            for end in [&e.tail, &e.head] {
                if !ids.contains(end.as_str()) {
                    return Err(TreeError::UnknownPosition(end.clone()));
                }
            }
            if e.head == self.root {
                return Err(TreeError::RootHasParent(self.root.clone()));
            }
            if !heads.insert(e.head.as_str()) {
                return Err(TreeError::MultipleParents(e.head.clone()));
            }
        }
        // One parent per non-root position plus reachability rules out cycles.
        let index = self.index();
        let reached = index.bfs();
        if reached.len() != self.positions.len() {
            let seen: BTreeSet<&str> = reached.iter().map(|p| p.id.as_str()).collect();
            let missing = self.positions.iter().find(|p| !seen.contains(p.id.as_str())).expect("some position unreached");
            return Err(TreeError::Unreachable(missing.id.clone()));
        }
        let root = index.position(self.root.as_str()).expect("root exists");
        if root.depth != 0 {
            return Err(TreeError::Depth { position: root.id.clone(), found: root.depth, expected: 0 });
        }
        for p in reached {
            let out = index.children(p.id.as_str());
            if out.is_empty() != (p.kind == PositionKind::Terminal) {
                return Err(TreeError::LeafKind(p.id.clone()));
            }
            if p.kind != PositionKind::Terminal && p.label.is_none() {
                return Err(TreeError::MissingLabel(p.id.clone()));
            }
            let mut labels = BTreeSet::new();
            for e in out {
                let child = index.position(e.head.as_str()).expect("edge heads exist");
                if child.depth != p.depth + 1 {
                    return Err(TreeError::Depth { position: child.id.clone(), found: child.depth, expected: p.depth + 1 });
                }
                if !labels.insert(&e.label) {
                    return Err(TreeError::DuplicateLabel(p.id.clone(), e.label.clone()));
                }
                let fits = match (&e.label, p.kind) {
                    (EdgeLabel::Option(_) | EdgeLabel::NotOption(_), PositionKind::Decision) => true,
                    (EdgeLabel::Outcome { event, .. }, PositionKind::Event) => p.label.as_ref() == Some(event),
                    _ => false,
                };
                if !fits {
                    return Err(TreeError::LabelKind { position: p.id.clone(), label: e.label.clone(), kind: p.kind });
                }
            }
            check_likelihoods(p, out)?;
        }
        Ok(())
    }

    /// Whether every non-leaf position carries normalized likelihoods.
    pub fn require_likelihoods(&self) -> Result<(), TreeError> {
        let index = self.index();
        for p in &self.positions {
            let out = index.children(p.id.as_str());
            if out.iter().any(|e| e.likelihood.is_none()) {
                return Err(TreeError::PartialLikelihoods(p.id.clone()));
            }
            check_likelihoods(p, out)?;
        }
        Ok(())
    }
}

fn check_likelihoods(p: &Position, out: &[&Edge]) -> Result<(), TreeError> {
    let given: Vec<f64> = out.iter().filter_map(|e| e.likelihood).collect();
    if given.is_empty() {
        return Ok(());
    }
    if given.len() != out.len() {
        return Err(TreeError::PartialLikelihoods(p.id.clone()));
    }
    if let Some(&value) = given.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(TreeError::LikelihoodRange { position: p.id.clone(), value });
    }
    let sum: f64 = given.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(TreeError::Unnormalized { position: p.id.clone(), sum });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::id::id;

    fn chain() -> ScenarioTree {
        let mut a = Position::new(id("r"), PositionKind::Decision, Some(id("a")), 0);
        a.values.insert(id("a"), 1.0);
        ScenarioTree {
            id: "t".into(),
            stage: 0,
            root: id("r"),
            positions: vec![
                a,
                Position::new(id("x"), PositionKind::Terminal, None, 1),
                Position::new(id("y"), PositionKind::Terminal, None, 1),
            ],
            edges: vec![
                Edge { tail: id("r"), head: id("x"), label: "o".parse().unwrap(), likelihood: Some(0.25) },
                Edge { tail: id("r"), head: id("y"), label: "¬o".parse().unwrap(), likelihood: Some(0.75) },
            ],
        }
    }

    #[test]
    fn labels_round_trip() {
        for s in ["o1", "¬o1", "e1=occurs"] {
            assert_eq!(s.parse::<EdgeLabel>().unwrap().to_string(), s);
        }
        assert!("e=".parse::<EdgeLabel>().is_err());
        assert!("¬".parse::<EdgeLabel>().is_err());
        assert!("".parse::<EdgeLabel>().is_err());
    }

    #[test]
    fn valid_chain() {
        let t = chain();
        t.validate().unwrap();
        t.require_likelihoods().unwrap();
        assert_eq!(t.leaves().len(), 2);
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<ScenarioTree>(&json).unwrap(), t);
    }

    #[test]
    fn structural_errors() {
        let mut t = chain();
        t.edges[1].likelihood = Some(0.5);
        assert!(matches!(t.validate(), Err(TreeError::Unnormalized { .. })));
        let mut t = chain();
        t.edges[1].likelihood = None;
        assert!(matches!(t.validate(), Err(TreeError::PartialLikelihoods(_))));
        let mut t = chain();
        t.positions[2].depth = 2;
        assert!(matches!(t.validate(), Err(TreeError::Depth { .. })));
        let mut t = chain();
        t.edges.push(Edge { tail: id("x"), head: id("r"), label: "p".parse().unwrap(), likelihood: None });
        assert!(t.validate().is_err());
        let mut t = chain();
        t.edges[1].label = "e=x".parse().unwrap();
        assert!(matches!(t.validate(), Err(TreeError::LabelKind { .. })));
        let mut t = chain();
        t.positions.push(Position::new(id("z"), PositionKind::Terminal, None, 1));
        assert!(matches!(t.validate(), Err(TreeError::Unreachable(_))));
    }
}
