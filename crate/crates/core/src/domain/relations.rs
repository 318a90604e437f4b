//! Relation aggregation between entities and tie-stability diagnostics.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::state::{AssessmentState, DyadicTie, Sign, Visibility};
use crate::id::Id;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RelationError {
    #[error("unknown relation type {0}")]
    UnknownRelation(Id),
    #[error("unknown entity {0}")]
    UnknownEntity(Id),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    #[default]
    Mean,
    /// Mean weighted by each tie's provenance confidence.
    WeightedMean,
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VisibilityRule {
    #[default]
    Mode,
    Unanimity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationSummary {
    pub weight: f64,
    pub sign: Sign,
    /// Modal layer; `None` when no tie exists.
    pub layer: Option<String>,
    /// `None` when no tie exists or, under unanimity, when ties disagree.
    pub visibility: Option<Visibility>,
    pub ties: usize,
}

/// Member-level ties of `relation` running between `x` and `y`.
pub fn cross_ties<'a>(
    db: &'a AssessmentState,
    x: &Id,
    y: &Id,
    relation: &Id,
) -> Result<Vec<&'a DyadicTie>, RelationError> {
    let rt = db
        .relation_type(relation.as_str())
        .ok_or_else(|| RelationError::UnknownRelation(relation.clone()))?;
    let mx = db.members(x.as_str()).ok_or_else(|| RelationError::UnknownEntity(x.clone()))?;
    let my = db.members(y.as_str()).ok_or_else(|| RelationError::UnknownEntity(y.clone()))?;
    Ok(db
        .ties
        .iter()
        .filter(|t| t.relation == *relation)
        .filter(|t| {
            let forward = mx.contains(&t.source) && my.contains(&t.target);
            let backward = mx.contains(&t.target) && my.contains(&t.source);
            forward || (!rt.directed && backward)
        })
        .collect())
}

fn mode<T: Ord + Clone>(items: impl Iterator<Item = T>) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for it in items {
        *counts.entry(it).or_default() += 1;
    }
    let mut best: Option<(T, usize)> = None;
    for (k, c) in counts {
        if best.as_ref().map_or(true, |(_, bc)| c > *bc) {
            best = Some((k, c));
        }
    }
    best.map(|(k, _)| k)
}

/// Aggregates a tie multiset. Order of `ties` does not matter.
pub fn summarize(ties: &[&DyadicTie], rule: WeightRule, vis_rule: VisibilityRule) -> RelationSummary {
    if ties.is_empty() {
        return RelationSummary { weight: 0.0, sign: Sign::Neutral, layer: None, visibility: None, ties: 0 };
    }
    let ws = ties.iter().map(|t| t.weight);
    let weight = match rule {
        WeightRule::Mean => ws.sum::<f64>() / ties.len() as f64,
        WeightRule::WeightedMean => {
            let total: f64 = ties.iter().map(|t| t.provenance.confidence).sum();
            if total > 0.0 {
                ties.iter().map(|t| t.provenance.confidence * t.weight).sum::<f64>() / total
            } else {
                ws.sum::<f64>() / ties.len() as f64
            }
        }
        WeightRule::Max => ws.fold(f64::NEG_INFINITY, f64::max),
        WeightRule::Min => ws.fold(f64::INFINITY, f64::min),
    };
    let signed: f64 = ties.iter().map(|t| t.weight * f64::from(t.sign.value())).sum();
    let visibility = match vis_rule {
        VisibilityRule::Mode => mode(ties.iter().map(|t| t.visibility.clone())),
        VisibilityRule::Unanimity => {
            let first = &ties[0].visibility;
            ties.iter().all(|t| t.visibility == *first).then(|| first.clone())
        }
    };
    RelationSummary {
        weight,
        sign: Sign::of(signed),
        layer: mode(ties.iter().map(|t| t.layer.clone())),
        visibility,
        ties: ties.len(),
    }
}

pub fn aggregate_relation(
    db: &AssessmentState,
    x: &Id,
    y: &Id,
    relation: &Id,
    rule: WeightRule,
    vis_rule: VisibilityRule,
) -> Result<RelationSummary, RelationError> {
    Ok(summarize(&cross_ties(db, x, y, relation)?, rule, vis_rule))
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub eps_weight: f64,
    pub eps_sign: f64,
    #[serde(default = "default_critical_layers")]
    pub critical_layers: BTreeSet<String>,
    #[serde(default = "default_unbalance_threshold")]
    pub unbalance_threshold: f64,
    #[serde(default)]
    pub weight_rule: WeightRule,
}

fn default_critical_layers() -> BTreeSet<String> {
    ["Pol", "Sec"].map(String::from).into()
}

fn default_unbalance_threshold() -> f64 {
    0.5
}

impl StabilityConfig {
    pub fn new(eps_weight: f64, eps_sign: f64) -> Self {
        StabilityConfig {
            eps_weight,
            eps_sign,
            critical_layers: default_critical_layers(),
            unbalance_threshold: default_unbalance_threshold(),
            weight_rule: WeightRule::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum RelStability {
    NoTies,
    Assessed { stable: bool, variance: f64, disagreement: f64 },
}

impl RelStability {
    pub fn is_stable(&self) -> bool {
        matches!(self, RelStability::Assessed { stable: true, .. })
    }
}

/// Population variance of the weights and the share of signs off the mode.
pub fn dispersion(ties: &[&DyadicTie]) -> (f64, f64) {
    let n = ties.len() as f64;
    let mean = ties.iter().map(|t| t.weight).sum::<f64>() / n;
    let variance = ties.iter().map(|t| (t.weight - mean).powi(2)).sum::<f64>() / n;
    let modal = mode(ties.iter().map(|t| t.sign)).expect("non-empty");
    let off = ties.iter().filter(|t| t.sign != modal).count() as f64;
    (variance, off / n)
}

fn stability_of(ties: &[&DyadicTie], eps_weight: f64, eps_sign: f64) -> RelStability {
    if ties.is_empty() {
        return RelStability::NoTies;
    }
    let (variance, disagreement) = dispersion(ties);
    RelStability::Assessed {
        stable: variance < eps_weight && disagreement < eps_sign,
        variance,
        disagreement,
    }
}

pub fn relational_stability(
    db: &AssessmentState,
    x: &Id,
    y: &Id,
    relation: &Id,
    eps_weight: f64,
    eps_sign: f64,
) -> Result<RelStability, RelationError> {
    Ok(stability_of(&cross_ties(db, x, y, relation)?, eps_weight, eps_sign))
}

/// Every layer slice is stable or carries zero aggregate weight.
pub fn layer_coherence(
    db: &AssessmentState,
    x: &Id,
    y: &Id,
    relation: &Id,
    config: &StabilityConfig,
) -> Result<bool, RelationError> {
    let ties = cross_ties(db, x, y, relation)?;
    let layers: BTreeSet<&str> = ties.iter().map(|t| t.layer.as_str()).collect();
    Ok(layers.into_iter().all(|layer| {
        let slice: Vec<&DyadicTie> = ties.iter().copied().filter(|t| t.layer == layer).collect();
        let summary = summarize(&slice, config.weight_rule, VisibilityRule::Mode);
        summary.weight == 0.0 || stability_of(&slice, config.eps_weight, config.eps_sign).is_stable()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Balance {
    Balanced,
    Unbalanced,
    /// A side is missing on the layer or has zero aggregate sign.
    Undefined,
}

fn pair_sign(db: &AssessmentState, u: &Id, v: &Id, relation: &Id, layer: &str) -> Result<Sign, RelationError> {
    let mut ties = cross_ties(db, u, v, relation)?;
    if db.relation_type(relation.as_str()).is_some_and(|r| r.directed) {
        ties.extend(cross_ties(db, v, u, relation)?);
    }
    ties.retain(|t| t.layer == layer);
    Ok(summarize(&ties, WeightRule::Mean, VisibilityRule::Mode).sign)
}

pub fn triad_balance(
    db: &AssessmentState,
    a: &Id,
    b: &Id,
    c: &Id,
    relation: &Id,
    layer: &str,
) -> Result<Balance, RelationError> {
    let signs = [
        pair_sign(db, a, b, relation, layer)?,
        pair_sign(db, b, c, relation, layer)?,
        pair_sign(db, c, a, relation, layer)?,
    ];
    if signs.contains(&Sign::Neutral) {
        return Ok(Balance::Undefined);
    }
    let product: i8 = signs.iter().map(|s| s.value()).product();
    Ok(if product > 0 { Balance::Balanced } else { Balance::Unbalanced })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedStability {
    pub stable: bool,
    pub relational: RelStability,
    pub coherent: bool,
    pub defined_triads: usize,
    pub unbalanced_triads: usize,
    pub strong_unbalance: bool,
}

/// Relational stability, layer coherence, and no strong unbalance among the
/// triads touching `x` or `y` on the critical layers.
pub fn combined_tie_stability(
    db: &AssessmentState,
    x: &Id,
    y: &Id,
    relation: &Id,
    config: &StabilityConfig,
) -> Result<CombinedStability, RelationError> {
    let relational = relational_stability(db, x, y, relation, config.eps_weight, config.eps_sign)?;
    let coherent = layer_coherence(db, x, y, relation, config)?;

    let mut vertices: Vec<Id> = db.actors.iter().map(|a| a.id.clone()).collect();
    for e in [x, y] {
        if !vertices.contains(e) {
            vertices.push(e.clone());
        }
    }
    vertices.sort();
    let members: BTreeMap<&Id, BTreeSet<Id>> =
        vertices.iter().map(|v| (v, db.members(v.as_str()).unwrap_or_default())).collect();
    let disjoint = |u: &Id, v: &Id| members[u].is_disjoint(&members[v]);

    let (mut defined, mut unbalanced) = (0usize, 0usize);
    for (i, u) in vertices.iter().enumerate() {
        for (j, v) in vertices.iter().enumerate().skip(i + 1) {
            for w in vertices.iter().skip(j + 1) {
                let touches = [u, v, w].iter().any(|n| *n == x || *n == y);
                if !touches || !disjoint(u, v) || !disjoint(v, w) || !disjoint(u, w) {
                    continue;
                }
                for layer in &config.critical_layers {
                    match triad_balance(db, u, v, w, relation, layer)? {
                        Balance::Undefined => {}
                        Balance::Balanced => defined += 1,
                        Balance::Unbalanced => {
                            defined += 1;
                            unbalanced += 1;
                        }
                    }
                }
            }
        }
    }
    let strong_unbalance =
        defined > 0 && (unbalanced as f64 / defined as f64) > config.unbalance_threshold;
    Ok(CombinedStability {
        stable: relational.is_stable() && coherent && !strong_unbalance,
        relational,
        coherent,
        defined_triads: defined,
        unbalanced_triads: unbalanced,
        strong_unbalance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::state::{Actor, ActorCategory, Domain, Provenance, RelationFamily, RelationType};
    use crate::id::id;

    fn tie(s: &str, t: &str, w: f64, sign: Sign, layer: &str) -> DyadicTie {
        DyadicTie {
            relation: id("align"),
            source: id(s),
            target: id(t),
            weight: w,
            sign,
            layer: layer.into(),
            visibility: Visibility::Observed,
            stage: 0,
            provenance: Provenance::expert("fixture"),
        }
    }

    fn db(ties: Vec<DyadicTie>) -> AssessmentState {
        AssessmentState {
            actors: ["a", "b", "c", "d"]
                .map(|n| Actor { id: id(n), category: ActorCategory::Collective, domain: Domain::Pol, location: None })
                .into(),
            coalitions: vec![crate::domain::state::Coalition { id: id("X"), members: [id("a"), id("b")].into() }],
            relation_types: vec![RelationType {
                id: id("align"),
                family: RelationFamily::AlignmentAffinity,
                directed: false,
                signed: true,
                layers: ["Pol", "Econ"].map(String::from).into(),
            }],
            ties,
            ..Default::default()
        }
    }

    use Sign::{Negative as N, Positive as P};

    #[test]
    fn empty_tie_set_aggregates_to_zero() {
        let d = db(vec![]);
        let s = aggregate_relation(&d, &id("a"), &id("b"), &id("align"), WeightRule::Mean, VisibilityRule::Mode).unwrap();
        assert_eq!((s.weight, s.sign, s.layer), (0.0, Sign::Neutral, None));
        assert!(aggregate_relation(&d, &id("a"), &id("b"), &id("nope"), WeightRule::Mean, VisibilityRule::Mode).is_err());
    }

    #[test]
    fn weight_adjusted_sign() {
        let d = db(vec![tie("a", "c", 0.9, P, "Pol"), tie("b", "c", 0.1, N, "Pol")]);
        let s = aggregate_relation(&d, &id("X"), &id("c"), &id("align"), WeightRule::Mean, VisibilityRule::Mode).unwrap();
        assert!((s.weight - 0.5).abs() < 1e-12);
        assert_eq!(s.sign, P);
        let back = aggregate_relation(&d, &id("c"), &id("X"), &id("align"), WeightRule::Mean, VisibilityRule::Mode).unwrap();
        assert_eq!(s, back);
        let single = aggregate_relation(&d, &id("a"), &id("c"), &id("align"), WeightRule::Max, VisibilityRule::Unanimity).unwrap();
        assert_eq!((single.weight, single.sign), (0.9, P));
    }

    #[test]
    fn stability_diagnostics() {
        let d = db(vec![tie("a", "c", 0.9, P, "Pol"), tie("b", "c", 0.1, P, "Pol")]);
        match relational_stability(&d, &id("X"), &id("c"), &id("align"), 0.01, 0.5).unwrap() {
            RelStability::Assessed { stable, variance, .. } => {
                assert!(!stable);
                assert!((variance - 0.16).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
        let d = db(vec![
            tie("a", "c", 0.5, P, "Pol"),
            tie("b", "c", 0.5, P, "Pol"),
            tie("a", "d", 0.5, N, "Pol"),
        ]);
        let ties: Vec<&DyadicTie> = d.ties.iter().collect();
        let (_, dis) = dispersion(&ties);
        assert!((dis - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(
            relational_stability(&d, &id("c"), &id("d"), &id("align"), 1.0, 1.0).unwrap(),
            RelStability::NoTies
        );
    }

    #[test]
    fn triads_and_cyclic_invariance() {
        let d = db(vec![tie("a", "b", 0.5, P, "Pol"), tie("b", "c", 0.5, P, "Pol"), tie("a", "c", 0.5, N, "Pol")]);
        let bal = |x: &str, y: &str, z: &str| triad_balance(&d, &id(x), &id(y), &id(z), &id("align"), "Pol").unwrap();
        assert_eq!(bal("a", "b", "c"), Balance::Unbalanced);
        assert_eq!(bal("b", "c", "a"), Balance::Unbalanced);
        assert_eq!(bal("a", "b", "d"), Balance::Undefined);
        let d2 = db(vec![tie("a", "b", 0.5, N, "Pol"), tie("b", "c", 0.5, N, "Pol"), tie("a", "c", 0.5, P, "Pol")]);
        assert_eq!(triad_balance(&d2, &id("a"), &id("b"), &id("c"), &id("align"), "Pol").unwrap(), Balance::Balanced);
    }

    #[test]
    fn coherence_and_combined_verdicts() {
        let cfg = StabilityConfig::new(0.05, 0.2);
        let d = db(vec![tie("a", "b", 0.8, P, "Pol")]);
        assert!(layer_coherence(&d, &id("a"), &id("b"), &id("align"), &cfg).unwrap());
        assert!(layer_coherence(&db(vec![]), &id("a"), &id("b"), &id("align"), &cfg).unwrap());
        let shaky = db(vec![tie("a", "b", 0.9, P, "Pol"), tie("a", "b", 0.1, N, "Pol")]);
        assert!(!layer_coherence(&shaky, &id("a"), &id("b"), &id("align"), &cfg).unwrap());

        let balanced = combined_tie_stability(&d, &id("a"), &id("b"), &id("align"), &cfg).unwrap();
        assert!(balanced.stable);
        assert_eq!(balanced.unbalanced_triads, 0);

        let frustrated = db(vec![tie("a", "b", 0.8, P, "Pol"), tie("b", "c", 0.8, P, "Pol"), tie("a", "c", 0.8, N, "Pol")]);
        let out = combined_tie_stability(&frustrated, &id("a"), &id("b"), &id("align"), &cfg).unwrap();
        assert!(out.relational.is_stable() && out.coherent);
        assert!(out.strong_unbalance);
        assert!(!out.stable);

        let unstable = combined_tie_stability(&shaky, &id("a"), &id("b"), &id("align"), &cfg).unwrap();
        assert!(!unstable.stable);
    }
}
