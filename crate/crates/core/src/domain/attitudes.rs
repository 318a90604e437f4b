//! Aims, collective attitudes and attitude-parameter dispersion.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::state::{AssessmentState, Horizon, Operator, ParameterTuple};
use crate::id::Id;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttitudeError {
    #[error("unknown coalition {0}")]
    UnknownCoalition(Id),
    #[error("operator {0} cannot be aggregated; use B, W or I")]
    NotAggregable(Operator),
    #[error("weights must be finite and non-negative with a positive total")]
    BadWeights,
}

/// Pairs `(a, p)` with `W_a p` present and `B_a ¬p` absent.
pub fn derive_aims(db: &AssessmentState) -> BTreeSet<(Id, Id)> {
    db.attitudes
        .iter()
        .filter(|r| r.operator == Operator::W && db.actor(r.holder.as_str()).is_some())
        .filter(|r| {
            db.negation(r.content.as_str())
                .map_or(true, |neg| !db.holds(r.holder.as_str(), Operator::B, neg.as_str()))
        })
        .map(|r| (r.holder.clone(), r.content.clone()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectiveRule {
    Majority,
    Unanimity,
    /// Holds when the holders' weight exceeds half the members' total weight.
    Weighted(BTreeMap<Id, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectiveAttitude {
    pub holds: bool,
    pub holders: BTreeSet<Id>,
    /// Aggregated parameters over the holders that carry them.
    pub params: Option<ParameterTuple>,
    /// Set when no member holds the attitude at all.
    pub no_data: Option<String>,
}

fn lower_median(mut xs: Vec<u32>) -> u32 {
    xs.sort_unstable();
    xs[(xs.len() - 1) / 2]
}

fn horizon_mode(hs: &[Horizon]) -> Horizon {
    let mut counts: BTreeMap<Horizon, usize> = BTreeMap::new();
    for h in hs {
        *counts.entry(*h).or_default() += 1;
    }
    // Iteration runs short → long, so strict `>` keeps the lower level on ties.
    let mut best = (hs[0], 0);
    for (h, c) in counts {
        if c > best.1 {
            best = (h, c);
        }
    }
    best.0
}

/// Default parameter aggregation: lower median per ordinal coordinate, mode
/// for the horizon, ties toward the lower level.
pub fn aggregate_params(params: &[ParameterTuple]) -> Option<ParameterTuple> {
    if params.is_empty() {
        return None;
    }
    Some(ParameterTuple {
        likelihood: lower_median(params.iter().map(|p| p.likelihood).collect()),
        intensity: lower_median(params.iter().map(|p| p.intensity).collect()),
        horizon: horizon_mode(&params.iter().map(|p| p.horizon).collect::<Vec<_>>()),
    })
}

pub fn aggregate_attitude(
    db: &AssessmentState,
    coalition: &Id,
    operator: Operator,
    proposition: &Id,
    rule: &CollectiveRule,
) -> Result<CollectiveAttitude, AttitudeError> {
    if !matches!(operator, Operator::B | Operator::W | Operator::I) {
        return Err(AttitudeError::NotAggregable(operator));
    }
    let x = db
        .coalition(coalition.as_str())
        .ok_or_else(|| AttitudeError::UnknownCoalition(coalition.clone()))?;
    let holders: BTreeSet<Id> = x
        .members
        .iter()
        .filter(|m| db.holds(m.as_str(), operator, proposition.as_str()))
        .cloned()
        .collect();
    if holders.is_empty() {
        return Ok(CollectiveAttitude {
            holds: false,
            holders,
            params: None,
            no_data: Some(format!("no member of {coalition} holds {operator} {proposition}")),
        });
    }
    let holds = match rule {
        CollectiveRule::Majority => 2 * holders.len() > x.members.len(),
        CollectiveRule::Unanimity => holders.len() == x.members.len(),
        CollectiveRule::Weighted(w) => {
            let weight = |m: &Id| w.get(m).copied().unwrap_or(0.0);
            if x.members.iter().any(|m| !(weight(m).is_finite() && weight(m) >= 0.0)) {
                return Err(AttitudeError::BadWeights);
            }
            let total: f64 = x.members.iter().map(weight).sum();
            if total <= 0.0 {
                return Err(AttitudeError::BadWeights);
            }
            holders.iter().map(weight).sum::<f64>() > total / 2.0
        }
    };
    let params: Vec<ParameterTuple> = holders
        .iter()
        .flat_map(|h| db.attitudes_of(h.as_str(), operator, proposition.as_str()))
        .filter_map(|r| r.params)
        .collect();
    Ok(CollectiveAttitude { holds, holders, params: aggregate_params(&params), no_data: None })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum Dispersion {
    NoData,
    Assessed {
        unstable: bool,
        likelihood_range: u32,
        intensity_range: u32,
        common_horizon: Option<Horizon>,
    },
}

impl Dispersion {
    pub fn is_unstable(&self) -> Option<bool> {
        match self {
            Dispersion::NoData => None,
            Dispersion::Assessed { unstable, .. } => Some(*unstable),
        }
    }
}

/// Dispersion of the members' parameters on `operator proposition`.
pub fn coalition_attitude_instability(
    db: &AssessmentState,
    coalition: &Id,
    operator: Operator,
    proposition: &Id,
    eps_likelihood: u32,
    eps_intensity: u32,
) -> Result<Dispersion, AttitudeError> {
    let x = db
        .coalition(coalition.as_str())
        .ok_or_else(|| AttitudeError::UnknownCoalition(coalition.clone()))?;
    let per_member: Vec<Vec<ParameterTuple>> = x
        .members
        .iter()
        .map(|m| {
            db.attitudes_of(m.as_str(), operator, proposition.as_str())
                .filter_map(|r| r.params)
                .collect::<Vec<_>>()
        })
        .filter(|ps| !ps.is_empty())
        .collect();
    if per_member.is_empty() {
        return Ok(Dispersion::NoData);
    }
    let all: Vec<&ParameterTuple> = per_member.iter().flatten().collect();
    let range = |f: fn(&ParameterTuple) -> u32| {
        let (lo, hi) = all.iter().fold((u32::MAX, 0), |(lo, hi), p| (lo.min(f(p)), hi.max(f(p))));
        hi - lo
    };
    let likelihood_range = range(|p| p.likelihood);
    let intensity_range = range(|p| p.intensity);
    let common_horizon = [Horizon::Short, Horizon::Medium, Horizon::Long]
        .into_iter()
        .find(|h| per_member.iter().all(|ps| ps.iter().any(|p| p.horizon == *h)));
    let unstable = likelihood_range > eps_likelihood
        || intensity_range > eps_intensity
        || common_horizon.is_none();
    Ok(Dispersion::Assessed { unstable, likelihood_range, intensity_range, common_horizon })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::state::{AttitudeRecord, Coalition, Proposition, Provenance};
    use crate::id::id;

    fn record(holder: &str, op: Operator, content: &str, params: Option<ParameterTuple>) -> AttitudeRecord {
        AttitudeRecord {
            holder: id(holder),
            operator: op,
            content: id(content),
            params,
            stage: 0,
            provenance: Provenance::expert("fixture"),
        }
    }

    fn base(attitudes: Vec<AttitudeRecord>) -> AssessmentState {
        AssessmentState {
            propositions: vec![
                Proposition {
                    id: id("p"),
                    text: String::new(),
                    negation_of: None,
                    implies: BTreeSet::new(),
                    feasibility_of: None,
                },
                Proposition {
                    id: id("not_p"),
                    text: String::new(),
                    negation_of: Some(id("p")),
                    implies: BTreeSet::new(),
                    feasibility_of: None,
                },
            ],
            actors: ["a", "b", "c"]
                .map(|n| crate::domain::state::Actor {
                    id: id(n),
                    category: crate::domain::state::ActorCategory::Individual,
                    domain: crate::domain::state::Domain::Pol,
                    location: None,
                })
                .into(),
            coalitions: vec![Coalition { id: id("X"), members: ["a", "b", "c"].map(id).into() }],
            attitudes,
            ..Default::default()
        }
    }

    #[test]
    fn aims_follow_the_definition() {
        let db = base(vec![record("a", Operator::W, "p", None)]);
        assert!(derive_aims(&db).contains(&(id("a"), id("p"))));
        let db = base(vec![record("a", Operator::W, "p", None), record("a", Operator::B, "not_p", None)]);
        assert!(derive_aims(&db).is_empty());
        assert!(derive_aims(&base(vec![])).is_empty());
    }

    #[test]
    fn majority_versus_unanimity() {
        let db = base(vec![record("a", Operator::B, "p", None), record("b", Operator::B, "p", None)]);
        let agg = |rule| aggregate_attitude(&db, &id("X"), Operator::B, &id("p"), &rule).unwrap().holds;
        assert!(agg(CollectiveRule::Majority));
        assert!(!agg(CollectiveRule::Unanimity));
        let w: BTreeMap<Id, f64> = [(id("a"), 0.1), (id("b"), 0.1), (id("c"), 0.8)].into();
        assert!(!agg(CollectiveRule::Weighted(w)));
    }

    #[test]
    fn nobody_holding_is_no_data_not_false() {
        let db = base(vec![]);
        let out = aggregate_attitude(&db, &id("X"), Operator::B, &id("p"), &CollectiveRule::Majority).unwrap();
        assert!(!out.holds);
        assert!(out.no_data.is_some());
        assert!(aggregate_attitude(&db, &id("X"), Operator::K, &id("p"), &CollectiveRule::Majority).is_err());
    }

    #[test]
    fn parameter_aggregation_prefers_lower_level_on_ties() {
        let t = |l, i, h| ParameterTuple { likelihood: l, intensity: i, horizon: h };
        let agg = aggregate_params(&[t(1, 5, Horizon::Long), t(4, 2, Horizon::Short)]).unwrap();
        assert_eq!(agg, t(1, 2, Horizon::Short));
    }

    #[test]
    fn dispersion_diagnostics() {
        let t = |l, h| Some(ParameterTuple { likelihood: l, intensity: 3, horizon: h });
        let db = base(vec![
            record("a", Operator::B, "p", t(1, Horizon::Short)),
            record("b", Operator::B, "p", t(4, Horizon::Short)),
        ]);
        let d = coalition_attitude_instability(&db, &id("X"), Operator::B, &id("p"), 2, 2).unwrap();
        assert_eq!(
            d,
            Dispersion::Assessed {
                unstable: true,
                likelihood_range: 3,
                intensity_range: 0,
                common_horizon: Some(Horizon::Short)
            }
        );
        let db = base(vec![
            record("a", Operator::B, "p", t(2, Horizon::Short)),
            record("b", Operator::B, "p", t(2, Horizon::Long)),
        ]);
        let d = coalition_attitude_instability(&db, &id("X"), Operator::B, &id("p"), 5, 5).unwrap();
        assert_eq!(d.is_unstable(), Some(true));
        let db = base(vec![
            record("a", Operator::B, "p", t(2, Horizon::Medium)),
            record("b", Operator::B, "p", t(2, Horizon::Medium)),
        ]);
        let d = coalition_attitude_instability(&db, &id("X"), Operator::B, &id("p"), 1, 1).unwrap();
        assert_eq!(d.is_unstable(), Some(false));
        let d = coalition_attitude_instability(&base(vec![]), &id("X"), Operator::B, &id("p"), 1, 1).unwrap();
        assert_eq!(d, Dispersion::NoData);
    }
}
