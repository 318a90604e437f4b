//! Attribute aggregation for coalitions and the per-attribute update rule.

use thiserror::Error;

use std::collections::BTreeMap;

use super::options::{Effect, EffectDelta};
use super::state::{AssessmentState, AttrValue, AttributeDomain, AttributeType, LevelMap, ScoreRule};
use crate::id::Id;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttributeError {
    #[error("unknown coalition {0}")]
    UnknownCoalition(Id),
    #[error("unknown attribute type {0}")]
    UnknownAttribute(Id),
    #[error("attribute {0} is not aggregative; coalition values are read, not computed")]
    NotAggregative(Id),
    #[error("attribute {0} is aggregative but lacks a score rule or level map")]
    IncompleteSpec(Id),
    #[error("missing value of {attribute} for member {member}")]
    MissingValue { member: Id, attribute: Id },
    #[error("value of {attribute} for {subject} is not numeric")]
    NonNumeric { subject: Id, attribute: Id },
    #[error("effect {delta:?} does not fit attribute {attribute}")]
    IllTypedEffect { attribute: Id, delta: EffectDelta },
}

/// Raw score of a member profile under a score rule. `profile` pairs members with levels.
pub fn score(rule: &ScoreRule, profile: &[(Id, f64)]) -> f64 {
    let values = profile.iter().map(|(_, v)| *v);
    match rule {
        ScoreRule::Sum => values.sum(),
        ScoreRule::Mean => {
            if profile.is_empty() {
                0.0
            } else {
                values.sum::<f64>() / profile.len() as f64
            }
        }
        ScoreRule::Max => values.fold(f64::NEG_INFINITY, f64::max),
        ScoreRule::Min => values.fold(f64::INFINITY, f64::min),
        ScoreRule::Weighted(w) => profile
            .iter()
            .map(|(m, v)| w.get(m).copied().unwrap_or(0.0) * v)
            .sum(),
    }
}

/// Maps a score onto the attribute's levels.
pub fn ordinalize(ty: &AttributeType, map: &LevelMap, score: f64) -> f64 {
    let levels: &[i64] = match &ty.domain {
        AttributeDomain::Ordinal { levels } => levels,
        _ => &[],
    };
    let raw = match map {
        LevelMap::RoundHalfUp => (score + 0.5).floor(),
        LevelMap::Thresholds(ts) => ts
            .iter()
            .filter(|t| t.at <= score)
            .map(|t| t.level as f64)
            .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.max(l))))
            .unwrap_or_else(|| {
                levels.first().map(|&l| l as f64).unwrap_or_else(|| {
                    ts.iter().map(|t| t.level as f64).fold(f64::INFINITY, f64::min)
                })
            }),
    };
    match &ty.domain {
        AttributeDomain::Ordinal { levels } => snap(levels, raw) as f64,
        AttributeDomain::Numeric { min, max } => {
            let lo = min.unwrap_or(f64::NEG_INFINITY);
            let hi = max.unwrap_or(f64::INFINITY);
            raw.clamp(lo, hi)
        }
        AttributeDomain::Categorical { .. } => raw,
    }
}

/// Clamp to the level range, then pick the nearest declared level (ties upward).
fn snap(levels: &[i64], x: f64) -> i64 {
    let (Some(&lo), Some(&hi)) = (levels.first(), levels.last()) else {
        return x as i64;
    };
    let x = x.clamp(lo as f64, hi as f64);
    let mut best = lo;
    for &l in levels {
        if (l as f64 - x).abs() <= (best as f64 - x).abs() {
            best = l;
        }
    }
    best
}

/// Coalition level of an aggregative attribute from its members' levels.
pub fn aggregate_attribute(
    db: &AssessmentState,
    coalition: &Id,
    attribute: &Id,
) -> Result<f64, AttributeError> {
    let x = db
        .coalition(coalition.as_str())
        .ok_or_else(|| AttributeError::UnknownCoalition(coalition.clone()))?;
    let ty = db
        .attribute_type(attribute.as_str())
        .ok_or_else(|| AttributeError::UnknownAttribute(attribute.clone()))?;
    if !ty.aggregative {
        return Err(AttributeError::NotAggregative(attribute.clone()));
    }
    let (Some(rule), Some(map)) = (&ty.score_rule, &ty.level_map) else {
        return Err(AttributeError::IncompleteSpec(attribute.clone()));
    };
    let profile = x
        .members
        .iter()
        .map(|m| {
            let v = db.value(m.as_str(), attribute.as_str()).ok_or_else(|| {
                AttributeError::MissingValue { member: m.clone(), attribute: attribute.clone() }
            })?;
            let n = v.as_number().ok_or_else(|| AttributeError::NonNumeric {
                subject: m.clone(),
                attribute: attribute.clone(),
            })?;
            Ok((m.clone(), n))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ordinalize(ty, map, score(rule, &profile)))
}

/// The default update rule: clamped step addition on ordinal levels, plain
/// addition on numeric values, replacement on categories.
pub fn apply_delta(
    ty: &AttributeType,
    old: &AttrValue,
    delta: &EffectDelta,
) -> Result<AttrValue, AttributeError> {
    let bad = || AttributeError::IllTypedEffect { attribute: ty.id.clone(), delta: delta.clone() };
    match (&ty.domain, old, delta) {
        (AttributeDomain::Ordinal { levels }, AttrValue::Number(x), EffectDelta::Shift(d)) => {
            if d.fract() != 0.0 {
                return Err(bad());
            }
            let pos = levels.iter().position(|l| *l as f64 == *x).ok_or_else(bad)?;
            let target = (pos as i64 + *d as i64).clamp(0, levels.len() as i64 - 1);
            Ok(AttrValue::Number(levels[target as usize] as f64))
        }
        (AttributeDomain::Numeric { .. }, AttrValue::Number(x), EffectDelta::Shift(d)) => {
            Ok(AttrValue::Number(x + d))
        }
        (AttributeDomain::Categorical { categories }, _, EffectDelta::Set(c)) => {
            if categories.contains(c) {
                Ok(AttrValue::Category(c.clone()))
            } else {
                Err(bad())
            }
        }
        _ => Err(bad()),
    }
}

/// Applies effects in order, replacing each touched assignment's value.
pub fn apply_effects(db: &mut AssessmentState, effects: &[Effect]) -> Result<(), AttributeError> {
    for fx in effects {
        let ty = db
            .attribute_type(fx.attribute.as_str())
            .ok_or_else(|| AttributeError::UnknownAttribute(fx.attribute.clone()))?
            .clone();
        let slot = db
            .assignments
            .iter_mut()
            .rev()
            .find(|x| x.subject == fx.subject && x.attribute == fx.attribute)
            .ok_or_else(|| AttributeError::MissingValue { member: fx.subject.clone(), attribute: fx.attribute.clone() })?;
        slot.value = apply_delta(&ty, &slot.value, &fx.delta)?;
    }
    Ok(())
}

/// Size of the change between two values: ordinal steps, numeric distance,
/// or one for a changed category.
pub fn value_change(ty: &AttributeType, old: &AttrValue, new: &AttrValue) -> f64 {
    match (&ty.domain, old, new) {
        (AttributeDomain::Ordinal { levels }, AttrValue::Number(a), AttrValue::Number(b)) => {
            let pos = |x: f64| levels.iter().position(|l| *l as f64 == x);
            match (pos(*a), pos(*b)) {
                (Some(i), Some(j)) => (i as f64 - j as f64).abs(),
                _ => (a - b).abs(),
            }
        }
        (_, AttrValue::Number(a), AttrValue::Number(b)) => (a - b).abs(),
        _ => f64::from(u8::from(old != new)),
    }
}

/// Per-entity impact of moving from `before` to `after`: attribute-level
/// changes plus the number of changed ties the entity takes part in.
pub fn impact_between(before: &AssessmentState, after: &AssessmentState) -> BTreeMap<crate::id::Id, f64> {
    let mut impact: BTreeMap<crate::id::Id, f64> = after.entity_ids().into_iter().map(|e| (e, 0.0)).collect();
    for x in &after.assignments {
        let Some(ty) = after.attribute_type(x.attribute.as_str()) else { continue };
        let old = before.value(x.subject.as_str(), x.attribute.as_str());
        let delta = match old {
            Some(o) => value_change(ty, o, &x.value),
            None => 1.0,
        };
        *impact.entry(x.subject.clone()).or_default() += delta;
    }
    let key = |t: &super::state::DyadicTie| (t.relation.clone(), t.source.clone(), t.target.clone(), t.layer.clone());
    let old_ties: BTreeMap<_, _> = before.ties.iter().map(|t| (key(t), (t.weight, t.sign))).collect();
    let new_ties: BTreeMap<_, _> = after.ties.iter().map(|t| (key(t), (t.weight, t.sign))).collect();
    let keys: std::collections::BTreeSet<_> = old_ties.keys().chain(new_ties.keys()).cloned().collect();
    for k in keys {
        if old_ties.get(&k) != new_ties.get(&k) {
            for e in [&k.1, &k.2] {
                *impact.entry(e.clone()).or_default() += 1.0;
            }
        }
    }
    impact
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::state::{AttributeAssignment, Coalition, Provenance, Threshold};
    use crate::id::id;

    fn military(rule: ScoreRule) -> AttributeType {
        AttributeType {
            id: id("mil"),
            domain: AttributeDomain::Ordinal { levels: vec![0, 1, 2, 3, 4, 5] },
            aggregative: true,
            score_rule: Some(rule),
            level_map: Some(LevelMap::RoundHalfUp),
        }
    }

    fn db(rule: ScoreRule, levels: [f64; 3]) -> AssessmentState {
        let names = ["a", "b", "c"];
        AssessmentState {
            coalitions: vec![Coalition { id: id("X"), members: names.map(id).into() }],
            attribute_types: vec![military(rule)],
            assignments: names
                .iter()
                .zip(levels)
                .map(|(n, v)| AttributeAssignment {
                    subject: id(n),
                    attribute: id("mil"),
                    value: AttrValue::Number(v),
                    stage: 0,
                    provenance: Provenance::expert("fixture"),
                })
                .collect(),
            ..Default::default()
        }
    }

    #[test]
    fn military_strength_profile() {
        let p = [5.0, 3.0, 2.0];
        let agg = |r| aggregate_attribute(&db(r, p), &id("X"), &id("mil")).unwrap();
        assert_eq!(agg(ScoreRule::Sum), 5.0);
        assert_eq!(agg(ScoreRule::Mean), 3.0);
        assert_eq!(agg(ScoreRule::Max), 5.0);
        assert_eq!(agg(ScoreRule::Min), 2.0);
    }

    #[test]
    fn half_rounds_up() {
        let ty = military(ScoreRule::Mean);
        assert_eq!(ordinalize(&ty, &LevelMap::RoundHalfUp, 2.5), 3.0);
        assert_eq!(ordinalize(&ty, &LevelMap::RoundHalfUp, 2.49), 2.0);
        assert_eq!(ordinalize(&ty, &LevelMap::RoundHalfUp, -4.0), 0.0);
    }

    #[test]
    fn thresholds_pick_highest_reached() {
        let ty = military(ScoreRule::Sum);
        let map = LevelMap::Thresholds(vec![
            Threshold { at: 3.0, level: 1 },
            Threshold { at: 8.0, level: 4 },
        ]);
        assert_eq!(ordinalize(&ty, &map, 2.0), 0.0);
        assert_eq!(ordinalize(&ty, &map, 3.0), 1.0);
        assert_eq!(ordinalize(&ty, &map, 10.0), 4.0);
    }

    #[test]
    fn missing_member_value_is_an_error() {
        let mut d = db(ScoreRule::Sum, [1.0, 1.0, 1.0]);
        d.assignments.pop();
        assert!(matches!(
            aggregate_attribute(&d, &id("X"), &id("mil")),
            Err(AttributeError::MissingValue { .. })
        ));
        let mut d = db(ScoreRule::Sum, [1.0, 1.0, 1.0]);
        d.attribute_types[0].aggregative = false;
        assert!(matches!(
            aggregate_attribute(&d, &id("X"), &id("mil")),
            Err(AttributeError::NotAggregative(_))
        ));
    }

    #[test]
    fn effects_and_impact() {
        let before = db(ScoreRule::Sum, [1.0, 3.0, 5.0]);
        let mut after = before.clone();
        let fx = |s: &str, d: f64| Effect { subject: id(s), attribute: id("mil"), delta: EffectDelta::Shift(d) };
        apply_effects(&mut after, &[fx("a", 2.0), fx("c", 1.0)]).unwrap();
        assert_eq!(after.value("a", "mil"), Some(&AttrValue::Number(3.0)));
        let impact = impact_between(&before, &after);
        assert_eq!(impact[&id("a")], 2.0);
        assert_eq!(impact[&id("b")], 0.0);
        assert_eq!(impact[&id("c")], 0.0);
        assert!(apply_effects(&mut after, &[Effect { subject: id("zz"), attribute: id("mil"), delta: EffectDelta::Shift(1.0) }]).is_err());
    }

    #[test]
    fn step_update_clamps() {
        let ty = military(ScoreRule::Sum);
        let up = |v: f64, d: f64| apply_delta(&ty, &AttrValue::Number(v), &EffectDelta::Shift(d));
        assert_eq!(up(3.0, -1.0).unwrap(), AttrValue::Number(2.0));
        assert_eq!(up(5.0, 1.0).unwrap(), AttrValue::Number(5.0));
        assert_eq!(up(4.0, 0.0).unwrap(), AttrValue::Number(4.0));
        assert!(up(4.0, 0.5).is_err());
    }
}
