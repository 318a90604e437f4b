//! Coalition stability inside a tree and the two-option expected-utility threshold.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::utility::EvalError;
use crate::id::Id;
use crate::tree::model::{EdgeLabel, ScenarioTree};
use crate::tree::mrp::{mrp_under_uncertainty, DecisionRule, EventSelector, TieBreak};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberComparison {
    pub coordinated: f64,
    pub best_deviation: f64,
    pub deviation_leaf: Id,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    pub coordinated_leaf: Id,
    pub members: BTreeMap<Id, MemberComparison>,
}

/// Leaf reached by following `labels` from the root, continuing by backward
/// induction on leaf values when the labels stop short of a leaf.
fn outcome_of(tree: &ScenarioTree, labels: &[EdgeLabel]) -> Result<Id, EvalError> {
    let index = tree.index();
    let mut at = tree.root.clone();
    for l in labels {
        let e = index
            .children(at.as_str())
            .iter()
            .find(|e| e.label == *l)
            .ok_or_else(|| EvalError::Branch(format!("no edge {l} below {at}")))?;
        at = e.head.clone();
    }
    if index.is_leaf(at.as_str()) {
        return Ok(at);
    }
    let rule = DecisionRule::Seu { prior: vec![1.0] };
    let solved = mrp_under_uncertainty(tree, &rule, &EventSelector::default(), TieBreak::Lexicographic)
        .map_err(|e| EvalError::Branch(e.to_string()))?;
    Ok(solved.induced[&at].clone())
}

fn value(tree: &ScenarioTree, leaf: &Id, member: &Id) -> Result<f64, EvalError> {
    tree.position(leaf.as_str())
        .and_then(|p| p.values.get(member).copied())
        .ok_or_else(|| EvalError::Branch(format!("no value for {member} at {leaf}")))
}

/// Stable iff every member does weakly better under coordination than under
/// its best unilateral deviation.
pub fn coalition_tree_stability(
    tree: &ScenarioTree,
    members: &[Id],
    coordination: &[EdgeLabel],
    deviations: &BTreeMap<Id, Vec<Vec<EdgeLabel>>>,
) -> Result<StabilityVerdict, EvalError> {
    tree.validate().map_err(|e| EvalError::Branch(e.to_string()))?;
    let joint = outcome_of(tree, coordination)?;
    let mut out = BTreeMap::new();
    for m in members {
        let options = deviations
            .get(m)
            .filter(|d| !d.is_empty())
            .ok_or_else(|| EvalError::Branch(format!("no deviation branch for {m}")))?;
        let mut best: Option<(f64, Id)> = None;
        for path in options {
            let leaf = outcome_of(tree, path)?;
            let v = value(tree, &leaf, m)?;
            if best.as_ref().map_or(true, |(b, _)| v > *b) {
                best = Some((v, leaf));
            }
        }
        let (best_deviation, deviation_leaf) = best.expect("non-empty");
        out.insert(m.clone(), MemberComparison { coordinated: value(tree, &joint, m)?, best_deviation, deviation_leaf });
    }
    let stable = out.values().all(|c| c.coordinated >= c.best_deviation);
    Ok(StabilityVerdict { stable, coordinated_leaf: joint, members: out })
}

/// Utilities of one option when the opponent yields and when it does not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionOutcomes {
    pub option: String,
    pub if_yield: f64,
    pub if_resist: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    First,
    Second,
    Indifferent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EuComparison {
    pub expected_first: f64,
    pub expected_second: f64,
    pub verdict: Verdict,
    pub preferred: Option<String>,
    /// Yield probability after the first option above which it is preferred, at this r.
    pub threshold: Option<f64>,
    /// The threshold as a function of r.
    pub threshold_form: String,
}

/// Absolute tolerance for reporting indifference.
pub const INDIFFERENCE_TOLERANCE: f64 = 1e-12;

fn check(name: &'static str, value: f64) -> Result<(), EvalError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(EvalError::Probability { name, value })
    }
}

/// Compares `E[u | first] = q·yield + (1-q)·resist` with the same for `second` under r.
pub fn conditional_eu_threshold(
    first: &OptionOutcomes,
    second: &OptionOutcomes,
    q: f64,
    r: f64,
) -> Result<EuComparison, EvalError> {
    check("q", q)?;
    check("r", r)?;
    let expected_first = q * first.if_yield + (1.0 - q) * first.if_resist;
    let expected_second = r * second.if_yield + (1.0 - r) * second.if_resist;
    let gap = expected_first - expected_second;
    let verdict = if gap.abs() <= INDIFFERENCE_TOLERANCE {
        Verdict::Indifferent
    } else if gap > 0.0 {
        Verdict::First
    } else {
        Verdict::Second
    };
    let preferred = match verdict {
        Verdict::First => Some(first.option.clone()),
        Verdict::Second => Some(second.option.clone()),
        Verdict::Indifferent => None,
    };
    let slope = second.if_yield - second.if_resist;
    let offset = second.if_resist - first.if_resist;
    let denom = first.if_yield - first.if_resist;
    let threshold = (denom != 0.0).then(|| (slope * r + offset) / denom);
    let sign = if offset < 0.0 { '-' } else { '+' };
    let cmp = if denom >= 0.0 { ">=" } else { "<=" };
    let threshold_form = format!("q {cmp} ({slope}r {sign} {})/{denom}", offset.abs());
    Ok(EuComparison { expected_first, expected_second, verdict, preferred, threshold, threshold_form })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::id::id;
    use crate::tree::model::{Edge, Position, PositionKind};

    fn border() -> (OptionOutcomes, OptionOutcomes) {
        (
            OptionOutcomes { option: "R".into(), if_yield: 6.5, if_resist: -0.5 },
            OptionOutcomes { option: "S".into(), if_yield: 5.5, if_resist: -1.0 },
        )
    }

    #[test]
    fn threshold_examples() {
        let (r_opt, s_opt) = border();
        let a = conditional_eu_threshold(&r_opt, &s_opt, 1.0, 1.0).unwrap();
        assert_eq!((a.expected_first, a.expected_second, a.verdict), (6.5, 5.5, Verdict::First));
        assert_eq!(a.threshold_form, "q >= (6.5r - 0.5)/7");
        let b = conditional_eu_threshold(&r_opt, &s_opt, 0.0, 1.0).unwrap();
        assert_eq!(b.preferred.as_deref(), Some("S"));
        let t = (6.5 * 0.4 - 0.5) / 7.0;
        assert_eq!(conditional_eu_threshold(&r_opt, &s_opt, t, 0.4).unwrap().verdict, Verdict::Indifferent);
        assert!(conditional_eu_threshold(&r_opt, &s_opt, 1.2, 0.0).is_err());
    }

    fn coalition_tree() -> ScenarioTree {
        let leaf = |name: &str, v: [f64; 3]| {
            let mut p = Position::new(id(name), PositionKind::Terminal, None, 2);
            for (k, x) in ["a", "b", "m"].iter().zip(v) {
                p.values.insert(id(k), x);
            }
            p
        };
        let mut z1 = leaf("z1", [3.0, 3.0, 1.0]);
        let mut z2 = leaf("z2", [0.0, 0.0, 2.0]);
        z1.depth = 3;
        z2.depth = 3;
        let e = |t: &str, h: &str, l: &str| Edge { tail: id(t), head: id(h), label: l.parse().unwrap(), likelihood: None };
        ScenarioTree {
            id: "coalition".into(),
            stage: 0,
            root: id("r"),
            positions: vec![
                Position::new(id("r"), PositionKind::Decision, Some(id("X")), 0),
                Position::new(id("yes"), PositionKind::Decision, Some(id("X")), 1),
                Position::new(id("joint"), PositionKind::Decision, Some(id("X")), 2),
                Position::new(id("no"), PositionKind::Decision, Some(id("a")), 1),
                z1,
                z2,
                leaf("z3", [2.0, 2.0, 2.0]),
                leaf("z4", [1.0, 1.0, 3.0]),
            ],
            edges: vec![
                e("r", "yes", "form"),
                e("r", "no", "¬form"),
                e("yes", "joint", "x_acts"),
                e("joint", "z1", "cooperate"),
                e("joint", "z2", "defect"),
                e("no", "z3", "a_acts"),
                e("no", "z4", "b_acts"),
            ],
        }
    }

    #[test]
    fn coordination_supported() {
        let t = coalition_tree();
        let l = |s: &str| s.parse::<EdgeLabel>().unwrap();
        let coord = vec![l("form"), l("x_acts"), l("cooperate")];
        let dev = BTreeMap::from([(id("a"), vec![vec![l("¬form"), l("a_acts")]]), (id("b"), vec![vec![l("¬form"), l("a_acts")]])]);
        let v = coalition_tree_stability(&t, &[id("a"), id("b")], &coord, &dev).unwrap();
        assert!(v.stable);
        assert_eq!(v.members[&id("a")].best_deviation, 2.0);
        let worse = vec![l("form"), l("x_acts"), l("defect")];
        assert!(!coalition_tree_stability(&t, &[id("a"), id("b")], &worse, &dev).unwrap().stable);
        let missing = BTreeMap::from([(id("a"), vec![vec![l("¬form")]])]);
        assert!(coalition_tree_stability(&t, &[id("a"), id("b")], &coord, &missing).is_err());
    }
}
