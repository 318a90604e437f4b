//! Actor, coalition and system evaluations of terminal scenarios.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::id::Id;
use crate::tree::model::ScenarioTree;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no utility rule for entity {0}")]
    NoRule(Id),
    #[error("coalition {coalition}: weights cover {weights:?}, members are {members:?}")]
    WeightMismatch { coalition: Id, weights: Vec<Id>, members: Vec<Id> },
    #[error("probability {name} = {value} outside [0,1]")]
    Probability { name: &'static str, value: f64 },
    #[error("unknown scenario {0}")]
    UnknownScenario(String),
    #[error("{0}")]
    Branch(String),
}

/// A terminal scenario with the indicators and per-entity values coded for it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    /// Leaf position the scenario was read from, when it came from a tree.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf: Option<Id>,
    #[serde(default)]
    pub indicators: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<Id, f64>,
}

impl Scenario {
    pub fn new(id: impl Into<String>, indicators: &[(&str, f64)]) -> Self {
        Scenario {
            id: id.into(),
            leaf: None,
            indicators: indicators.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            values: BTreeMap::new(),
        }
    }
}

/// One scenario per leaf, identified as `tree/leaf`.
pub fn scenarios_of(tree: &ScenarioTree) -> Vec<Scenario> {
    tree.leaves()
        .into_iter()
        .map(|p| Scenario {
            id: format!("{}/{}", tree.id, p.id),
            leaf: Some(p.id.clone()),
            indicators: p.indicators.clone(),
            values: p.values.clone(),
        })
        .collect()
}

/// A number, or an explicit marker saying why none could be computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Value(f64),
    Unknown { unknown: String },
}

impl Cell {
    pub fn unknown(reason: impl Into<String>) -> Self {
        Cell::Unknown { unknown: reason.into() }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(*v),
            Cell::Unknown { .. } => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Value(v) => f.write_str(&decimal(*v)),
            Cell::Unknown { .. } => f.write_str("unknown"),
        }
    }
}

/// Twelve decimals, trailing zeros trimmed; hides last-bit noise in exports.
pub fn decimal(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.12}");
    match s.trim_end_matches('0').trim_end_matches('.') {
        "-0" => "0".to_string(),
        t => t.to_string(),
    }
}

/// Monotone map of a raw indicator onto a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Normalization {
    /// `(x - min) / (max - min)` clamped to [0, 1]; reversed when `increasing` is false.
    Range {
        min: f64,
        max: f64,
        #[serde(default = "yes")]
        increasing: bool,
    },
    /// Score of the highest threshold not above x, else `below`.
    Thresholds { steps: Vec<(f64, f64)>, below: f64 },
}

fn yes() -> bool {
    true
}

impl Normalization {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Normalization::Range { min, max, increasing } => {
                let s = if max > min { ((x - min) / (max - min)).clamp(0.0, 1.0) } else { 0.0 };
                if *increasing {
                    s
                } else {
                    1.0 - s
                }
            }
            Normalization::Thresholds { steps, below } => steps
                .iter()
                .filter(|(at, _)| x >= *at)
                .max_by(|a, b| a.0.total_cmp(&b.0))
                .map_or(*below, |(_, s)| *s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub indicator: String,
    pub weight: f64,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum UtilityRule {
    /// `constant + Σ weight · indicator`.
    Linear {
        weights: BTreeMap<String, f64>,
        #[serde(default)]
        constant: f64,
    },
    /// Weighted sum of normalized indicators.
    Criteria { criteria: Vec<Criterion> },
    /// Scores given per scenario id.
    Direct { scores: BTreeMap<String, f64> },
    /// Best-first ranking; the top scenario scores `len - 1`, the last 0.
    Ordinal { ranking: Vec<String> },
    /// The value stored on the leaf for this entity.
    LeafValue,
}

impl UtilityRule {
    fn describe(&self) -> String {
        match self {
            UtilityRule::Linear { weights, constant } => {
                let terms: Vec<String> = weights.iter().map(|(k, w)| format!("{w}*{k}")).collect();
                format!("linear({constant} + {})", terms.join(" + "))
            }
            UtilityRule::Criteria { criteria } => {
                let terms: Vec<String> = criteria.iter().map(|c| format!("{}*norm({})", c.weight, c.indicator)).collect();
                format!("criteria({})", terms.join(" + "))
            }
            UtilityRule::Direct { .. } => "direct scores".into(),
            UtilityRule::Ordinal { .. } => "ordinal ranking".into(),
            UtilityRule::LeafValue => "leaf value".into(),
        }
    }
}

fn indicator(s: &Scenario, name: &str) -> Result<f64, Cell> {
    s.indicators.get(name).copied().ok_or_else(|| Cell::unknown(format!("indicator {name} missing for {}", s.id)))
}

pub fn actor_utility(scenario: &Scenario, entity: &Id, rule: &UtilityRule) -> Cell {
    let result = match rule {
        UtilityRule::Linear { weights, constant } => weights
            .iter()
            .try_fold(*constant, |acc, (k, w)| Ok(acc + w * indicator(scenario, k)?)),
        UtilityRule::Criteria { criteria } => criteria
            .iter()
            .try_fold(0.0, |acc, c| Ok(acc + c.weight * c.normalization.apply(indicator(scenario, &c.indicator)?))),
        UtilityRule::Direct { scores } => scores
            .get(&scenario.id)
            .copied()
            .ok_or_else(|| Cell::unknown(format!("no direct score for {}", scenario.id))),
        UtilityRule::Ordinal { ranking } => ranking
            .iter()
            .position(|s| *s == scenario.id)
            .map(|i| (ranking.len() - 1 - i) as f64)
            .ok_or_else(|| Cell::unknown(format!("{} not ranked", scenario.id))),
        UtilityRule::LeafValue => scenario
            .values
            .get(entity)
            .copied()
            .ok_or_else(|| Cell::unknown(format!("no leaf value for {entity} in {}", scenario.id))),
    };
    result.map_or_else(|u| u, Cell::Value)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum Aggregation {
    /// Σ w_a · U_a with one weight per member.
    WeightedMean { weights: BTreeMap<Id, f64> },
    /// The worst-off member's utility.
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoalitionSpec {
    pub members: Vec<Id>,
    pub aggregation: Aggregation,
}

/// How each entity and coalition evaluates scenarios.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySpec {
    #[serde(default)]
    pub actors: BTreeMap<Id, UtilityRule>,
    #[serde(default)]
    pub coalitions: BTreeMap<Id, CoalitionSpec>,
    /// Declared system functional; evaluation never assumes one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemFunctional>,
}

pub fn coalition_utility(
    scenario: &Scenario,
    coalition: &Id,
    spec: &CoalitionSpec,
    utilities: &UtilitySpec,
) -> Result<Cell, EvalError> {
    let member_cell = |m: &Id| -> Result<Cell, EvalError> {
        let rule = utilities.actors.get(m).ok_or_else(|| EvalError::NoRule(m.clone()))?;
        Ok(actor_utility(scenario, m, rule))
    };
    match &spec.aggregation {
        Aggregation::WeightedMean { weights } => {
            let mut members = spec.members.clone();
            members.sort();
            let keys: Vec<Id> = weights.keys().cloned().collect();
            if keys != members {
                return Err(EvalError::WeightMismatch { coalition: coalition.clone(), weights: keys, members });
            }
            let mut total = 0.0;
            for (m, w) in weights {
                match member_cell(m)? {
                    Cell::Value(u) => total += w * u,
                    unknown => return Ok(unknown),
                }
            }
            Ok(Cell::Value(total))
        }
        Aggregation::Min => {
            let mut worst = f64::INFINITY;
            for m in &spec.members {
                match member_cell(m)? {
                    Cell::Value(u) => worst = worst.min(u),
                    unknown => return Ok(unknown),
                }
            }
            Ok(Cell::Value(worst))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemFunctional {
    Linear {
        weights: BTreeMap<String, f64>,
        #[serde(default)]
        constant: f64,
    },
    Constant { value: f64 },
}

pub fn system_value(scenario: &Scenario, functional: &SystemFunctional) -> Cell {
    match functional {
        SystemFunctional::Constant { value } => Cell::Value(*value),
        SystemFunctional::Linear { weights, constant } => {
            actor_utility(scenario, &Id::new("system").expect("valid"), &UtilityRule::Linear { weights: weights.clone(), constant: *constant })
        }
    }
}

/// Rows are entities, then coalitions, then `system` when declared; columns are scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMatrix {
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    pub entries: Vec<Vec<Cell>>,
    /// Rule that produced each row.
    pub provenance: BTreeMap<String, String>,
    /// Leaf each scenario column was read from.
    pub sources: BTreeMap<String, Id>,
}

pub const SYSTEM_ROW: &str = "system";

impl EvaluationMatrix {
    pub fn row(&self, name: &str) -> Option<&[Cell]> {
        self.rows.iter().position(|r| r == name).map(|i| self.entries[i].as_slice())
    }

    pub fn get(&self, row: &str, column: &str) -> Option<&Cell> {
        let j = self.columns.iter().position(|c| c == column)?;
        self.row(row).map(|r| &r[j])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("entity");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (r, cells) in self.rows.iter().zip(&self.entries) {
            out.push_str(r);
            for c in cells {
                out.push(',');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }

    /// Provenance sidecar accompanying the CSV export.
    pub fn sidecar(&self) -> serde_json::Value {
        let unknowns: Vec<serde_json::Value> = self
            .rows
            .iter()
            .zip(&self.entries)
            .flat_map(|(r, cells)| {
                cells.iter().zip(&self.columns).filter_map(move |(c, col)| match c {
                    Cell::Unknown { unknown } => Some(serde_json::json!({"row": r, "column": col, "reason": unknown})),
                    Cell::Value(_) => None,
                })
            })
            .collect();
        serde_json::json!({"rows": self.provenance, "sources": self.sources, "unknown": unknowns})
    }
}

pub fn evaluation_matrix(scenarios: &[Scenario], spec: &UtilitySpec) -> Result<EvaluationMatrix, EvalError> {
    let columns: Vec<String> = scenarios.iter().map(|s| s.id.clone()).collect();
    let sources = scenarios.iter().filter_map(|s| s.leaf.clone().map(|l| (s.id.clone(), l))).collect();
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    let mut provenance = BTreeMap::new();
    for (a, rule) in &spec.actors {
        rows.push(a.to_string());
        entries.push(scenarios.iter().map(|s| actor_utility(s, a, rule)).collect());
        provenance.insert(a.to_string(), rule.describe());
    }
    for (x, c) in &spec.coalitions {
        rows.push(x.to_string());
        entries.push(scenarios.iter().map(|s| coalition_utility(s, x, c, spec)).collect::<Result<_, _>>()?);
        let how = match &c.aggregation {
            Aggregation::WeightedMean { weights } => {
                let terms: Vec<String> = weights.iter().map(|(m, w)| format!("{w}*{m}")).collect();
                format!("weighted mean({})", terms.join(" + "))
            }
            Aggregation::Min => "min over members".into(),
        };
        provenance.insert(x.to_string(), how);
    }
    if let Some(f) = &spec.system {
        rows.push(SYSTEM_ROW.into());
        entries.push(scenarios.iter().map(|s| system_value(s, f)).collect());
        provenance.insert(SYSTEM_ROW.into(), format!("{f:?}"));
    }
    Ok(EvaluationMatrix { rows, columns, entries, provenance, sources })
}

/// Everything `evaluate` reads: scenarios (given directly or read off tree
/// leaves), utility rules, and the analyses to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationInput {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scenarios: Vec<Scenario>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trees: Vec<ScenarioTree>,
    pub utilities: UtilitySpec,
    /// Rows compared by the Pareto frontier; every entity row when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pareto_rows: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominance: Option<super::pareto::DominanceCriterion>,
}

impl EvaluationInput {
    pub fn all_scenarios(&self) -> Vec<Scenario> {
        self.scenarios.iter().cloned().chain(self.trees.iter().flat_map(scenarios_of)).collect()
    }

    pub fn frontier_rows(&self) -> Vec<String> {
        if self.pareto_rows.is_empty() {
            self.utilities.actors.keys().map(ToString::to_string).collect()
        } else {
            self.pareto_rows.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::id::id;

    fn border_rules() -> UtilitySpec {
        let lin = |pairs: &[(&str, f64)]| UtilityRule::Linear {
            weights: pairs.iter().map(|(k, w)| (k.to_string(), *w)).collect(),
            constant: 0.0,
        };
        UtilitySpec {
            actors: BTreeMap::from([
                (id("a"), lin(&[("g_a", 1.0), ("h", -0.5)])),
                (id("b"), lin(&[("g_b", 1.0), ("h", -0.3)])),
                (id("m"), lin(&[("p", 1.0), ("h", -1.0)])),
            ]),
            coalitions: BTreeMap::from([(
                id("X"),
                CoalitionSpec {
                    members: vec![id("a"), id("m")],
                    aggregation: Aggregation::WeightedMean { weights: BTreeMap::from([(id("a"), 0.6), (id("m"), 0.4)]) },
                },
            )]),
            system: None,
        }
    }

    #[test]
    fn border_row_one() {
        let s1 = Scenario::new("s1", &[("h", 9.0), ("g_a", 4.0), ("g_b", 4.0), ("p", 2.0)]);
        let spec = border_rules();
        assert_eq!(actor_utility(&s1, &id("a"), &spec.actors[&id("a")]), Cell::Value(-0.5));
        assert_eq!(actor_utility(&s1, &id("m"), &spec.actors[&id("m")]), Cell::Value(-7.0));
        let ux = coalition_utility(&s1, &id("X"), &spec.coalitions[&id("X")], &spec).unwrap();
        assert!((ux.value().unwrap() + 3.1).abs() < 1e-12);
        let zero = UtilityRule::Linear { weights: BTreeMap::from([("h".to_string(), 0.0)]), constant: 0.0 };
        assert_eq!(actor_utility(&s1, &id("a"), &zero), Cell::Value(0.0));
    }

    #[test]
    fn missing_inputs_are_explicit() {
        let s = Scenario::new("s", &[("h", 1.0)]);
        let spec = border_rules();
        assert!(matches!(actor_utility(&s, &id("a"), &spec.actors[&id("a")]), Cell::Unknown { .. }));
        let m = evaluation_matrix(&[s], &spec).unwrap();
        assert_eq!(m.get("X", "s").unwrap().value(), None);
        assert_eq!(m.sidecar()["unknown"].as_array().unwrap().len(), 4);
        let f = SystemFunctional::Linear { weights: BTreeMap::from([("q".to_string(), 1.0)]), constant: 0.0 };
        assert!(system_value(&Scenario::new("s", &[]), &f).value().is_none());
        assert_eq!(system_value(&Scenario::new("s", &[]), &SystemFunctional::Constant { value: 2.0 }), Cell::Value(2.0));
    }

    #[test]
    fn coalition_weights_must_match_members() {
        let mut spec = border_rules();
        spec.coalitions.get_mut(&id("X")).unwrap().members.push(id("b"));
        let s = Scenario::new("s", &[("h", 1.0), ("g_a", 1.0), ("g_b", 1.0), ("p", 1.0)]);
        let c = spec.coalitions[&id("X")].clone();
        assert!(matches!(coalition_utility(&s, &id("X"), &c, &spec), Err(EvalError::WeightMismatch { .. })));
        let solo = CoalitionSpec { members: vec![id("a")], aggregation: Aggregation::WeightedMean { weights: BTreeMap::from([(id("a"), 1.0)]) } };
        assert_eq!(coalition_utility(&s, &id("Y"), &solo, &spec).unwrap(), Cell::Value(0.5));
    }

    #[test]
    fn normalizations() {
        let r = Normalization::Range { min: 0.0, max: 10.0, increasing: false };
        assert_eq!(r.apply(2.0), 0.8);
        assert_eq!(r.apply(20.0), 0.0);
        let t = Normalization::Thresholds { steps: vec![(3.0, 0.5), (7.0, 1.0)], below: 0.0 };
        assert_eq!([t.apply(1.0), t.apply(3.0), t.apply(9.0)], [0.0, 0.5, 1.0]);
        let ord = UtilityRule::Ordinal { ranking: vec!["x".into(), "y".into()] };
        assert_eq!(actor_utility(&Scenario::new("x", &[]), &id("a"), &ord), Cell::Value(1.0));
    }
}
