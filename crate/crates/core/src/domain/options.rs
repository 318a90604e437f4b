//! Action types, options, action tokens and the `by` order between action types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::state::{AssessmentState, AttrValue, Horizon, Operator, Sign};
use crate::id::Id;

// ---------------------------------------------------------------------------
// Taxonomy
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionFamily {
    AssertiveInformative,
    DirectiveCoercive,
    CommissivePromissive,
    DeclarativeInstitutional,
    ExpressiveEvaluative,
    MediativeCooperative,
    ProceduralDeliberative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionCategory {
    EpistemicInformational,
    CognitiveAnalytic,
    Intelligence,
    BehavioralInfluence,
    Threatening,
    Escalatory,
    KineticOperational,
    EconomicCoercive,
    CommitmentGenerating,
    OfferExchange,
    StatusAltering,
    NormativeRegulatory,
    RelationalEvaluative,
    SymbolicCommunicative,
    Negotiative,
    CoalitionTransformative,
    VotingAggregative,
    AgendaSetting,
    Ratification,
}

impl ActionCategory {
    pub const ALL: [ActionCategory; 19] = [
        ActionCategory::EpistemicInformational,
        ActionCategory::CognitiveAnalytic,
        ActionCategory::Intelligence,
        ActionCategory::BehavioralInfluence,
        ActionCategory::Threatening,
        ActionCategory::Escalatory,
        ActionCategory::KineticOperational,
        ActionCategory::EconomicCoercive,
        ActionCategory::CommitmentGenerating,
        ActionCategory::OfferExchange,
        ActionCategory::StatusAltering,
        ActionCategory::NormativeRegulatory,
        ActionCategory::RelationalEvaluative,
        ActionCategory::SymbolicCommunicative,
        ActionCategory::Negotiative,
        ActionCategory::CoalitionTransformative,
        ActionCategory::VotingAggregative,
        ActionCategory::AgendaSetting,
        ActionCategory::Ratification,
    ];

    pub fn family(self) -> ActionFamily {
        use ActionCategory::*;
        match self {
            EpistemicInformational | CognitiveAnalytic | Intelligence => {
                ActionFamily::AssertiveInformative
            }
            BehavioralInfluence | Threatening | Escalatory | KineticOperational
            | EconomicCoercive => ActionFamily::DirectiveCoercive,
            CommitmentGenerating | OfferExchange => ActionFamily::CommissivePromissive,
            StatusAltering | NormativeRegulatory => ActionFamily::DeclarativeInstitutional,
            RelationalEvaluative | SymbolicCommunicative => ActionFamily::ExpressiveEvaluative,
            Negotiative | CoalitionTransformative => ActionFamily::MediativeCooperative,
            VotingAggregative | AgendaSetting | Ratification => {
                ActionFamily::ProceduralDeliberative
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Preconditions and effects
// ---------------------------------------------------------------------------

/// A predicate over the state, evaluated for an acting entity.
///
/// `subject` / `holder` default to the acting entity. Missing data never
/// satisfies a precondition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Precondition {
    AttributeAtLeast {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subject: Option<Id>,
        attribute: Id,
        level: f64,
    },
    AttributeAtMost {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        subject: Option<Id>,
        attribute: Id,
        level: f64,
    },
    Attitude {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        holder: Option<Id>,
        operator: Operator,
        content: Id,
    },
    Tie {
        relation: Id,
        other: Id,
        #[serde(default)]
        min_weight: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sign: Option<Sign>,
    },
}

impl Precondition {
    pub fn holds(&self, db: &AssessmentState, actor: &Id) -> bool {
        match self {
            Precondition::AttributeAtLeast { subject, attribute, level } => {
                let s = subject.as_ref().unwrap_or(actor);
                db.value(s.as_str(), attribute.as_str())
                    .and_then(AttrValue::as_number)
                    .is_some_and(|v| v >= *level)
            }
            Precondition::AttributeAtMost { subject, attribute, level } => {
                let s = subject.as_ref().unwrap_or(actor);
                db.value(s.as_str(), attribute.as_str())
                    .and_then(AttrValue::as_number)
                    .is_some_and(|v| v <= *level)
            }
            Precondition::Attitude { holder, operator, content } => {
                let h = holder.as_ref().unwrap_or(actor);
                db.holds(h.as_str(), *operator, content.as_str())
            }
            Precondition::Tie { relation, other, min_weight, sign } => {
                let directed = db.relation_type(relation.as_str()).map_or(true, |r| r.directed);
                db.ties.iter().any(|t| {
                    let endpoints = (t.source == *actor && t.target == *other)
                        || (!directed && t.source == *other && t.target == *actor);
                    t.relation == *relation
                        && endpoints
                        && t.weight >= *min_weight
                        && sign.map_or(true, |s| s == t.sign)
                })
            }
        }
    }

    /// Entities and attributes the predicate reads, for reference checks.
    pub(crate) fn references(&self) -> (Vec<&Id>, Option<&Id>) {
        match self {
            Precondition::AttributeAtLeast { subject, attribute, .. }
            | Precondition::AttributeAtMost { subject, attribute, .. } => {
                (subject.iter().collect(), Some(attribute))
            }
            Precondition::Attitude { holder, .. } => (holder.iter().collect(), None),
            Precondition::Tie { other, .. } => (vec![other], None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EffectDelta {
    /// Additive change; a step count on ordinal attributes.
    Shift(f64),
    /// Replacement value for categorical attributes.
    Set(String),
}

/// A typed perturbation of one attribute of one entity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Effect {
    pub subject: Id,
    pub attribute: Id,
    pub delta: EffectDelta,
}

// ---------------------------------------------------------------------------
// Action types, options, tokens
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionType {
    pub id: Id,
    pub family: ActionFamily,
    pub category: ActionCategory,
    #[serde(default)]
    pub roles: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content: Option<Id>,
    #[serde(default)]
    pub mode: String,
    /// Every parameter an option or token may bind.
    #[serde(default)]
    pub parameters: BTreeSet<String>,
    /// Parameters a token must bind, besides `timestamp` and `record_id`.
    #[serde(default)]
    pub required: BTreeSet<String>,
    #[serde(default)]
    pub preconditions: Vec<Precondition>,
    #[serde(default)]
    pub consequences: Vec<String>,
    pub reversible: bool,
    pub target_response: bool,
}

/// Parameters every token binds regardless of its action type.
pub const TOKEN_PARAMETERS: [&str; 2] = ["timestamp", "record_id"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SalienceInputs {
    /// Step code on the intensity scale.
    pub intensity: u32,
    /// Likelihood of success in [0, 1].
    pub likelihood: f64,
    pub horizon: Horizon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionInstance {
    pub id: Id,
    pub action_type: Id,
    pub actor: Id,
    #[serde(default)]
    pub bindings: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub salience_inputs: Option<SalienceInputs>,
    /// Modeled as execution versus non-execution.
    #[serde(default)]
    pub binary: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<Effect>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reversible: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_response: Option<bool>,
    /// Cleared when feasibility is withdrawn by an update.
    #[serde(default = "enabled_default", skip_serializing_if = "is_true")]
    pub enabled: bool,
}

fn enabled_default() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

impl OptionInstance {
    pub fn is_reversible(&self, ty: &ActionType) -> bool {
        self.reversible.unwrap_or(ty.reversible)
    }

    pub fn requires_response(&self, ty: &ActionType) -> bool {
        self.target_response.unwrap_or(ty.target_response)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionToken {
    pub option: OptionInstance,
    pub bindings: BTreeMap<String, String>,
    pub record_id: String,
    pub timestamp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BindingError {
    #[error("action type {action_type} declares no parameter {parameter:?}")]
    UnknownParameter { action_type: Id, parameter: String },
    #[error("parameter {parameter:?} bound twice with different values")]
    Rebound { parameter: String },
    #[error("incomplete binding: {missing:?} unbound")]
    Incomplete { missing: Vec<String> },
    #[error("option {option} refers to action type {found}, expected {expected}")]
    WrongType { option: Id, expected: Id, found: Id },
}

fn check_declared(ty: &ActionType, bindings: &BTreeMap<String, String>) -> Result<(), BindingError> {
    for name in bindings.keys() {
        if !ty.parameters.contains(name) && !TOKEN_PARAMETERS.contains(&name.as_str()) {
            return Err(BindingError::UnknownParameter {
                action_type: ty.id.clone(),
                parameter: name.clone(),
            });
        }
    }
    Ok(())
}

/// Binds an acting entity and a partial parameter assignment to an action type.
pub fn instantiate_option(
    id: Id,
    ty: &ActionType,
    actor: Id,
    bindings: BTreeMap<String, String>,
) -> Result<OptionInstance, BindingError> {
    check_declared(ty, &bindings)?;
    Ok(OptionInstance {
        id,
        action_type: ty.id.clone(),
        actor,
        bindings,
        salience_inputs: None,
        binary: false,
        effects: Vec::new(),
        reversible: Some(ty.reversible),
        target_response: Some(ty.target_response),
        enabled: true,
    })
}

/// Completes an option into a token; every required parameter, the
/// timestamp and the record id must end up bound.
pub fn bind_action(
    option: &OptionInstance,
    ty: &ActionType,
    remaining: BTreeMap<String, String>,
) -> Result<ActionToken, BindingError> {
    if option.action_type != ty.id {
        return Err(BindingError::WrongType {
            option: option.id.clone(),
            expected: option.action_type.clone(),
            found: ty.id.clone(),
        });
    }
    check_declared(ty, &remaining)?;
    let mut all = option.bindings.clone();
    for (k, v) in remaining {
        match all.get(&k) {
            Some(old) if *old != v => return Err(BindingError::Rebound { parameter: k }),
            _ => {
                all.insert(k, v);
            }
        }
    }
    let missing: Vec<String> = ty
        .required
        .iter()
        .map(String::as_str)
        .chain(TOKEN_PARAMETERS)
        .filter(|p| !all.contains_key(*p))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(BindingError::Incomplete { missing });
    }
    Ok(ActionToken {
        option: option.clone(),
        record_id: all["record_id"].clone(),
        timestamp: all["timestamp"].clone(),
        bindings: all,
    })
}

// ---------------------------------------------------------------------------
// The `by` order
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("by({0}, {1}) would close a cycle")]
pub struct CycleError(pub Id, pub Id);

/// `by(α, β)`: α is performed by performing β. Kept acyclic, so the
/// transitive closure is a strict partial order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByOrder {
    edges: BTreeMap<Id, BTreeSet<Id>>,
}

impl ByOrder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, alpha: Id, beta: Id) -> Result<(), CycleError> {
        if alpha == beta || self.precedes(&beta, &alpha) {
            return Err(CycleError(alpha, beta));
        }
        self.edges.entry(alpha).or_default().insert(beta);
        Ok(())
    }

    /// Whether `beta` is reachable from `alpha` through at least one edge.
    pub fn precedes(&self, alpha: &Id, beta: &Id) -> bool {
        let mut stack: Vec<&Id> = self.edges.get(alpha).into_iter().flatten().collect();
        let mut seen = BTreeSet::new();
        while let Some(x) = stack.pop() {
            if x == beta {
                return true;
            }
            if seen.insert(x) {
                stack.extend(self.edges.get(x).into_iter().flatten());
            }
        }
        false
    }

    pub fn edges(&self) -> impl Iterator<Item = (&Id, &Id)> {
        self.edges.iter().flat_map(|(a, bs)| bs.iter().map(move |b| (a, b)))
    }
}

/// Builds the order from declared edges, rejecting the first edge that closes a cycle.
pub fn by_closure<'a>(
    edges: impl IntoIterator<Item = (&'a Id, &'a Id)>,
) -> Result<ByOrder, CycleError> {
    let mut order = ByOrder::new();
    for (a, b) in edges {
        order.insert(a.clone(), b.clone())?;
    }
    Ok(order)
}

impl fmt::Display for ActionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or_default())
    }
}
