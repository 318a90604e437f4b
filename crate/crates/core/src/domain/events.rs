//! Exogenous events, trigger links between them, and actor-specific views.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::options::Effect;
use super::state::{AssessmentState, Horizon, Visibility};
use crate::id::Id;

pub const OCCURS: &str = "occurs";
pub const NOT_OCCURS: &str = "not_occurs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Observability {
    Unobserved,
    Partial,
    #[default]
    Public,
}

/// One way an event can resolve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Realization {
    pub label: String,
    pub likelihood: f64,
    /// Whether this outcome applies the event's effect map.
    #[serde(default)]
    pub applies_effects: bool,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub id: Id,
    pub likelihood: f64,
    pub impact: f64,
    pub horizon: Horizon,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    #[serde(default)]
    pub observability: Observability,
    #[serde(default = "one")]
    pub confidence: f64,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub evidence: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub footprint: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub effects: Vec<Effect>,
    /// Explicit outcomes; empty means the binary occurs / not_occurs split.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub realizations: Vec<Realization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controllability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reversibility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lead_time: Option<f64>,
}

impl Event {
    pub fn outcomes(&self) -> Vec<Realization> {
        if !self.realizations.is_empty() {
            return self.realizations.clone();
        }
        vec![
            Realization { label: OCCURS.into(), likelihood: self.likelihood, applies_effects: true },
            Realization {
                label: NOT_OCCURS.into(),
                likelihood: 1.0 - self.likelihood,
                applies_effects: false,
            },
        ]
    }

    pub fn outcome(&self, label: &str) -> Option<Realization> {
        self.outcomes().into_iter().find(|r| r.label == label)
    }
}

/// Monotone response of a successor's likelihood to the trigger's |impact|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TriggerFn {
    Linear { scale: f64 },
    Saturating { scale: f64 },
    Constant { value: f64 },
}

impl Default for TriggerFn {
    fn default() -> Self {
        TriggerFn::Linear { scale: 1.0 }
    }
}

impl TriggerFn {
    pub fn apply(&self, impact: f64) -> f64 {
        let m = impact.abs();
        match *self {
            TriggerFn::Linear { scale } => scale * m,
            TriggerFn::Saturating { scale } => 1.0 - (-scale * m).exp(),
            TriggerFn::Constant { value } => value,
        }
    }

    pub fn is_monotone(&self) -> bool {
        match *self {
            TriggerFn::Linear { scale } | TriggerFn::Saturating { scale } => {
                scale.is_finite() && scale >= 0.0
            }
            TriggerFn::Constant { value } => value.is_finite() && value >= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerEdge {
    pub from: Id,
    pub to: Id,
    pub weight: f64,
    #[serde(default)]
    pub response: TriggerFn,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventGraph {
    #[serde(default)]
    pub edges: Vec<TriggerEdge>,
}

impl EventGraph {
    pub fn successors<'a>(&'a self, event: &'a str) -> impl Iterator<Item = &'a TriggerEdge> + 'a {
        self.edges.iter().filter(move |e| e.from.as_str() == event)
    }

    /// One-hop likelihood update after `event` is realized with the given
    /// impact: every successor moves to `clamp(ℓ + w·f(η), 0, 1)`.
    /// Successors without a current likelihood are skipped.
    pub fn cascade(&self, event: &str, impact: f64, likelihoods: &mut BTreeMap<Id, f64>) {
        for edge in self.successors(event) {
            if let Some(l) = likelihoods.get_mut(&edge.to) {
                *l = (*l + edge.weight * edge.response.apply(impact)).clamp(0.0, 1.0);
            }
        }
    }
}

/// Applies the one-hop cascade of `event` to the event likelihoods stored in the state.
pub fn cascade_in_state(db: &mut AssessmentState, event: &str) {
    let Some(impact) = db.event(event).map(|e| e.impact) else { return };
    let mut ls: BTreeMap<Id, f64> = db.events.iter().map(|e| (e.id.clone(), e.likelihood)).collect();
    db.event_graph.cascade(event, impact, &mut ls);
    for e in &mut db.events {
        e.likelihood = ls[&e.id];
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Affects {
    Yes,
    No,
    /// The actor declares no location, so exposure cannot be decided.
    MissingLocation,
}

impl Affects {
    pub fn is_affected(&self) -> bool {
        *self == Affects::Yes
    }
}

/// Exposure of an actor to an event through the event's footprint.
pub fn affects(db: &AssessmentState, actor: &str, event: &Event) -> Affects {
    match db.actor(actor).and_then(|a| a.location.as_deref()) {
        None => Affects::MissingLocation,
        Some(loc) if event.footprint.contains(loc) => Affects::Yes,
        Some(_) => Affects::No,
    }
}

fn event_visible(db: &AssessmentState, actor: &str, e: &Event) -> bool {
    match e.observability {
        Observability::Public => true,
        Observability::Partial => e.evidence.contains(actor) || affects(db, actor, e).is_affected(),
        Observability::Unobserved => e.evidence.contains(actor),
    }
}

fn tie_visible(actor: &Id, vis: &Visibility) -> bool {
    match vis {
        Visibility::Perceived(by) => by.contains(actor),
        Visibility::Observed | Visibility::Signalled => true,
    }
}

/// The state as seen by one actor. Only removes records.
pub fn derive_perception(db: &AssessmentState, actor: &Id) -> AssessmentState {
    let mut view = db.clone();
    view.events.retain(|e| event_visible(db, actor.as_str(), e));
    let kept: BTreeSet<&str> = view.events.iter().map(|e| e.id.as_str()).collect();
    view.event_graph
        .edges
        .retain(|e| kept.contains(e.from.as_str()) && kept.contains(e.to.as_str()));
    view.ties.retain(|t| tie_visible(actor, &t.visibility));
    view.hyperedges.retain(|h| tie_visible(actor, &h.visibility));
    view
}
