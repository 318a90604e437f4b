//! Lineage across stages and retrodiction of what actually happened.

use serde::Serialize;

use crate::domain::state::{AssessmentState, Transition};
use crate::tree::bundle::Bundle;
use crate::tree::model::EdgeLabel;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Link {
    pub stage: u32,
    pub digest: String,
    pub history_ref: Option<String>,
    /// Whether `history_ref` names the digest of the preceding state in the trace.
    pub chained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Retrodiction {
    pub from_stage: u32,
    pub transition: String,
    /// Trees of that stage's bundle containing the realized label.
    pub anticipated_by: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryTrace {
    pub links: Vec<Link>,
    pub retrodictions: Vec<Retrodiction>,
    pub intact: bool,
}

fn label_of(t: &Transition) -> EdgeLabel {
    match t {
        Transition::Option { option } => EdgeLabel::Option(option.clone()),
        Transition::Event { event, realization } => {
            EdgeLabel::Outcome { event: event.clone(), realization: realization.clone() }
        }
    }
}

/// Checks the digest chain over consecutive states and matches every realized
/// transition against the bundle held for its originating stage.
pub fn history_trace(states: &[AssessmentState], bundles: &[Bundle]) -> HistoryTrace {
    let mut links = Vec::new();
    let mut prev: Option<String> = None;
    for s in states {
        let digest = s.digest();
        let chained = match (&prev, &s.history_ref) {
            (Some(p), Some(h)) => p == h,
            (None, _) => true,
            (Some(_), None) => false,
        };
        links.push(Link { stage: s.stage, digest: digest.clone(), history_ref: s.history_ref.clone(), chained });
        prev = Some(digest);
    }
    let mut retrodictions = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for s in states {
        for r in &s.realized {
            if !seen.insert((r.from_stage, r.transition.clone())) {
                continue;
            }
            let label = label_of(&r.transition);
            let anticipated_by = bundles
                .iter()
                .filter(|b| b.stage == r.from_stage)
                .flat_map(|b| b.selected())
                .filter(|t| t.edges.iter().any(|e| e.label == label))
                .map(|t| t.id.clone())
                .collect();
            retrodictions.push(Retrodiction { from_stage: r.from_stage, transition: label.to_string(), anticipated_by });
        }
    }
    let intact = links.iter().all(|l| l.chained);
    HistoryTrace { links, retrodictions, intact }
}
