//! Crisis typing: constraint packages per domain and modifier, cross-domain coalitions.

use std::collections::BTreeSet;

use super::state::{AssessmentState, Domain, Modifier};
use crate::id::Id;

/// Built-in constraint labels, used when a state declares no package for a key.
pub fn builtin_package(key: &str) -> &'static [&'static str] {
    match key {
        "Geo" => &["credibility_mechanisms", "escalation_thresholds"],
        "Econ" => &["budget_constraints", "liquidity_constraints"],
        "Soc" => &["identity_attitudes", "collective_action_thresholds"],
        "Pol" => &["legitimacy_relations", "institutional_veto_points"],
        "Org" => &["trust_dynamics", "short_horizons"],
        "Env" => &["resource_endowments", "time_pressure"],
        "Tech" => &["information_structure", "epistemic_trust"],
        "Health" => &["capacity_limits", "humanitarian_obligations"],
        _ => &[],
    }
}

fn package(db: &AssessmentState, key: &str) -> BTreeSet<String> {
    match db.constraint_packages.get(key) {
        Some(labels) => labels.clone(),
        None => builtin_package(key).iter().map(|s| s.to_string()).collect(),
    }
}

/// Union of the packages of every active domain and modifier.
pub fn crisis_constraints(db: &AssessmentState) -> BTreeSet<String> {
    let domains = db.crisis_tag.domains.iter().map(Domain::to_string);
    let modifiers = db.crisis_tag.modifiers.iter().map(Modifier::to_string);
    domains.chain(modifiers).flat_map(|k| package(db, &k)).collect()
}

/// Whether the coalition's members carry at least two distinct domain labels.
pub fn is_cross_domain(db: &AssessmentState, coalition: &Id) -> bool {
    db.coalition(coalition.as_str()).is_some_and(|x| {
        let labels: BTreeSet<Domain> =
            x.members.iter().filter_map(|m| db.actor(m.as_str())).map(|a| a.domain).collect();
        labels.len() > 1
    })
}
