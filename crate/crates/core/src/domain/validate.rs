//! Structural checks and attitude/commitment axioms over an assessment state.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::options::{EffectDelta, Precondition, TOKEN_PARAMETERS};
use super::state::{
    AssessmentState, AttributeDomain, LevelMap, Operator, Provenance, RelationType, ScoreRule,
    Sign, Visibility,
};
use crate::id::Id;

pub const LIKELIHOOD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Check {
    /// Knowledge entails belief.
    A1,
    /// Knowledge closed under declared implication.
    A2,
    /// Intention requires desire and a feasibility belief.
    A3,
    /// Fear of p comes with desire for not-p.
    A5,
    /// Knowledge excludes belief in the negation.
    A6,
    /// Intentions are consistent.
    A7,
    /// Intention closed under declared implication.
    A8,
    /// Beliefs are consistent.
    B,
    /// Commitment is backed by member beliefs and intentions.
    C1,
    /// Commitments are consistent.
    C2,
    /// Commitment closed under declared implication.
    C4,
    /// Members of overlapping coalitions face opposed commitments.
    C5,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomConfig {
    #[serde(default)]
    pub severities: BTreeMap<Check, Severity>,
    /// Per-coalition core members to which the commitment-backing check is relaxed.
    #[serde(default)]
    pub commitment_core: BTreeMap<Id, BTreeSet<Id>>,
}

impl Default for AxiomConfig {
    fn default() -> Self {
        AxiomConfig { severities: BTreeMap::new(), commitment_core: BTreeMap::new() }
    }
}

impl AxiomConfig {
    pub fn severity(&self, check: Check) -> Severity {
        if let Some(s) = self.severities.get(&check) {
            return *s;
        }
        match check {
            Check::A1 | Check::A6 | Check::A7 | Check::B | Check::C2 | Check::C5 => Severity::Error,
            Check::A2 | Check::A3 | Check::A5 | Check::A8 | Check::C1 | Check::C4 => {
                Severity::Warning
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Finding {
    pub check: Check,
    pub severity: Severity,
    pub holder: Id,
    pub proposition: Id,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct StructuralIssue {
    pub section: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub stage: u32,
    pub structural: Vec<StructuralIssue>,
    pub findings: Vec<Finding>,
    /// Actors caught between opposed commitments of coalitions they belong to.
    pub conflicts: BTreeMap<Id, Vec<String>>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn errors(&self) -> usize {
        self.structural.len() + self.findings.iter().filter(|f| f.severity == Severity::Error).count()
    }

    pub fn warnings(&self) -> usize {
        self.findings.iter().filter(|f| f.severity == Severity::Warning).count()
    }

    pub fn is_clean(&self) -> bool {
        self.errors() == 0
    }

    pub fn has(&self, check: Check) -> bool {
        self.findings.iter().any(|f| f.check == check)
    }

    /// Human-readable summary, one line per issue.
    pub fn summary(&self) -> String {
        let mut out = format!(
            "stage {}: {} error(s), {} warning(s)\n",
            self.stage,
            self.errors(),
            self.warnings()
        );
        for s in &self.structural {
            out.push_str(&format!("structural [{}] {}\n", s.section, s.message));
        }
        for f in &self.findings {
            let sev = match f.severity {
                Severity::Error => "error",
                Severity::Warning => "warning",
                Severity::Off => continue,
            };
            out.push_str(&format!("{sev} {} {}: {}\n", f.check, f.holder, f.message));
        }
        for (a, c) in &self.conflicts {
            out.push_str(&format!("conflict({a}): {}\n", c.join("; ")));
        }
        for n in &self.notes {
            out.push_str(&format!("note: {n}\n"));
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Structural checks
// ---------------------------------------------------------------------------

struct Issues(Vec<StructuralIssue>);

impl Issues {
    fn push(&mut self, section: &str, message: String) {
        self.0.push(StructuralIssue { section: section.to_string(), message });
    }
}

fn unique<'a>(issues: &mut Issues, section: &str, ids: impl Iterator<Item = &'a Id>) {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            issues.push(section, format!("duplicate identifier {id}"));
        }
    }
}

fn check_provenance(issues: &mut Issues, section: &str, what: &str, p: &Provenance) {
    if p.source.trim().is_empty() {
        issues.push(section, format!("{what}: provenance source is empty"));
    }
    if !(0.0..=1.0).contains(&p.confidence) {
        issues.push(section, format!("{what}: provenance confidence {} outside [0,1]", p.confidence));
    }
}

fn unit(x: f64) -> bool {
    (0.0..=1.0).contains(&x)
}

/// Referential integrity, domain membership and stage monotonicity.
pub fn check_structure(db: &AssessmentState) -> Vec<StructuralIssue> {
    let mut is = Issues(Vec::new());
    let t = db.stage;

    unique(&mut is, "entities", db.actors.iter().map(|a| &a.id).chain(db.coalitions.iter().map(|c| &c.id)));
    unique(&mut is, "propositions", db.propositions.iter().map(|p| &p.id));
    unique(&mut is, "attribute_types", db.attribute_types.iter().map(|k| &k.id));
    unique(&mut is, "relation_types", db.relation_types.iter().map(|r| &r.id));
    unique(&mut is, "action_types", db.action_types.iter().map(|a| &a.id));
    unique(&mut is, "options", db.options.iter().map(|o| &o.id));
    unique(&mut is, "events", db.events.iter().map(|e| &e.id));
    unique(&mut is, "hyperedges", db.hyperedges.iter().map(|h| &h.id));

    for p in &db.propositions {
        if let Some(q) = &p.negation_of {
            match db.proposition(q.as_str()) {
                None => is.push("propositions", format!("{}: negation {q} is undeclared", p.id)),
                Some(qp) => {
                    if let Some(r) = &qp.negation_of {
                        if *r != p.id {
                            is.push("propositions", format!("{}: negation is not involutive", p.id));
                        }
                    }
                }
            }
        }
        for q in p.implies.iter().chain(p.feasibility_of.iter()) {
            if db.proposition(q.as_str()).is_none() {
                is.push("propositions", format!("{}: references undeclared proposition {q}", p.id));
            }
        }
    }

    for x in &db.coalitions {
        if x.members.len() < 2 {
            is.push("coalitions", format!("{} has fewer than two members", x.id));
        }
        for m in &x.members {
            if db.actor(m.as_str()).is_none() {
                is.push("coalitions", format!("{}: member {m} is not an actor", x.id));
            }
        }
    }

    for k in &db.attribute_types {
        match &k.domain {
            AttributeDomain::Ordinal { levels } => {
                if levels.len() < 2 || levels.windows(2).any(|w| w[0] >= w[1]) {
                    is.push("attribute_types", format!("{}: ordinal levels must be ≥2 and strictly increasing", k.id));
                }
            }
            AttributeDomain::Categorical { categories } => {
                if categories.is_empty() {
                    is.push("attribute_types", format!("{}: no categories", k.id));
                }
            }
            AttributeDomain::Numeric { min, max } => {
                if let (Some(lo), Some(hi)) = (min, max) {
                    if lo > hi {
                        is.push("attribute_types", format!("{}: min above max", k.id));
                    }
                }
            }
        }
        if k.aggregative && (k.score_rule.is_none() || k.level_map.is_none()) {
            is.push("attribute_types", format!("{}: aggregative without score rule and level map", k.id));
        }
        if let Some(ScoreRule::Weighted(w)) = &k.score_rule {
            if w.values().any(|x| !(x.is_finite() && *x >= 0.0)) {
                is.push("attribute_types", format!("{}: weights must be non-negative", k.id));
            }
        }
        if let Some(LevelMap::Thresholds(ts)) = &k.level_map {
            if ts.windows(2).any(|w| w[0].at > w[1].at || w[0].level > w[1].level) {
                is.push("attribute_types", format!("{}: thresholds are not monotone", k.id));
            }
        }
    }

    let mut assigned = BTreeSet::new();
    for x in &db.assignments {
        let what = format!("{}.{}", x.subject, x.attribute);
        if !db.is_entity(x.subject.as_str()) {
            is.push("assignments", format!("{what}: unknown subject"));
        }
        match db.attribute_type(x.attribute.as_str()) {
            None => is.push("assignments", format!("{what}: unknown attribute type")),
            Some(k) if !k.admits(&x.value) => {
                is.push("assignments", format!("{what}: value {} outside the declared domain", x.value))
            }
            _ => {}
        }
        if !assigned.insert((&x.subject, &x.attribute)) {
            is.push("assignments", format!("{what}: assigned twice"));
        }
        if x.stage > t {
            is.push("assignments", format!("{what}: stage {} after state stage {t}", x.stage));
        }
        check_provenance(&mut is, "assignments", &what, &x.provenance);
    }

    for r in &db.attitudes {
        let what = format!("{}({}, {})", r.operator, r.holder, r.content);
        let is_actor = db.actor(r.holder.as_str()).is_some();
        let is_coalition = db.coalition(r.holder.as_str()).is_some();
        if !is_actor && !is_coalition {
            is.push("attitudes", format!("{what}: unknown holder"));
        } else if r.operator.is_collective() && !is_coalition {
            is.push("attitudes", format!("{what}: commitment held by a non-coalition"));
        } else if !r.operator.is_collective() && !is_actor {
            is.push("attitudes", format!("{what}: individual attitude held by a coalition"));
        }
        if db.proposition(r.content.as_str()).is_none() {
            is.push("attitudes", format!("{what}: unknown proposition"));
        }
        if let Some(p) = &r.params {
            if !db.parameter_scales.admits(p) {
                is.push("attitudes", format!("{what}: parameters outside the declared scales"));
            }
        }
        if r.stage > t {
            is.push("attitudes", format!("{what}: stage {} after state stage {t}", r.stage));
        }
        check_provenance(&mut is, "attitudes", &what, &r.provenance);
    }

    let check_vis = |is: &mut Issues, section: &str, what: &str, vis: &Visibility| {
        if let Visibility::Perceived(by) = vis {
            for a in by {
                if db.actor(a.as_str()).is_none() {
                    is.push(section, format!("{what}: perceiver {a} is not an actor"));
                }
            }
        }
    };
    let check_layer = |is: &mut Issues, section: &str, what: &str, rt: &RelationType, layer: &str| {
        if !rt.layers.is_empty() && !rt.layers.contains(layer) {
            is.push(section, format!("{what}: layer {layer} not declared for {}", rt.id));
        }
    };

    for tie in &db.ties {
        let what = format!("{}({}, {})", tie.relation, tie.source, tie.target);
        match db.relation_type(tie.relation.as_str()) {
            None => is.push("ties", format!("{what}: unknown relation type")),
            Some(rt) => {
                if !rt.signed && tie.sign != Sign::Neutral {
                    is.push("ties", format!("{what}: unsigned relation carries a sign"));
                }
                if !rt.directed && tie.source > tie.target {
                    is.push("ties", format!("{what}: undirected tie not in canonical endpoint order"));
                }
                check_layer(&mut is, "ties", &what, rt, &tie.layer);
            }
        }
        for e in [&tie.source, &tie.target] {
            if !db.is_entity(e.as_str()) {
                is.push("ties", format!("{what}: unknown endpoint {e}"));
            }
        }
        if !unit(tie.weight) {
            is.push("ties", format!("{what}: weight {} outside [0,1]", tie.weight));
        }
        check_vis(&mut is, "ties", &what, &tie.visibility);
        if tie.stage > t {
            is.push("ties", format!("{what}: stage {} after state stage {t}", tie.stage));
        }
        check_provenance(&mut is, "ties", &what, &tie.provenance);
    }

    for h in &db.hyperedges {
        let what = h.id.to_string();
        if h.participants.len() < 3 {
            is.push("hyperedges", format!("{what}: fewer than three participants"));
        }
        for p in &h.participants {
            if !db.is_entity(p.as_str()) {
                is.push("hyperedges", format!("{what}: unknown participant {p}"));
            }
        }
        match db.relation_type(h.relation.as_str()) {
            None => is.push("hyperedges", format!("{what}: unknown relation type")),
            Some(rt) => {
                if !rt.signed && h.sign != Sign::Neutral {
                    is.push("hyperedges", format!("{what}: unsigned relation carries a sign"));
                }
                check_layer(&mut is, "hyperedges", &what, rt, &h.layer);
            }
        }
        if !unit(h.weight) {
            is.push("hyperedges", format!("{what}: weight outside [0,1]"));
        }
        check_vis(&mut is, "hyperedges", &what, &h.visibility);
        if h.stage > t {
            is.push("hyperedges", format!("{what}: stage after state stage"));
        }
        check_provenance(&mut is, "hyperedges", &what, &h.provenance);
    }

    let check_effect = |is: &mut Issues, section: &str, what: &str, subject: &Id, attribute: &Id, delta: &EffectDelta| {
        if !db.is_entity(subject.as_str()) {
            is.push(section, format!("{what}: effect on unknown entity {subject}"));
        }
        match db.attribute_type(attribute.as_str()) {
            None => is.push(section, format!("{what}: effect on undeclared attribute {attribute}")),
            Some(k) => {
                let fits = match (&k.domain, delta) {
                    (AttributeDomain::Ordinal { .. }, EffectDelta::Shift(d)) => d.fract() == 0.0,
                    (AttributeDomain::Numeric { .. }, EffectDelta::Shift(d)) => d.is_finite(),
                    (AttributeDomain::Categorical { categories }, EffectDelta::Set(c)) => categories.contains(c),
                    _ => false,
                };
                if !fits {
                    is.push(section, format!("{what}: effect on {attribute} does not fit its kind"));
                }
            }
        }
    };

    for a in &db.action_types {
        if a.category.family() != a.family {
            is.push("action_types", format!("{}: category {} does not belong to family {:?}", a.id, a.category, a.family));
        }
        for r in &a.required {
            if !a.parameters.contains(r) {
                is.push("action_types", format!("{}: required parameter {r} is undeclared", a.id));
            }
        }
        for p in &a.parameters {
            if TOKEN_PARAMETERS.contains(&p.as_str()) {
                is.push("action_types", format!("{}: parameter {p} is reserved for tokens", a.id));
            }
        }
        if let Some(c) = &a.content {
            if db.proposition(c.as_str()).is_none() {
                is.push("action_types", format!("{}: unknown content proposition {c}", a.id));
            }
        }
        for pre in &a.preconditions {
            let (entities, attribute) = pre.references();
            for e in entities {
                if !db.is_entity(e.as_str()) {
                    is.push("action_types", format!("{}: precondition names unknown entity {e}", a.id));
                }
            }
            if let Some(k) = attribute {
                if db.attribute_type(k.as_str()).is_none() {
                    is.push("action_types", format!("{}: precondition names unknown attribute {k}", a.id));
                }
            }
            if let Precondition::Tie { relation, .. } = pre {
                if db.relation_type(relation.as_str()).is_none() {
                    is.push("action_types", format!("{}: precondition names unknown relation {relation}", a.id));
                }
            }
        }
    }

    for o in &db.options {
        let what = o.id.to_string();
        if !db.is_entity(o.actor.as_str()) {
            is.push("options", format!("{what}: unknown acting entity {}", o.actor));
        }
        match db.action_type(o.action_type.as_str()) {
            None => is.push("options", format!("{what}: unknown action type {}", o.action_type)),
            Some(ty) => {
                for k in o.bindings.keys() {
                    if !ty.parameters.contains(k) {
                        is.push("options", format!("{what}: binds undeclared parameter {k}"));
                    }
                }
                if o.reversible.is_some_and(|r| r != ty.reversible)
                    || o.target_response.is_some_and(|r| r != ty.target_response)
                {
                    is.push("options", format!("{what}: structural flags differ from its action type"));
                }
            }
        }
        if let Some(s) = &o.salience_inputs {
            if !(1..=db.parameter_scales.intensity_levels).contains(&s.intensity) || !unit(s.likelihood) {
                is.push("options", format!("{what}: salience inputs outside their scales"));
            }
        }
        for e in &o.effects {
            check_effect(&mut is, "options", &what, &e.subject, &e.attribute, &e.delta);
        }
    }

    for e in &db.events {
        let what = e.id.to_string();
        if !unit(e.likelihood) || !unit(e.confidence) {
            is.push("events", format!("{what}: likelihood or confidence outside [0,1]"));
        }
        if !e.impact.is_finite() {
            is.push("events", format!("{what}: impact is not finite"));
        }
        if !e.realizations.is_empty() {
            let total: f64 = e.realizations.iter().map(|r| r.likelihood).sum();
            if (total - 1.0).abs() > LIKELIHOOD_TOLERANCE || e.realizations.iter().any(|r| !unit(r.likelihood)) {
                is.push("events", format!("{what}: realization likelihoods do not form a distribution"));
            }
            let labels: BTreeSet<&str> = e.realizations.iter().map(|r| r.label.as_str()).collect();
            if labels.len() != e.realizations.len() {
                is.push("events", format!("{what}: duplicate realization labels"));
            }
        }
        for fx in &e.effects {
            check_effect(&mut is, "events", &what, &fx.subject, &fx.attribute, &fx.delta);
        }
    }

    for edge in &db.event_graph.edges {
        let what = format!("{}→{}", edge.from, edge.to);
        for e in [&edge.from, &edge.to] {
            if db.event(e.as_str()).is_none() {
                is.push("event_graph", format!("{what}: unknown event {e}"));
            }
        }
        if !unit(edge.weight) {
            is.push("event_graph", format!("{what}: weight outside [0,1]"));
        }
        if !edge.response.is_monotone() {
            is.push("event_graph", format!("{what}: response is not monotone in |impact|"));
        }
    }

    for d in &db.disputed {
        if d.stage > t {
            is.push("disputed", format!("{}: stage after state stage", d.record.id()));
        }
    }

    is.0
}

// ---------------------------------------------------------------------------
// Axioms
// ---------------------------------------------------------------------------

/// Everything reachable from `p` along declared implication edges, excluding `p`.
fn implied(db: &AssessmentState, p: &Id) -> BTreeSet<Id> {
    let mut out = BTreeSet::new();
    let mut queue: VecDeque<Id> = VecDeque::from([p.clone()]);
    while let Some(x) = queue.pop_front() {
        if let Some(prop) = db.proposition(x.as_str()) {
            for q in &prop.implies {
                if q != p && out.insert(q.clone()) {
                    queue.push_back(q.clone());
                }
            }
        }
    }
    out
}

struct Axioms<'a> {
    db: &'a AssessmentState,
    config: &'a AxiomConfig,
    findings: BTreeSet<Finding>,
}

impl Axioms<'_> {
    fn flag(&mut self, check: Check, holder: &Id, proposition: &Id, message: String) {
        let severity = self.config.severity(check);
        if severity != Severity::Off {
            self.findings.insert(Finding {
                check,
                severity,
                holder: holder.clone(),
                proposition: proposition.clone(),
                message,
            });
        }
    }

    fn contradiction(&mut self, check: Check, op: Operator, holder: &Id, p: &Id) {
        if let Some(neg) = self.db.negation(p.as_str()) {
            if p < neg && self.db.holds(holder.as_str(), op, neg.as_str()) {
                self.flag(check, holder, p, format!("{op} {p} together with {op} {neg}"));
            }
        }
    }

    fn closure(&mut self, check: Check, op: Operator, holder: &Id, p: &Id) {
        for q in implied(self.db, p) {
            if !self.db.holds(holder.as_str(), op, q.as_str()) {
                self.flag(check, holder, p, format!("{op} {p} and {p} implies {q}, but {op} {q} is missing"));
            }
        }
    }
}

/// Full validation: structural issues plus axiom findings.
pub fn validate_assessment_state(db: &AssessmentState, config: &AxiomConfig) -> ValidationReport {
    let structural = check_structure(db);
    let mut ax = Axioms { db, config, findings: BTreeSet::new() };

    for r in &db.attitudes {
        let (h, p) = (&r.holder, &r.content);
        if db.proposition(p.as_str()).is_none() {
            continue;
        }
        match r.operator {
            Operator::K => {
                if !db.holds(h.as_str(), Operator::B, p.as_str()) {
                    ax.flag(Check::A1, h, p, format!("K {p} without B {p}"));
                }
                if let Some(neg) = db.negation(p.as_str()) {
                    if db.holds(h.as_str(), Operator::B, neg.as_str()) {
                        ax.flag(Check::A6, h, p, format!("K {p} together with B {neg}"));
                    }
                }
                ax.closure(Check::A2, Operator::K, h, p);
            }
            Operator::B => ax.contradiction(Check::B, Operator::B, h, p),
            Operator::I => {
                ax.contradiction(Check::A7, Operator::I, h, p);
                ax.closure(Check::A8, Operator::I, h, p);
                if !db.holds(h.as_str(), Operator::W, p.as_str()) {
                    ax.flag(Check::A3, h, p, format!("I {p} without W {p}"));
                }
                let feasible = db
                    .propositions
                    .iter()
                    .filter(|q| q.feasibility_of.as_ref() == Some(p))
                    .any(|q| db.holds(h.as_str(), Operator::B, q.id.as_str()));
                if !feasible {
                    ax.flag(Check::A3, h, p, format!("I {p} without a declared feasibility belief"));
                }
            }
            Operator::F => match db.negation(p.as_str()) {
                Some(neg) if db.holds(h.as_str(), Operator::W, neg.as_str()) => {}
                Some(neg) => ax.flag(Check::A5, h, p, format!("F {p} without W {neg}")),
                None => ax.flag(Check::A5, h, p, format!("F {p} but {p} has no declared negation")),
            },
            Operator::Com => {
                ax.contradiction(Check::C2, Operator::Com, h, p);
                ax.closure(Check::C4, Operator::Com, h, p);
                if let Some(x) = db.coalition(h.as_str()) {
                    let backers = config.commitment_core.get(h).unwrap_or(&x.members);
                    for m in backers {
                        let b = db.holds(m.as_str(), Operator::B, p.as_str());
                        let i = db.holds(m.as_str(), Operator::I, p.as_str());
                        if !(b && i) {
                            ax.flag(Check::C1, h, p, format!("Com {p} but member {m} lacks B or I {p}"));
                        }
                    }
                }
            }
            Operator::W => {}
        }
    }

    let mut conflicts: BTreeMap<Id, Vec<String>> = BTreeMap::new();
    for r in db.attitudes.iter().filter(|r| r.operator == Operator::Com) {
        let Some(neg) = db.negation(r.content.as_str()) else { continue };
        let Some(x) = db.coalition(r.holder.as_str()) else { continue };
        for other in db.attitudes.iter().filter(|o| o.operator == Operator::Com && o.content == *neg) {
            let Some(y) = db.coalition(other.holder.as_str()) else { continue };
            if x.id >= y.id {
                continue;
            }
            for a in x.members.intersection(&y.members) {
                let msg = format!("Com_{} {} vs Com_{} {}", x.id, r.content, y.id, neg);
                ax.flag(Check::C5, a, &r.content, msg.clone());
                conflicts.entry(a.clone()).or_default().push(msg);
            }
        }
    }
    // Make conflict lists independent of attitude order.
    for v in conflicts.values_mut() {
        v.sort();
        v.dedup();
    }

    let mut findings: Vec<Finding> = ax.findings.into_iter().collect();
    findings.sort();
    ValidationReport {
        stage: db.stage,
        structural,
        findings,
        conflicts,
        notes: vec!["fear-biased belief updating is an optional annotation and is not checked".into()],
    }
}
