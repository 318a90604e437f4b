//! Provenance-tracked state updates: records become typed changes, conflicts
//! resolve per a declared policy, and every record gets one disposition.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::attributes::{apply_effects, AttributeError};
use crate::domain::events::cascade_in_state;
use crate::domain::state::{
    AssessmentState, AttitudeRecord, AttrValue, DisputedRecord, DyadicTie, ParameterTuple, Provenance,
    RealizedTransition, Transition,
};
use crate::domain::validate::check_structure;
use crate::id::Id;
use crate::ingest::record::{RecordKind, RecordTime, TypedRecord, OPTION_AVAILABLE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UpdateError {
    #[error("a change set needs at least one record or a trigger")]
    EmptyChangeSet,
    #[error("trigger refers to undeclared event {0}")]
    UnknownEvent(Id),
    #[error("event {event} has no realization {realization}")]
    UnknownRealization { event: Id, realization: String },
    #[error("effect of {event}: {source}")]
    Effect { event: Id, source: AttributeError },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RevisionPolicy {
    /// The record from the higher-quality source wins.
    SourceQualityPriority,
    /// The record with the later empirical time wins.
    #[default]
    RecencyPriority,
    /// Conflicting records are all held back as disputed.
    RecordConflict,
}

/// A realized event outcome accompanying a change set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizedOutcome {
    pub event: Id,
    pub realization: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChangeSet {
    pub records: Vec<TypedRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger: Option<RealizedOutcome>,
    #[serde(default)]
    pub revision_policy: RevisionPolicy,
    /// Quality score per source, read by the source-quality policy.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub source_quality: BTreeMap<String, f64>,
    /// Review priorities attached at assembly, highest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub audit: Vec<crate::ingest::gate::AuditItem>,
}

impl ChangeSet {
    pub fn new(records: Vec<TypedRecord>, policy: RevisionPolicy) -> Self {
        ChangeSet { records, revision_policy: policy, ..ChangeSet::default() }
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty() && self.trigger.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "disposition", rename_all = "snake_case")]
pub enum Disposition {
    Applied,
    Superseded { by: String },
    Disputed { with: Vec<String> },
    Rejected { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub record: String,
    #[serde(flatten)]
    pub disposition: Disposition,
    pub provenance: crate::ingest::record::RecordProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateLog {
    pub from_stage: u32,
    pub to_stage: u32,
    pub predecessor: String,
    pub entries: Vec<LogEntry>,
    /// Groups of record ids that addressed the same fact with different content.
    pub conflicts: Vec<Vec<String>>,
    pub event_effects: Vec<String>,
    /// Option feasibility changes with the record or event that justified them.
    pub feasibility: Vec<String>,
}

impl UpdateLog {
    pub fn disposition(&self, record: &str) -> Option<&Disposition> {
        self.entries.iter().find(|e| e.record == record).map(|e| &e.disposition)
    }

    /// Append-only text form, one line per entry.
    pub fn to_text(&self) -> String {
        let mut out = format!("update {} -> {} from {}\n", self.from_stage, self.to_stage, self.predecessor);
        for e in &self.entries {
            let what = match &e.disposition {
                Disposition::Applied => "applied".to_string(),
                Disposition::Superseded { by } => format!("superseded by {by}"),
                Disposition::Disputed { with } => format!("disputed with {}", with.join(",")),
                Disposition::Rejected { reason } => format!("rejected: {reason}"),
            };
            out.push_str(&format!("record {} [{} @ {}]: {what}\n", e.record, e.provenance.source, e.provenance.span));
        }
        for c in &self.conflicts {
            out.push_str(&format!("conflict {}\n", c.join(",")));
        }
        for x in &self.event_effects {
            out.push_str(&format!("event {x}\n"));
        }
        for f in &self.feasibility {
            out.push_str(&format!("feasibility {f}\n"));
        }
        out
    }
}

/// The fact a record speaks about; two records with the same key and
/// different content conflict.
pub fn fact_key(r: &TypedRecord) -> String {
    match r.kind {
        RecordKind::Att | RecordKind::Rel => {
            let layer = r.annotations.as_ref().map_or("", |a| a.layer.as_str());
            format!("{}|{}|{}|{}|{layer}", r.kind, r.subject, r.predicate, r.object)
        }
        _ => format!("{}|{}|{}", r.kind, r.subject, r.predicate),
    }
}

pub fn record_content(r: &TypedRecord) -> String {
    format!("{}|{}|{:?}|{}|{:?}", r.object, r.retract, r.qualifiers, r.confidence, r.annotations)
}

fn time_key(r: &TypedRecord) -> Option<&str> {
    r.time.as_ref().map(|t| match t {
        RecordTime::Point(p) => p.as_str(),
        RecordTime::Interval { end, .. } => end.as_str(),
    })
}

fn provenance(r: &TypedRecord) -> Provenance {
    Provenance {
        source: r.provenance.source.clone(),
        span: r.provenance.span.clone(),
        method: "record".into(),
        timestamp: time_key(r).map(str::to_string),
        confidence: r.confidence,
    }
}

/// Applies one record to the state. Returns a feasibility note when the record
/// changes option availability.
pub fn apply_record(db: &mut AssessmentState, r: &TypedRecord, stage: u32) -> Result<Option<String>, String> {
    r.check_schema().map_err(|e| e.to_string())?;
    let mut note = None;
    match r.kind {
        RecordKind::Attr => {
            if !db.is_entity(r.subject.as_str()) {
                return Err(format!("unknown entity {}", r.subject));
            }
            let ty = db.attribute_type(&r.predicate).ok_or_else(|| format!("undeclared attribute {}", r.predicate))?;
            if !ty.admits(&r.object) {
                return Err(format!("value {} outside the domain of {}", r.object, r.predicate));
            }
            let attribute = Id::new(r.predicate.as_str()).map_err(|e| e.to_string())?;
            db.assignments.retain(|a| !(a.subject == r.subject && a.attribute == attribute));
            db.assignments.push(crate::domain::state::AttributeAssignment {
                subject: r.subject.clone(),
                attribute,
                value: r.object.clone(),
                stage,
                provenance: provenance(r),
            });
        }
        RecordKind::Att => {
            if !db.is_entity(r.subject.as_str()) {
                return Err(format!("unknown entity {}", r.subject));
            }
            let operator = r.operator().map_err(|e| e.to_string())?;
            let content = r.object_id().map_err(|e| e.to_string())?;
            if db.proposition(content.as_str()).is_none() {
                return Err(format!("undeclared proposition {content}"));
            }
            let same = |a: &AttitudeRecord| a.holder == r.subject && a.operator == operator && a.content == content;
            if r.retract {
                if !db.attitudes.iter().any(same) {
                    return Err(format!("no {operator}({content}) held by {} to retract", r.subject));
                }
                db.attitudes.retain(|a| !same(a));
            } else {
                let q = &r.qualifiers;
                let params = match (q.ell, q.pi, q.vartheta) {
                    (Some(l), Some(p), Some(h)) => {
                        let t = ParameterTuple { likelihood: l as u32, intensity: p as u32, horizon: h };
                        if !db.parameter_scales.admits(&t) {
                            return Err("qualifiers outside the parameter scales".into());
                        }
                        Some(t)
                    }
                    _ => None,
                };
                if operator.is_collective() && db.coalition(r.subject.as_str()).is_none() {
                    return Err(format!("collective attitude held by non-coalition {}", r.subject));
                }
                db.attitudes.retain(|a| !same(a));
                db.attitudes.push(AttitudeRecord {
                    holder: r.subject.clone(),
                    operator,
                    content,
                    params,
                    stage,
                    provenance: provenance(r),
                });
            }
        }
        RecordKind::Rel => {
            let relation = Id::new(r.predicate.as_str()).map_err(|e| e.to_string())?;
            if db.relation_type(relation.as_str()).is_none() {
                return Err(format!("undeclared relation {relation}"));
            }
            let target = r.object_id().map_err(|e| e.to_string())?;
            for e in [&r.subject, &target] {
                if !db.is_entity(e.as_str()) {
                    return Err(format!("unknown entity {e}"));
                }
            }
            let a = r.annotations.clone().expect("schema checked");
            db.ties.retain(|t| !(t.relation == relation && t.source == r.subject && t.target == target && t.layer == a.layer));
            db.ties.push(DyadicTie {
                relation,
                source: r.subject.clone(),
                target,
                weight: a.weight,
                sign: a.sign,
                layer: a.layer,
                visibility: a.visibility,
                stage,
                provenance: provenance(r),
            });
        }
        RecordKind::Event => {
            let e = db
                .events
                .iter_mut()
                .find(|e| e.id == r.subject)
                .ok_or_else(|| format!("undeclared event {}", r.subject))?;
            let x = r.object.as_number().expect("schema checked");
            match r.predicate.as_str() {
                "likelihood" => e.likelihood = x,
                "impact" => e.impact = x,
                _ => e.confidence = x,
            }
        }
        RecordKind::Option => {
            let o = db
                .options
                .iter_mut()
                .find(|o| o.id == r.subject)
                .ok_or_else(|| format!("undeclared option {}", r.subject))?;
            let enabled = matches!(&r.object, AttrValue::Category(s) if s == OPTION_AVAILABLE);
            if o.enabled != enabled {
                note = Some(format!("{} {} by record {}", o.id, if enabled { "enabled" } else { "withdrawn" }, r.id()));
            }
            o.enabled = enabled;
        }
    }
    Ok(note)
}

/// Applies a realized outcome: effects when the outcome carries them, then the one-hop cascade.
pub fn apply_event_effect(db: &AssessmentState, outcome: &RealizedOutcome) -> Result<AssessmentState, UpdateError> {
    let e = db.event(outcome.event.as_str()).ok_or_else(|| UpdateError::UnknownEvent(outcome.event.clone()))?;
    let r = e.outcome(&outcome.realization).ok_or_else(|| UpdateError::UnknownRealization {
        event: outcome.event.clone(),
        realization: outcome.realization.clone(),
    })?;
    let mut out = db.clone();
    if r.applies_effects {
        apply_effects(&mut out, &e.effects).map_err(|source| UpdateError::Effect { event: e.id.clone(), source })?;
        cascade_in_state(&mut out, outcome.event.as_str());
    }
    Ok(out)
}

/// Index of the record that wins a conflict group, or `None` when the policy
/// cannot separate the leaders.
fn winner(group: &[(usize, &TypedRecord)], policy: RevisionPolicy, quality: &BTreeMap<String, f64>) -> Option<usize> {
    let score = |r: &TypedRecord| -> Option<String> {
        match policy {
            RevisionPolicy::RecencyPriority => time_key(r).map(str::to_string),
            RevisionPolicy::SourceQualityPriority => {
                quality.get(&r.provenance.source).map(|q| format!("{:020.12}", q.clamp(0.0, 1.0)))
            }
            RevisionPolicy::RecordConflict => None,
        }
    };
    let scored: Vec<(Option<String>, usize)> = group.iter().map(|(i, r)| (score(r), *i)).collect();
    let best = scored.iter().filter_map(|(s, _)| s.clone()).max()?;
    let top: Vec<usize> = scored.iter().filter(|(s, _)| s.as_deref() == Some(best.as_str())).map(|(_, i)| *i).collect();
    (top.len() == 1).then(|| top[0])
}

/// Applies a change set to a copy of the state and logs a disposition for every record.
pub fn apply_update(db: &AssessmentState, changes: &ChangeSet) -> Result<(AssessmentState, UpdateLog), UpdateError> {
    if changes.is_empty() {
        return Err(UpdateError::EmptyChangeSet);
    }
    let stage = db.stage + 1;
    let predecessor = db.digest();
    let mut next = db.clone();
    next.stage = stage;
    next.history_ref = Some(predecessor.clone());
    let mut log = UpdateLog {
        from_stage: db.stage,
        to_stage: stage,
        predecessor,
        entries: Vec::new(),
        conflicts: Vec::new(),
        event_effects: Vec::new(),
        feasibility: Vec::new(),
    };

    let mut dispositions: BTreeMap<usize, Disposition> = BTreeMap::new();
    let ids: Vec<String> = changes.records.iter().map(TypedRecord::id).collect();
    // Ill-typed records are rejected before conflict resolution so they never
    // supersede a well-typed record.
    for (i, r) in changes.records.iter().enumerate() {
        if let Err(e) = r.check_schema() {
            dispositions.insert(i, Disposition::Rejected { reason: e.to_string() });
        } else if let Err(reason) = apply_record(&mut next.clone(), r, stage) {
            dispositions.insert(i, Disposition::Rejected { reason });
        }
    }
    // Group the schema-valid records by the fact they address.
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in changes.records.iter().enumerate() {
        if !dispositions.contains_key(&i) {
            groups.entry(fact_key(r)).or_default().push(i);
        }
    }
    for members in groups.values() {
        let distinct: BTreeSet<String> = members.iter().map(|&i| record_content(&changes.records[i])).collect();
        if distinct.len() < 2 {
            continue;
        }
        log.conflicts.push(members.iter().map(|&i| ids[i].clone()).collect());
        let group: Vec<(usize, &TypedRecord)> = members.iter().map(|&i| (i, &changes.records[i])).collect();
        match winner(&group, changes.revision_policy, &changes.source_quality) {
            Some(w) => {
                for &i in members.iter().filter(|&&i| i != w) {
                    dispositions.insert(i, Disposition::Superseded { by: ids[w].clone() });
                }
            }
            None => {
                for &i in members {
                    let with = members.iter().filter(|&&j| j != i).map(|&j| ids[j].clone()).collect::<Vec<_>>();
                    next.disputed.push(DisputedRecord { record: changes.records[i].clone(), conflicts_with: with.clone(), stage });
                    dispositions.insert(i, Disposition::Disputed { with });
                }
            }
        }
    }

    let baseline: BTreeSet<String> = check_structure(&next).into_iter().map(|s| s.message).collect();
    for (i, r) in changes.records.iter().enumerate() {
        if dispositions.contains_key(&i) {
            continue;
        }
        let mut trial = next.clone();
        match apply_record(&mut trial, r, stage) {
            Ok(note) => {
                let fresh: Vec<String> =
                    check_structure(&trial).into_iter().map(|s| s.message).filter(|m| !baseline.contains(m)).collect();
                if let Some(problem) = fresh.first() {
                    dispositions.insert(i, Disposition::Rejected { reason: format!("breaks structure: {problem}") });
                } else {
                    next = trial;
                    log.feasibility.extend(note);
                    dispositions.insert(i, Disposition::Applied);
                }
            }
            Err(reason) => {
                dispositions.insert(i, Disposition::Rejected { reason });
            }
        }
    }

    if let Some(t) = &changes.trigger {
        let before: BTreeMap<Id, bool> = next.options.iter().map(|o| (o.id.clone(), o.enabled)).collect();
        next = apply_event_effect(&next, t)?;
        log.event_effects.push(format!("{}={}", t.event, t.realization));
        for o in &next.options {
            if before.get(&o.id) != Some(&o.enabled) {
                log.feasibility.push(format!("{} changed by event {}", o.id, t.event));
            }
        }
        next.realized.push(RealizedTransition {
            from_stage: db.stage,
            transition: Transition::Event { event: t.event.clone(), realization: t.realization.clone() },
        });
    }

    log.entries = changes
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| LogEntry {
            record: ids[i].clone(),
            disposition: dispositions.remove(&i).expect("every record gets a disposition"),
            provenance: r.provenance.clone(),
        })
        .collect();
    Ok((next, log))
}

/// The state carried to the next stage unchanged.
pub fn advance_stage(db: &AssessmentState) -> AssessmentState {
    let mut next = db.clone();
    next.stage = db.stage + 1;
    next.history_ref = Some(db.digest());
    next
}
