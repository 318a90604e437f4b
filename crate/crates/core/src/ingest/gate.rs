//! Acceptance gates, source quality, the audit queue and changeset assembly.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{RecordKind, TypedRecord};
use crate::domain::options::Precondition;
use crate::domain::state::AssessmentState;
use crate::domain::validate::{check_structure, validate_assessment_state, AxiomConfig, Severity};
use crate::dynamics::update::{apply_record, fact_key, record_content, ChangeSet, RealizedOutcome, RevisionPolicy};

pub const WEIGHT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IngestError {
    #[error("quality weights sum to {0}, not 1")]
    WeightSum(f64),
    #[error("quality weight {0} is negative or not finite")]
    Weight(f64),
    #[error("{field} = {value} is outside [0,1]")]
    Score { field: &'static str, value: f64 },
    #[error("record {record} was {verdict}, only accepted records enter a changeset")]
    NotAccepted { record: String, verdict: Verdict },
    #[error("a changeset needs at least one accepted record")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accepted,
    Flagged,
    Rejected,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Accepted => "accepted",
            Verdict::Flagged => "flagged",
            Verdict::Rejected => "rejected",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Schema,
    EntityAlignment,
    ConstraintSatisfaction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateFailure {
    pub gate: Gate,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateReport {
    pub record: String,
    pub verdict: Verdict,
    pub failures: Vec<GateFailure>,
    /// Calibration annotations; these never change the verdict.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl GateReport {
    pub fn failed(&self, gate: Gate) -> bool {
        self.failures.iter().any(|f| f.gate == gate)
    }
}

fn unresolved(record: &TypedRecord, db: &AssessmentState) -> Vec<String> {
    let mut out = Vec::new();
    let entity = |id: &str, out: &mut Vec<String>| {
        if !db.is_entity(id) {
            out.push(format!("unknown entity {id}"));
        }
    };
    let object = record.object_id().ok();
    match record.kind {
        RecordKind::Att => {
            entity(record.subject.as_str(), &mut out);
            if let Some(p) = object.filter(|p| db.proposition(p.as_str()).is_none()) {
                out.push(format!("undeclared proposition {p}"));
            }
        }
        RecordKind::Rel => {
            entity(record.subject.as_str(), &mut out);
            if let Some(o) = &object {
                entity(o.as_str(), &mut out);
            }
            if db.relation_type(&record.predicate).is_none() {
                out.push(format!("undeclared relation {}", record.predicate));
            }
        }
        RecordKind::Attr => {
            entity(record.subject.as_str(), &mut out);
            if db.attribute_type(&record.predicate).is_none() {
                out.push(format!("undeclared attribute {}", record.predicate));
            }
        }
        RecordKind::Event => {
            if db.event(record.subject.as_str()).is_none() {
                out.push(format!("undeclared event {}", record.subject));
            }
        }
        RecordKind::Option => {
            if db.option(record.subject.as_str()).is_none() {
                out.push(format!("undeclared option {}", record.subject));
            }
        }
    }
    out
}

/// New structural issues or error-level axiom findings the record would introduce.
fn violations(record: &TypedRecord, db: &AssessmentState) -> Vec<String> {
    let config = AxiomConfig::default();
    let errors = |s: &AssessmentState| -> BTreeSet<String> {
        let report = validate_assessment_state(s, &config);
        report
            .findings
            .into_iter()
            .filter(|f| f.severity == Severity::Error)
            .map(|f| format!("{}: {}", f.check, f.message))
            .chain(check_structure(s).into_iter().map(|i| format!("{}: {}", i.section, i.message)))
            .collect()
    };
    let mut trial = db.clone();
    if let Err(reason) = apply_record(&mut trial, record, db.stage) {
        return vec![reason];
    }
    let before = errors(db);
    errors(&trial).into_iter().filter(|e| !before.contains(e)).collect()
}

/// Runs the schema, entity-alignment and constraint gates against a state.
/// Schema failures reject; the other gates route the record to review.
pub fn gate_record(record: &TypedRecord, db: &AssessmentState) -> GateReport {
    let id = record.id();
    if let Err(e) = record.check_schema() {
        return GateReport {
            record: id,
            verdict: Verdict::Rejected,
            failures: vec![GateFailure { gate: Gate::Schema, reason: e.to_string() }],
            notes: Vec::new(),
        };
    }
    let mut failures: Vec<GateFailure> = unresolved(record, db)
        .into_iter()
        .map(|reason| GateFailure { gate: Gate::EntityAlignment, reason })
        .collect();
    if failures.is_empty() {
        failures.extend(
            violations(record, db).into_iter().map(|reason| GateFailure { gate: Gate::ConstraintSatisfaction, reason }),
        );
    }
    let verdict = if failures.is_empty() { Verdict::Accepted } else { Verdict::Flagged };
    GateReport { record: id, verdict, failures, notes: Vec::new() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceItem {
    pub id: String,
    pub reliability: f64,
    pub coverage: f64,
    pub temporal_resolution: f64,
    /// Free-text bias annotations.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub annotations: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityWeights {
    pub reliability: f64,
    pub coverage: f64,
    pub temporal: f64,
}

impl Default for QualityWeights {
    fn default() -> Self {
        QualityWeights { reliability: 1.0 / 3.0, coverage: 1.0 / 3.0, temporal: 1.0 / 3.0 }
    }
}

pub fn source_quality(item: &SourceItem, weights: &QualityWeights) -> Result<f64, IngestError> {
    let w = [weights.reliability, weights.coverage, weights.temporal];
    if let Some(x) = w.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(IngestError::Weight(*x));
    }
    let sum: f64 = w.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(IngestError::WeightSum(sum));
    }
    for (field, value) in
        [("reliability", item.reliability), ("coverage", item.coverage), ("temporal_resolution", item.temporal_resolution)]
    {
        if !(0.0..=1.0).contains(&value) {
            return Err(IngestError::Score { field, value });
        }
    }
    Ok(w[0] * item.reliability + w[1] * item.coverage + w[2] * item.temporal_resolution)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetadata {
    pub model: String,
    pub config_digest: String,
}

/// Sources and run metadata accompanying a record batch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchManifest {
    #[serde(default)]
    pub sources: Vec<SourceItem>,
    #[serde(default)]
    pub weights: QualityWeights,
    /// Sources scoring below this are annotated, never dropped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub low_quality_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunMetadata>,
}

impl BatchManifest {
    pub fn qualities(&self) -> Result<BTreeMap<String, f64>, IngestError> {
        self.sources.iter().map(|s| Ok((s.id.clone(), source_quality(s, &self.weights)?))).collect()
    }
}

/// Gates every record and adds calibration notes from the manifest.
pub fn gate_batch(records: &[TypedRecord], db: &AssessmentState, manifest: &BatchManifest) -> Result<Vec<GateReport>, IngestError> {
    let quality = manifest.qualities()?;
    Ok(records
        .iter()
        .map(|r| {
            let mut report = gate_record(r, db);
            match quality.get(&r.provenance.source) {
                None => report.notes.push(format!("source {} is not in the manifest", r.provenance.source)),
                Some(q) if manifest.low_quality_threshold.is_some_and(|t| *q < t) => {
                    report.notes.push(format!("source {} quality {q:.3} is below threshold", r.provenance.source))
                }
                Some(_) => {}
            }
            report
        })
        .collect())
}

/// Review priority: constraint violations, then subject centrality, then
/// feasibility impact, then disagreement across extraction runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditItem {
    pub record: String,
    pub constraint_violation: bool,
    pub centrality: usize,
    pub affects_feasibility: bool,
    pub cross_run_disagreement: bool,
}

impl AuditItem {
    fn key(&self) -> (bool, usize, bool, bool) {
        (self.constraint_violation, self.centrality, self.affects_feasibility, self.cross_run_disagreement)
    }
}

fn degree(db: &AssessmentState, entity: &str) -> usize {
    let ties = db.ties.iter().filter(|t| t.source.as_str() == entity || t.target.as_str() == entity).count();
    let hyper = db.hyperedges.iter().filter(|h| h.participants.iter().any(|p| p.as_str() == entity)).count();
    ties + hyper
}

fn affects_feasibility(record: &TypedRecord, db: &AssessmentState) -> bool {
    let pre = db.action_types.iter().flat_map(|a| &a.preconditions);
    match record.kind {
        RecordKind::Option => true,
        RecordKind::Attr => {
            pre.into_iter().any(|p| matches!(p, Precondition::AttributeAtLeast { attribute, .. } | Precondition::AttributeAtMost { attribute, .. } if attribute.as_str() == record.predicate))
        }
        RecordKind::Att => {
            let content = record.object_id().ok();
            pre.into_iter().any(|p| matches!(p, Precondition::Attitude { content: c, .. } if Some(c) == content.as_ref()))
        }
        RecordKind::Rel => pre.into_iter().any(|p| matches!(p, Precondition::Tie { relation, .. } if relation.as_str() == record.predicate)),
        RecordKind::Event => false,
    }
}

/// Orders records for human review, highest priority first.
pub fn audit_queue(records: &[TypedRecord], reports: &[GateReport], db: &AssessmentState) -> Vec<AuditItem> {
    let mut items: Vec<AuditItem> = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let key = fact_key(r);
            let disagreement = records.iter().any(|o| {
                fact_key(o) == key && record_content(o) != record_content(r) && o.provenance.run != r.provenance.run
            });
            AuditItem {
                record: r.id(),
                constraint_violation: reports.get(i).is_some_and(|g| g.failed(Gate::ConstraintSatisfaction)),
                centrality: degree(db, r.subject.as_str()),
                affects_feasibility: affects_feasibility(r, db),
                cross_run_disagreement: disagreement,
            }
        })
        .collect();
    items.sort_by(|a, b| b.key().cmp(&a.key()).then_with(|| a.record.cmp(&b.record)));
    items
}

/// Assembles gated records into a changeset ordered by kind, then id.
pub fn build_changeset(
    gated: &[(TypedRecord, GateReport)],
    trigger: Option<RealizedOutcome>,
    policy: RevisionPolicy,
    db: &AssessmentState,
) -> Result<ChangeSet, IngestError> {
    if let Some((_, g)) = gated.iter().find(|(_, g)| g.verdict != Verdict::Accepted) {
        return Err(IngestError::NotAccepted { record: g.record.clone(), verdict: g.verdict });
    }
    if gated.is_empty() {
        return Err(IngestError::Empty);
    }
    let mut records: Vec<TypedRecord> = gated.iter().map(|(r, _)| r.clone()).collect();
    records.sort_by_cached_key(|r| (r.kind, r.id()));
    let reports: Vec<GateReport> = records
        .iter()
        .map(|r| gated.iter().find(|(x, _)| x == r).map(|(_, g)| g.clone()).expect("same records"))
        .collect();
    let audit = audit_queue(&records, &reports, db);
    Ok(ChangeSet { records, trigger, revision_policy: policy, source_quality: BTreeMap::new(), audit })
}
