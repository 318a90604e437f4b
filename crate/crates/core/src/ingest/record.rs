//! Typed extraction records: parsing, schema checks and canonical serialization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::state::{AttrValue, Horizon, Operator, Sign, Span, Visibility};
use crate::id::Id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Att,
    Rel,
    Event,
    Attr,
    Option,
}

impl RecordKind {
    pub const ALL: [RecordKind; 5] =
        [RecordKind::Att, RecordKind::Rel, RecordKind::Event, RecordKind::Attr, RecordKind::Option];

    pub fn as_str(self) -> &'static str {
        match self {
            RecordKind::Att => "att",
            RecordKind::Rel => "rel",
            RecordKind::Event => "event",
            RecordKind::Attr => "attr",
            RecordKind::Option => "option",
        }
    }
}

impl fmt::Display for RecordKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RecordKind {
    type Err = RecordError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RecordKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| RecordError::UnknownKind(s.to_string()))
    }
}

/// Likelihood, intensity and horizon qualifiers. Attitude records read the
/// first two as step codes on the state's parameter scales.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Qualifiers {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vartheta: Option<Horizon>,
}

impl Qualifiers {
    pub fn is_empty(&self) -> bool {
        self.ell.is_none() && self.pi.is_none() && self.vartheta.is_none()
    }
}

/// Empirical time stated by the source, independent of the stage index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RecordTime {
    Point(String),
    Interval { start: String, end: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordProvenance {
    pub source: String,
    pub span: Span,
    /// Parent records of a derived record.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parents: Vec<String>,
    /// Extraction run identifier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<String>,
}

/// Tie properties carried by relation records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TieAnnotations {
    pub weight: f64,
    #[serde(default)]
    pub sign: Sign,
    pub layer: String,
    #[serde(default)]
    pub visibility: Visibility,
}

pub const OPTION_AVAILABLE: &str = "available";
pub const OPTION_WITHDRAWN: &str = "withdrawn";
pub const EVENT_FIELDS: [&str; 3] = ["likelihood", "impact", "confidence"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypedRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub kind: RecordKind,
    pub subject: Id,
    pub predicate: String,
    pub object: AttrValue,
    #[serde(default, skip_serializing_if = "Qualifiers::is_empty")]
    pub qualifiers: Qualifiers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<RecordTime>,
    pub confidence: f64,
    pub provenance: RecordProvenance,
    /// Attitude records only: remove the attitude instead of asserting it.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub retract: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<TieAnnotations>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecordError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("record must be a JSON object")]
    NotAnObject,
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("unknown record kind {0:?}")]
    UnknownKind(String),
    #[error("field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

impl RecordError {
    /// The offending field, when the error concerns one.
    pub fn field(&self) -> Option<&str> {
        match self {
            RecordError::Missing(f) => Some(f),
            RecordError::UnknownKind(_) => Some("kind"),
            RecordError::Invalid { field, .. } => Some(field),
            RecordError::Json(_) | RecordError::NotAnObject => None,
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> RecordError {
    RecordError::Invalid { field: field.to_string(), reason: reason.into() }
}

fn object_id(r: &TypedRecord) -> Result<Id, RecordError> {
    match &r.object {
        AttrValue::Category(s) => Id::new(s.as_str()).map_err(|e| invalid("object", e.to_string())),
        AttrValue::Number(_) => Err(invalid("object", "expected an identifier")),
    }
}

impl TypedRecord {
    /// Explicit id, or a content digest of the record.
    pub fn id(&self) -> String {
        if let Some(id) = &self.id {
            return id.clone();
        }
        let bytes = serde_json::to_vec(self).expect("records always serialize");
        format!("r-{}", &hex::encode(Sha256::digest(&bytes))[..12])
    }

    pub fn object_id(&self) -> Result<Id, RecordError> {
        object_id(self)
    }

    pub fn operator(&self) -> Result<Operator, RecordError> {
        self.predicate.parse().map_err(|e: String| invalid("predicate", e))
    }

    /// Type checks per kind, independent of any state.
    pub fn check_schema(&self) -> Result<(), RecordError> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(invalid("confidence", format!("{} is outside [0,1]", self.confidence)));
        }
        if self.provenance.source.trim().is_empty() {
            return Err(invalid("provenance.source", "empty source"));
        }
        if self.id.as_deref().is_some_and(|s| s.trim().is_empty()) {
            return Err(invalid("id", "empty id"));
        }
        if self.retract && self.kind != RecordKind::Att {
            return Err(invalid("retract", "only attitude records can retract"));
        }
        if self.annotations.is_some() && self.kind != RecordKind::Rel {
            return Err(invalid("annotations", "only relation records carry tie annotations"));
        }
        let predicate_id = || Id::new(self.predicate.as_str()).map_err(|e| invalid("predicate", e.to_string()));
        match self.kind {
            RecordKind::Att => {
                self.operator()?;
                object_id(self)?;
                let q = &self.qualifiers;
                if !q.is_empty() {
                    for (field, v) in [("qualifiers.ell", q.ell), ("qualifiers.pi", q.pi)] {
                        match v {
                            Some(x) if x >= 1.0 && x.fract() == 0.0 => {}
                            Some(_) => return Err(invalid(field, "expected a step code ≥ 1")),
                            None => return Err(invalid(field, "attitude qualifiers come as a complete tuple")),
                        }
                    }
                    if q.vartheta.is_none() {
                        return Err(invalid("qualifiers.vartheta", "attitude qualifiers come as a complete tuple"));
                    }
                }
            }
            RecordKind::Rel => {
                predicate_id()?;
                object_id(self)?;
                let a = self.annotations.as_ref().ok_or(RecordError::Missing("annotations"))?;
                if !(0.0..=1.0).contains(&a.weight) {
                    return Err(invalid("annotations.weight", "outside [0,1]"));
                }
                if a.layer.trim().is_empty() {
                    return Err(invalid("annotations.layer", "empty layer"));
                }
            }
            RecordKind::Event => {
                if !EVENT_FIELDS.contains(&self.predicate.as_str()) {
                    return Err(invalid("predicate", format!("expected one of {EVENT_FIELDS:?}")));
                }
                let x = self.object.as_number().ok_or_else(|| invalid("object", "expected a number"))?;
                if self.predicate != "impact" && !(0.0..=1.0).contains(&x) {
                    return Err(invalid("object", "outside [0,1]"));
                }
                if !x.is_finite() {
                    return Err(invalid("object", "not finite"));
                }
            }
            RecordKind::Attr => {
                predicate_id()?;
            }
            RecordKind::Option => {
                predicate_id()?;
                match &self.object {
                    AttrValue::Category(s) if s == OPTION_AVAILABLE || s == OPTION_WITHDRAWN => {}
                    _ => return Err(invalid("object", "expected \"available\" or \"withdrawn\"")),
                }
            }
        }
        Ok(())
    }
}

const REQUIRED: [&str; 6] = ["kind", "subject", "predicate", "object", "confidence", "provenance"];

/// Parses one record document and applies the schema gate.
pub fn parse_record(text: &str) -> Result<TypedRecord, RecordError> {
    let value: Value = serde_json::from_str(text).map_err(|e| RecordError::Json(e.to_string()))?;
    parse_value(value)
}

pub fn parse_value(value: Value) -> Result<TypedRecord, RecordError> {
    let obj = value.as_object().ok_or(RecordError::NotAnObject)?;
    for field in REQUIRED {
        if obj.get(field).map_or(true, Value::is_null) {
            return Err(RecordError::Missing(field));
        }
    }
    match obj.get("kind") {
        Some(Value::String(k)) => {
            k.parse::<RecordKind>()?;
        }
        _ => return Err(invalid("kind", "expected a string")),
    }
    let prov = obj["provenance"].as_object().ok_or_else(|| invalid("provenance", "expected an object"))?;
    if prov.get("source").map_or(true, Value::is_null) {
        return Err(RecordError::Missing("provenance.source"));
    }
    if prov.get("span").map_or(true, Value::is_null) {
        return Err(RecordError::Missing("provenance.span"));
    }
    let record: TypedRecord = serde_json::from_value(value).map_err(|e| invalid("record", e.to_string()))?;
    record.check_schema()?;
    Ok(record)
}

/// Newline-delimited records; blank lines are skipped. Errors carry the 1-based line.
pub fn parse_records(text: &str) -> Vec<(usize, Result<TypedRecord, RecordError>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, parse_record(l)))
        .collect()
}

/// Canonical compact JSON form.
pub fn serialize_record(record: &TypedRecord) -> String {
    serde_json::to_string(record).expect("records always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    const BELIEF: &str = r#"{"kind":"att","subject":"a","predicate":"B","object":"p",
        "qualifiers":{"ell":4,"pi":3,"vartheta":"short"},"time":"2024-03-01","confidence":0.8,
        "provenance":{"source":"q1","span":"10..42"}}"#;

    #[test]
    fn complete_attitude_parses() {
        let r = parse_record(BELIEF).unwrap();
        assert_eq!(r.kind, RecordKind::Att);
        assert_eq!(r.operator().unwrap(), Operator::B);
        assert_eq!(r.provenance.span, Span::Offsets { start: 10, end: 42 });
    }

    #[test]
    fn missing_source_is_rejected() {
        let without = |path: &[&str]| {
            let mut v: Value = serde_json::from_str(BELIEF).unwrap();
            let (last, parents) = path.split_last().unwrap();
            let mut obj = &mut v;
            for p in parents {
                obj = obj.get_mut(*p).unwrap();
            }
            obj.as_object_mut().unwrap().remove(*last);
            parse_value(v)
        };
        assert_eq!(without(&["provenance", "source"]), Err(RecordError::Missing("provenance.source")));
        assert_eq!(without(&["provenance"]), Err(RecordError::Missing("provenance")));
        assert_eq!(without(&["confidence"]), Err(RecordError::Missing("confidence")));
    }

    #[test]
    fn closed_kind_enumeration() {
        let text = BELIEF.replace(r#""kind":"att""#, r#""kind":"belief""#);
        assert_eq!(parse_record(&text), Err(RecordError::UnknownKind("belief".into())));
    }

    #[test]
    fn confidence_range() {
        let text = BELIEF.replace("0.8", "1.2");
        assert_eq!(parse_record(&text).unwrap_err().field(), Some("confidence"));
    }

    #[test]
    fn kind_specific_fields() {
        let option = r#"{"kind":"option","subject":"a","predicate":"o1","object":"maybe","confidence":1,
            "provenance":{"source":"q","span":"expert"}}"#;
        assert_eq!(parse_record(option).unwrap_err().field(), Some("object"));
        let rel = r#"{"kind":"rel","subject":"a","predicate":"ally","object":"b","confidence":1,
            "provenance":{"source":"q","span":"expert"}}"#;
        assert_eq!(parse_record(rel), Err(RecordError::Missing("annotations")));
        let partial = BELIEF.replace(r#","vartheta":"short""#, "");
        assert_eq!(parse_record(&partial).unwrap_err().field(), Some("qualifiers.vartheta"));
    }

    #[test]
    fn round_trip_and_digest_ids() {
        let r = parse_record(BELIEF).unwrap();
        let again = parse_record(&serialize_record(&r)).unwrap();
        assert_eq!(r, again);
        assert_eq!(r.id(), again.id());
        assert!(r.id().starts_with("r-") && r.id().len() == 14);
        let mut named = r.clone();
        named.id = Some("rec-7".into());
        assert_eq!(named.id(), "rec-7");
    }

    #[test]
    fn ndjson_reports_lines() {
        let text = format!("{}\n\nnot json\n", BELIEF.replace('\n', " "));
        let out = parse_records(&text);
        assert_eq!(out.len(), 2);
        assert!(out[0].1.is_ok());
        assert_eq!(out[1].0, 3);
        assert!(matches!(out[1].1, Err(RecordError::Json(_))));
    }
}
