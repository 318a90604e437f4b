//! The assessment-state database and its record types.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::events::{Event, EventGraph};
use super::options::{ActionType, OptionInstance};
use crate::id::Id;
use crate::ingest::TypedRecord;

pub type Stage = u32;

// ---------------------------------------------------------------------------
// Closed enumerations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActorCategory {
    Individual,
    Collective,
    Institutional,
    Hybrid,
    Algorithmic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Domain {
    Pol,
    Geo,
    Econ,
    Soc,
    Org,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modifier {
    Env,
    Tech,
    Health,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Modifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Temporal horizon, ordered short < medium < long.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Short,
    Medium,
    Long,
}

impl Horizon {
    /// Urgency score used by option salience: short horizons are the most pressing.
    pub fn urgency(self) -> f64 {
        match self {
            Horizon::Short => 1.0,
            Horizon::Medium => 0.5,
            Horizon::Long => 0.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Provenance
// ---------------------------------------------------------------------------

/// Location of an assertion inside its source.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Span {
    Expert,
    Offsets { start: u64, end: u64 },
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Span::Expert => f.write_str("expert"),
            Span::Offsets { start, end } => write!(f, "{start}..{end}"),
        }
    }
}

impl std::str::FromStr for Span {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "expert" {
            return Ok(Span::Expert);
        }
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("span {s:?} is neither \"expert\" nor \"start..end\""))?;
        let start: u64 = a.parse().map_err(|_| format!("bad span start in {s:?}"))?;
        let end: u64 = b.parse().map_err(|_| format!("bad span end in {s:?}"))?;
        if end < start {
            return Err(format!("span {s:?} ends before it starts"));
        }
        Ok(Span::Offsets { start, end })
    }
}

impl Serialize for Span {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Span {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_method() -> String {
    "expert_coding".to_string()
}

fn default_confidence() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub source: String,
    #[serde(default = "default_span")]
    pub span: Span,
    #[serde(default = "default_method")]
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

fn default_span() -> Span {
    Span::Expert
}

impl Provenance {
    pub fn expert(source: &str) -> Self {
        Provenance {
            source: source.to_string(),
            span: Span::Expert,
            method: default_method(),
            timestamp: None,
            confidence: 1.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Carrier sets
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Proposition {
    pub id: Id,
    #[serde(default)]
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub negation_of: Option<Id>,
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub implies: BTreeSet<Id>,
    /// Set when this proposition asserts that another one is achievable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility_of: Option<Id>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Actor {
    pub id: Id,
    pub category: ActorCategory,
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coalition {
    pub id: Id,
    pub members: BTreeSet<Id>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrisisTag {
    #[serde(default)]
    pub domains: BTreeSet<Domain>,
    #[serde(default)]
    pub modifiers: BTreeSet<Modifier>,
}

// ---------------------------------------------------------------------------
// Attributes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttributeDomain {
    /// Strictly increasing level codes.
    Ordinal { levels: Vec<i64> },
    Categorical { categories: Vec<String> },
    Numeric {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreRule {
    Sum,
    Mean,
    Max,
    Min,
    /// Weighted sum with one weight per member; absent members weigh 0.
    Weighted(BTreeMap<Id, f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    pub at: f64,
    pub level: i64,
}

/// Ordinalization of an aggregate score onto the attribute's levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelMap {
    /// Round half up, clamp to the level range, snap to the nearest declared level.
    RoundHalfUp,
    /// The level of the highest threshold not above the score, or the lowest level.
    Thresholds(Vec<Threshold>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeType {
    pub id: Id,
    pub domain: AttributeDomain,
    #[serde(default)]
    pub aggregative: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_rule: Option<ScoreRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_map: Option<LevelMap>,
}

impl AttributeType {
    pub fn is_ordinal(&self) -> bool {
        matches!(self.domain, AttributeDomain::Ordinal { .. })
    }

    /// Whether `value` lies in the declared domain.
    pub fn admits(&self, value: &AttrValue) -> bool {
        match (&self.domain, value) {
            (AttributeDomain::Ordinal { levels }, AttrValue::Number(x)) => {
                x.fract() == 0.0 && levels.contains(&(*x as i64))
            }
            (AttributeDomain::Categorical { categories }, AttrValue::Category(c)) => {
                categories.contains(c)
            }
            (AttributeDomain::Numeric { min, max }, AttrValue::Number(x)) => {
                x.is_finite() && min.map_or(true, |m| *x >= m) && max.map_or(true, |m| *x <= m)
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Number(f64),
    Category(String),
}

impl AttrValue {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            AttrValue::Number(x) => Some(*x),
            AttrValue::Category(_) => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Number(x) => write!(f, "{x}"),
            AttrValue::Category(c) => f.write_str(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeAssignment {
    pub subject: Id,
    pub attribute: Id,
    pub value: AttrValue,
    #[serde(default)]
    pub stage: Stage,
    pub provenance: Provenance,
}

// ---------------------------------------------------------------------------
// Attitudes
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Operator {
    K,
    B,
    W,
    I,
    F,
    Com,
}

impl Operator {
    pub fn is_collective(self) -> bool {
        self == Operator::Com
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl std::str::FromStr for Operator {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "K" => Operator::K,
            "B" => Operator::B,
            "W" => Operator::W,
            "I" => Operator::I,
            "F" => Operator::F,
            "Com" => Operator::Com,
            other => return Err(format!("unknown attitude operator {other:?}")),
        })
    }
}

/// Ordinal likelihood and intensity step codes (1-based) plus a horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterTuple {
    pub likelihood: u32,
    pub intensity: u32,
    pub horizon: Horizon,
}

/// Sizes of the likelihood and intensity scales; codes run `1..=size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterScales {
    pub likelihood_levels: u32,
    pub intensity_levels: u32,
}

impl Default for ParameterScales {
    fn default() -> Self {
        ParameterScales { likelihood_levels: 5, intensity_levels: 5 }
    }
}

impl ParameterScales {
    pub fn admits(&self, p: &ParameterTuple) -> bool {
        (1..=self.likelihood_levels).contains(&p.likelihood)
            && (1..=self.intensity_levels).contains(&p.intensity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttitudeRecord {
    pub holder: Id,
    pub operator: Operator,
    pub content: Id,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ParameterTuple>,
    #[serde(default)]
    pub stage: Stage,
    pub provenance: Provenance,
}

// ---------------------------------------------------------------------------
// Relations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationFamily {
    PowerInfluence,
    AlignmentAffinity,
    AuthorityObligation,
    ExchangeInterdependence,
    InformationCommunication,
    Adversarial,
    MediativeRegulatory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationType {
    pub id: Id,
    pub family: RelationFamily,
    pub directed: bool,
    pub signed: bool,
    #[serde(default)]
    pub layers: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Sign {
    Negative,
    #[default]
    Neutral,
    Positive,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Neutral => 0,
            Sign::Positive => 1,
        }
    }

    pub fn of(x: f64) -> Sign {
        if x > 0.0 {
            Sign::Positive
        } else if x < 0.0 {
            Sign::Negative
        } else {
            Sign::Neutral
        }
    }
}

impl TryFrom<i8> for Sign {
    type Error = String;
    fn try_from(v: i8) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(Sign::Negative),
            0 => Ok(Sign::Neutral),
            1 => Ok(Sign::Positive),
            other => Err(format!("sign must be -1, 0 or 1, got {other}")),
        }
    }
}

impl Serialize for Sign {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.value())
    }
}

impl<'de> Deserialize<'de> for Sign {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Sign::try_from(i8::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    #[default]
    Observed,
    Perceived(BTreeSet<Id>),
    Signalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DyadicTie {
    pub relation: Id,
    pub source: Id,
    pub target: Id,
    pub weight: f64,
    pub sign: Sign,
    pub layer: String,
    #[serde(default)]
    pub visibility: Visibility,
    #[serde(default)]
    pub stage: Stage,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperedge {
    pub id: Id,
    pub relation: Id,
    pub participants: BTreeSet<Id>,
    pub weight: f64,
    pub sign: Sign,
    pub layer: String,
    #[serde(default)]
    pub visibility: Visibility,
    #[serde(default)]
    pub stage: Stage,
    pub provenance: Provenance,
}

// ---------------------------------------------------------------------------
// Lineage bookkeeping
// ---------------------------------------------------------------------------

/// A record held back from computation until a conflict is resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisputedRecord {
    pub record: TypedRecord,
    pub conflicts_with: Vec<String>,
    pub stage: Stage,
}

/// A transition label as it appears on tree edges.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Transition {
    Option { option: Id },
    Event { event: Id, realization: String },
}

/// What actually happened between a predecessor stage and this one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizedTransition {
    pub from_stage: Stage,
    pub transition: Transition,
}

// ---------------------------------------------------------------------------
// The database
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessmentState {
    pub stage: Stage,
    /// Content digest of the predecessor state.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_ref: Option<String>,
    #[serde(default)]
    pub crisis_tag: CrisisTag,
    /// Constraint-label packages keyed by domain or modifier name; built-ins apply when absent.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constraint_packages: BTreeMap<String, BTreeSet<String>>,
    #[serde(default)]
    pub parameter_scales: ParameterScales,
    #[serde(default)]
    pub propositions: Vec<Proposition>,
    #[serde(default)]
    pub actors: Vec<Actor>,
    #[serde(default)]
    pub coalitions: Vec<Coalition>,
    #[serde(default)]
    pub attribute_types: Vec<AttributeType>,
    #[serde(default)]
    pub assignments: Vec<AttributeAssignment>,
    #[serde(default)]
    pub attitudes: Vec<AttitudeRecord>,
    #[serde(default)]
    pub relation_types: Vec<RelationType>,
    #[serde(default)]
    pub ties: Vec<DyadicTie>,
    #[serde(default)]
    pub hyperedges: Vec<Hyperedge>,
    #[serde(default)]
    pub action_types: Vec<ActionType>,
    #[serde(default)]
    pub options: Vec<OptionInstance>,
    #[serde(default)]
    pub events: Vec<Event>,
    #[serde(default)]
    pub event_graph: EventGraph,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disputed: Vec<DisputedRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub realized: Vec<RealizedTransition>,
}

impl AssessmentState {
    pub fn actor(&self, id: &str) -> Option<&Actor> {
        self.actors.iter().find(|a| a.id.as_str() == id)
    }

    pub fn coalition(&self, id: &str) -> Option<&Coalition> {
        self.coalitions.iter().find(|c| c.id.as_str() == id)
    }

    /// Membership in Ω = actors ∪ coalitions.
    pub fn is_entity(&self, id: &str) -> bool {
        self.actor(id).is_some() || self.coalition(id).is_some()
    }

    /// All entity ids, sorted.
    pub fn entity_ids(&self) -> BTreeSet<Id> {
        self.actors
            .iter()
            .map(|a| a.id.clone())
            .chain(self.coalitions.iter().map(|c| c.id.clone()))
            .collect()
    }

    /// Members of an entity; an actor counts as its own singleton coalition.
    pub fn members(&self, id: &str) -> Option<BTreeSet<Id>> {
        if let Some(a) = self.actor(id) {
            return Some(BTreeSet::from([a.id.clone()]));
        }
        self.coalition(id).map(|c| c.members.clone())
    }

    pub fn proposition(&self, id: &str) -> Option<&Proposition> {
        self.propositions.iter().find(|p| p.id.as_str() == id)
    }

    /// The declared negation of `p`, looked up in either direction.
    pub fn negation(&self, p: &str) -> Option<&Id> {
        if let Some(q) = self.proposition(p).and_then(|prop| prop.negation_of.as_ref()) {
            return Some(q);
        }
        self.propositions
            .iter()
            .find(|q| q.negation_of.as_ref().map(Id::as_str) == Some(p))
            .map(|q| &q.id)
    }

    pub fn attribute_type(&self, id: &str) -> Option<&AttributeType> {
        self.attribute_types.iter().find(|k| k.id.as_str() == id)
    }

    pub fn assignment(&self, subject: &str, attribute: &str) -> Option<&AttributeAssignment> {
        self.assignments
            .iter()
            .rev()
            .find(|x| x.subject.as_str() == subject && x.attribute.as_str() == attribute)
    }

    pub fn value(&self, subject: &str, attribute: &str) -> Option<&AttrValue> {
        self.assignment(subject, attribute).map(|x| &x.value)
    }

    pub fn relation_type(&self, id: &str) -> Option<&RelationType> {
        self.relation_types.iter().find(|r| r.id.as_str() == id)
    }

    pub fn action_type(&self, id: &str) -> Option<&ActionType> {
        self.action_types.iter().find(|a| a.id.as_str() == id)
    }

    pub fn option(&self, id: &str) -> Option<&OptionInstance> {
        self.options.iter().find(|o| o.id.as_str() == id)
    }

    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.iter().find(|e| e.id.as_str() == id)
    }

    /// Whether `holder` has an attitude record `operator content`.
    pub fn holds(&self, holder: &str, operator: Operator, content: &str) -> bool {
        self.attitudes_of(holder, operator, content).next().is_some()
    }

    pub fn attitudes_of<'a>(
        &'a self,
        holder: &'a str,
        operator: Operator,
        content: &'a str,
    ) -> impl Iterator<Item = &'a AttitudeRecord> + 'a {
        self.attitudes.iter().filter(move |r| {
            r.holder.as_str() == holder && r.operator == operator && r.content.as_str() == content
        })
    }

    /// SHA-256 over the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("assessment states always serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn span_round_trips() {
        for s in ["expert", "12..40"] {
            let span: Span = s.parse().unwrap();
            assert_eq!(span.to_string(), s);
        }
        assert!("9..3".parse::<Span>().is_err());
        assert!("x".parse::<Span>().is_err());
    }

    #[test]
    fn sign_rejects_out_of_range() {
        assert!(serde_json::from_str::<Sign>("2").is_err());
        assert_eq!(serde_json::from_str::<Sign>("-1").unwrap(), Sign::Negative);
    }

    #[test]
    fn ordinal_domain_admits_only_declared_levels() {
        let k = AttributeType {
            id: crate::id::id("mil"),
            domain: AttributeDomain::Ordinal { levels: vec![0, 1, 2, 3, 4, 5] },
            aggregative: false,
            score_rule: None,
            level_map: None,
        };
        assert!(k.admits(&AttrValue::Number(3.0)));
        assert!(!k.admits(&AttrValue::Number(3.5)));
        assert!(!k.admits(&AttrValue::Number(6.0)));
        assert!(!k.admits(&AttrValue::Category("high".into())));
    }
}
