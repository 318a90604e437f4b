//! Seeded generators for property tests and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::domain::state::{AssessmentState, AttrValue, AttributeDomain, Horizon, Operator, Sign, Span};
use crate::id::Id;
use crate::ingest::record::{
    Qualifiers, RecordKind, RecordProvenance, RecordTime, TieAnnotations, TypedRecord, EVENT_FIELDS, OPTION_AVAILABLE,
    OPTION_WITHDRAWN,
};
use crate::tree::model::{Edge, EdgeLabel, Position, PositionKind, ScenarioTree};

fn id(s: String) -> Id {
    Id::new(s).expect("generated ids are valid")
}

#[derive(Debug, Clone)]
pub struct TreeShape {
    pub max_depth: u32,
    pub max_branching: usize,
    pub entities: usize,
    pub rank_max: i64,
    /// Chance that an inner position is an event position.
    pub event_share: f64,
    /// Option labels are drawn from a pool of this size, so trees share labels.
    pub option_pool: usize,
    pub stage: u32,
}

impl Default for TreeShape {
    fn default() -> Self {
        TreeShape { max_depth: 6, max_branching: 3, entities: 3, rank_max: 4, event_share: 0.3, option_pool: 6, stage: 0 }
    }
}

impl TreeShape {
    pub fn entity_ids(&self) -> Vec<Id> {
        (0..self.entities).map(|i| id(format!("e{i}"))).collect()
    }
}

/// A valid tree with likelihoods on every edge and ranks for every entity at every leaf.
pub fn random_tree<R: Rng>(rng: &mut R, shape: &TreeShape, name: &str) -> ScenarioTree {
    let entities = shape.entity_ids();
    let mut tree = ScenarioTree { id: name.to_string(), stage: shape.stage, root: id("r".into()), positions: vec![], edges: vec![] };
    let mut stack = vec![("r".to_string(), 0u32)];
    while let Some((pid, depth)) = stack.pop() {
        let leaf = depth >= shape.max_depth || (depth > 0 && rng.gen_bool(0.3));
        if leaf {
            let mut p = Position::new(id(pid), PositionKind::Terminal, None, depth);
            for e in &entities {
                p.ranks.insert(e.clone(), rng.gen_range(1..=shape.rank_max));
            }
            tree.positions.push(p);
            continue;
        }
        let n = rng.gen_range(2..=shape.max_branching.max(2));
        let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(1..=16) as f64).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let event = rng.gen_bool(shape.event_share);
        let (kind, label, labels): (PositionKind, Id, Vec<EdgeLabel>) = if event {
            let ev = id(format!("ev{}", rng.gen_range(0..4)));
            let labels = (0..n).map(|k| EdgeLabel::Outcome { event: ev.clone(), realization: format!("x{k}") }).collect();
            (PositionKind::Event, ev, labels)
        } else {
            let mut pool: Vec<usize> = (0..shape.option_pool.max(n)).collect();
            pool.shuffle(rng);
            let labels = pool[..n].iter().map(|k| EdgeLabel::Option(id(format!("o{k}")))).collect();
            (PositionKind::Decision, entities.choose(rng).expect("at least one entity").clone(), labels)
        };
        tree.positions.push(Position::new(id(pid.clone()), kind, Some(label), depth));
        for (k, (l, w)) in labels.into_iter().zip(weights).enumerate() {
            let child = format!("{pid}.{k}");
            tree.edges.push(Edge { tail: id(pid.clone()), head: id(child.clone()), label: l, likelihood: Some(w) });
            stack.push((child, depth + 1));
        }
    }
    tree
}

fn provenance<R: Rng>(rng: &mut R) -> RecordProvenance {
    let start = rng.gen_range(0..1000u64);
    RecordProvenance {
        source: format!("src{}", rng.gen_range(0..3)),
        span: Span::Offsets { start, end: start + rng.gen_range(1..50) },
        parents: vec![],
        run: Some(format!("run{}", rng.gen_range(0..2))),
    }
}

/// Records over the symbols declared in `db`; a share of them is deliberately
/// ill-typed or unresolvable.
pub fn random_records<R: Rng>(rng: &mut R, db: &AssessmentState, n: usize) -> Vec<TypedRecord> {
    let entities: Vec<Id> = db.entity_ids().into_iter().collect();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let kind = *RecordKind::ALL.choose(rng).expect("kinds");
        let subject_entity = if rng.gen_bool(0.1) { id("ghost".into()) } else { entities.choose(rng).expect("entities").clone() };
        let mut r = TypedRecord {
            id: Some(format!("g{i}")),
            kind,
            subject: subject_entity.clone(),
            predicate: String::new(),
            object: AttrValue::Number(0.0),
            qualifiers: Qualifiers::default(),
            time: Some(RecordTime::Point(format!("t{:03}", rng.gen_range(0..100)))),
            confidence: rng.gen_range(0.0..=1.0),
            provenance: provenance(rng),
            retract: false,
            annotations: None,
        };
        match kind {
            RecordKind::Attr => {
                let Some(ty) = db.attribute_types.choose(rng) else { continue };
                r.predicate = ty.id.to_string();
                r.object = match &ty.domain {
                    AttributeDomain::Ordinal { levels } => {
                        let x = if rng.gen_bool(0.8) { *levels.choose(rng).expect("levels") as f64 } else { 99.0 };
                        AttrValue::Number(x)
                    }
                    _ => AttrValue::Number(rng.gen_range(0.0..10.0)),
                };
            }
            RecordKind::Att => {
                let Some(p) = db.propositions.choose(rng) else { continue };
                let op = *[Operator::B, Operator::W, Operator::I, Operator::K].choose(rng).expect("ops");
                r.predicate = op.to_string();
                r.object = AttrValue::Category(p.id.to_string());
                r.retract = rng.gen_bool(0.2);
                if !r.retract && rng.gen_bool(0.5) {
                    r.qualifiers = Qualifiers {
                        ell: Some(rng.gen_range(1..=6) as f64),
                        pi: Some(rng.gen_range(1..=5) as f64),
                        vartheta: Some(*[Horizon::Short, Horizon::Medium, Horizon::Long].choose(rng).expect("h")),
                    };
                }
            }
            RecordKind::Rel => {
                let Some(rt) = db.relation_types.choose(rng) else { continue };
                r.predicate = rt.id.to_string();
                r.object = AttrValue::Category(entities.choose(rng).expect("entities").to_string());
                r.annotations = Some(TieAnnotations {
                    weight: rng.gen_range(0.0..=1.0),
                    sign: *[Sign::Positive, Sign::Negative, Sign::Neutral].choose(rng).expect("signs"),
                    layer: "main".into(),
                    visibility: Default::default(),
                });
            }
            RecordKind::Event => {
                let Some(e) = db.events.choose(rng) else { continue };
                r.subject = e.id.clone();
                r.predicate = EVENT_FIELDS.choose(rng).expect("fields").to_string();
                r.object = AttrValue::Number(rng.gen_range(0.0..=1.0));
            }
            RecordKind::Option => {
                let Some(o) = db.options.choose(rng) else { continue };
                r.subject = o.id.clone();
                r.predicate = "status".into();
                r.object = AttrValue::Category([OPTION_AVAILABLE, OPTION_WITHDRAWN].choose(rng).expect("status").to_string());
            }
        }
        out.push(r);
    }
    out
}
