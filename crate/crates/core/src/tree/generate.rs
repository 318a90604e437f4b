//! Tree generation from an assessment state, admissibility replay and root scoring.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::model::{Edge, EdgeLabel, Position, PositionKind, ScenarioTree};
use super::refinements::quantal_response;
use crate::domain::attributes::{apply_effects, impact_between, AttributeError};
use crate::domain::events::cascade_in_state;
use crate::domain::options::OptionInstance;
use crate::domain::state::{AssessmentState, AttrValue};
use crate::id::Id;

/// Binding key naming the entity an option is directed at.
pub const TARGET_BINDING: &str = "target";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("root {0} is neither an entity nor an event of the state")]
    UnknownRoot(Id),
    #[error("option {0} declares no salience inputs")]
    MissingSalienceInputs(Id),
    #[error("unknown option {0}")]
    UnknownOption(Id),
    #[error("invalid generation parameters: {0}")]
    Params(String),
    #[error(transparent)]
    Effect(#[from] AttributeError),
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SalienceWeights {
    #[serde(default = "one")]
    pub intensity: f64,
    #[serde(default = "one")]
    pub likelihood: f64,
    #[serde(default = "one")]
    pub horizon: f64,
}

impl Default for SalienceWeights {
    fn default() -> Self {
        SalienceWeights { intensity: 1.0, likelihood: 1.0, horizon: 1.0 }
    }
}

fn default_depth() -> u32 {
    4
}

fn default_branching() -> usize {
    4
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationParams {
    /// Options branch only when their salience reaches this value.
    #[serde(default)]
    pub salience_threshold: f64,
    #[serde(default)]
    pub salience_weights: SalienceWeights,
    /// Event realizations branch only when their likelihood reaches this value.
    #[serde(default)]
    pub event_threshold: f64,
    #[serde(default = "default_depth")]
    pub max_depth: u32,
    #[serde(default = "default_branching")]
    pub max_branching: usize,
    /// Branch only on the most salient option and its non-execution.
    #[serde(default)]
    pub binary_convention: bool,
    /// Logit sharpness turning option saliences into decision-edge likelihoods.
    #[serde(default = "one")]
    pub choice_lambda: f64,
    /// A successor event becomes the next position once its cascaded likelihood reaches this value.
    #[serde(default = "half")]
    pub trigger_threshold: f64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            salience_threshold: 0.0,
            salience_weights: SalienceWeights::default(),
            event_threshold: 0.0,
            max_depth: default_depth(),
            max_branching: default_branching(),
            binary_convention: false,
            choice_lambda: 1.0,
            trigger_threshold: half(),
        }
    }
}

impl GenerationParams {
    fn check(&self) -> Result<(), GenError> {
        if self.max_branching == 0 {
            return Err(GenError::Params("max_branching must be positive".into()));
        }
        if !(self.choice_lambda.is_finite() && self.choice_lambda >= 0.0) {
            return Err(GenError::Params("choice_lambda must be finite and non-negative".into()));
        }
        let w = self.salience_weights;
        if [w.intensity, w.likelihood, w.horizon].iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(GenError::Params("salience weights must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Generated {
    pub tree: ScenarioTree,
    pub warnings: Vec<String>,
}

/// Options of `entity` whose preconditions hold, with `¬o` added for binary options.
pub fn available_options(db: &AssessmentState, entity: &Id) -> Vec<EdgeLabel> {
    let mut out: Vec<EdgeLabel> = usable(db, entity)
        .flat_map(|o| {
            let neg = o.binary.then(|| EdgeLabel::NotOption(o.id.clone()));
            std::iter::once(EdgeLabel::Option(o.id.clone())).chain(neg)
        })
        .collect();
    out.sort();
    out
}

fn usable<'a>(db: &'a AssessmentState, entity: &'a Id) -> impl Iterator<Item = &'a OptionInstance> + 'a {
    db.options.iter().filter(move |o| {
        o.actor == *entity
            && o.enabled
            && db
                .action_type(o.action_type.as_str())
                .is_some_and(|ty| ty.preconditions.iter().all(|p| p.holds(db, entity)))
    })
}

/// Weighted sum of the normalized intensity step, success likelihood and horizon urgency.
pub fn option_salience(db: &AssessmentState, option: &Id, weights: &SalienceWeights) -> Result<f64, GenError> {
    let o = db.option(option.as_str()).ok_or_else(|| GenError::UnknownOption(option.clone()))?;
    let s = o.salience_inputs.ok_or_else(|| GenError::MissingSalienceInputs(option.clone()))?;
    let levels = db.parameter_scales.intensity_levels;
    let intensity = if levels > 1 {
        (f64::from(s.intensity.clamp(1, levels)) - 1.0) / f64::from(levels - 1)
    } else {
        1.0
    };
    Ok(weights.intensity * intensity + weights.likelihood * s.likelihood + weights.horizon * s.horizon.urgency())
}

/// Entity with the largest positive impact, smallest id on ties.
pub fn select_next_entity(impacts: &BTreeMap<Id, f64>) -> Option<Id> {
    let mut best: Option<(&Id, f64)> = None;
    for (e, v) in impacts {
        if *v > 0.0 && best.map_or(true, |(_, b)| *v > b) {
            best = Some((e, *v));
        }
    }
    best.map(|(e, _)| e.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootWeights {
    #[serde(default = "one")]
    pub likelihood: f64,
    #[serde(default = "one")]
    pub impact: f64,
    #[serde(default = "one")]
    pub centrality: f64,
}

impl Default for RootWeights {
    fn default() -> Self {
        RootWeights { likelihood: 1.0, impact: 1.0, centrality: 1.0 }
    }
}

/// Ranks every entity and event as a candidate root, best first.
pub fn score_root(db: &AssessmentState, weights: &RootWeights) -> Vec<(Id, f64)> {
    let entities = db.entity_ids();
    let mut partners: BTreeMap<&Id, BTreeSet<&Id>> = BTreeMap::new();
    for t in &db.ties {
        partners.entry(&t.source).or_default().insert(&t.target);
        partners.entry(&t.target).or_default().insert(&t.source);
    }
    for h in &db.hyperedges {
        for a in &h.participants {
            for b in h.participants.iter().filter(|b| *b != a) {
                partners.entry(a).or_default().insert(b);
            }
        }
    }
    let denom = entities.len().saturating_sub(1).max(1) as f64;
    let mut scores: Vec<(Id, f64)> = entities
        .iter()
        .map(|e| {
            let degree = partners.get(e).map_or(0, BTreeSet::len) as f64 / denom;
            (e.clone(), weights.centrality * degree)
        })
        .chain(
            db.events
                .iter()
                .map(|e| (e.id.clone(), weights.likelihood * e.likelihood + weights.impact * e.impact.abs())),
        )
        .collect();
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scores
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

struct Branch {
    label: EdgeLabel,
    likelihood: f64,
    /// Post-transition state.
    state: AssessmentState,
}

#[derive(Clone)]
enum Next {
    Entity(Id),
    Event(Id),
    Stop,
}

/// Eligible options of `entity`, sorted by salience (descending) then id.
fn eligible(
    db: &AssessmentState,
    entity: &Id,
    consumed: &BTreeSet<Id>,
    params: &GenerationParams,
) -> Result<Vec<(Id, f64, bool)>, GenError> {
    let mut out = Vec::new();
    for o in usable(db, entity).filter(|o| !consumed.contains(&o.id)) {
        let s = option_salience(db, &o.id, &params.salience_weights)?;
        if s >= params.salience_threshold {
            out.push((o.id.clone(), s, o.binary));
        }
    }
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

struct Generator<'p> {
    params: &'p GenerationParams,
    positions: Vec<Position>,
    edges: Vec<Edge>,
}

impl Generator<'_> {
    fn decision_branches(
        &self,
        db: &AssessmentState,
        entity: &Id,
        consumed: &BTreeSet<Id>,
    ) -> Result<(Vec<Branch>, BTreeSet<Id>), GenError> {
        let offered = eligible(db, entity, consumed, self.params)?;
        let mut candidates: Vec<(EdgeLabel, f64)> = Vec::new();
        if self.params.binary_convention {
            if let Some((o, s, _)) = offered.first() {
                candidates.push((EdgeLabel::Option(o.clone()), *s));
                candidates.push((EdgeLabel::NotOption(o.clone()), 0.0));
            }
        } else {
            for (o, s, binary) in &offered {
                candidates.push((EdgeLabel::Option(o.clone()), *s));
                if *binary {
                    candidates.push((EdgeLabel::NotOption(o.clone()), 0.0));
                }
            }
            candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            candidates.truncate(self.params.max_branching);
        }
        let consumed_here: BTreeSet<Id> = offered.into_iter().map(|(o, _, _)| o).collect();
        if candidates.is_empty() {
            return Ok((Vec::new(), consumed_here));
        }
        let saliences: Vec<f64> = candidates.iter().map(|c| c.1).collect();
        let probs = quantal_response(&saliences, self.params.choice_lambda).expect("non-empty, valid lambda");
        let mut branches = Vec::new();
        for ((label, _), p) in candidates.into_iter().zip(probs) {
            let mut state = db.clone();
            if let EdgeLabel::Option(o) = &label {
                let effects = db.option(o.as_str()).expect("eligible options exist").effects.clone();
                apply_effects(&mut state, &effects)?;
            }
            branches.push(Branch { label, likelihood: p, state });
        }
        Ok((branches, consumed_here))
    }

    fn event_branches(&self, db: &AssessmentState, event: &Id) -> Result<Vec<Branch>, GenError> {
        let Some(e) = db.event(event.as_str()) else { return Ok(Vec::new()) };
        let mut outs: Vec<_> = e
            .outcomes()
            .into_iter()
            .filter(|r| r.likelihood > 0.0 && r.likelihood >= self.params.event_threshold)
            .collect();
        outs.sort_by(|a, b| b.likelihood.total_cmp(&a.likelihood).then_with(|| a.label.cmp(&b.label)));
        outs.truncate(self.params.max_branching);
        let total: f64 = outs.iter().map(|r| r.likelihood).sum();
        let mut branches = Vec::new();
        for r in outs {
            let mut state = db.clone();
            if r.applies_effects {
                apply_effects(&mut state, &e.effects)?;
                cascade_in_state(&mut state, event.as_str());
            }
            branches.push(Branch {
                label: EdgeLabel::Outcome { event: event.clone(), realization: r.label.clone() },
                likelihood: r.likelihood / total,
                state,
            });
        }
        Ok(branches)
    }

    fn has_moves(&self, db: &AssessmentState, entity: &Id, consumed: &BTreeSet<Id>) -> Result<bool, GenError> {
        Ok(!eligible(db, entity, consumed, self.params)?.is_empty())
    }

    /// Where the tree continues after `label` moved the state from `before` to `after`.
    fn next(
        &self,
        before: &AssessmentState,
        after: &AssessmentState,
        label: &EdgeLabel,
        consumed: &BTreeSet<Id>,
        visited: &BTreeSet<Id>,
    ) -> Result<Next, GenError> {
        if let EdgeLabel::Outcome { event, realization } = label {
            let fired = before.event(event.as_str()).and_then(|e| e.outcome(realization)).is_some_and(|r| r.applies_effects);
            if fired {
                let mut triggered: Vec<(f64, &Id)> = after
                    .event_graph
                    .successors(event.as_str())
                    .filter(|edge| !visited.contains(&edge.to))
                    .filter_map(|edge| after.event(edge.to.as_str()).map(|e| (e.likelihood, &e.id)))
                    .filter(|(l, _)| *l >= self.params.trigger_threshold)
                    .collect();
                triggered.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
                if let Some((_, e)) = triggered.first() {
                    return Ok(Next::Event((*e).clone()));
                }
            }
        }
        if let EdgeLabel::Option(o) = label {
            let opt = before.option(o.as_str()).expect("branched options exist");
            let responds = before.action_type(opt.action_type.as_str()).is_some_and(|ty| opt.requires_response(ty));
            if responds {
                if let Some(target) = opt.bindings.get(TARGET_BINDING).and_then(|t| Id::new(t.as_str()).ok()) {
                    if after.is_entity(target.as_str()) && self.has_moves(after, &target, consumed)? {
                        return Ok(Next::Entity(target));
                    }
                }
            }
        }
        let mut impacts = impact_between(before, after);
        let mut drop = Vec::new();
        for (e, v) in &impacts {
            if *v > 0.0 && !(after.is_entity(e.as_str()) && self.has_moves(after, e, consumed)?) {
                drop.push(e.clone());
            }
        }
        for e in drop {
            impacts.remove(&e);
        }
        Ok(select_next_entity(&impacts).map_or(Next::Stop, Next::Entity))
    }

    fn terminal(&mut self, id: Id, depth: u32, label: Option<Id>, db: &AssessmentState) {
        let mut p = Position::new(id, PositionKind::Terminal, label, depth);
        for x in &db.assignments {
            if let AttrValue::Number(v) = x.value {
                p.indicators.insert(format!("{}({})", x.attribute, x.subject), v);
            }
        }
        self.positions.push(p);
    }

    fn expand(
        &mut self,
        id: Id,
        depth: u32,
        next: Next,
        db: AssessmentState,
        consumed: BTreeSet<Id>,
        mut visited: BTreeSet<Id>,
    ) -> Result<bool, GenError> {
        let (kind, label, branches, consumed) = match &next {
            _ if depth >= self.params.max_depth => {
                self.terminal(id, depth, None, &db);
                return Ok(false);
            }
            Next::Stop => {
                self.terminal(id, depth, None, &db);
                return Ok(false);
            }
            Next::Entity(x) => {
                let (b, here) = self.decision_branches(&db, x, &consumed)?;
                (PositionKind::Decision, x.clone(), b, consumed.union(&here).cloned().collect())
            }
            Next::Event(e) => {
                visited.insert(e.clone());
                (PositionKind::Event, e.clone(), self.event_branches(&db, e)?, consumed)
            }
        };
        if branches.is_empty() {
            let keep = (depth == 0).then_some(label);
            self.terminal(id, depth, keep, &db);
            return Ok(false);
        }
        self.positions.push(Position::new(id.clone(), kind, Some(label), depth));
        let mut branches = branches;
        branches.sort_by(|a, b| a.label.cmp(&b.label));
        for (i, b) in branches.into_iter().enumerate() {
            let child = Id::new(format!("{id}.{i}")).expect("path ids are valid");
            let next = self.next(&db, &b.state, &b.label, &consumed, &visited)?;
            self.edges.push(Edge { tail: id.clone(), head: child.clone(), label: b.label, likelihood: Some(b.likelihood) });
            self.expand(child, depth + 1, next, b.state, consumed.clone(), visited.clone())?;
        }
        Ok(true)
    }
}

/// Generates one scenario tree rooted at an entity or event.
pub fn generate_tree(db: &AssessmentState, root: &Id, params: &GenerationParams) -> Result<Generated, GenError> {
    params.check()?;
    let root = root.clone();
    let first = if db.is_entity(root.as_str()) {
        Next::Entity(root.clone())
    } else if db.event(root.as_str()).is_some() {
        Next::Event(root.clone())
    } else {
        return Err(GenError::UnknownRoot(root));
    };
    let mut g = Generator { params, positions: Vec::new(), edges: Vec::new() };
    let root_pos = Id::new("r").expect("valid");
    let branched = g.expand(root_pos.clone(), 0, first, db.clone(), BTreeSet::new(), BTreeSet::new())?;
    let mut warnings = Vec::new();
    if !branched {
        warnings.push(format!("root {root} has no admissible branches; the tree is a single position"));
    }
    let tree = ScenarioTree {
        id: format!("T{}:{}", db.stage, root),
        stage: db.stage,
        root: root_pos,
        positions: g.positions,
        edges: g.edges,
    };
    Ok(Generated { tree, warnings })
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Admissibility {
    pub admissible: bool,
    pub violations: Vec<String>,
}

/// Replays the tree against the state: every option edge must be an eligible
/// option of the acting entity, every outcome edge a realization above the
/// inclusion threshold.
pub fn check_admissible(tree: &ScenarioTree, db: &AssessmentState, params: &GenerationParams) -> Admissibility {
    let mut violations = Vec::new();
    if let Err(e) = tree.validate() {
        violations.push(e.to_string());
        return Admissibility { admissible: false, violations };
    }
    if tree.stage != db.stage {
        violations.push(format!("tree stage {} differs from state stage {}", tree.stage, db.stage));
    }
    let index = tree.index();
    let mut stack = vec![(tree.root.clone(), db.clone(), BTreeSet::<Id>::new())];
    while let Some((at, state, consumed)) = stack.pop() {
        let pos = index.position(at.as_str()).expect("validated");
        let out = index.children(at.as_str());
        if out.is_empty() {
            continue;
        }
        let label = pos.label.clone().expect("validated");
        match pos.kind {
            PositionKind::Decision => {
                let offered = match eligible(&state, &label, &consumed, params) {
                    Ok(o) => o,
                    Err(e) => {
                        violations.push(format!("{at}: {e}"));
                        continue;
                    }
                };
                let ids: BTreeSet<&Id> = offered.iter().map(|o| &o.0).collect();
                let next_consumed: BTreeSet<Id> = consumed.iter().cloned().chain(ids.iter().map(|o| (*o).clone())).collect();
                for e in out {
                    let mut child = state.clone();
                    match &e.label {
                        EdgeLabel::Option(o) if ids.contains(o) => {
                            let effects = state.option(o.as_str()).expect("eligible").effects.clone();
                            if let Err(err) = apply_effects(&mut child, &effects) {
                                violations.push(format!("{at}: {o}: {err}"));
                            }
                        }
                        EdgeLabel::NotOption(o)
                            if ids.contains(o)
                                && (params.binary_convention || state.option(o.as_str()).is_some_and(|x| x.binary)) => {}
                        other => violations.push(format!("{at}: {other} is not an admissible option of {label}")),
                    }
                    stack.push((e.head.clone(), child, next_consumed.clone()));
                }
            }
            _ => {
                let event = state.event(label.as_str()).cloned();
                for e in out {
                    let mut child = state.clone();
                    let ok = match (&event, &e.label) {
                        (Some(ev), EdgeLabel::Outcome { event: name, realization }) if *name == ev.id => {
                            match ev.outcome(realization) {
                                Some(r) if r.likelihood > 0.0 && r.likelihood >= params.event_threshold => {
                                    if r.applies_effects {
                                        if let Err(err) = apply_effects(&mut child, &ev.effects) {
                                            violations.push(format!("{at}: {err}"));
                                        }
                                        cascade_in_state(&mut child, name.as_str());
                                    }
                                    true
                                }
                                _ => false,
                            }
                        }
                        _ => false,
                    };
                    if !ok {
                        violations.push(format!("{at}: {} is not an admissible realization", e.label));
                    }
                    stack.push((e.head.clone(), child, consumed.clone()));
                }
            }
        }
    }
    violations.sort();
    Admissibility { admissible: violations.is_empty(), violations }
}
