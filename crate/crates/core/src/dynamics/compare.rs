//! Regeneration after an update, and the check that updating then re-running
//! the method differs from re-running the method then moving stage.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use super::update::{advance_stage, apply_update, ChangeSet, UpdateError, UpdateLog};
use crate::domain::state::{AssessmentState, Stage};
use crate::space::distance::{bundle_distance, DistanceSpec};
use crate::space::encoding::EncodingError;
use crate::tree::bundle::{generate_bundle, Bundle, BundleError, GeneratedBundle, MethodParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompareError {
    #[error(transparent)]
    Update(#[from] UpdateError),
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
}

pub fn regenerate_bundle(db: &AssessmentState, params: &MethodParams) -> Result<GeneratedBundle, BundleError> {
    generate_bundle(db, params)
}

/// Carries a bundle to a later stage unchanged apart from its stage tags.
pub fn transport(bundle: &Bundle, stage: Stage) -> Bundle {
    let rename = |id: &str| match id.split_once(':') {
        Some((_, rest)) if id.starts_with('T') => format!("T{stage}:{rest}"),
        _ => id.to_string(),
    };
    let trees = bundle
        .trees
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.stage = stage;
            t.id = rename(&t.id);
            t
        })
        .collect();
    Bundle { stage, trees, selection: bundle.selection.iter().map(|id| rename(id)).collect() }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UsageDiff {
    pub only_after_update: Vec<String>,
    pub only_after_method: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoncommutativityReport {
    /// Update the state, then generate under the variant method.
    pub update_first: Bundle,
    /// Generate under the variant method at the current stage, then move stage.
    pub method_first: Bundle,
    /// Base-method bundle at the current stage, moved to the next stage.
    pub baseline: Bundle,
    /// Bundle distance between the two paths; `None` when either bundle is empty.
    pub distance: Option<f64>,
    pub baseline_to_update_first: Option<f64>,
    pub baseline_to_method_first: Option<f64>,
    pub options: UsageDiff,
    pub log: Option<UpdateLog>,
    pub warnings: Vec<String>,
}

impl NoncommutativityReport {
    pub fn commutes(&self, tolerance: f64) -> bool {
        self.distance.is_some_and(|d| d <= tolerance)
    }

    pub fn to_text(&self) -> String {
        let fmt = |d: Option<f64>| d.map_or("undefined (empty bundle)".to_string(), crate::evaluation::utility::decimal);
        let ids = |b: &Bundle| b.selection.join(", ");
        let list = |v: &[String]| if v.is_empty() { "none".to_string() } else { v.join(", ") };
        let mut out = String::new();
        out.push_str(&format!("update then method: {}\n", ids(&self.update_first)));
        out.push_str(&format!("method then stage: {}\n", ids(&self.method_first)));
        out.push_str(&format!("distance: {}\n", fmt(self.distance)));
        out.push_str(&format!("baseline to update-first: {}\n", fmt(self.baseline_to_update_first)));
        out.push_str(&format!("baseline to method-first: {}\n", fmt(self.baseline_to_method_first)));
        out.push_str(&format!("options only after update: {}\n", list(&self.options.only_after_update)));
        out.push_str(&format!("options only after method: {}\n", list(&self.options.only_after_method)));
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

fn distance(a: &Bundle, b: &Bundle, spec: &DistanceSpec) -> Result<Option<f64>, EncodingError> {
    if a.selection.is_empty() || b.selection.is_empty() {
        return Ok(None);
    }
    bundle_distance(a.selected(), b.selected(), spec).map(Some)
}

fn options_used(b: &Bundle) -> BTreeSet<String> {
    b.selected().flat_map(|t| t.options_used().into_iter().map(ToString::to_string)).collect()
}

/// Compares the two orders of applying an update and a change of method.
/// An empty change set only moves the stage.
pub fn noncommutativity_check(
    db: &AssessmentState,
    changes: &ChangeSet,
    base: &MethodParams,
    variant: &MethodParams,
    spec: &DistanceSpec,
) -> Result<NoncommutativityReport, CompareError> {
    let (next, log) = if changes.is_empty() {
        (advance_stage(db), None)
    } else {
        let (s, l) = apply_update(db, changes)?;
        (s, Some(l))
    };
    let mut warnings = Vec::new();
    let g1 = regenerate_bundle(&next, variant)?;
    warnings.extend(g1.warnings.iter().map(|w| format!("update-first: {w}")));
    let g2 = regenerate_bundle(db, variant)?;
    warnings.extend(g2.warnings.iter().map(|w| format!("method-first: {w}")));
    let g0 = regenerate_bundle(db, base)?;
    let update_first = g1.bundle;
    let method_first = transport(&g2.bundle, next.stage);
    let baseline = transport(&g0.bundle, next.stage);

    let (u1, u2) = (options_used(&update_first), options_used(&method_first));
    Ok(NoncommutativityReport {
        distance: distance(&update_first, &method_first, spec)?,
        baseline_to_update_first: distance(&baseline, &update_first, spec)?,
        baseline_to_method_first: distance(&baseline, &method_first, spec)?,
        options: UsageDiff {
            only_after_update: u1.difference(&u2).cloned().collect(),
            only_after_method: u2.difference(&u1).cloned().collect(),
        },
        update_first,
        method_first,
        baseline,
        log,
        warnings,
    })
}
