//! Robustness sweeps: regenerate or reselect a bundle across a parameter grid
//! and report where an output of interest stays fixed.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::distance::{descriptor_bundle_distance, descriptor_distance, DistanceSpec};
use super::encoding::{encode_tree, Descriptor, EncodingError};
use crate::domain::state::AssessmentState;
use crate::evaluation::pareto::pareto_frontier;
use crate::evaluation::utility::{evaluation_matrix, scenarios_of, EvalError, UtilitySpec};
use crate::tree::bundle::{generate_bundle, select_bundle, Bundle, BundleError, MethodParams};
use crate::tree::mlp::{mlp, MlpTieBreak};
use crate::tree::model::{EdgeLabel, ScenarioTree};
use crate::tree::mrp::{backward_induct, EventSelector, SolveError, TieBreak};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("the parameter grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Output whose invariance the sweep tracks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "output", rename_all = "snake_case", deny_unknown_fields)]
pub enum Functional {
    ParetoFrontierIds { utilities: UtilitySpec, rows: Vec<String> },
    MrpPath,
    MlpPath,
    BundleItself,
}

pub enum SweepSource<'a> {
    /// Bundles are generated afresh from the state for each grid point.
    State(&'a AssessmentState),
    /// A fixed tree set; only selection and weights vary.
    Trees(&'a [ScenarioTree]),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub name: String,
    pub selection: Vec<String>,
    pub output: Vec<String>,
    /// Pairwise distances inside the bundle under this point's weights.
    pub distances: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub points: Vec<SweepPoint>,
    /// Bundle distance between grid points under the base weights; `None` when a bundle is empty.
    pub bundle_distances: Vec<Vec<Option<f64>>>,
    /// Maximal runs `[start, end]` of consecutive grid points sharing the output.
    pub invariant_runs: Vec<(usize, usize)>,
    pub invariant: bool,
}

fn path_text(labels: &[EdgeLabel]) -> String {
    labels.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn output(bundle: &Bundle, psi: &Functional) -> Result<Vec<String>, SweepError> {
    let trees: Vec<&ScenarioTree> = bundle.selected().collect();
    Ok(match psi {
        Functional::ParetoFrontierIds { utilities, rows } => {
            let scenarios: Vec<_> = trees.iter().flat_map(|t| scenarios_of(t)).collect();
            let m = evaluation_matrix(&scenarios, utilities)?;
            pareto_frontier(&m, rows).frontier
        }
        Functional::MrpPath => trees
            .iter()
            .map(|t| Ok(format!("{}: {}", t.id, path_text(&backward_induct(t, &EventSelector::default(), TieBreak::Lexicographic)?.path))))
            .collect::<Result<_, SweepError>>()?,
        Functional::MlpPath => trees
            .iter()
            .map(|t| {
                let s = mlp(t, &MlpTieBreak::Lexicographic).map_err(SolveError::from)?;
                Ok(format!("{}: {}", t.id, path_text(&s.paths[0])))
            })
            .collect::<Result<_, SweepError>>()?,
        Functional::BundleItself => trees
            .iter()
            .map(|t| {
                let labels: Vec<String> = t.labels().into_iter().map(ToString::to_string).collect();
                format!("{}: {}", t.id, labels.join(" "))
            })
            .collect(),
    })
}

pub fn robustness_sweep(
    source: &SweepSource<'_>,
    grid: &[MethodParams],
    psi: &Functional,
    spec: &DistanceSpec,
) -> Result<SweepReport, SweepError> {
    if grid.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    spec.check()?;
    let mut points = Vec::new();
    let mut encoded: Vec<Vec<Descriptor>> = Vec::new();
    for lambda in grid {
        let (bundle, warnings) = match source {
            SweepSource::State(db) => {
                let g = generate_bundle(db, lambda)?;
                (g.bundle, g.warnings)
            }
            SweepSource::Trees(trees) => {
                let stage = trees.first().map_or(0, |t| t.stage);
                (select_bundle(stage, trees.to_vec(), &lambda.selection)?, Vec::new())
            }
        };
        let local = match &lambda.weights {
            Some(w) => spec.with_weights(w.clone())?,
            None => spec.clone(),
        };
        let ds: Vec<Descriptor> = bundle.selected().map(|t| encode_tree(t, &spec.encoding)).collect::<Result<_, _>>()?;
        let distances = ds
            .iter()
            .map(|a| ds.iter().map(|b| descriptor_distance(a, b, &local)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        points.push(SweepPoint {
            name: lambda.name.clone(),
            selection: bundle.selection.clone(),
            output: output(&bundle, psi)?,
            distances,
            warnings,
        });
        encoded.push(ds);
    }
    let mut bundle_distances = vec![vec![None; grid.len()]; grid.len()];
    for i in 0..grid.len() {
        for j in 0..grid.len() {
            if !encoded[i].is_empty() && !encoded[j].is_empty() {
                bundle_distances[i][j] = Some(descriptor_bundle_distance(&encoded[i], &encoded[j], spec)?);
            }
        }
    }
    let mut invariant_runs = Vec::new();
    let mut start = 0;
    for i in 1..=points.len() {
        if i == points.len() || points[i].output != points[start].output {
            invariant_runs.push((start, i - 1));
            start = i;
        }
    }
    let invariant = invariant_runs.len() == 1;
    Ok(SweepReport { points, bundle_distances, invariant_runs, invariant })
}

impl SweepReport {
    /// Plain-text report with one section per grid point.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.points.iter().enumerate() {
            let name = if p.name.is_empty() { format!("#{i}") } else { p.name.clone() };
            writeln!(out, "[lambda {name}]").unwrap();
            writeln!(out, "bundle: {}", p.selection.join(", ")).unwrap();
            for o in &p.output {
                writeln!(out, "output: {o}").unwrap();
            }
            for row in &p.distances {
                let cells: Vec<String> = row.iter().map(|d| format!("{d:.6}")).collect();
                writeln!(out, "distance: {}", cells.join(" ")).unwrap();
            }
            for w in &p.warnings {
                writeln!(out, "warning: {w}").unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "[bundle distances]").unwrap();
        for row in &self.bundle_distances {
            let cells: Vec<String> = row.iter().map(|d| d.map_or("-".into(), |d| format!("{d:.6}"))).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
        let runs: Vec<String> = self.invariant_runs.iter().map(|(a, b)| format!("{a}..={b}")).collect();
        writeln!(out, "invariant runs: {}", runs.join(", ")).unwrap();
        writeln!(out, "invariant: {}", self.invariant).unwrap();
        out
    }
}
