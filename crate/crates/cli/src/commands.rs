//! One function per subcommand: load inputs, run the engine, render the report.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde_json::json;

use scenario_core::domain::state::AssessmentState;
use scenario_core::domain::validate::{validate_assessment_state, AxiomConfig};
use scenario_core::dynamics::{
    apply_update, history_trace, noncommutativity_check, ChangeSet, RealizedOutcome, RevisionPolicy,
};
use scenario_core::evaluation::{
    dominance_graph, evaluation_matrix, pareto_frontier, EvaluationInput, EvaluationMatrix, SYSTEM_ROW,
};
use scenario_core::ingest::{build_changeset, gate_batch, parse_records, BatchManifest, GateFailure, GateReport, Gate, TypedRecord, Verdict};
use scenario_core::space::{
    component_distances, encode_tree, epsilon_neighborhood, robustness_sweep, DistanceSpec, Functional, SweepSource,
};
use scenario_core::tree::bundle::{generate_bundle, Bundle, MethodParams};
use scenario_core::tree::dot::{to_dot, Highlights};
use scenario_core::tree::mlp::{leaf_likelihoods, mlp as solve_mlp, MlpTieBreak};
use scenario_core::tree::model::{EdgeLabel, ScenarioTree};
use scenario_core::tree::mrp::{backward_induct, mrp_under_uncertainty, DecisionRule, EventSelector, TieBreak};

use crate::io::{domain, emit, json, load, load_tree, load_trees, num, read, unsupported, CliError};
use crate::{Format, Output, Policy, Status};

fn path_text(labels: &[EdgeLabel]) -> String {
    labels.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

fn highlights(tree: &ScenarioTree) -> Highlights {
    let rational = backward_induct(tree, &EventSelector::default(), TieBreak::Lexicographic)
        .map(|s| Highlights::follow(tree, &s.path))
        .unwrap_or_default();
    let likely = solve_mlp(tree, &MlpTieBreak::Lexicographic)
        .map(|s| Highlights::follow(tree, &s.paths[0]))
        .unwrap_or_default();
    Highlights { rational, likely }
}

pub fn validate(state: &Path, axioms: Option<&Path>, output: &Output) -> Result<Status, CliError> {
    let db: AssessmentState = load(state)?;
    let config: AxiomConfig = axioms.map(load).transpose()?.unwrap_or_default();
    let report = validate_assessment_state(&db, &config);
    let body = match output.format {
        Format::Text => report.summary(),
        Format::Json => json(&report),
        _ => return Err(unsupported(output, "validate")),
    };
    emit(output, &body)?;
    Ok(if report.errors() > 0 { Status::Invalid } else { Status::Ok })
}

pub fn gen(state: &Path, method: Option<&Path>, output: &Output) -> Result<Status, CliError> {
    let db: AssessmentState = load(state)?;
    let params: MethodParams = method.map(load).transpose()?.unwrap_or_default();
    let g = generate_bundle(&db, &params).map_err(domain)?;
    let body = match output.format {
        Format::Json => json(&g),
        Format::Dot => g.bundle.selected().map(|t| to_dot(t, &highlights(t))).collect::<Vec<_>>().join("\n"),
        Format::Text => {
            let mut out = format!("bundle stage {}: {} tree(s)\n", g.bundle.stage, g.bundle.selection.len());
            for t in g.bundle.selected() {
                writeln!(out, "tree {} ({} positions)", t.id, t.positions.len()).unwrap();
                for e in &t.edges {
                    let l = e.likelihood.map(num).unwrap_or_else(|| "-".into());
                    writeln!(out, "  {} -> {} [{}] {l}", e.tail, e.head, e.label).unwrap();
                }
            }
            for w in &g.warnings {
                writeln!(out, "warning: {w}").unwrap();
            }
            out
        }
        Format::Csv => return Err(unsupported(output, "gen")),
    };
    emit(output, &body)?;
    Ok(Status::Ok)
}

pub fn mrp(tree: &Path, rule: Option<&Path>, output: &Output) -> Result<Status, CliError> {
    let t = load_tree(tree)?;
    let s = match rule {
        Some(p) => {
            let r: DecisionRule = load(p)?;
            mrp_under_uncertainty(&t, &r, &EventSelector::default(), TieBreak::Lexicographic)
        }
        None => backward_induct(&t, &EventSelector::default(), TieBreak::Lexicographic),
    }
    .map_err(domain)?;
    let body = match output.format {
        Format::Json => json(&s),
        Format::Dot => to_dot(&t, &Highlights { rational: Highlights::follow(&t, &s.path), likely: Default::default() }),
        Format::Text => {
            let mut out = format!("tree {}\npath: {}\nleaf: {}\n", t.id, path_text(&s.path), s.leaf);
            if let Some(leaf) = t.position(s.leaf.as_str()) {
                for (e, r) in &leaf.ranks {
                    writeln!(out, "rank {e}: {r}").unwrap();
                }
            }
            for (p, l) in &s.policy.decisions {
                writeln!(out, "choice at {p}: {l}").unwrap();
            }
            out
        }
        Format::Csv => return Err(unsupported(output, "mrp")),
    };
    emit(output, &body)?;
    Ok(Status::Ok)
}

pub fn mlp(tree: &Path, all: bool, output: &Output) -> Result<Status, CliError> {
    let t = load_tree(tree)?;
    let tie = if all { MlpTieBreak::SetValued } else { MlpTieBreak::Lexicographic };
    let s = solve_mlp(&t, &tie).map_err(domain)?;
    let leaves = leaf_likelihoods(&t).map_err(domain)?;
    let body = match output.format {
        Format::Json => json(&json!({"solution": s, "leaf_likelihoods": leaves})),
        Format::Dot => to_dot(&t, &Highlights { rational: Default::default(), likely: Highlights::follow(&t, &s.paths[0]) }),
        Format::Text => {
            let mut out = format!("tree {}\n", t.id);
            for p in &s.paths {
                writeln!(out, "path: {}", path_text(p)).unwrap();
            }
            writeln!(out, "likelihood: {}", num(s.likelihood)).unwrap();
            for (leaf, l) in &leaves {
                writeln!(out, "leaf {leaf}: {}", num(*l)).unwrap();
            }
            out
        }
        Format::Csv => {
            let mut out = String::from("leaf,likelihood\n");
            for (leaf, l) in &leaves {
                writeln!(out, "{leaf},{}", num(*l)).unwrap();
            }
            out
        }
    };
    emit(output, &body)?;
    Ok(Status::Ok)
}

pub fn distance(trees: &Path, spec: &Path, neighborhood: Option<(f64, String)>, output: &Output) -> Result<Status, CliError> {
    let ts = load_trees(trees)?;
    let spec: DistanceSpec = load(spec)?;
    spec.check().map_err(domain)?;
    let ds = ts.iter().map(|t| encode_tree(t, &spec.encoding)).collect::<Result<Vec<_>, _>>().map_err(domain)?;
    let mut matrix = Vec::new();
    let mut parts = BTreeMap::new();
    for a in &ds {
        let mut row = Vec::new();
        for b in &ds {
            let c = component_distances(a, b, &spec).map_err(domain)?;
            row.push(c.iter().zip(&spec.weights).map(|(d, w)| d * w).sum::<f64>());
            if a.tree < b.tree {
                parts.insert(format!("{}|{}", a.tree, b.tree), c);
            }
        }
        matrix.push(row);
    }
    let near = match &neighborhood {
        Some((eps, center)) => {
            let c = ts.iter().find(|t| t.id == *center).ok_or_else(|| CliError::Usage(format!("no tree {center}")))?;
            Some(epsilon_neighborhood(c, *eps, &ts, &spec).map_err(domain)?)
        }
        None => None,
    };
    let ids: Vec<&str> = ts.iter().map(|t| t.id.as_str()).collect();
    let body = match output.format {
        Format::Json => json(&json!({"trees": ids, "matrix": matrix, "components": parts, "neighborhood": near})),
        Format::Csv => {
            let mut out = format!("tree,{}\n", ids.join(","));
            for (id, row) in ids.iter().zip(&matrix) {
                writeln!(out, "{id},{}", row.iter().map(|d| num(*d)).collect::<Vec<_>>().join(",")).unwrap();
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            for (pair, c) in &parts {
                let (a, b) = pair.split_once('|').expect("pair key");
                let names: Vec<&str> = spec.encoding.components.iter().map(|c| c.name.as_str()).collect();
                let cs: Vec<String> = names.iter().zip(c).map(|(n, d)| format!("{n}={}", num(*d))).collect();
                let total: f64 = c.iter().zip(&spec.weights).map(|(d, w)| d * w).sum();
                writeln!(out, "{a} {b}: {} [{}]", num(total), cs.join(" ")).unwrap();
            }
            if let (Some((eps, center)), Some(n)) = (&neighborhood, &near) {
                writeln!(out, "within {} of {center}: {}", num(*eps), n.join(", ")).unwrap();
            }
            out
        }
        Format::Dot => return Err(unsupported(output, "distance")),
    };
    emit(output, &body)?;
    Ok(Status::Ok)
}

fn matrix_text(m: &EvaluationMatrix) -> String {
    let mut out = format!("row {}\n", m.columns.join(" "));
    for (r, cells) in m.rows.iter().zip(&m.entries) {
        let cs: Vec<String> = cells.iter().map(ToString::to_string).collect();
        writeln!(out, "{r} {}", cs.join(" ")).unwrap();
    }
    out
}

pub fn evaluate(input: &Path, output: &Output) -> Result<Status, CliError> {
    let spec: EvaluationInput = load(input)?;
    let m = evaluation_matrix(&spec.all_scenarios(), &spec.utilities).map_err(domain)?;
    let rows = spec.frontier_rows();
    let pareto = pareto_frontier(&m, &rows);
    let graph = spec.dominance.as_ref().map(|c| dominance_graph(&m, c));
    let best_system = m.row(SYSTEM_ROW).and_then(|cells| {
        cells
            .iter()
            .zip(&m.columns)
            .filter_map(|(c, s)| c.value().map(|v| (v, s)))
            .max_by(|a, b| a.0.total_cmp(&b.0).then_with(|| b.1.cmp(a.1)))
    });
    let body = match output.format {
        Format::Csv => m.to_csv(),
        Format::Dot => match &graph {
            Some(g) => g.to_dot(),
            None => return Err(CliError::Usage("dot output needs a dominance criterion in the input".into())),
        },
        Format::Json => json(&json!({
            "matrix": m,
            "sidecar": m.sidecar(),
            "pareto": pareto,
            "dominance": graph,
            "system_best": best_system.map(|(v, s)| json!({"scenario": s, "value": v})),
        })),
        Format::Text => {
            let mut out = matrix_text(&m);
            writeln!(out, "pareto frontier over {}: {}", rows.join(","), pareto.frontier.join(", ")).unwrap();
            for (s, by) in &pareto.dominated {
                writeln!(out, "dominated: {s} by {}", by.join(", ")).unwrap();
            }
            if !pareto.excluded.is_empty() {
                writeln!(out, "excluded (unknown entries): {}", pareto.excluded.join(", ")).unwrap();
            }
            if let Some(g) = &graph {
                writeln!(out, "dominance {}:", g.criterion).unwrap();
                for (a, b) in &g.edges {
                    writeln!(out, "  {a} -> {b}").unwrap();
                }
                for c in &g.cycles {
                    writeln!(out, "  cycle: {}", c.join(", ")).unwrap();
                }
            }
            if let Some((v, s)) = best_system {
                writeln!(out, "system best: {s} ({})", num(v)).unwrap();
            }
            out
        }
    };
    emit(output, &body)?;
    Ok(Status::Ok)
}

fn policy(p: Policy) -> RevisionPolicy {
    match p {
        Policy::Recency => RevisionPolicy::RecencyPriority,
        Policy::SourceQuality => RevisionPolicy::SourceQualityPriority,
        Policy::RecordConflict => RevisionPolicy::RecordConflict,
    }
}

fn load_records(path: &Path) -> Result<(Vec<TypedRecord>, Vec<(usize, String)>), CliError> {
    let text = read(path)?;
    let mut ok = Vec::new();
    let mut bad = Vec::new();
    for (line, r) in parse_records(&text) {
        match r {
            Ok(r) => ok.push(r),
            Err(e) => bad.push((line, e.to_string())),
        }
    }
    Ok((ok, bad))
}

pub struct UpdateArgs<'a> {
    pub state: &'a Path,
    pub records: Option<&'a Path>,
    pub policy: Policy,
    pub trigger: Option<&'a str>,
    pub manifest: Option<&'a Path>,
    pub out_state: Option<&'a Path>,
    pub compare: Option<(PathBuf, PathBuf, PathBuf)>,
    pub output: &'a Output,
}

pub fn update(args: UpdateArgs<'_>) -> Result<Status, CliError> {
    let db: AssessmentState = load(args.state)?;
    let (records, bad) = match args.records {
        Some(p) => load_records(p)?,
        None => (Vec::new(), Vec::new()),
    };
    if let Some((line, e)) = bad.first() {
        return Err(CliError::Parse { path: args.records.expect("records given").to_path_buf(), message: format!("line {line}: {e}") });
    }
    let trigger = args
        .trigger
        .map(|t| {
            let (event, realization) =
                t.split_once('=').ok_or_else(|| CliError::Usage(format!("trigger {t:?} is not event=realization")))?;
            let event = scenario_core::Id::new(event).map_err(|e| CliError::Usage(format!("trigger event: {e}")))?;
            Ok::<_, CliError>(RealizedOutcome { event, realization: realization.to_string() })
        })
        .transpose()?;
    let mut changes = ChangeSet::new(records, policy(args.policy));
    changes.trigger = trigger;
    if let Some(m) = args.manifest {
        let manifest: BatchManifest = load(m)?;
        changes.source_quality = manifest.qualities().map_err(domain)?;
    }
    let (next, log) = apply_update(&db, &changes).map_err(domain)?;
    if let Some(p) = args.out_state {
        std::fs::write(p, json(&next)).map_err(|source| CliError::Io { path: p.to_path_buf(), source })?;
    }
    let report = match &args.compare {
        Some((base, variant, spec)) => {
            let (base, variant): (MethodParams, MethodParams) = (load(base)?, load(variant)?);
            let spec: DistanceSpec = load(spec)?;
            Some(noncommutativity_check(&db, &changes, &base, &variant, &spec).map_err(domain)?)
        }
        None => None,
    };
    let body = match args.output.format {
        Format::Json => json(&json!({"log": log, "digest": next.digest(), "noncommutativity": report})),
        Format::Text => {
            let mut out = log.to_text();
            writeln!(out, "digest {}", next.digest()).unwrap();
            if let Some(r) = &report {
                out.push_str(&r.to_text());
            }
            out
        }
        _ => return Err(unsupported(args.output, "update")),
    };
    emit(args.output, &body)?;
    Ok(Status::Ok)
}

pub fn sweep(
    state: Option<&Path>,
    trees: Option<&Path>,
    grid: &Path,
    functional: &Path,
    spec: &Path,
    output: &Output,
) -> Result<Status, CliError> {
    let grid: Vec<MethodParams> = load(grid)?;
    let psi: Functional = load(functional)?;
    let spec: DistanceSpec = load(spec)?;
    let report = match (state, trees) {
        (Some(s), _) => {
            let db: AssessmentState = load(s)?;
            robustness_sweep(&SweepSource::State(&db), &grid, &psi, &spec)
        }
        (None, Some(t)) => {
            let ts = load_trees(t)?;
            robustness_sweep(&SweepSource::Trees(&ts), &grid, &psi, &spec)
        }
        (None, None) => return Err(CliError::Usage("sweep needs --state or --trees".into())),
    }
    .map_err(domain)?;
    let body = match output.format {
        Format::Json => json(&report),
        Format::Text => report.to_text(),
        _ => return Err(unsupported(output, "sweep")),
    };
    emit(output, &body)?;
    Ok(Status::Ok)
}

pub fn trace(states: &[PathBuf], bundles: &[PathBuf], output: &Output) -> Result<Status, CliError> {
    let states: Vec<AssessmentState> = states.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
    let bundles: Vec<Bundle> = bundles.iter().map(|p| load(p)).collect::<Result<_, _>>()?;
    let t = history_trace(&states, &bundles);
    let body = match output.format {
        Format::Json => json(&t),
        Format::Text => {
            let mut out = String::new();
            for l in &t.links {
                let mark = if l.chained { "ok" } else { "BROKEN" };
                writeln!(out, "stage {} {} {mark}", l.stage, l.digest).unwrap();
            }
            for r in &t.retrodictions {
                let by = if r.anticipated_by.is_empty() { "unanticipated".to_string() } else { r.anticipated_by.join(", ") };
                writeln!(out, "realized at stage {}: {} ({by})", r.from_stage, r.transition).unwrap();
            }
            writeln!(out, "lineage intact: {}", t.intact).unwrap();
            out
        }
        _ => return Err(unsupported(output, "trace")),
    };
    emit(output, &body)?;
    Ok(if t.intact { Status::Ok } else { Status::Invalid })
}

pub fn ingest(
    records: &Path,
    state: &Path,
    manifest: Option<&Path>,
    p: Policy,
    changeset_out: Option<&Path>,
    output: &Output,
) -> Result<Status, CliError> {
    let db: AssessmentState = load(state)?;
    let manifest: BatchManifest = manifest.map(load).transpose()?.unwrap_or_default();
    let (parsed, bad) = load_records(records)?;
    let mut reports = gate_batch(&parsed, &db, &manifest).map_err(domain)?;
    let unparsed: Vec<GateReport> = bad
        .into_iter()
        .map(|(line, reason)| GateReport {
            record: format!("line {line}"),
            verdict: Verdict::Rejected,
            failures: vec![GateFailure { gate: Gate::Schema, reason }],
            notes: Vec::new(),
        })
        .collect();
    let all_accepted = unparsed.is_empty() && reports.iter().all(|g| g.verdict == Verdict::Accepted);
    let audit = scenario_core::ingest::audit_queue(&parsed, &reports, &db);
    let changeset = if all_accepted && !parsed.is_empty() {
        let gated: Vec<_> = parsed.iter().cloned().zip(reports.iter().cloned()).collect();
        let mut cs = build_changeset(&gated, None, policy(p), &db).map_err(domain)?;
        cs.source_quality = manifest.qualities().map_err(domain)?;
        if let Some(path) = changeset_out {
            std::fs::write(path, json(&cs)).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        }
        Some(cs)
    } else {
        None
    };
    reports.extend(unparsed);
    let body = match output.format {
        Format::Json => json(&json!({"reports": reports, "audit": audit, "run": manifest.run, "changeset": changeset.as_ref().map(|c| c.records.len())})),
        Format::Text => {
            let mut out = String::new();
            for g in &reports {
                writeln!(out, "{} {}", g.record, g.verdict).unwrap();
                for f in &g.failures {
                    writeln!(out, "  {:?}: {}", f.gate, f.reason).unwrap();
                }
                for n in &g.notes {
                    writeln!(out, "  note: {n}").unwrap();
                }
            }
            writeln!(out, "audit queue:").unwrap();
            for a in &audit {
                writeln!(
                    out,
                    "  {} constraint={} centrality={} feasibility={} disagreement={}",
                    a.record, a.constraint_violation, a.centrality, a.affects_feasibility, a.cross_run_disagreement
                )
                .unwrap();
            }
            match &changeset {
                Some(cs) => writeln!(out, "changeset: {} record(s)", cs.records.len()).unwrap(),
                None => writeln!(out, "changeset: not built").unwrap(),
            }
            out
        }
        _ => return Err(unsupported(output, "ingest")),
    };
    emit(output, &body)?;
    Ok(if all_accepted { Status::Ok } else { Status::Invalid })
}
