//! Pareto frontiers and dominance graphs over evaluation matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::utility::EvaluationMatrix;

/// `a` is at least as good everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y) && a.iter().zip(b).any(|(x, y)| x > y)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParetoResult {
    /// Non-dominated scenarios, in column order.
    pub frontier: Vec<String>,
    /// Dominated scenario → the scenarios dominating it.
    pub dominated: BTreeMap<String, Vec<String>>,
    /// Scenarios left out because a compared entry is unknown.
    pub excluded: Vec<String>,
}

/// Utility vectors over `rows` per scenario; `None` when some entry is unknown.
fn profiles(matrix: &EvaluationMatrix, rows: &[String]) -> Vec<(String, Option<Vec<f64>>)> {
    matrix
        .columns
        .iter()
        .enumerate()
        .map(|(j, col)| {
            let v: Option<Vec<f64>> = rows
                .iter()
                .map(|r| matrix.row(r).and_then(|cells| cells[j].value()))
                .collect();
            (col.clone(), v)
        })
        .collect()
}

pub fn pareto_frontier(matrix: &EvaluationMatrix, rows: &[String]) -> ParetoResult {
    let all = profiles(matrix, rows);
    let excluded = all.iter().filter(|(_, v)| v.is_none()).map(|(s, _)| s.clone()).collect();
    let known: Vec<(&String, &Vec<f64>)> = all.iter().filter_map(|(s, v)| v.as_ref().map(|v| (s, v))).collect();
    let mut frontier = Vec::new();
    let mut dominated = BTreeMap::new();
    for (s, u) in &known {
        let by: Vec<String> = known.iter().filter(|(_, w)| dominates(w, u)).map(|(t, _)| (*t).clone()).collect();
        if by.is_empty() {
            frontier.push((*s).clone());
        } else {
            dominated.insert((*s).clone(), by);
        }
    }
    ParetoResult { frontier, dominated, excluded }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "criterion", rename_all = "snake_case", deny_unknown_fields)]
pub enum DominanceCriterion {
    /// Pareto dominance over the named matrix rows.
    Pareto { rows: Vec<String> },
    SingleActor { entity: String },
    /// Strict preference on a coalition's aggregate row.
    Coalition { coalition: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceGraph {
    pub criterion: String,
    pub nodes: Vec<String>,
    /// `(s, s')` means s ≻ s'.
    pub edges: Vec<(String, String)>,
    /// Strongly connected groups of two or more scenarios.
    pub cycles: Vec<Vec<String>>,
    pub excluded: Vec<String>,
}

impl DominanceGraph {
    pub fn is_acyclic(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Scenarios without incoming edges.
    pub fn undominated(&self) -> Vec<String> {
        let heads: BTreeSet<&String> = self.edges.iter().map(|(_, b)| b).collect();
        self.nodes.iter().filter(|n| !heads.contains(n)).cloned().collect()
    }

    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph dominance {\n");
        for n in &self.nodes {
            writeln!(out, "  \"{n}\";").unwrap();
        }
        for (a, b) in &self.edges {
            writeln!(out, "  \"{a}\" -> \"{b}\";").unwrap();
        }
        out.push_str("}\n");
        out
    }
}

pub fn dominance_graph(matrix: &EvaluationMatrix, criterion: &DominanceCriterion) -> DominanceGraph {
    let (name, rows) = match criterion {
        DominanceCriterion::Pareto { rows } => (format!("pareto({})", rows.join(",")), rows.clone()),
        DominanceCriterion::SingleActor { entity } => (format!("single_actor({entity})"), vec![entity.clone()]),
        DominanceCriterion::Coalition { coalition } => (format!("coalition({coalition})"), vec![coalition.clone()]),
    };
    let all = profiles(matrix, &rows);
    let excluded = all.iter().filter(|(_, v)| v.is_none()).map(|(s, _)| s.clone()).collect();
    let known: Vec<(&String, &Vec<f64>)> = all.iter().filter_map(|(s, v)| v.as_ref().map(|v| (s, v))).collect();
    let mut pairs = Vec::new();
    for (s, u) in &known {
        for (t, w) in &known {
            if dominates(u, w) {
                pairs.push(((*s).clone(), (*t).clone()));
            }
        }
    }
    from_judgments(name, matrix.columns.clone(), pairs, excluded)
}

/// Graph from externally supplied pairwise judgments, with cycle diagnostics.
pub fn from_judgments(
    criterion: String,
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
    excluded: Vec<String>,
) -> DominanceGraph {
    let mut g = DiGraph::<&str, ()>::new();
    let index: BTreeMap<&str, _> = nodes.iter().map(|n| (n.as_str(), g.add_node(n.as_str()))).collect();
    for (a, b) in &edges {
        if let (Some(&x), Some(&y)) = (index.get(a.as_str()), index.get(b.as_str())) {
            g.add_edge(x, y, ());
        }
    }
    let mut cycles: Vec<Vec<String>> = tarjan_scc(&g)
        .into_iter()
        .filter(|c| c.len() > 1 || c.iter().any(|&n| g.contains_edge(n, n)))
        .map(|c| {
            let mut names: Vec<String> = c.into_iter().map(|n| g[n].to_string()).collect();
            names.sort();
            names
        })
        .collect();
    cycles.sort();
    DominanceGraph { criterion, nodes, edges, cycles, excluded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::utility::Cell;

    fn matrix(rows: &[&str], cols: &[&str], data: &[&[f64]]) -> EvaluationMatrix {
        EvaluationMatrix {
            rows: rows.iter().map(|s| s.to_string()).collect(),
            columns: cols.iter().map(|s| s.to_string()).collect(),
            entries: data.iter().map(|r| r.iter().map(|v| Cell::Value(*v)).collect()).collect(),
            provenance: BTreeMap::new(),
            sources: BTreeMap::new(),
        }
    }

    #[test]
    fn micro_fixture() {
        let m = matrix(&["a", "b"], &["s1", "s2"], &[&[4.0, 2.0], &[3.0, 1.0]]);
        let rows = vec!["a".to_string(), "b".to_string()];
        assert_eq!(pareto_frontier(&m, &rows).frontier, ["s1"]);
        let g = dominance_graph(&m, &DominanceCriterion::Pareto { rows });
        assert_eq!(g.edges, [("s1".to_string(), "s2".to_string())]);
        assert!(g.is_acyclic());
        assert_eq!(g.undominated(), ["s1"]);
    }

    #[test]
    fn unknowns_are_excluded() {
        let mut m = matrix(&["a"], &["s1", "s2"], &[&[1.0, 2.0]]);
        m.entries[0][1] = Cell::unknown("missing");
        let r = pareto_frontier(&m, &["a".to_string()]);
        assert_eq!(r.frontier, ["s1"]);
        assert_eq!(r.excluded, ["s2"]);
    }

    #[test]
    fn cyclic_judgments_reported() {
        let nodes: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let e = |a: &str, b: &str| (a.to_string(), b.to_string());
        let g = from_judgments("judged".into(), nodes, vec![e("x", "y"), e("y", "z"), e("z", "x")], vec![]);
        assert_eq!(g.cycles, vec![vec!["x".to_string(), "y".into(), "z".into()]]);
        assert!(g.to_dot().contains("\"z\" -> \"x\";"));
    }
}
