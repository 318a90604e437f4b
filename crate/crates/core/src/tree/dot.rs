//! Graphviz export.

use std::collections::BTreeSet;
use std::fmt::Write;

use super::model::{PositionKind, ScenarioTree};
use crate::id::Id;

/// Paths to highlight, each given as the positions it visits.
#[derive(Debug, Clone, Default)]
pub struct Highlights {
    pub rational: BTreeSet<Id>,
    pub likely: BTreeSet<Id>,
}

impl Highlights {
    /// Positions visited by following `labels` from the root.
    pub fn follow(tree: &ScenarioTree, labels: &[super::model::EdgeLabel]) -> BTreeSet<Id> {
        let index = tree.index();
        let mut at = tree.root.clone();
        let mut out = BTreeSet::from([at.clone()]);
        for l in labels {
            match index.children(at.as_str()).iter().find(|e| e.label == *l) {
                Some(e) => {
                    at = e.head.clone();
                    out.insert(at.clone());
                }
                None => break,
            }
        }
        out
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn to_dot(tree: &ScenarioTree, marks: &Highlights) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(&tree.id)).unwrap();
    writeln!(out, "  rankdir=TB;").unwrap();
    for p in &tree.positions {
        let shape = match p.kind {
            PositionKind::Decision => "box",
            PositionKind::Event => "ellipse",
            PositionKind::Terminal => "plaintext",
        };
        let label = match &p.label {
            Some(l) => format!("{}\\n{}", p.id, l),
            None => p.id.to_string(),
        };
        let mut attrs = format!("shape={shape}, label={}", quote(&label));
        if marks.rational.contains(&p.id) {
            attrs.push_str(", mrp=true, penwidth=2");
        }
        if marks.likely.contains(&p.id) {
            attrs.push_str(", mlp=true, style=filled, fillcolor=lightgrey");
        }
        writeln!(out, "  {} [{attrs}];", quote(p.id.as_str())).unwrap();
    }
    for e in &tree.edges {
        let text = match e.likelihood {
            Some(l) => format!("{} ({l})", e.label),
            None => e.label.to_string(),
        };
        let mut attrs = format!("label={}", quote(&text));
        if marks.rational.contains(&e.tail) && marks.rational.contains(&e.head) {
            attrs.push_str(", mrp=true, penwidth=2");
        }
        if marks.likely.contains(&e.tail) && marks.likely.contains(&e.head) {
            attrs.push_str(", mlp=true, color=blue");
        }
        writeln!(out, "  {} -> {} [{attrs}];", quote(e.tail.as_str()), quote(e.head.as_str())).unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::id::id;
    use crate::tree::model::{Edge, Position};

    #[test]
    fn marks_paths() {
        let t = ScenarioTree {
            id: "t".into(),
            stage: 0,
            root: id("r"),
            positions: vec![
                Position::new(id("r"), PositionKind::Decision, Some(id("a")), 0),
                Position::new(id("x"), PositionKind::Terminal, None, 1),
            ],
            edges: vec![Edge { tail: id("r"), head: id("x"), label: "o".parse().unwrap(), likelihood: Some(1.0) }],
        };
        let path = Highlights::follow(&t, &["o".parse().unwrap()]);
        let dot = to_dot(&t, &Highlights { rational: path.clone(), likely: path });
        assert!(dot.starts_with("digraph \"t\" {"));
        assert!(dot.contains("\"r\" -> \"x\" [label=\"o (1)\", mrp=true, penwidth=2, mlp=true, color=blue];"));
    }
}
