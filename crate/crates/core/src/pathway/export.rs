//! Deterministic DOT and JSON renderings of a pathway graph.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{GraphKind, NodeId, PathwayGraph};
use crate::stats::ImpactRecord;

fn label(r: &ImpactRecord) -> String {
    format!(
        "{}|{}|{}..{}|{:.3}",
        r.variable, r.region, r.interval.start_date, r.interval.end_date, r.score
    )
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Graphviz source. Each entry of `comments` becomes a leading `//` line.
pub fn export_dot(graph: &PathwayGraph, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            let _ = writeln!(out, "// {line}");
        }
    }
    if graph.node_count() == 0 {
        out.push_str("digraph pathway {}\n");
        return out;
    }
    out.push_str("digraph pathway {\n");
    let _ = writeln!(out, "  // kind: {}", graph.kind.as_str());
    for (id, r) in graph.nodes() {
        let _ = writeln!(out, "  {id} [label=\"{}\"];", escape(&label(r)));
    }
    for (a, b) in graph.edges() {
        let _ = writeln!(out, "  {a} -> {b};");
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeJson {
    pub id: NodeId,
    pub variable: String,
    pub region: String,
    pub start_date: chrono::NaiveDate,
    pub end_date: chrono::NaiveDate,
    pub mean_diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Stored as a string so that infinite scores survive the round trip.
    pub score: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub config_hash: Option<String>,
    pub kind: GraphKind,
    pub nodes: Vec<NodeJson>,
    pub edges: Vec<(NodeId, NodeId)>,
}

impl GraphJson {
    pub fn from_graph(graph: &PathwayGraph, config_hash: Option<&str>) -> Self {
        Self {
            config_hash: config_hash.map(str::to_owned),
            kind: graph.kind,
            nodes: graph
                .nodes()
                .iter()
                .map(|(&id, r)| NodeJson {
                    id,
                    variable: r.variable.clone(),
                    region: r.region.clone(),
                    start_date: r.interval.start_date,
                    end_date: r.interval.end_date,
                    mean_diff: r.mean_diff,
                    ci_low: r.ci_low,
                    ci_high: r.ci_high,
                    score: r.score.to_string(),
                })
                .collect(),
            edges: graph.edges().iter().copied().collect(),
        }
    }
}

/// Pretty-printed JSON with nodes and edges in canonical order.
pub fn export_json(graph: &PathwayGraph, config_hash: Option<&str>) -> String {
    let mut s = serde_json::to_string_pretty(&GraphJson::from_graph(graph, config_hash))
        .expect("graph json is always serialisable");
    s.push('\n');
    s
}
