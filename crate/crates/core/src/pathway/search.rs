//! Greedy best-first search from the final impact back to the source.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use super::{GraphKind, NodeId, PathwayGraph};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Frontier {
    priority: f64,
    id: NodeId,
}

impl PartialEq for Frontier {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Frontier {}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frontier {
    // highest |score| first, then the canonically earlier node
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Expands the highest-|score| frontier node over reversed edges, starting at
/// `final_node`, until `source` is expanded. Expanded nodes are never
/// revisited, so a dead end falls back to the next-best frontier node.
///
/// Returns the node sequence from `source` to `final_node`.
pub fn source_impact_path(graph: &PathwayGraph, source: NodeId, final_node: NodeId) -> Result<Vec<NodeId>> {
    graph.node(source)?;
    graph.node(final_node)?;

    let mut preds: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(a, b) in graph.edges() {
        preds.entry(b).or_default().push(a);
    }
    let priority = |id: NodeId| graph.nodes()[&id].score.abs();

    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut discovered = BTreeSet::from([final_node]);
    let mut expanded = BTreeSet::new();
    let mut frontier = BinaryHeap::from([Frontier {
        priority: priority(final_node),
        id: final_node,
    }]);

    while let Some(Frontier { id, .. }) = frontier.pop() {
        if !expanded.insert(id) {
            continue;
        }
        if id == source {
            let mut path = vec![source];
            let mut cur = source;
            while let Some(&next) = parent.get(&cur) {
                path.push(next);
                cur = next;
            }
            return Ok(path);
        }
        for &p in preds.get(&id).into_iter().flatten() {
            if discovered.insert(p) {
                parent.insert(p, id);
                frontier.push(Frontier {
                    priority: priority(p),
                    id: p,
                });
            }
        }
    }
    Err(Error::PathNotFound {
        from: source.0,
        to: final_node.0,
    })
}

/// Earliest node (canonical order) of `variable` in `region`.
pub fn default_source(graph: &PathwayGraph, variable: &str, region: &str) -> Option<NodeId> {
    graph.find(|r| r.variable == variable && r.region == region)
}

/// The path as a graph: its nodes plus the edges between consecutive nodes.
pub fn source_impact_graph(graph: &PathwayGraph, path: &[NodeId]) -> PathwayGraph {
    let keep: BTreeSet<NodeId> = path.iter().copied().collect();
    let mut sub = graph.induced(&keep, GraphKind::SourceImpact);
    let on_path: BTreeSet<(NodeId, NodeId)> = path.windows(2).map(|w| (w[0], w[1])).collect();
    let edges = sub.edges().intersection(&on_path).copied().collect();
    sub = PathwayGraph::from_parts(GraphKind::SourceImpact, sub.nodes().clone(), edges);
    sub
}
