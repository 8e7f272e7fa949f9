//! Pathway DAGs over significant impact records.
//!
//! Nodes are records with `|score| > epsilon`. An edge `a -> b` requires
//! temporal contact (`b` starts within `a`, extended by an optional slack),
//! adjacent or equal regions, a declared variable dependency, and `a`
//! strictly before `b` in the canonical node order. The last rule is what
//! rules out cycles between overlapping records that start on the same day.

mod export;
mod search;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{zonal_adjacency, ZONAL_REGIONS};
use crate::stats::ImpactRecord;

pub use export::{export_dot, export_json, GraphJson, NodeJson};
pub use search::{default_source, source_impact_graph, source_impact_path};

/// Stable node identifier: position of the record in the canonical order of
/// the full DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Full,
    Impact,
    SourceImpact,
}

impl GraphKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Full => "full",
            GraphKind::Impact => "impact",
            GraphKind::SourceImpact => "source_impact",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathwayConstraints {
    variable_deps: BTreeSet<(String, String)>,
    variable_rank: BTreeMap<String, usize>,
    region_rank: BTreeMap<String, usize>,
    region_adjacency: BTreeSet<(String, String)>,
    pub epsilon: f64,
    /// Days added to the end of the upstream interval in the temporal rule.
    pub temporal_slack_days: usize,
}

impl Default for PathwayConstraints {
    /// AEROD_v -> FSDSC -> TREFHT with self-loops over the zonal chain,
    /// `epsilon = 1`.
    fn default() -> Self {
        let deps = [
            ("AEROD_v", "AEROD_v"),
            ("AEROD_v", "FSDSC"),
            ("FSDSC", "FSDSC"),
            ("FSDSC", "TREFHT"),
            ("TREFHT", "TREFHT"),
        ];
        Self::new(
            deps.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            &["AEROD_v", "FSDSC", "TREFHT"].map(String::from),
            &ZONAL_REGIONS.map(String::from),
            zonal_adjacency(),
            1.0,
            0,
        )
        .expect("default constraints are valid")
    }
}

impl PathwayConstraints {
    /// `variables` and `regions` give the declaration order used to break
    /// ties; variable rank is the topological order of `variable_deps`.
    /// Adjacency is symmetrised and made reflexive.
    pub fn new(
        variable_deps: BTreeSet<(String, String)>,
        variables: &[String],
        regions: &[String],
        region_adjacency: BTreeSet<(String, String)>,
        epsilon: f64,
        temporal_slack_days: usize,
    ) -> Result<Self> {
        if epsilon.is_nan() || epsilon < 0.0 {
            return Err(Error::Config(format!("epsilon must be >= 0, got {epsilon}")));
        }
        let mut declared: Vec<String> = variables.to_vec();
        for (a, b) in &variable_deps {
            for v in [a, b] {
                if !declared.contains(v) {
                    declared.push(v.clone());
                }
            }
        }
        // Kahn's algorithm over the dependency graph without self-loops,
        // taking the earliest-declared ready variable first.
        let mut indegree: BTreeMap<&str, usize> = declared.iter().map(|v| (v.as_str(), 0)).collect();
        for (a, b) in &variable_deps {
            if a != b {
                *indegree.get_mut(b.as_str()).unwrap() += 1;
            }
        }
        let mut variable_rank = BTreeMap::new();
        while variable_rank.len() < declared.len() {
            let next = declared
                .iter()
                .find(|v| !variable_rank.contains_key(*v) && indegree[v.as_str()] == 0)
                .ok_or_else(|| Error::Config("variable dependencies contain a cycle".into()))?;
            variable_rank.insert(next.clone(), variable_rank.len());
            for (a, b) in &variable_deps {
                if a == next && a != b {
                    *indegree.get_mut(b.as_str()).unwrap() -= 1;
                }
            }
        }

        let mut region_rank = BTreeMap::new();
        for r in regions {
            let n = region_rank.len();
            region_rank.entry(r.clone()).or_insert(n);
        }
        let mut adjacency = BTreeSet::new();
        for (a, b) in region_adjacency {
            adjacency.insert((b.clone(), a.clone()));
            adjacency.insert((a.clone(), a.clone()));
            adjacency.insert((b.clone(), b.clone()));
            adjacency.insert((a, b));
        }
        for r in regions {
            adjacency.insert((r.clone(), r.clone()));
        }
        Ok(Self {
            variable_deps,
            variable_rank,
            region_rank,
            region_adjacency: adjacency,
            epsilon,
            temporal_slack_days,
        })
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn variable_rank(&self, variable: &str) -> usize {
        self.variable_rank.get(variable).copied().unwrap_or(usize::MAX)
    }

    pub fn region_rank(&self, region: &str) -> usize {
        self.region_rank.get(region).copied().unwrap_or(usize::MAX)
    }

    pub fn depends(&self, upstream: &str, downstream: &str) -> bool {
        self.variable_deps
            .contains(&(upstream.to_string(), downstream.to_string()))
    }

    pub fn adjacent(&self, a: &str, b: &str) -> bool {
        a == b || self.region_adjacency.contains(&(a.to_string(), b.to_string()))
    }

    pub fn is_node(&self, record: &ImpactRecord) -> bool {
        record.score.abs() > self.epsilon
    }

    /// Canonical total order: start date, variable rank, region rank, end
    /// date, then names.
    pub fn canonical_cmp(&self, a: &ImpactRecord, b: &ImpactRecord) -> Ordering {
        a.interval
            .start_date
            .cmp(&b.interval.start_date)
            .then_with(|| self.variable_rank(&a.variable).cmp(&self.variable_rank(&b.variable)))
            .then_with(|| self.region_rank(&a.region).cmp(&self.region_rank(&b.region)))
            .then_with(|| a.interval.end_date.cmp(&b.interval.end_date))
            .then_with(|| a.variable.cmp(&b.variable))
            .then_with(|| a.region.cmp(&b.region))
    }

    fn temporal(&self, a: &ImpactRecord, b: &ImpactRecord) -> bool {
        let slack = chrono::Duration::days(self.temporal_slack_days as i64);
        b.interval.start_date >= a.interval.start_date
            && b.interval.start_date <= a.interval.end_date + slack
    }

    /// All edge rules, including the canonical-order rule.
    pub fn permits_edge(&self, a: &ImpactRecord, b: &ImpactRecord) -> bool {
        self.temporal(a, b)
            && self.adjacent(&a.region, &b.region)
            && self.depends(&a.variable, &b.variable)
            && self.canonical_cmp(a, b) == Ordering::Less
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathwayGraph {
    pub kind: GraphKind,
    nodes: BTreeMap<NodeId, ImpactRecord>,
    edges: BTreeSet<(NodeId, NodeId)>,
}

impl PathwayGraph {
    pub fn empty(kind: GraphKind) -> Self {
        Self {
            kind,
            nodes: BTreeMap::new(),
            edges: BTreeSet::new(),
        }
    }

    pub fn nodes(&self) -> &BTreeMap<NodeId, ImpactRecord> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> Result<&ImpactRecord> {
        self.nodes.get(&id).ok_or(Error::UnknownNode(id.0))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn predecessors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        // edges are sorted by source; a reverse index is not worth keeping
        // for the graph sizes this handles
        self.edges.iter().filter(move |(_, b)| *b == id).map(|(a, _)| *a)
    }

    /// Kahn topological order, or `None` when the graph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<NodeId>> {
        let mut indegree: BTreeMap<NodeId, usize> = self.nodes.keys().map(|&k| (k, 0)).collect();
        let mut out_edges: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &(a, b) in &self.edges {
            *indegree.get_mut(&b)? += 1;
            out_edges.entry(a).or_default().push(b);
        }
        let mut ready: VecDeque<NodeId> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&k, _)| k)
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(n) = ready.pop_front() {
            order.push(n);
            for &m in out_edges.get(&n).into_iter().flatten() {
                let d = indegree.get_mut(&m)?;
                *d -= 1;
                if *d == 0 {
                    ready.push_back(m);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    /// Subgraph induced by `keep`.
    pub fn induced(&self, keep: &BTreeSet<NodeId>, kind: GraphKind) -> Self {
        Self {
            kind,
            nodes: self
                .nodes
                .iter()
                .filter(|(k, _)| keep.contains(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|(a, b)| keep.contains(a) && keep.contains(b))
                .copied()
                .collect(),
        }
    }

    /// First node (canonical order) matching the predicate.
    pub fn find(&self, mut pred: impl FnMut(&ImpactRecord) -> bool) -> Option<NodeId> {
        self.nodes.iter().find(|(_, r)| pred(r)).map(|(k, _)| *k)
    }

    pub(crate) fn from_parts(
        kind: GraphKind,
        nodes: BTreeMap<NodeId, ImpactRecord>,
        edges: BTreeSet<(NodeId, NodeId)>,
    ) -> Self {
        Self { kind, nodes, edges }
    }
}

/// Full pathway DAG over all records passing the significance threshold.
pub fn build_full_dag(impacts: &[ImpactRecord], constraints: &PathwayConstraints) -> PathwayGraph {
    let mut records: Vec<&ImpactRecord> = impacts.iter().filter(|r| constraints.is_node(r)).collect();
    records.sort_by(|a, b| constraints.canonical_cmp(a, b));

    let mut edges = BTreeSet::new();
    let slack = chrono::Duration::days(constraints.temporal_slack_days as i64);
    for (i, a) in records.iter().enumerate() {
        let latest = a.interval.end_date + slack;
        // records are sorted by start date, so candidates are a contiguous run
        for (j, b) in records.iter().enumerate().skip(i + 1) {
            if b.interval.start_date > latest {
                break;
            }
            if constraints.permits_edge(a, b) {
                edges.insert((NodeId(i), NodeId(j)));
            }
        }
    }
    let nodes = records
        .into_iter()
        .enumerate()
        .map(|(i, r)| (NodeId(i), r.clone()))
        .collect();
    let graph = PathwayGraph::from_parts(GraphKind::Full, nodes, edges);
    debug_assert!(graph.topological_order().is_some());
    graph
}

/// `final_node` together with all of its ancestors.
pub fn impact_dag(full: &PathwayGraph, final_node: NodeId) -> Result<PathwayGraph> {
    full.node(final_node)?;
    let mut preds: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &(a, b) in full.edges() {
        preds.entry(b).or_default().push(a);
    }
    let mut keep = BTreeSet::from([final_node]);
    let mut stack = vec![final_node];
    while let Some(n) = stack.pop() {
        for &p in preds.get(&n).into_iter().flatten() {
            if keep.insert(p) {
                stack.push(p);
            }
        }
    }
    Ok(full.induced(&keep, GraphKind::Impact))
}
