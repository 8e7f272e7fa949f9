mod oracle;

use std::collections::BTreeSet;

use chrono::NaiveDate;
use entropath_core::pathway::{default_source, source_impact_graph};
use entropath_core::{
    build_full_dag, impact_dag, source_impact_path, Error, FeatureInterval, ImpactRecord, NodeId,
    PathwayConstraints, PathwayGraph,
};
use oracle::dag::{key, Key, REGIONS, VARIABLES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn base() -> NaiveDate {
    NaiveDate::from_ymd_opt(1991, 6, 1).unwrap()
}

fn record(variable: &str, region: &str, start: usize, end: usize, score: f64) -> ImpactRecord {
    ImpactRecord {
        variable: variable.into(),
        region: region.into(),
        interval: FeatureInterval::from_indices(start, end, base()),
        mean_diff: score / 10.0,
        se: 0.1,
        ci_low: score / 10.0 - 0.3,
        ci_high: score / 10.0 + 0.3,
        score,
        ci_level: 0.99,
        ensemble_size: 9,
    }
}

fn random_records(rng: &mut ChaCha8Rng) -> Vec<ImpactRecord> {
    let count = rng.gen_range(0..40);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..count {
        let v = VARIABLES[rng.gen_range(0..3)];
        let r = REGIONS[rng.gen_range(2..6)];
        let start = rng.gen_range(1..200);
        let end = start + rng.gen_range(0..60);
        let score = rng.gen_range(-8.0..8.0);
        if seen.insert((v, r, start, end)) {
            out.push(record(v, r, start, end, score));
        }
    }
    out
}

fn keys(g: &PathwayGraph) -> BTreeSet<Key> {
    g.nodes().values().map(key).collect()
}

fn edge_keys(g: &PathwayGraph) -> BTreeSet<(Key, Key)> {
    g.edges()
        .iter()
        .map(|(a, b)| (key(&g.nodes()[a]), key(&g.nodes()[b])))
        .collect()
}

#[test]
fn randomized_graph_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for trial in 0..500 {
        let records = random_records(&mut rng);
        let slack = [0usize, 0, 3][trial % 3];
        let mut c = PathwayConstraints::default();
        c.temporal_slack_days = slack;
        let full = build_full_dag(&records, &c);

        // acyclic, and the canonical numbering is itself a topological order
        assert!(full.topological_order().is_some());
        assert!(full.edges().iter().all(|(a, b)| a < b));

        // edges are exactly the pairs the rules allow
        let (want_nodes, want_edges) = oracle::dag::full_graph(&records, c.epsilon, slack as i64);
        assert_eq!(keys(&full), want_nodes.into_iter().collect());
        assert_eq!(edge_keys(&full), want_edges.into_iter().collect(), "trial {trial}");

        // epsilon monotonicity
        let tighter = build_full_dag(&records, &c.clone().with_epsilon(3.0));
        assert!(keys(&tighter).is_subset(&keys(&full)));
        assert!(edge_keys(&tighter).is_subset(&edge_keys(&full)));

        // subgraph chain: source-impact within impact within full
        for (&target, _) in full.nodes().iter().rev().take(3) {
            let imp = impact_dag(&full, target).unwrap();
            assert!(keys(&imp).is_subset(&keys(&full)));
            assert!(edge_keys(&imp).is_subset(&edge_keys(&full)));
            assert!(imp.nodes().contains_key(&target));
            let Some(source) = imp.nodes().keys().next().copied() else { continue };
            match source_impact_path(&imp, source, target) {
                Ok(path) => {
                    assert_eq!(path.first(), Some(&source));
                    assert_eq!(path.last(), Some(&target));
                    let sg = source_impact_graph(&imp, &path);
                    assert!(keys(&sg).is_subset(&keys(&imp)));
                    assert!(edge_keys(&sg).is_subset(&edge_keys(&imp)));
                    assert_eq!(sg.edge_count(), path.len() - 1);
                }
                Err(Error::PathNotFound { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }
}

#[test]
fn node_ids_do_not_depend_on_input_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..50 {
        let mut records = random_records(&mut rng);
        let a = build_full_dag(&records, &PathwayConstraints::default());
        records.reverse();
        let b = build_full_dag(&records, &PathwayConstraints::default());
        assert_eq!(a, b);
    }
}

#[test]
fn three_node_fixture() {
    let records = vec![
        record("TREFHT", "Temperate North", 40, 90, -6.0),
        record("AEROD_v", "Subtropical North", 1, 30, 9.0),
        record("FSDSC", "Temperate North", 20, 60, -4.0),
    ];
    let full = build_full_dag(&records, &PathwayConstraints::default());
    assert_eq!(full.node_count(), 3);
    assert_eq!(
        full.edges().iter().copied().collect::<Vec<_>>(),
        vec![(NodeId(0), NodeId(1)), (NodeId(1), NodeId(2))]
    );
    let source = default_source(&full, "AEROD_v", "Subtropical North").unwrap();
    let imp = impact_dag(&full, NodeId(2)).unwrap();
    assert_eq!(imp.node_count(), 3);
    assert_eq!(
        source_impact_path(&imp, source, NodeId(2)).unwrap(),
        vec![NodeId(0), NodeId(1), NodeId(2)]
    );
}

#[test]
fn diamond_fixture() {
    let records = vec![
        record("AEROD_v", "Tropical", 1, 20, 5.0),
        record("FSDSC", "Tropical", 10, 50, -10.0),
        record("FSDSC", "Subtropical North", 12, 50, -3.0),
        record("TREFHT", "Subtropical North", 40, 80, -6.0),
    ];
    let full = build_full_dag(&records, &PathwayConstraints::default());
    let edges: Vec<_> = full.edges().iter().copied().collect();
    assert_eq!(
        edges,
        vec![
            (NodeId(0), NodeId(1)),
            (NodeId(0), NodeId(2)),
            (NodeId(1), NodeId(2)),
            (NodeId(1), NodeId(3)),
            (NodeId(2), NodeId(3)),
        ]
    );
    let imp = impact_dag(&full, NodeId(3)).unwrap();
    let path = source_impact_path(&imp, NodeId(0), NodeId(3)).unwrap();
    assert_eq!(path, vec![NodeId(0), NodeId(1), NodeId(3)]);
}
