//! Quadratic edge enumeration straight from the edge rules, for the default
//! AEROD_v -> FSDSC -> TREFHT dependencies over the zonal chain.

use entropath_core::ImpactRecord;

pub const VARIABLES: [&str; 3] = ["AEROD_v", "FSDSC", "TREFHT"];

pub const REGIONS: [&str; 7] = [
    "Polar South",
    "Temperate South",
    "Subtropical South",
    "Tropical",
    "Subtropical North",
    "Temperate North",
    "Polar North",
];

fn var_rank(v: &str) -> usize {
    VARIABLES.iter().position(|x| *x == v).unwrap()
}

fn region_rank(r: &str) -> usize {
    REGIONS.iter().position(|x| *x == r).unwrap()
}

/// Node identity independent of any numbering.
pub type Key = (String, String, chrono::NaiveDate, chrono::NaiveDate);

pub fn key(r: &ImpactRecord) -> Key {
    (r.variable.clone(), r.region.clone(), r.interval.start_date, r.interval.end_date)
}

fn before(a: &ImpactRecord, b: &ImpactRecord) -> bool {
    let ka = (a.interval.start_date, var_rank(&a.variable), region_rank(&a.region), a.interval.end_date);
    let kb = (b.interval.start_date, var_rank(&b.variable), region_rank(&b.region), b.interval.end_date);
    ka < kb
}

pub fn edge_allowed(a: &ImpactRecord, b: &ImpactRecord, slack_days: i64) -> bool {
    let temporal = b.interval.start_date >= a.interval.start_date
        && b.interval.start_date <= a.interval.end_date + chrono::Duration::days(slack_days);
    let ra = region_rank(&a.region) as i64;
    let rb = region_rank(&b.region) as i64;
    let spatial = (ra - rb).abs() <= 1;
    let (va, vb) = (var_rank(&a.variable), var_rank(&b.variable));
    let dependency = vb == va || vb == va + 1;
    temporal && spatial && dependency && before(a, b)
}

/// Node keys and edges of the full graph.
pub fn full_graph(records: &[ImpactRecord], epsilon: f64, slack_days: i64) -> (Vec<Key>, Vec<(Key, Key)>) {
    let nodes: Vec<&ImpactRecord> = records.iter().filter(|r| r.score.abs() > epsilon).collect();
    let mut edges = Vec::new();
    for a in &nodes {
        for b in &nodes {
            if edge_allowed(a, b, slack_days) {
                edges.push((key(a), key(b)));
            }
        }
    }
    let mut keys: Vec<Key> = nodes.iter().map(|r| key(r)).collect();
    keys.sort();
    edges.sort();
    (keys, edges)
}
