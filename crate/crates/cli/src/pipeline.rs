//! In-process pipeline: entropy, changepoints, impacts and pathway graphs,
//! plus the writers for the run artifact tree.
//!
//! ```text
//! <output>/entropy/<slug>.csv         window,midpoint_date,entropy
//! <output>/changepoints/<slug>.csv    nu_index,date
//! <output>/intervals/<slug>.json      {config_hash, intervals: [{start_date, end_date}]}
//! <output>/impacts.csv                variable,region,start_date,end_date,mean_diff,ci_low,ci_high,score
//! <output>/dag/{full,impact,source_impact}.{dot,json}
//! <output>/dag/path.csv               step,variable,region,start_date,end_date,mean_diff,ci_low,ci_high,score
//! ```

use std::path::Path;

use chrono::NaiveDate;
use entropath_core::pathway::{default_source, source_impact_graph};
use entropath_core::stats::{feature_intervals, impacts_for_features};
use entropath_core::{
    build_full_dag, detect_changepoints, entropy_series, export_dot, export_json, impact_dag,
    source_impact_path, EnsemblePair, EntropySeries, FeatureInterval, GraphKind, ImpactRecord,
    NodeId, PathwayGraph,
};
use serde::Serialize;

use crate::config::{PathwaySettings, PipelineConfig};
use crate::error::CliError;
use crate::store::{slug, write_text};

/// Stage outputs for one `(variable, region)` pair.
#[derive(Debug, Clone)]
pub struct PairResult {
    pub variable: String,
    pub region: String,
    pub start_date: NaiveDate,
    pub entropy: EntropySeries,
    /// Accepted changepoint windows, 1-based, increasing.
    pub changepoints: Vec<usize>,
    pub intervals: Vec<FeatureInterval>,
    pub impacts: Vec<ImpactRecord>,
}

#[derive(Debug, Clone)]
pub struct PathwayResult {
    pub full: PathwayGraph,
    pub impact: PathwayGraph,
    pub source_impact: PathwayGraph,
    /// Source to final node; empty when `failure` is set.
    pub path: Vec<NodeId>,
    /// Why no source-impact path exists, if it does not.
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub pairs: Vec<PairResult>,
    pub pathway: PathwayResult,
}

impl RunOutput {
    pub fn impacts(&self) -> impl Iterator<Item = &ImpactRecord> {
        self.pairs.iter().flat_map(|p| p.impacts.iter())
    }
}

fn stage<'a>(stage: &'static str, pair: &'a EnsemblePair) -> impl Fn(entropath_core::Error) -> CliError + 'a {
    move |source| CliError::Stage {
        stage,
        pair: format!("{}/{}", pair.variable, pair.region),
        source,
    }
}

pub fn analyse_pair(pair: &EnsemblePair, cfg: &PipelineConfig) -> Result<PairResult, CliError> {
    let entropy = entropy_series(pair, &cfg.entropy).map_err(stage("entropy", pair))?;
    let changepoints = detect_changepoints(&entropy, &cfg.changepoint).map_err(stage("changepoint", pair))?;
    let intervals = feature_intervals(pair, cfg.impacts.features, &cfg.entropy, &cfg.changepoint)
        .map_err(stage("changepoint", pair))?;
    let impacts =
        impacts_for_features(pair, &intervals, cfg.impacts.ci_level).map_err(stage("impact", pair))?;
    Ok(PairResult {
        variable: pair.variable.clone(),
        region: pair.region.clone(),
        start_date: pair.start_date,
        entropy,
        changepoints,
        intervals,
        impacts,
    })
}

/// Builds the three graphs. A missing source, final node or path is not an
/// error here; it is reported through [`PathwayResult::failure`].
pub fn build_pathway(impacts: &[ImpactRecord], settings: &PathwaySettings) -> Result<PathwayResult, CliError> {
    let constraints = settings.constraints()?;
    let full = build_full_dag(impacts, &constraints);
    let failed = |full: PathwayGraph, why: String| PathwayResult {
        full,
        impact: PathwayGraph::empty(GraphKind::Impact),
        source_impact: PathwayGraph::empty(GraphKind::SourceImpact),
        path: Vec::new(),
        failure: Some(why),
    };

    let fi = &settings.final_impact;
    let Some(target) = full.find(|r| {
        r.variable == fi.variable
            && r.region == fi.region
            && r.interval.start_date <= fi.date
            && fi.date <= r.interval.end_date
    }) else {
        return Ok(failed(
            full,
            format!("no node for {}/{} contains {}", fi.variable, fi.region, fi.date),
        ));
    };
    let impact = impact_dag(&full, target)?;
    let source = match &settings.source_region {
        Some(region) => default_source(&impact, &settings.source_variable, region),
        None => impact.find(|r| r.variable == settings.source_variable),
    };
    let Some(source) = source else {
        let mut out = failed(
            full,
            format!(
                "no {}{} node is upstream of the final impact",
                settings.source_variable,
                settings.source_region.as_ref().map(|r| format!("/{r}")).unwrap_or_default()
            ),
        );
        out.impact = impact;
        return Ok(out);
    };
    match source_impact_path(&impact, source, target) {
        Ok(path) => Ok(PathwayResult {
            source_impact: source_impact_graph(&impact, &path),
            full,
            impact,
            path,
            failure: None,
        }),
        Err(e @ entropath_core::Error::PathNotFound { .. }) => {
            let mut out = failed(full, e.to_string());
            out.impact = impact;
            Ok(out)
        }
        Err(e) => Err(e.into()),
    }
}

pub fn run_pipeline(cfg: &PipelineConfig, pairs: &[EnsemblePair]) -> Result<RunOutput, CliError> {
    let results = pairs
        .iter()
        .map(|p| analyse_pair(p, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let impacts: Vec<ImpactRecord> = results.iter().flat_map(|r| r.impacts.iter().cloned()).collect();
    let pathway = build_pathway(&impacts, &cfg.pathway)?;
    Ok(RunOutput {
        pairs: results,
        pathway,
    })
}

/// CSV text with a leading `# config_hash:` line.
pub fn csv_text(hash_line: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input");
    format!("# {hash_line}\n{body}")
}

pub const IMPACT_HEADER: [&str; 8] = [
    "variable", "region", "start_date", "end_date", "mean_diff", "ci_low", "ci_high", "score",
];

pub fn impact_row(r: &ImpactRecord) -> Vec<String> {
    vec![
        r.variable.clone(),
        r.region.clone(),
        r.interval.start_date.to_string(),
        r.interval.end_date.to_string(),
        r.mean_diff.to_string(),
        r.ci_low.to_string(),
        r.ci_high.to_string(),
        r.score.to_string(),
    ]
}

#[derive(Serialize)]
struct IntervalJson {
    start_date: NaiveDate,
    end_date: NaiveDate,
}

#[derive(Serialize)]
struct IntervalsFile<'a> {
    config_hash: &'a str,
    variable: &'a str,
    region: &'a str,
    intervals: Vec<IntervalJson>,
}

pub fn write_pair_artifacts(out: &Path, hash: &str, r: &PairResult) -> Result<(), CliError> {
    let hash_line = format!("config_hash: {hash}");
    let name = slug(&r.variable, &r.region);
    let dates = r.entropy.midpoint_dates(r.start_date);
    let entropy = csv_text(
        &hash_line,
        &["window", "midpoint_date", "entropy"],
        r.entropy
            .values
            .iter()
            .zip(&dates)
            .enumerate()
            .map(|(w, (v, d))| vec![(w + 1).to_string(), d.to_string(), v.to_string()]),
    );
    write_text(&out.join("entropy").join(format!("{name}.csv")), &entropy)?;

    let cps = csv_text(
        &hash_line,
        &["nu_index", "date"],
        r.changepoints
            .iter()
            .map(|&w| vec![w.to_string(), dates[w - 1].to_string()]),
    );
    write_text(&out.join("changepoints").join(format!("{name}.csv")), &cps)?;

    let file = IntervalsFile {
        config_hash: hash,
        variable: &r.variable,
        region: &r.region,
        intervals: r
            .intervals
            .iter()
            .map(|iv| IntervalJson {
                start_date: iv.start_date,
                end_date: iv.end_date,
            })
            .collect(),
    };
    let mut json = serde_json::to_string_pretty(&file).expect("intervals are serialisable");
    json.push('\n');
    write_text(&out.join("intervals").join(format!("{name}.json")), &json)
}

pub fn write_graphs(out: &Path, hash: &str, p: &PathwayResult) -> Result<(), CliError> {
    let dag = out.join("dag");
    let mut comments = vec![format!("config_hash: {hash}")];
    if let Some(why) = &p.failure {
        comments.push(format!("no source-impact path: {why}"));
    }
    for g in [&p.full, &p.impact, &p.source_impact] {
        let stem = g.kind.as_str();
        write_text(&dag.join(format!("{stem}.dot")), &export_dot(g, &comments))?;
        write_text(&dag.join(format!("{stem}.json")), &export_json(g, Some(hash)))?;
    }
    let mut header = vec!["step"];
    header.extend(IMPACT_HEADER);
    let path = csv_text(
        &format!("config_hash: {hash}"),
        &header,
        p.path.iter().enumerate().map(|(i, id)| {
            let mut row = vec![(i + 1).to_string()];
            row.extend(impact_row(&p.full.nodes()[id]));
            row
        }),
    );
    write_text(&dag.join("path.csv"), &path)
}

pub fn write_run(out: &Path, hash: &str, run: &RunOutput) -> Result<(), CliError> {
    for r in &run.pairs {
        write_pair_artifacts(out, hash, r)?;
    }
    let impacts = csv_text(
        &format!("config_hash: {hash}"),
        &IMPACT_HEADER,
        run.impacts().map(impact_row),
    );
    write_text(&out.join("impacts.csv"), &impacts)?;
    write_graphs(out, hash, &run.pathway)
}
