//! Subcommand implementations. Each returns a one-line summary on success.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use entropath_core::io::{read_ingest_csv, write_ingest_csv};
use entropath_core::synth::truth_json;
use entropath_core::{generate_pair, t_quantile, FeatureInterval, ImpactRecord};

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::pipeline::{build_pathway, run_pipeline, write_graphs, write_run, IMPACT_HEADER};
use crate::report::write_report;
use crate::store::{read_manifest, read_store, reset_dir, write_store, write_text, Manifest};

pub fn cmd_ingest(cfg: &LoadedConfig) -> Result<String, CliError> {
    let inputs = cfg.inputs();
    if inputs.is_empty() {
        return Err(CliError::Config("paths.inputs is empty".into()));
    }
    let mut pairs = BTreeMap::new();
    for path in &inputs {
        let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        for pair in read_ingest_csv(file).map_err(|e| CliError::io(path, e))? {
            let key = (pair.variable.clone(), pair.region.clone());
            if pairs.insert(key.clone(), pair).is_some() {
                return Err(CliError::io(
                    path,
                    format!("{}/{} also appears in an earlier input", key.0, key.1),
                ));
            }
        }
    }
    let pairs: Vec<_> = pairs.into_values().collect();
    let dir = cfg.store_dir();
    reset_dir(&dir)?;
    let manifest = write_store(&dir, &pairs, &cfg.hash)?;
    let sizes: Vec<usize> = manifest.pairs.iter().map(|p| p.members.len()).collect();
    Ok(format!(
        "ingested {} pairs (E = {}) into {}",
        pairs.len(),
        sizes.iter().max().copied().unwrap_or(0),
        dir.display()
    ))
}

pub fn cmd_synth(cfg: &LoadedConfig) -> Result<String, CliError> {
    let out = generate_pair(&cfg.config.synth)?;
    let dir = cfg.data_dir();
    let csv_path = dir.join("synth.csv");
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let file = fs::File::create(&csv_path).map_err(|e| CliError::io(&csv_path, e))?;
    write_ingest_csv(file, &out.pairs, &[cfg.hash_line()]).map_err(|e| CliError::io(&csv_path, e))?;
    write_text(&dir.join("truth.json"), &truth_json(&out.truth, Some(&cfg.hash)))?;
    Ok(format!(
        "wrote {} pairs and {} true impacts to {}",
        out.pairs.len(),
        out.truth.impacts.len(),
        dir.display()
    ))
}

/// Clears previous run artifacts without touching anything else under the
/// output directory.
fn clear_run_outputs(out: &Path) -> Result<(), CliError> {
    for sub in ["entropy", "changepoints", "intervals", "dag", "report"] {
        let p = out.join(sub);
        if p.exists() {
            fs::remove_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        }
    }
    let impacts = out.join("impacts.csv");
    if impacts.exists() {
        fs::remove_file(&impacts).map_err(|e| CliError::io(&impacts, e))?;
    }
    Ok(())
}

pub fn cmd_run(cfg: &LoadedConfig) -> Result<String, CliError> {
    let (_, pairs) = read_store(&cfg.store_dir())?;
    let run = run_pipeline(&cfg.config, &pairs)?;
    let out = cfg.output_dir();
    clear_run_outputs(&out)?;
    write_run(&out, &cfg.hash, &run)?;
    let p = &run.pathway;
    if let Some(why) = &p.failure {
        return Err(CliError::PathNotFound(why.clone()));
    }
    Ok(format!(
        "{} impact records, full graph {} nodes / {} edges, source-impact path of {} nodes; artifacts in {}",
        run.impacts().count(),
        p.full.node_count(),
        p.full.edge_count(),
        p.path.len(),
        out.display()
    ))
}

pub fn cmd_report(cfg: &LoadedConfig) -> Result<String, CliError> {
    let (_, pairs) = read_store(&cfg.store_dir())?;
    let out = cfg.output_dir();
    let n = write_report(&out, cfg, &pairs)?;
    Ok(format!("wrote report bundles for {n} pairs to {}", out.join("report").display()))
}

fn parse_field<T: std::str::FromStr>(path: &Path, row: usize, name: &str, s: &str) -> Result<T, CliError> {
    s.parse()
        .map_err(|_| CliError::io(path, format!("row {row}: bad {name} `{s}`")))
}

/// Reads `impacts.csv` back into records, using the store manifest for day
/// indices and ensemble sizes.
pub fn read_impacts(path: &Path, manifest: &Manifest, ci_level: f64) -> Result<Vec<ImpactRecord>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e} (run `run` first)", path.display())))?;
    let header = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != IMPACT_HEADER {
        return Err(CliError::io(path, "unexpected header"));
    }
    let meta: BTreeMap<(&str, &str), (NaiveDate, usize)> = manifest
        .pairs
        .iter()
        .map(|p| ((p.variable.as_str(), p.region.as_str()), (p.start_date, p.members.len())))
        .collect();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CliError::io(path, e))?;
        let (variable, region) = (&rec[0], &rec[1]);
        let &(start, e) = meta
            .get(&(variable, region))
            .ok_or_else(|| CliError::io(path, format!("row {row}: {variable}/{region} is not in the store")))?;
        let start_date: NaiveDate = parse_field(path, row, "start_date", &rec[2])?;
        let end_date: NaiveDate = parse_field(path, row, "end_date", &rec[3])?;
        let index = |d: NaiveDate| (d - start).num_days() + 1;
        if index(start_date) < 1 || end_date < start_date {
            return Err(CliError::io(path, format!("row {row}: interval outside the series")));
        }
        let interval = FeatureInterval::from_indices(index(start_date) as usize, index(end_date) as usize, start);
        let mean_diff: f64 = parse_field(path, row, "mean_diff", &rec[4])?;
        let ci_low: f64 = parse_field(path, row, "ci_low", &rec[5])?;
        let ci_high: f64 = parse_field(path, row, "ci_high", &rec[6])?;
        let score: f64 = parse_field(path, row, "score", &rec[7])?;
        let critical = if e >= 2 { t_quantile((1.0 - ci_level) / 2.0, (e - 1) as f64) } else { f64::NAN };
        out.push(ImpactRecord {
            variable: variable.to_string(),
            region: region.to_string(),
            interval,
            mean_diff,
            se: (ci_high - ci_low) / (2.0 * critical),
            ci_low,
            ci_high,
            score,
            ci_level,
            ensemble_size: e,
        });
    }
    Ok(out)
}

pub fn cmd_dag(cfg: &LoadedConfig) -> Result<String, CliError> {
    let manifest = read_manifest(&cfg.store_dir())?;
    let out = cfg.output_dir();
    let impacts = read_impacts(&out.join("impacts.csv"), &manifest, cfg.config.impacts.ci_level)?;
    let pathway = build_pathway(&impacts, &cfg.config.pathway)?;
    let dag = out.join("dag");
    if dag.exists() {
        fs::remove_dir_all(&dag).map_err(|e| CliError::io(&dag, e))?;
    }
    write_graphs(&out, &cfg.hash, &pathway)?;
    if let Some(why) = pathway.failure {
        return Err(CliError::PathNotFound(why));
    }
    Ok(format!(
        "rebuilt graphs from {} records: full {} nodes, path of {} nodes",
        impacts.len(),
        pathway.full.node_count(),
        pathway.path.len()
    ))
}
