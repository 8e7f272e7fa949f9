//! Plot-ready CSV bundles built from a completed run.
//!
//! ```text
//! <output>/report/<slug>/signal.csv       ensemble min/mean/max per scenario
//! <output>/report/<slug>/difference.csv   daily mean difference, interval mean and CI band
//! <output>/report/<slug>/entropy.csv      entropy with changepoint markers
//! <output>/report/<slug>/granularity.csv  records under daily, monthly and entropy intervals
//! <output>/report/<slug>/stability.csv    changepoint hits per ensemble size
//! ```
//!
//! Entropy, changepoints and impacts are read from the run artifacts rather
//! than recomputed, so a report always describes the run it sits next to.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use entropath_core::{granularity_compare, stability_histogram, EnsemblePair, Granularity};

use crate::commands::read_impacts;
use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::pipeline::csv_text;
use crate::store::{read_manifest, slug, write_text};

/// Reads a run CSV, checking that it was produced by the current config.
fn read_run_csv(path: &Path, cfg: &LoadedConfig) -> Result<Vec<csv::StringRecord>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e} (run `run` first)", path.display())))?;
    let expected = format!("# {}", cfg.hash_line());
    if text.lines().next() != Some(expected.as_str()) {
        return Err(CliError::io(path, "produced by a different configuration; rerun `run`"));
    }
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .records()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::io(path, e))
}

fn envelope(rows: &[Vec<f64>], t: usize) -> [f64; 3] {
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for r in rows {
        lo = lo.min(r[t]);
        hi = hi.max(r[t]);
        sum += r[t];
    }
    [lo, sum / rows.len() as f64, hi]
}

fn write_pair_report(
    dir: &Path,
    out: &Path,
    cfg: &LoadedConfig,
    pair: &EnsemblePair,
    records: &[&entropath_core::ImpactRecord],
) -> Result<(), CliError> {
    let hash_line = cfg.hash_line();
    let name = slug(&pair.variable, &pair.region);
    let c = &cfg.config;

    let signal = csv_text(
        &hash_line,
        &["day", "date", "forced_min", "forced_mean", "forced_max", "cf_min", "cf_mean", "cf_max"],
        (0..pair.len()).map(|t| {
            let mut row = vec![(t + 1).to_string(), pair.date_of(t + 1).to_string()];
            for rows in [pair.forced(), pair.counterfactual()] {
                row.extend(envelope(rows, t).iter().map(f64::to_string));
            }
            row
        }),
    );
    write_text(&dir.join("signal.csv"), &signal)?;

    let (u, v) = (pair.forced_mean(), pair.counterfactual_mean());
    let mut difference = Vec::with_capacity(pair.len());
    for t in 1..=pair.len() {
        let date = pair.date_of(t);
        let rec = records
            .iter()
            .find(|r| r.interval.start_index <= t && t <= r.interval.end_index)
            .ok_or_else(|| CliError::Data(format!("{}/{}: day {t} is not covered by any interval", pair.variable, pair.region)))?;
        difference.push(vec![
            t.to_string(),
            date.to_string(),
            (u[t - 1] - v[t - 1]).to_string(),
            rec.mean_diff.to_string(),
            rec.ci_low.to_string(),
            rec.ci_high.to_string(),
        ]);
    }
    let difference = csv_text(
        &hash_line,
        &["day", "date", "mean_diff", "interval_mean", "ci_low", "ci_high"],
        difference,
    );
    write_text(&dir.join("difference.csv"), &difference)?;

    let cps: BTreeSet<usize> = read_run_csv(&out.join("changepoints").join(format!("{name}.csv")), cfg)?
        .iter()
        .map(|r| r[0].parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Data(format!("{name}: bad changepoint index: {e}")))?;
    let entropy = read_run_csv(&out.join("entropy").join(format!("{name}.csv")), cfg)?;
    let entropy = csv_text(
        &hash_line,
        &["window", "midpoint_date", "entropy", "changepoint"],
        entropy.iter().map(|r| {
            let w: usize = r[0].parse().unwrap_or(0);
            vec![r[0].to_string(), r[1].to_string(), r[2].to_string(), u8::from(cps.contains(&w)).to_string()]
        }),
    );
    write_text(&dir.join("entropy.csv"), &entropy)?;

    let mut granularity = Vec::new();
    for mode in [Granularity::Daily, Granularity::Monthly, Granularity::Entropy] {
        for r in granularity_compare(pair, mode, &c.entropy, &c.changepoint, c.impacts.ci_level)? {
            granularity.push(vec![
                mode.as_str().to_string(),
                r.interval.start_date.to_string(),
                r.interval.end_date.to_string(),
                r.mean_diff.to_string(),
                r.ci_low.to_string(),
                r.ci_high.to_string(),
                r.score.to_string(),
                u8::from(r.is_significant()).to_string(),
            ]);
        }
    }
    let granularity = csv_text(
        &hash_line,
        &["mode", "start_date", "end_date", "mean_diff", "ci_low", "ci_high", "score", "significant"],
        granularity,
    );
    write_text(&dir.join("granularity.csv"), &granularity)?;

    let hist = stability_histogram(pair, &c.entropy, &c.changepoint)?;
    let mut header = vec!["day".to_string(), "date".to_string(), "frequency".to_string()];
    header.extend((1..=hist.ensemble_sizes).map(|k| format!("size_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let stability = csv_text(
        &hash_line,
        &header,
        hist.hits.iter().map(|(&day, hits)| {
            let mut row = vec![day.to_string(), pair.date_of(day).to_string(), hist.frequency(day).to_string()];
            row.extend(hits.iter().map(u32::to_string));
            row
        }),
    );
    write_text(&dir.join("stability.csv"), &stability)
}

/// Writes one bundle per stored pair. Returns the number of bundles.
pub fn write_report(out: &Path, cfg: &LoadedConfig, pairs: &[EnsemblePair]) -> Result<usize, CliError> {
    let impacts_path = out.join("impacts.csv");
    read_run_csv(&impacts_path, cfg)?;
    let manifest = read_manifest(&cfg.store_dir())?;
    let impacts = read_impacts(&impacts_path, &manifest, cfg.config.impacts.ci_level)?;
    let mut by_pair: BTreeMap<(&str, &str), Vec<_>> = BTreeMap::new();
    for r in &impacts {
        by_pair.entry((r.variable.as_str(), r.region.as_str())).or_default().push(r);
    }

    let root = out.join("report");
    if root.exists() {
        fs::remove_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
    }
    for pair in pairs {
        let records = by_pair
            .get(&(pair.variable.as_str(), pair.region.as_str()))
            .map(Vec::as_slice)
            .unwrap_or_default();
        let dir = root.join(slug(&pair.variable, &pair.region));
        write_pair_report(&dir, out, cfg, pair, records)?;
    }
    Ok(pairs.len())
}
