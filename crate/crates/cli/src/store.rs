//! On-disk dataset store.
//!
//! ```text
//! <store>/manifest.json        pair list with member ids, start date, length
//! <store>/pairs/<slug>.csv     day,date,forced_<id>...,counterfactual_<id>...
//! ```
//!
//! One CSV per `(variable, region)`, one row per day, one column per member
//! and scenario. Values are written with shortest round-trip formatting so a
//! reload is bit-exact.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use entropath_core::{align_pair, EnsemblePair, RegionalSeries, Scenario};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub variable: String,
    pub region: String,
    pub file: String,
    pub start_date: NaiveDate,
    pub days: usize,
    pub members: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub pairs: Vec<ManifestEntry>,
}

/// File-name stem for a pair: lowercase, non-alphanumerics as `_`.
pub fn slug(variable: &str, region: &str) -> String {
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
            .collect()
    };
    format!("{}__{}", clean(variable), clean(region))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_store(dir: &Path, pairs: &[EnsemblePair], config_hash: &str) -> Result<Manifest, CliError> {
    let mut entries = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let file = format!("pairs/{}.csv", slug(&pair.variable, &pair.region));
        let mut out = format!("# config_hash: {config_hash}\nday,date");
        for prefix in ["forced", "counterfactual"] {
            for m in pair.members() {
                out.push_str(&format!(",{prefix}_{m}"));
            }
        }
        out.push('\n');
        for t in 0..pair.len() {
            out.push_str(&format!("{},{}", t + 1, pair.date_of(t + 1)));
            for rows in [pair.forced(), pair.counterfactual()] {
                for r in rows {
                    out.push_str(&format!(",{}", r[t]));
                }
            }
            out.push('\n');
        }
        write_text(&dir.join(&file), &out)?;
        entries.push(ManifestEntry {
            variable: pair.variable.clone(),
            region: pair.region.clone(),
            file,
            start_date: pair.start_date,
            days: pair.len(),
            members: pair.members().to_vec(),
        });
    }
    let manifest = Manifest {
        config_hash: config_hash.to_string(),
        pairs: entries,
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest is serialisable");
    json.push('\n');
    write_text(&dir.join("manifest.json"), &json)?;
    Ok(manifest)
}

fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CliError> {
    let path = manifest_path(dir);
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Data(format!("{}: {e} (run `ingest` first)", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(&path, e))
}

fn read_pair(dir: &Path, entry: &ManifestEntry) -> Result<EnsemblePair, CliError> {
    let path = dir.join(&entry.file);
    let bad = |msg: String| CliError::io(&path, msg);
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&path)
        .map_err(|e| bad(e.to_string()))?;
    let e = entry.members.len();
    let expected_cols = 2 + 2 * e;
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?;
    if header.len() != expected_cols {
        return Err(bad(format!("expected {expected_cols} columns, found {}", header.len())));
    }
    let mut columns = vec![Vec::with_capacity(entry.days); 2 * e];
    for (t, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let date = entry.start_date + chrono::Duration::days(t as i64);
        if rec[0] != (t + 1).to_string() || rec[1] != date.to_string() {
            return Err(bad(format!("row {} is out of sequence", t + 1)));
        }
        for (c, col) in columns.iter_mut().enumerate() {
            let v: f64 = rec[2 + c]
                .parse()
                .map_err(|_| bad(format!("day {}: `{}` is not a number", t + 1, &rec[2 + c])))?;
            col.push(v);
        }
    }
    if columns[0].len() != entry.days {
        return Err(bad(format!("expected {} days, found {}", entry.days, columns[0].len())));
    }
    let mut cf_cols = columns.split_off(e);
    let series = |scenario, cols: &mut Vec<Vec<f64>>| -> Result<Vec<RegionalSeries>, CliError> {
        entry
            .members
            .iter()
            .zip(cols.drain(..))
            .map(|(&m, values)| {
                RegionalSeries::new(&entry.variable, &entry.region, scenario, m, entry.start_date, values)
                    .map_err(|err| bad(err.to_string()))
            })
            .collect()
    };
    let forced = series(Scenario::Forced, &mut columns)?;
    let cf = series(Scenario::Counterfactual, &mut cf_cols)?;
    align_pair(forced, cf).map_err(|err| bad(err.to_string()))
}

pub fn read_store(dir: &Path) -> Result<(Manifest, Vec<EnsemblePair>), CliError> {
    let manifest = read_manifest(dir)?;
    let pairs = manifest
        .pairs
        .iter()
        .map(|entry| read_pair(dir, entry))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((manifest, pairs))
}

/// Removes stale files of a previous store before writing a new one.
pub fn reset_dir(dir: &Path) -> Result<(), CliError> {
    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("TREFHT", "Temperate North"), "trefht__temperate_north");
        assert_eq!(slug("AEROD_v", "Tropical"), "aerod_v__tropical");
    }

    #[test]
    fn store_round_trip_keeps_member_ids() {
        let start = NaiveDate::from_ymd_opt(1991, 6, 1).unwrap();
        let mk = |scenario, member, values: Vec<f64>| {
            RegionalSeries::new("TREFHT", "Tropical", scenario, member, start, values).unwrap()
        };
        let pair = align_pair(
            vec![mk(Scenario::Forced, 3, vec![0.1, 0.2, 1.0 / 3.0]), mk(Scenario::Forced, 7, vec![1e-300, -2.5, 4.0])],
            vec![
                mk(Scenario::Counterfactual, 3, vec![0.0, 0.0, 0.0]),
                mk(Scenario::Counterfactual, 7, vec![1.0, 2.0, 3.0]),
            ],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_store(dir.path(), std::slice::from_ref(&pair), "abc").unwrap();
        let (manifest, back) = read_store(dir.path()).unwrap();
        assert_eq!(manifest.pairs[0].members, vec![3, 7]);
        assert_eq!(back, vec![pair]);
    }

    #[test]
    fn missing_store_is_a_data_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_store(dir.path()), Err(CliError::Data(_))));
    }
}
