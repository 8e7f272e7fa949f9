//! CSV ingest and mask formats.
//!
//! Ingest rows are `date,variable,region,member,scenario,value` with ISO-8601
//! dates. Lines starting with `#` are comments. Mask rows are
//! `column,region[,weight]`; a missing weight means 1.0.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::model::{align_pair, EnsemblePair, RegionMask, RegionalSeries, Scenario};

const INGEST_HEADER: [&str; 6] = ["date", "variable", "region", "member", "scenario", "value"];

type SeriesKey = (String, String, Scenario, u32);

struct Pending {
    /// (date, value, row) in file order.
    points: Vec<(NaiveDate, f64, usize)>,
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(input)
}

fn csv_error(err: csv::Error) -> Error {
    let row = err.position().map(|p| p.line() as usize).unwrap_or(0);
    match err.kind() {
        csv::ErrorKind::Io(e) => Error::Io(e.to_string()),
        _ => Error::Parse {
            row,
            reason: err.to_string(),
        },
    }
}

/// Parses an ingest file into one aligned pair per `(variable, region)`,
/// ordered by variable then region. `row` in errors is the file line number.
pub fn read_ingest_csv<R: Read>(input: R) -> Result<Vec<EnsemblePair>> {
    let mut rdr = reader(input);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.iter().collect::<Vec<_>>() != INGEST_HEADER {
        return Err(Error::Parse {
            row: 1,
            reason: format!(
                "expected header `{}`, found `{}`",
                INGEST_HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut series: BTreeMap<SeriesKey, Pending> = BTreeMap::new();
    let mut seen: HashMap<(SeriesKey, NaiveDate), usize> = HashMap::new();
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(csv_error)? {
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |reason: String| Error::Parse { row, reason };
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
            .map_err(|e| bad(format!("date `{}`: {e}", &record[0])))?;
        let variable = record[1].to_string();
        let region = record[2].to_string();
        if variable.is_empty() || region.is_empty() {
            return Err(bad("empty variable or region".into()));
        }
        let member: u32 = record[3]
            .parse()
            .map_err(|_| bad(format!("member `{}` is not a positive integer", &record[3])))?;
        if member == 0 {
            return Err(bad("member indices start at 1".into()));
        }
        let scenario: Scenario = record[4].parse().map_err(|e: Error| bad(e.to_string()))?;
        let value: f64 = record[5]
            .parse()
            .map_err(|_| bad(format!("value `{}` is not a number", &record[5])))?;
        if !value.is_finite() {
            return Err(bad(format!("non-finite value `{}`", &record[5])));
        }
        let key = (variable, region, scenario, member);
        if let Some(first) = seen.insert((key.clone(), date), row) {
            return Err(bad(format!(
                "duplicate (date {date}, member {member}, scenario {scenario}) for {}/{}; first seen at row {first}",
                key.0, key.1
            )));
        }
        series
            .entry(key)
            .or_insert_with(|| Pending { points: Vec::new() })
            .points
            .push((date, value, row));
    }

    let mut grouped: BTreeMap<(String, String), (Vec<RegionalSeries>, Vec<RegionalSeries>)> =
        BTreeMap::new();
    for ((variable, region, scenario, member), mut pending) in series {
        pending.points.sort_by_key(|p| p.0);
        for w in pending.points.windows(2) {
            if w[1].0 - w[0].0 != chrono::Duration::days(1) {
                return Err(Error::Parse {
                    row: w[1].2,
                    reason: format!(
                        "{variable}/{region} member {member} ({scenario}) jumps from {} to {}",
                        w[0].0, w[1].0
                    ),
                });
            }
        }
        let start = pending.points[0].0;
        let values = pending.points.iter().map(|p| p.1).collect();
        let s = RegionalSeries::new(&variable, &region, scenario, member, start, values)?;
        let slot = grouped.entry((variable, region)).or_default();
        match scenario {
            Scenario::Forced => slot.0.push(s),
            Scenario::Counterfactual => slot.1.push(s),
        }
    }
    if grouped.is_empty() {
        return Err(Error::InvalidInput("ingest file has no data rows".into()));
    }
    grouped
        .into_values()
        .map(|(f, c)| align_pair(f, c))
        .collect()
}

/// Writes pairs in the ingest format, one row per (date, member, scenario).
pub fn write_ingest_csv<W: Write>(out: W, pairs: &[EnsemblePair], comments: &[String]) -> Result<()> {
    let mut out = std::io::BufWriter::new(out);
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "{}", INGEST_HEADER.join(","))?;
    for pair in pairs {
        for (scenario, rows) in [
            (Scenario::Forced, pair.forced()),
            (Scenario::Counterfactual, pair.counterfactual()),
        ] {
            for (member, values) in pair.members().iter().zip(rows) {
                for (t, v) in values.iter().enumerate() {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        pair.date_of(t + 1),
                        pair.variable,
                        pair.region,
                        member,
                        scenario,
                        v
                    )?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a mask; region labels are ordered by first appearance and columns
/// must be exactly `0..C`.
pub fn read_mask_csv<R: Read>(input: R) -> Result<RegionMask> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let header: Vec<String> = rdr.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    let has_weight = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["column", "region"] => false,
        ["column", "region", "weight"] => true,
        _ => {
            return Err(Error::Parse {
                row: 1,
                reason: format!("expected header `column,region,weight`, found `{}`", header.join(",")),
            })
        }
    };

    let mut labels: Vec<String> = Vec::new();
    let mut rows: BTreeMap<usize, (usize, f64, usize)> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |reason: String| Error::Parse { row, reason };
        if rec.len() < 2 || rec.len() > 3 || (rec.len() == 3 && !has_weight) {
            return Err(bad(format!("expected 2 or 3 fields, found {}", rec.len())));
        }
        let column: usize = rec[0]
            .parse()
            .map_err(|_| bad(format!("column `{}` is not a non-negative integer", &rec[0])))?;
        let region = rec[1].to_string();
        let weight = match rec.get(2) {
            Some(w) if !w.is_empty() => w
                .parse::<f64>()
                .map_err(|_| bad(format!("weight `{w}` is not a number")))?,
            _ => 1.0,
        };
        let idx = match labels.iter().position(|l| *l == region) {
            Some(i) => i,
            None => {
                labels.push(region);
                labels.len() - 1
            }
        };
        if let Some((_, _, first)) = rows.insert(column, (idx, weight, row)) {
            return Err(bad(format!("column {column} already assigned at row {first}")));
        }
    }
    if let Some((expected, (&got, _))) = rows.iter().enumerate().find(|(i, (c, _))| *i != **c) {
        return Err(Error::InvalidInput(format!(
            "mask columns must be 0..{}; column {expected} is missing (next is {got})",
            rows.len()
        )));
    }
    let assignment = rows.values().map(|r| r.0).collect();
    let weights = rows.values().map(|r| r.1).collect();
    RegionMask::new(labels, assignment, Some(weights))
}
