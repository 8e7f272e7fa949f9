//! Shared data model: regional series, aligned ensemble pairs, sliding
//! windows and mask-based regional reduction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zonal bands ordered south to north. Neighbours in this list are adjacent.
pub const ZONAL_REGIONS: [&str; 7] = [
    "Polar South",
    "Temperate South",
    "Subtropical South",
    "Tropical",
    "Subtropical North",
    "Temperate North",
    "Polar North",
];

/// Adjacency of the zonal chain, including self-adjacency, as unordered pairs.
pub fn zonal_adjacency() -> BTreeSet<(String, String)> {
    let mut adj = BTreeSet::new();
    for (i, r) in ZONAL_REGIONS.iter().enumerate() {
        adj.insert((r.to_string(), r.to_string()));
        if let Some(next) = ZONAL_REGIONS.get(i + 1) {
            adj.insert((r.to_string(), next.to_string()));
            adj.insert((next.to_string(), r.to_string()));
        }
    }
    adj
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Forced,
    Counterfactual,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Forced => "forced",
            Scenario::Counterfactual => "counterfactual",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "forced" => Ok(Scenario::Forced),
            "counterfactual" => Ok(Scenario::Counterfactual),
            other => Err(Error::InvalidInput(format!("unknown scenario `{other}`"))),
        }
    }
}

/// One variable's daily regional means for one scenario and ensemble member.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionalSeries {
    pub variable: String,
    pub region: String,
    pub scenario: Scenario,
    pub member: u32,
    pub start_date: NaiveDate,
    values: Vec<f64>,
}

impl RegionalSeries {
    pub fn new(
        variable: impl Into<String>,
        region: impl Into<String>,
        scenario: Scenario,
        member: u32,
        start_date: NaiveDate,
        values: Vec<f64>,
    ) -> Result<Self> {
        if member == 0 {
            return Err(Error::InvalidInput("member indices start at 1".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at day {} of member {member} ({scenario})",
                pos + 1
            )));
        }
        Ok(Self {
            variable: variable.into(),
            region: region.into(),
            scenario,
            member,
            start_date,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Forced and counterfactual ensembles for one (variable, region), aligned
/// member by member.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsemblePair {
    pub variable: String,
    pub region: String,
    pub start_date: NaiveDate,
    members: Vec<u32>,
    forced: Vec<Vec<f64>>,
    counterfactual: Vec<Vec<f64>>,
}

impl EnsemblePair {
    /// Builds a pair from raw member matrices. Members are numbered `1..=E`.
    pub fn from_members(
        variable: impl Into<String>,
        region: impl Into<String>,
        start_date: NaiveDate,
        forced: Vec<Vec<f64>>,
        counterfactual: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let variable = variable.into();
        let region = region.into();
        let to_series = |scenario, rows: Vec<Vec<f64>>| -> Result<Vec<RegionalSeries>> {
            rows.into_iter()
                .enumerate()
                .map(|(e, values)| {
                    RegionalSeries::new(&variable, &region, scenario, e as u32 + 1, start_date, values)
                })
                .collect()
        };
        let f = to_series(Scenario::Forced, forced)?;
        let c = to_series(Scenario::Counterfactual, counterfactual)?;
        align_pair(f, c)
    }

    pub fn ensemble_size(&self) -> usize {
        self.forced.len()
    }

    pub fn len(&self) -> usize {
        self.forced[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn forced(&self) -> &[Vec<f64>] {
        &self.forced
    }

    pub fn counterfactual(&self) -> &[Vec<f64>] {
        &self.counterfactual
    }

    /// Calendar date of a 1-based day index.
    pub fn date_of(&self, index: usize) -> NaiveDate {
        self.start_date + Duration::days(index as i64 - 1)
    }

    pub fn forced_mean(&self) -> Vec<f64> {
        ensemble_mean(&self.forced)
    }

    pub fn counterfactual_mean(&self) -> Vec<f64> {
        ensemble_mean(&self.counterfactual)
    }

    /// The pair restricted to its first `size` members.
    pub fn truncated(&self, size: usize) -> Result<Self> {
        if size == 0 || size > self.ensemble_size() {
            return Err(Error::InvalidParameters(format!(
                "cannot take {size} members from an ensemble of {}",
                self.ensemble_size()
            )));
        }
        Ok(Self {
            variable: self.variable.clone(),
            region: self.region.clone(),
            start_date: self.start_date,
            members: self.members[..size].to_vec(),
            forced: self.forced[..size].to_vec(),
            counterfactual: self.counterfactual[..size].to_vec(),
        })
    }

    /// Splits the pair back into per-member series.
    pub fn to_series(&self) -> (Vec<RegionalSeries>, Vec<RegionalSeries>) {
        let build = |scenario, rows: &[Vec<f64>]| {
            rows.iter()
                .zip(&self.members)
                .map(|(values, &member)| RegionalSeries {
                    variable: self.variable.clone(),
                    region: self.region.clone(),
                    scenario,
                    member,
                    start_date: self.start_date,
                    values: values.clone(),
                })
                .collect()
        };
        (
            build(Scenario::Forced, &self.forced),
            build(Scenario::Counterfactual, &self.counterfactual),
        )
    }
}

fn ensemble_mean(rows: &[Vec<f64>]) -> Vec<f64> {
    let n = rows[0].len();
    let e = rows.len() as f64;
    (0..n)
        .map(|t| rows.iter().map(|r| r[t]).sum::<f64>() / e)
        .collect()
}

/// Validates and pairs forced/counterfactual members.
pub fn align_pair(
    forced: Vec<RegionalSeries>,
    counterfactual: Vec<RegionalSeries>,
) -> Result<EnsemblePair> {
    let first = forced
        .first()
        .or(counterfactual.first())
        .ok_or_else(|| Error::InvalidInput("no member series to align".into()))?;
    if forced.is_empty() || counterfactual.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}/{}: both scenarios need at least one member",
            first.variable, first.region
        )));
    }
    let variable = first.variable.clone();
    let region = first.region.clone();
    let start_date = first.start_date;
    let length = first.len();

    let mut by_member: BTreeMap<u32, [Option<Vec<f64>>; 2]> = BTreeMap::new();
    for (expected, list) in [(Scenario::Forced, forced), (Scenario::Counterfactual, counterfactual)] {
        for s in list {
            if s.variable != variable || s.region != region {
                return Err(Error::Alignment {
                    member: s.member,
                    reason: format!(
                        "series is {}/{} but the pair is {variable}/{region}",
                        s.variable, s.region
                    ),
                });
            }
            if s.scenario != expected {
                return Err(Error::Alignment {
                    member: s.member,
                    reason: format!("{} series passed as {expected}", s.scenario),
                });
            }
            if s.len() != length {
                return Err(Error::Alignment {
                    member: s.member,
                    reason: format!("{} series has {} days, expected {length}", s.scenario, s.len()),
                });
            }
            if s.start_date != start_date {
                return Err(Error::Alignment {
                    member: s.member,
                    reason: format!(
                        "{} series starts {}, expected {start_date}",
                        s.scenario, s.start_date
                    ),
                });
            }
            let slot = by_member.entry(s.member).or_default();
            let target = match expected {
                Scenario::Forced => &mut slot[0],
                Scenario::Counterfactual => &mut slot[1],
            };
            if target.is_some() {
                return Err(Error::Alignment {
                    member: s.member,
                    reason: format!("duplicate {expected} series"),
                });
            }
            *target = Some(s.values);
        }
    }
    if length == 0 {
        return Err(Error::InvalidInput("member series are empty".into()));
    }

    let mut members = Vec::with_capacity(by_member.len());
    let mut f = Vec::with_capacity(by_member.len());
    let mut c = Vec::with_capacity(by_member.len());
    for (member, pair) in by_member {
        match pair {
            [Some(fv), Some(cv)] => {
                members.push(member);
                f.push(fv);
                c.push(cv);
            }
            [Some(_), None] => {
                return Err(Error::Alignment {
                    member,
                    reason: "forced member has no counterfactual".into(),
                })
            }
            [None, _] => {
                return Err(Error::Alignment {
                    member,
                    reason: "counterfactual member has no forced partner".into(),
                })
            }
        }
    }
    Ok(EnsemblePair {
        variable,
        region,
        start_date,
        members,
        forced: f,
        counterfactual: c,
    })
}

/// A sliding window over a series. `index` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub index: usize,
    pub offset: usize,
    pub len: usize,
}

impl Window {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Full windows of size `n` and lag `p`; a trailing partial window is dropped.
pub fn build_windows(series_length: usize, n: usize, p: usize) -> Result<Vec<Window>> {
    if n == 0 || p == 0 {
        return Err(Error::InvalidParameters(format!(
            "window size and lag must be positive (n={n}, p={p})"
        )));
    }
    if n > series_length {
        return Err(Error::InvalidParameters(format!(
            "window size {n} exceeds series length {series_length}"
        )));
    }
    let count = (series_length - n) / p + 1;
    Ok((0..count)
        .map(|i| Window {
            index: i + 1,
            offset: i * p,
            len: n,
        })
        .collect())
}

/// Assignment of grid columns to non-overlapping regions.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionMask {
    labels: Vec<String>,
    assignment: Vec<usize>,
    weights: Vec<f64>,
}

impl RegionMask {
    pub fn new(labels: Vec<String>, assignment: Vec<usize>, weights: Option<Vec<f64>>) -> Result<Self> {
        let weights = weights.unwrap_or_else(|| vec![1.0; assignment.len()]);
        if weights.len() != assignment.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} columns",
                weights.len(),
                assignment.len()
            )));
        }
        if let Some(c) = assignment.iter().position(|&r| r >= labels.len()) {
            return Err(Error::InvalidInput(format!(
                "column {c} assigned to unknown region index {}",
                assignment[c]
            )));
        }
        if let Some(c) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "column {c} has non-positive weight {}",
                weights[c]
            )));
        }
        Ok(Self {
            labels,
            assignment,
            weights,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn columns(&self) -> usize {
        self.assignment.len()
    }
}

/// Weighted mean of `grid_values` over each region of the mask, in label order.
pub fn regional_mean(grid_values: &[f64], mask: &RegionMask) -> Result<Vec<f64>> {
    if grid_values.len() != mask.columns() {
        return Err(Error::InvalidInput(format!(
            "{} grid values for a mask of {} columns",
            grid_values.len(),
            mask.columns()
        )));
    }
    let k = mask.labels.len();
    // Deviations are accumulated about the region's first value so that a
    // region-wise constant field comes back bit-exact.
    let mut reference: Vec<Option<f64>> = vec![None; k];
    let mut num = vec![0.0; k];
    let mut den = vec![0.0; k];
    for ((&x, &r), &w) in grid_values.iter().zip(&mask.assignment).zip(&mask.weights) {
        let base = *reference[r].get_or_insert(x);
        num[r] += w * (x - base);
        den[r] += w;
    }
    reference
        .iter()
        .zip(num.iter().zip(&den))
        .zip(&mask.labels)
        .map(|((base, (n, d)), label)| match base {
            Some(base) => Ok(base + n / d),
            None => Err(Error::EmptyRegion(label.clone())),
        })
        .collect()
}
