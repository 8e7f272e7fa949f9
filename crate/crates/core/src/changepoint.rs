//! Changepoint detection on entropy series and the mapping of detected
//! changepoints back onto the daily time axis.
//!
//! Detection is binary segmentation. Every active segment proposes the split
//! with the largest Welch `|t|` among all admissible splits, and segments are
//! tested in decreasing order of that `|t|`. Each admissible split counts as
//! one hypothesis test; the running total `K` over the run sets the
//! Bonferroni level `alpha / K` for the segment being tested. Accepted splits
//! re-enter both halves into the queue until the queue drains or the
//! changepoint budget is exhausted.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::entropy::{entropy_series, EntropyParams, EntropySeries};
use crate::error::{Error, Result};
use crate::model::EnsemblePair;
use crate::numeric::{mean, sample_variance};
use crate::stats::tdist::two_sided_p;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChangepointConfig {
    pub alpha: f64,
    /// Minimum number of windows on each side of a split.
    pub min_segment: usize,
    pub max_changepoints: usize,
}

impl Default for ChangepointConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            min_segment: 5,
            max_changepoints: 20,
        }
    }
}

impl ChangepointConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameters(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.min_segment < 2 {
            return Err(Error::InvalidParameters(format!(
                "min_segment must be >= 2, got {}",
                self.min_segment
            )));
        }
        Ok(())
    }
}

/// Welch two-sample t-test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchTest {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Welch's unequal-variance t-test, two-sided.
///
/// Two zero-variance samples give `t = 0, p = 1` when their means agree and
/// `t = ±inf, p = 0` otherwise.
pub fn two_sample_t(a: &[f64], b: &[f64]) -> Result<WelchTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "t-test needs at least 2 samples per side (got {} and {})",
            a.len(),
            b.len()
        )));
    }
    Ok(welch(a, b))
}

fn welch(a: &[f64], b: &[f64]) -> WelchTest {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (sample_variance(a, ma), sample_variance(b, mb));
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let df = na + nb - 2.0;
        return if ma == mb {
            WelchTest { t: 0.0, df, p_value: 1.0 }
        } else {
            WelchTest {
                t: if ma > mb { f64::INFINITY } else { f64::NEG_INFINITY },
                df,
                p_value: 0.0,
            }
        };
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    WelchTest {
        t,
        df,
        p_value: two_sided_p(t, df),
    }
}

/// One accepted split, with the test that accepted it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedSplit {
    /// 1-based index of the first window of the right-hand segment.
    pub window: usize,
    pub test: WelchTest,
    /// Running test count `K` at the time of acceptance.
    pub tests_so_far: usize,
    pub level: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    start: usize,
    end: usize,
    split: usize,
    t: f64,
    admissible: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // Larger |t| first; earlier segments win ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.t
            .abs()
            .total_cmp(&other.t.abs())
            .then_with(|| other.start.cmp(&self.start))
    }
}

fn best_split(values: &[f64], start: usize, end: usize, min_segment: usize) -> Option<Candidate> {
    if end - start < 2 * min_segment {
        return None;
    }
    let mut best: Option<(usize, f64)> = None;
    for split in start + min_segment..=end - min_segment {
        let t = welch(&values[start..split], &values[split..end]).t;
        match best {
            Some((_, bt)) if t.abs() <= bt.abs() => {}
            _ => best = Some((split, t)),
        }
    }
    best.map(|(split, t)| Candidate {
        start,
        end,
        split,
        t,
        admissible: end - start - 2 * min_segment + 1,
    })
}

/// Binary segmentation returning every accepted split in acceptance order.
pub fn detect_changepoints_detailed(
    values: &[f64],
    cfg: &ChangepointConfig,
) -> Result<Vec<AcceptedSplit>> {
    cfg.validate()?;
    if values.len() < 2 * cfg.min_segment {
        return Err(Error::InvalidInput(format!(
            "entropy series of length {} is shorter than 2 * min_segment = {}",
            values.len(),
            2 * cfg.min_segment
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite entropy at window {}", i + 1)));
    }
    let mut queue = BinaryHeap::new();
    queue.extend(best_split(values, 0, values.len(), cfg.min_segment));
    let mut tests = 0usize;
    let mut accepted = Vec::new();
    while accepted.len() < cfg.max_changepoints {
        let Some(c) = queue.pop() else { break };
        tests += c.admissible;
        let level = cfg.alpha / tests as f64;
        let test = welch(&values[c.start..c.split], &values[c.split..c.end]);
        if test.p_value < level {
            accepted.push(AcceptedSplit {
                window: c.split + 1,
                test,
                tests_so_far: tests,
                level,
            });
            queue.extend(best_split(values, c.start, c.split, cfg.min_segment));
            queue.extend(best_split(values, c.split, c.end, cfg.min_segment));
        }
    }
    Ok(accepted)
}

/// Accepted changepoint windows (1-based, first window of the new regime) in
/// increasing order.
pub fn detect_changepoints(series: &EntropySeries, cfg: &ChangepointConfig) -> Result<Vec<usize>> {
    let mut windows: Vec<usize> = detect_changepoints_detailed(&series.values, cfg)?
        .into_iter()
        .map(|s| s.window)
        .collect();
    windows.sort_unstable();
    Ok(windows)
}

/// A maximal run of days with statistically constant entropy. Indices are
/// 1-based and inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureInterval {
    pub start_index: usize,
    pub end_index: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
}

impl FeatureInterval {
    pub fn from_indices(start_index: usize, end_index: usize, series_start: NaiveDate) -> Self {
        assert!(start_index >= 1 && start_index <= end_index);
        let date = |i: usize| series_start + chrono::Duration::days(i as i64 - 1);
        Self {
            start_index,
            end_index,
            start_date: date(start_index),
            end_date: date(end_index),
        }
    }

    pub fn len(&self) -> usize {
        self.end_index - self.start_index + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        (self.start_index..=self.end_index).contains(&index)
    }
}

/// Maps changepoint windows to day indices via window midpoints and returns
/// the intervals between consecutive boundaries. Intervals are half-open at
/// each changepoint, except the last which closes at `series_length`.
pub fn map_to_time(
    window_changepoints: &[usize],
    params: &EntropyParams,
    series_length: usize,
    series_start: NaiveDate,
) -> Vec<FeatureInterval> {
    let mut bounds = vec![1usize];
    let mut sorted = window_changepoints.to_vec();
    sorted.sort_unstable();
    for w in sorted {
        let t = params.midpoint(w);
        if t > *bounds.last().unwrap() && t <= series_length {
            bounds.push(t);
        }
    }
    let mut out = Vec::with_capacity(bounds.len());
    for (k, &start) in bounds.iter().enumerate() {
        let end = bounds.get(k + 1).map_or(series_length, |&next| next - 1);
        out.push(FeatureInterval::from_indices(start, end, series_start));
    }
    out
}

/// Changepoint hits per day index across ensemble sizes `1..=E`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilityHistogram {
    pub ensemble_sizes: usize,
    /// Day index of each changepoint -> hit count for each ensemble size
    /// (position `k` is ensemble size `k + 1`).
    pub hits: BTreeMap<usize, Vec<u32>>,
}

impl StabilityHistogram {
    /// Number of ensemble sizes at which the changepoint was found.
    pub fn frequency(&self, index: usize) -> u32 {
        self.hits.get(&index).map_or(0, |h| h.iter().sum())
    }
}

/// Re-runs detection on the first `E'` members for every `E' = 1..=E`.
pub fn stability_histogram(
    pair: &EnsemblePair,
    params: &EntropyParams,
    cfg: &ChangepointConfig,
) -> Result<StabilityHistogram> {
    let e = pair.ensemble_size();
    let mut hits: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for size in 1..=e {
        let sub = pair.truncated(size)?;
        let series = entropy_series(&sub, params)?;
        for w in detect_changepoints(&series, cfg)? {
            hits.entry(params.midpoint(w)).or_insert_with(|| vec![0; e])[size - 1] += 1;
        }
    }
    Ok(StabilityHistogram {
        ensemble_sizes: e,
        hits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(1991, 6, 1).unwrap()
    }

    fn series(values: Vec<f64>) -> EntropySeries {
        let params = EntropyParams::default();
        let window_midpoints = (1..=values.len()).map(|w| params.midpoint(w)).collect();
        EntropySeries {
            values,
            window_midpoints,
            params,
        }
    }

    #[test]
    fn welch_examples() {
        let t = two_sample_t(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((t.t, t.p_value), (0.0, 1.0));

        let t = two_sample_t(&[1.0, 2.0, 3.0, 4.0], &[3.0, 4.0, 5.0, 6.0]).unwrap();
        assert!((t.t + 2.1909).abs() < 1e-4);
        assert!((t.df - 6.0).abs() < 1e-12);

        let t = two_sample_t(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.p_value, 0.0);
        assert!(t.t.is_infinite());

        assert!(two_sample_t(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn constant_series_has_no_changepoints() {
        let s = series(vec![0.7; 60]);
        assert!(detect_changepoints(&s, &ChangepointConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn step_is_found_at_the_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let values = (0..50)
            .map(|i| if i < 25 { 0.5 } else { 1.0 } + noise.sample(&mut rng))
            .collect();
        let s = series(values);
        assert_eq!(detect_changepoints(&s, &ChangepointConfig::default()).unwrap(), vec![26]);
    }

    #[test]
    fn too_short_series_is_rejected() {
        let s = series(vec![0.1; 9]);
        assert!(matches!(
            detect_changepoints(&s, &ChangepointConfig::default()),
            Err(Error::InvalidInput(_))
        ));
        let bad = ChangepointConfig { min_segment: 1, ..Default::default() };
        assert!(detect_changepoints(&series(vec![0.1; 20]), &bad).is_err());
    }

    #[test]
    fn accepted_splits_reject_at_their_level() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 0.05).unwrap();
        let values: Vec<f64> = (0..120)
            .map(|i| [0.2, 0.8, 0.4, 1.1][i / 30] + noise.sample(&mut rng))
            .collect();
        let cfg = ChangepointConfig::default();
        let splits = detect_changepoints_detailed(&values, &cfg).unwrap();
        assert_eq!(splits.len(), 3);
        for s in &splits {
            assert!(s.test.p_value < cfg.alpha / s.tests_so_far as f64);
        }
        let mut w: Vec<_> = splits.iter().map(|s| s.window).collect();
        w.sort();
        assert_eq!(w, vec![31, 61, 91]);
    }

    #[test]
    fn map_examples() {
        let p = EntropyParams::default();
        let iv = map_to_time(&[], &p, 730, date());
        assert_eq!(iv.len(), 1);
        assert_eq!((iv[0].start_index, iv[0].end_index), (1, 730));

        let iv = map_to_time(&[1], &p, 100, date());
        assert_eq!(iv[1].start_index, 15);

        let iv = map_to_time(&[5, 20], &p, 400, date());
        let idx: Vec<_> = iv.iter().map(|i| (i.start_index, i.end_index)).collect();
        assert_eq!(idx, vec![(1, 50), (51, 185), (186, 400)]);
        assert_eq!(iv[1].start_date, NaiveDate::from_ymd_opt(1991, 7, 21).unwrap());
    }

    #[test]
    fn single_member_histogram_counts_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let cf: Vec<f64> = (0..400).map(|_| noise.sample(&mut rng)).collect();
        let forced: Vec<f64> = cf
            .iter()
            .enumerate()
            .map(|(t, v)| if t >= 200 { v + 1.5 * noise.sample(&mut rng) } else { *v })
            .collect();
        let pair = EnsemblePair::from_members("V", "R", date(), vec![forced], vec![cf]).unwrap();
        let params = EntropyParams::default();
        let cfg = ChangepointConfig::default();
        let h = stability_histogram(&pair, &params, &cfg).unwrap();
        let cps = detect_changepoints(&entropy_series(&pair, &params).unwrap(), &cfg).unwrap();
        assert!(!cps.is_empty());
        let expected: Vec<usize> = cps.iter().map(|&w| params.midpoint(w)).collect();
        assert_eq!(h.hits.keys().copied().collect::<Vec<_>>(), expected);
        assert!(h.hits.values().all(|v| v == &vec![1]));
        assert_eq!(h, stability_histogram(&pair, &params, &cfg).unwrap());
    }
}
