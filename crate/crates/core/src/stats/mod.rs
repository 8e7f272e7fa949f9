//! Ensemble impact statistics over feature intervals.

pub mod tdist;

use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::changepoint::{detect_changepoints, map_to_time, ChangepointConfig, FeatureInterval};
use crate::entropy::{entropy_series, EntropyParams};
use crate::error::{Error, Result};
use crate::model::EnsemblePair;
use crate::numeric::{mean, sample_variance, CompensatedSum};

pub use tdist::t_quantile;

/// Ensemble impact estimate over one interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactRecord {
    pub variable: String,
    pub region: String,
    pub interval: FeatureInterval,
    pub mean_diff: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `mean_diff / se`; `±inf` when every member agrees on a nonzero
    /// difference.
    pub score: f64,
    pub ci_level: f64,
    pub ensemble_size: usize,
}

impl ImpactRecord {
    /// True when the confidence interval excludes zero.
    pub fn is_significant(&self) -> bool {
        self.ci_low > 0.0 || self.ci_high < 0.0
    }
}

/// Mean of `u - v` over the 1-based inclusive interval.
pub fn interval_mean_diff(u: &[f64], v: &[f64], interval: &FeatureInterval) -> f64 {
    let (i, j) = (interval.start_index, interval.end_index);
    let mut acc = CompensatedSum::default();
    for (a, b) in u[i - 1..j].iter().zip(&v[i - 1..j]) {
        acc.add(a - b);
    }
    acc.value() / (j - i + 1) as f64
}

/// Critical value cache for one `(ci_level, E)` combination.
#[derive(Debug, Clone, Copy)]
pub struct ImpactCalculator {
    ci_level: f64,
    ensemble_size: usize,
    critical: f64,
}

impl ImpactCalculator {
    pub fn new(ci_level: f64, ensemble_size: usize) -> Result<Self> {
        if !(ci_level > 0.0 && ci_level < 1.0) {
            return Err(Error::InvalidParameters(format!(
                "ci_level must lie in (0, 1), got {ci_level}"
            )));
        }
        if ensemble_size < 2 {
            return Err(Error::NoVariance(ensemble_size));
        }
        let critical = t_quantile((1.0 - ci_level) / 2.0, (ensemble_size - 1) as f64);
        Ok(Self {
            ci_level,
            ensemble_size,
            critical,
        })
    }

    /// Two-sided critical value `t_{(1 - ci_level)/2, E - 1}`.
    pub fn critical(&self) -> f64 {
        self.critical
    }

    pub fn record(&self, pair: &EnsemblePair, interval: &FeatureInterval) -> Result<ImpactRecord> {
        if pair.ensemble_size() != self.ensemble_size {
            return Err(Error::InvalidInput(format!(
                "calculator built for E={} applied to E={}",
                self.ensemble_size,
                pair.ensemble_size()
            )));
        }
        if interval.start_index == 0 || interval.end_index > pair.len() {
            return Err(Error::InvalidInput(format!(
                "interval [{}, {}] outside series of length {}",
                interval.start_index,
                interval.end_index,
                pair.len()
            )));
        }
        let diffs: Vec<f64> = pair
            .forced()
            .iter()
            .zip(pair.counterfactual())
            .map(|(u, v)| interval_mean_diff(u, v, interval))
            .collect();
        let e = diffs.len() as f64;
        let w_bar = mean(&diffs);
        let se = sample_variance(&diffs, w_bar).sqrt() / e.sqrt();
        let half = self.critical * se;
        let score = if se > 0.0 {
            w_bar / se
        } else if w_bar == 0.0 {
            0.0
        } else {
            w_bar.signum() * f64::INFINITY
        };
        Ok(ImpactRecord {
            variable: pair.variable.clone(),
            region: pair.region.clone(),
            interval: *interval,
            mean_diff: w_bar,
            se,
            ci_low: w_bar - half,
            ci_high: w_bar + half,
            score,
            ci_level: self.ci_level,
            ensemble_size: self.ensemble_size,
        })
    }
}

/// Impact statistics of one pair over one interval.
pub fn impact_record(
    pair: &EnsemblePair,
    interval: &FeatureInterval,
    ci_level: f64,
) -> Result<ImpactRecord> {
    ImpactCalculator::new(ci_level, pair.ensemble_size())?.record(pair, interval)
}

pub fn impacts_for_features(
    pair: &EnsemblePair,
    intervals: &[FeatureInterval],
    ci_level: f64,
) -> Result<Vec<ImpactRecord>> {
    let calc = ImpactCalculator::new(ci_level, pair.ensemble_size())?;
    intervals.iter().map(|iv| calc.record(pair, iv)).collect()
}

/// Temporal resolution at which impacts are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Daily,
    Monthly,
    Entropy,
}

impl Granularity {
    pub const ALL: [Granularity; 3] = [Granularity::Daily, Granularity::Monthly, Granularity::Entropy];

    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Daily => "daily",
            Granularity::Monthly => "monthly",
            Granularity::Entropy => "entropy",
        }
    }
}

impl std::str::FromStr for Granularity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "daily" => Ok(Granularity::Daily),
            "monthly" => Ok(Granularity::Monthly),
            "entropy" => Ok(Granularity::Entropy),
            other => Err(Error::Config(format!("unknown granularity `{other}`"))),
        }
    }
}

/// Partition of the pair's days at the requested granularity.
pub fn feature_intervals(
    pair: &EnsemblePair,
    mode: Granularity,
    params: &EntropyParams,
    cfg: &ChangepointConfig,
) -> Result<Vec<FeatureInterval>> {
    let n = pair.len();
    let start = pair.start_date;
    Ok(match mode {
        Granularity::Daily => (1..=n)
            .map(|i| FeatureInterval::from_indices(i, i, start))
            .collect(),
        Granularity::Monthly => {
            let mut out = Vec::new();
            let mut first = 1;
            for i in 2..=n {
                let (a, b) = (pair.date_of(i - 1), pair.date_of(i));
                if (a.year(), a.month()) != (b.year(), b.month()) {
                    out.push(FeatureInterval::from_indices(first, i - 1, start));
                    first = i;
                }
            }
            out.push(FeatureInterval::from_indices(first, n, start));
            out
        }
        Granularity::Entropy => {
            let series = entropy_series(pair, params)?;
            let cps = detect_changepoints(&series, cfg)?;
            map_to_time(&cps, params, n, start)
        }
    })
}

pub fn granularity_compare(
    pair: &EnsemblePair,
    mode: Granularity,
    params: &EntropyParams,
    cfg: &ChangepointConfig,
    ci_level: f64,
) -> Result<Vec<ImpactRecord>> {
    let intervals = feature_intervals(pair, mode, params, cfg)?;
    impacts_for_features(pair, &intervals, ci_level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(1991, 1, 1).unwrap()
    }

    fn pair_from_diffs(diffs: &[f64], len: usize) -> EnsemblePair {
        let cf: Vec<Vec<f64>> = (0..diffs.len())
            .map(|e| (0..len).map(|t| ((t * 7 + e) % 5) as f64).collect())
            .collect();
        let forced = cf
            .iter()
            .zip(diffs)
            .map(|(c, d)| c.iter().map(|x| x + d).collect())
            .collect();
        EnsemblePair::from_members("TREFHT", "Temperate North", date(), forced, cf).unwrap()
    }

    #[test]
    fn mean_diff_examples() {
        let iv = FeatureInterval::from_indices(1, 3, date());
        assert_eq!(interval_mean_diff(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], &iv), 0.0);
        assert_eq!(interval_mean_diff(&[1.5, 2.5, 3.5], &[1.0, 2.0, 3.0], &iv), 0.5);
        assert_eq!(interval_mean_diff(&[1.0, 2.0, 3.0], &[0.0, 0.0, 3.0], &iv), 1.0);
    }

    #[test]
    fn four_member_hand_example() {
        let pair = pair_from_diffs(&[1.0, 2.0, 3.0, 4.0], 10);
        let iv = FeatureInterval::from_indices(1, 10, date());
        let r = impact_record(&pair, &iv, 0.99).unwrap();
        assert!((r.mean_diff - 2.5).abs() < 1e-12);
        assert!((r.se - 0.645497).abs() < 1e-6);
        assert!((r.score - 3.872983).abs() < 1e-6);
        assert!((r.ci_low + 1.270).abs() < 1e-3);
        assert!((r.ci_high - 6.270).abs() < 1e-3);
        assert!(!r.is_significant());
    }

    #[test]
    fn identical_ensembles_score_zero() {
        let pair = pair_from_diffs(&[0.0; 5], 20);
        let iv = FeatureInterval::from_indices(1, 20, date());
        let r = impact_record(&pair, &iv, 0.99).unwrap();
        assert_eq!((r.mean_diff, r.score, r.se), (0.0, 0.0, 0.0));
        assert!(!r.is_significant());
    }

    #[test]
    fn zero_se_nonzero_mean_is_infinite() {
        let pair = pair_from_diffs(&[-0.25; 3], 20);
        let iv = FeatureInterval::from_indices(4, 9, date());
        let r = impact_record(&pair, &iv, 0.99).unwrap();
        assert_eq!(r.score, f64::NEG_INFINITY);
        assert!(r.is_significant());
    }

    #[test]
    fn single_member_has_no_variance() {
        let pair = pair_from_diffs(&[1.0], 20);
        let iv = FeatureInterval::from_indices(1, 20, date());
        assert_eq!(impact_record(&pair, &iv, 0.99), Err(Error::NoVariance(1)));
    }

    #[test]
    fn partition_means_are_duration_weighted() {
        let len = 90;
        let cf: Vec<Vec<f64>> = (0..4).map(|e| (0..len).map(|t| (t as f64 * 0.37 + e as f64).sin()).collect()).collect();
        let forced: Vec<Vec<f64>> = cf
            .iter()
            .enumerate()
            .map(|(e, c)| c.iter().enumerate().map(|(t, x)| x + (t as f64 * 0.11 * (e + 1) as f64).cos()).collect())
            .collect();
        let pair = EnsemblePair::from_members("V", "R", date(), forced, cf).unwrap();
        let parts = [
            FeatureInterval::from_indices(1, 17, date()),
            FeatureInterval::from_indices(18, 60, date()),
            FeatureInterval::from_indices(61, 90, date()),
        ];
        let recs = impacts_for_features(&pair, &parts, 0.99).unwrap();
        assert_eq!(recs.len(), 3);
        let weighted: f64 = recs.iter().map(|r| r.mean_diff * r.interval.len() as f64).sum::<f64>() / len as f64;
        let whole = impact_record(&pair, &FeatureInterval::from_indices(1, 90, date()), 0.99).unwrap();
        assert!((weighted - whole.mean_diff).abs() < 1e-12);
    }

    #[test]
    fn daily_and_monthly_counts() {
        let pair = pair_from_diffs(&[0.1, 0.2, 0.3], 730);
        let p = EntropyParams::default();
        let c = ChangepointConfig::default();
        assert_eq!(feature_intervals(&pair, Granularity::Monthly, &p, &c).unwrap().len(), 24);
        let daily = feature_intervals(&pair, Granularity::Daily, &p, &c).unwrap();
        assert_eq!(daily.len(), 730);
        assert!(daily.iter().all(|iv| iv.start_index == iv.end_index));
    }
}
