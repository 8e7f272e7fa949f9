//! Paired synthetic ensembles with known injected impacts.
//!
//! Every member is `mean + seasonal sinusoid + AR(1) noise`. The forced and
//! counterfactual members share that background; the forced member adds the
//! impact kernels, a ramped step per impact. Each impact may also widen the
//! member-to-member spread while it is active (`variability`), and
//! `divergence_day` lets the forced noise decouple from its counterfactual
//! from a given day on. Both are switched off when `magnitude_scale` is zero,
//! so a zero-forcing run yields identical scenarios.
//!
//! Every random draw comes from a ChaCha8 stream keyed by
//! `(member, variable, region, purpose)`, so output does not depend on the
//! order in which members or pairs are generated.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::changepoint::FeatureInterval;
use crate::error::{Error, Result};
use crate::model::{EnsemblePair, ZONAL_REGIONS};
use crate::stats::ImpactRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSpec {
    #[serde(default)]
    pub mean: f64,
    pub seasonal_amplitude: f64,
    /// AR(1) coefficient in `[0, 1)`.
    pub phi: f64,
    /// Stationary standard deviation of the AR(1) noise.
    pub noise_sd: f64,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        Self {
            mean: 0.0,
            seasonal_amplitude: 5.0,
            phi: 0.7,
            noise_sd: 0.3,
        }
    }
}

/// Background for one variable, optionally restricted to one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundEntry {
    pub variable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
    #[serde(default)]
    pub mean: f64,
    pub seasonal_amplitude: f64,
    pub phi: f64,
    pub noise_sd: f64,
}

impl BackgroundEntry {
    pub fn spec(&self) -> BackgroundSpec {
        BackgroundSpec {
            mean: self.mean,
            seasonal_amplitude: self.seasonal_amplitude,
            phi: self.phi,
            noise_sd: self.noise_sd,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpactSpec {
    pub variable: String,
    pub region: String,
    /// 1-based first day at full amplitude (ramp centred here).
    pub start_day: usize,
    /// 1-based last day of the impact (ramp centred here).
    pub end_day: usize,
    pub amplitude: f64,
    /// Width in days of the linear onset and decay ramps; 0 is a hard step.
    #[serde(default)]
    pub onset_width: f64,
    /// Ratio of the member spread inside the impact to the background noise
    /// spread. 1 leaves the spread unchanged.
    #[serde(default = "one")]
    pub variability: f64,
}

impl ImpactSpec {
    /// Unscaled kernel value at 1-based day `t`, in `[0, 1]`.
    pub fn kernel(&self, t: usize) -> f64 {
        ramp_kernel(t, self.start_day, self.end_day, self.onset_width)
    }
}

fn ramp_kernel(t: usize, start: usize, end: usize, width: f64) -> f64 {
    let t = t as f64;
    let (s, e) = (start as f64, end as f64);
    if width <= 0.0 {
        return if t >= s && t <= e { 1.0 } else { 0.0 };
    }
    let up = ((t - s + width / 2.0) / width).clamp(0.0, 1.0);
    let down = ((e + width / 2.0 - t) / width).clamp(0.0, 1.0);
    up.min(down)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub ensemble_size: usize,
    pub days: usize,
    pub start_date: NaiveDate,
    pub variables: Vec<String>,
    pub regions: Vec<String>,
    /// Used for any `(variable, region)` without a matching entry.
    pub default_background: BackgroundSpec,
    pub background: Vec<BackgroundEntry>,
    pub impacts: Vec<ImpactSpec>,
    pub magnitude_scale: f64,
    /// 1-based day from which forced noise innovations are drawn
    /// independently of the counterfactual.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub divergence_day: Option<usize>,
}

impl Default for SynthConfig {
    /// Nine members over four years from June 1991, three variables over six
    /// zonal bands, with an aerosol → clear-sky flux → temperature cascade that
    /// ends in a −0.6 K, 200-day cooling of Temperate North.
    fn default() -> Self {
        let bg = |variable: &str, mean, seasonal_amplitude, noise_sd| BackgroundEntry {
            variable: variable.into(),
            region: None,
            mean,
            seasonal_amplitude,
            phi: 0.7,
            noise_sd,
        };
        let impact = |variable: &str, region: &str, start_day, end_day, amplitude| ImpactSpec {
            variable: variable.into(),
            region: region.into(),
            start_day,
            end_day,
            amplitude,
            onset_width: 10.0,
            variability: 3.0,
        };
        Self {
            seed: 1991,
            ensemble_size: 9,
            days: 1461,
            start_date: NaiveDate::from_ymd_opt(1991, 6, 1).unwrap(),
            variables: ["AEROD_v", "FSDSC", "TREFHT"].map(String::from).to_vec(),
            regions: ZONAL_REGIONS[1..].iter().map(|r| r.to_string()).collect(),
            default_background: BackgroundSpec::default(),
            background: vec![
                bg("AEROD_v", 0.12, 0.02, 0.01),
                bg("FSDSC", 250.0, 40.0, 3.0),
                bg("TREFHT", 283.0, 5.0, 0.3),
            ],
            impacts: vec![
                impact("AEROD_v", "Tropical", 20, 400, 0.05),
                impact("AEROD_v", "Subtropical North", 60, 420, 0.03),
                impact("FSDSC", "Tropical", 30, 420, -12.0),
                impact("FSDSC", "Subtropical North", 80, 440, -8.0),
                impact("FSDSC", "Temperate North", 150, 480, -6.0),
                impact("TREFHT", "Temperate North", 300, 499, -0.6),
            ],
            magnitude_scale: 1.0,
            divergence_day: None,
        }
    }
}

impl SynthConfig {
    /// Same settings with no impacts and forced noise independent of the
    /// counterfactual from day 1: a pure-noise difference.
    pub fn null(seed: u64) -> Self {
        Self {
            seed,
            impacts: Vec::new(),
            divergence_day: Some(1),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.ensemble_size == 0 {
            return cfg("ensemble_size must be >= 1".into());
        }
        if self.days == 0 {
            return cfg("days must be >= 1".into());
        }
        if self.variables.is_empty() || self.regions.is_empty() {
            return cfg("variables and regions must be non-empty".into());
        }
        if !(self.magnitude_scale.is_finite() && self.magnitude_scale >= 0.0) {
            return cfg(format!("magnitude_scale must be finite and >= 0, got {}", self.magnitude_scale));
        }
        if let Some(d) = self.divergence_day {
            if d == 0 || d > self.days {
                return cfg(format!("divergence_day {d} outside [1, {}]", self.days));
            }
        }
        let specs = std::iter::once(self.default_background).chain(self.background.iter().map(BackgroundEntry::spec));
        for b in specs {
            if !(0.0..1.0).contains(&b.phi) {
                return cfg(format!("AR(1) coefficient must lie in [0, 1), got {}", b.phi));
            }
            if !(b.noise_sd.is_finite() && b.noise_sd >= 0.0) || !b.seasonal_amplitude.is_finite() || !b.mean.is_finite() {
                return cfg("background parameters must be finite with noise_sd >= 0".into());
            }
        }
        for i in &self.impacts {
            if !self.variables.contains(&i.variable) || !self.regions.contains(&i.region) {
                return cfg(format!("impact on undeclared pair {}/{}", i.variable, i.region));
            }
            if i.start_day == 0 || i.start_day > i.end_day || i.end_day > self.days {
                return cfg(format!(
                    "impact interval [{}, {}] for {}/{} outside [1, {}]",
                    i.start_day, i.end_day, i.variable, i.region, self.days
                ));
            }
            if !i.amplitude.is_finite() || !(i.onset_width.is_finite() && i.onset_width >= 0.0) {
                return cfg("impact amplitude and onset_width must be finite, width >= 0".into());
            }
            if !(i.variability.is_finite() && i.variability >= 1.0) {
                return cfg(format!("impact variability must be >= 1, got {}", i.variability));
            }
        }
        Ok(())
    }

    fn background_for(&self, variable: &str, region: &str) -> BackgroundSpec {
        let exact = self
            .background
            .iter()
            .find(|b| b.variable == variable && b.region.as_deref() == Some(region));
        let by_var = || self.background.iter().find(|b| b.variable == variable && b.region.is_none());
        exact.or_else(by_var).map(BackgroundEntry::spec).unwrap_or(self.default_background)
    }
}

/// One injected impact with its scaled amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueImpact {
    pub variable: String,
    pub region: String,
    pub start_day: usize,
    pub end_day: usize,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// `amplitude * magnitude_scale`.
    pub amplitude: f64,
    pub onset_width: f64,
}

impl TrueImpact {
    pub fn kernel(&self, t: usize) -> f64 {
        self.amplitude * ramp_kernel(t, self.start_day, self.end_day, self.onset_width)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub days: usize,
    pub start_date: NaiveDate,
    pub impacts: Vec<TrueImpact>,
}

impl GroundTruth {
    pub fn for_pair<'a>(&'a self, variable: &'a str, region: &'a str) -> impl Iterator<Item = &'a TrueImpact> + 'a {
        self.impacts
            .iter()
            .filter(move |i| i.variable == variable && i.region == region)
    }

    /// Mean injected difference over a 1-based inclusive interval.
    pub fn expected_mean_diff(&self, variable: &str, region: &str, interval: &FeatureInterval) -> f64 {
        let total: f64 = (interval.start_index..=interval.end_index)
            .map(|t| self.for_pair(variable, region).map(|i| i.kernel(t)).sum::<f64>())
            .sum();
        total / interval.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    /// One pair per `(variable, region)`, variables outermost, in config order.
    pub pairs: Vec<EnsemblePair>,
    pub truth: GroundTruth,
}

#[derive(Clone, Copy)]
enum Purpose {
    Background,
    Divergence,
    Spread(usize),
}

fn stream(seed: u64, member: usize, var: usize, region: usize, purpose: Purpose) -> ChaCha8Rng {
    let p = match purpose {
        Purpose::Background => 0,
        Purpose::Divergence => 1,
        Purpose::Spread(i) => 2 + i as u64,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((member as u64) << 48) | ((var as u64) << 36) | ((region as u64) << 24) | p);
    rng
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// AR(1) with stationary standard deviation `sd`, driven by standard normal
/// innovations `z`. From `switch_at` (0-based) on, innovations come from `alt`.
fn ar1(z: &[f64], alt: Option<(&[f64], usize)>, phi: f64, sd: f64) -> Vec<f64> {
    let scale = sd * (1.0 - phi * phi).sqrt();
    let mut out = Vec::with_capacity(z.len());
    let mut prev = 0.0;
    for t in 0..z.len() {
        let zt = match alt {
            Some((a, at)) if t >= at => a[t],
            _ => z[t],
        };
        let x = if t == 0 { sd * zt } else { phi * prev + scale * zt };
        out.push(x);
        prev = x;
    }
    out
}

/// Generates every configured pair and the matching ground truth.
pub fn generate_pair(cfg: &SynthConfig) -> Result<SynthOutput> {
    cfg.validate()?;
    let n = cfg.days;
    let active = cfg.magnitude_scale > 0.0;
    let mut pairs = Vec::with_capacity(cfg.variables.len() * cfg.regions.len());
    for (vi, variable) in cfg.variables.iter().enumerate() {
        for (ri, region) in cfg.regions.iter().enumerate() {
            let bg = cfg.background_for(variable, region);
            let impacts: Vec<(usize, &ImpactSpec)> = cfg
                .impacts
                .iter()
                .enumerate()
                .filter(|(_, i)| &i.variable == variable && &i.region == region)
                .collect();
            let seasonal: Vec<f64> = (0..n)
                .map(|t| bg.mean + bg.seasonal_amplitude * (std::f64::consts::TAU * t as f64 / 365.25).sin())
                .collect();
            let signal: Vec<f64> = (1..=n)
                .map(|t| {
                    impacts
                        .iter()
                        .map(|(_, i)| cfg.magnitude_scale * i.amplitude * i.kernel(t))
                        .sum()
                })
                .collect();

            let mut forced = Vec::with_capacity(cfg.ensemble_size);
            let mut counterfactual = Vec::with_capacity(cfg.ensemble_size);
            for e in 0..cfg.ensemble_size {
                let z = normals(&mut stream(cfg.seed, e, vi, ri, Purpose::Background), n);
                let noise = ar1(&z, None, bg.phi, bg.noise_sd);
                let cf: Vec<f64> = seasonal.iter().zip(&noise).map(|(s, x)| s + x).collect();
                if !active {
                    forced.push(cf.clone());
                    counterfactual.push(cf);
                    continue;
                }

                let forced_base = match cfg.divergence_day {
                    Some(d) => {
                        let alt = normals(&mut stream(cfg.seed, e, vi, ri, Purpose::Divergence), n);
                        let noise_f = ar1(&z, Some((&alt, d - 1)), bg.phi, bg.noise_sd);
                        seasonal.iter().zip(&noise_f).map(|(s, x)| s + x).collect()
                    }
                    None => cf.clone(),
                };
                let mut f: Vec<f64> = forced_base.iter().zip(&signal).map(|(b, k)| b + k).collect();
                for &(idx, imp) in &impacts {
                    if imp.variability > 1.0 {
                        let zs = normals(&mut stream(cfg.seed, e, vi, ri, Purpose::Spread(idx)), n);
                        let extra = ar1(&zs, None, bg.phi, bg.noise_sd);
                        let gain = imp.variability - 1.0;
                        for (t, (fv, x)) in f.iter_mut().zip(&extra).enumerate() {
                            *fv += gain * imp.kernel(t + 1) * x;
                        }
                    }
                }
                forced.push(f);
                counterfactual.push(cf);
            }
            pairs.push(EnsemblePair::from_members(
                variable.clone(),
                region.clone(),
                cfg.start_date,
                forced,
                counterfactual,
            )?);
        }
    }

    let day = |d: usize| cfg.start_date + chrono::Duration::days(d as i64 - 1);
    let truth = GroundTruth {
        days: n,
        start_date: cfg.start_date,
        impacts: cfg
            .impacts
            .iter()
            .map(|i| TrueImpact {
                variable: i.variable.clone(),
                region: i.region.clone(),
                start_day: i.start_day,
                end_day: i.end_day,
                start_date: day(i.start_day),
                end_date: day(i.end_day),
                amplitude: i.amplitude * cfg.magnitude_scale,
                onset_width: i.onset_width,
            })
            .collect(),
    };
    Ok(SynthOutput { pairs, truth })
}

/// Inclusive day-count Jaccard index of two 1-based intervals.
pub fn interval_jaccard(a: (usize, usize), b: (usize, usize)) -> f64 {
    let inter = (a.1.min(b.1) + 1).saturating_sub(a.0.max(b.0));
    let union = (a.1 - a.0 + 1) + (b.1 - b.0 + 1) - inter;
    inter as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpactRecovery {
    pub variable: String,
    pub region: String,
    pub start_day: usize,
    pub end_day: usize,
    /// Best Jaccard among significant records of the same pair and sign.
    pub best_jaccard: f64,
    /// Index into `found` of the record achieving `best_jaccard`.
    pub best_match: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryMetrics {
    pub impacts: Vec<ImpactRecovery>,
    /// Fraction of significant records that overlap a same-sign true impact
    /// of the same pair; 1.0 when nothing is significant.
    pub precision: f64,
    /// Fraction of true impacts overlapped by at least one such record; 0.0
    /// when nothing is significant, 1.0 when there is no truth.
    pub recall: f64,
    pub significant: usize,
}

fn matches(record: &ImpactRecord, truth: &TrueImpact) -> bool {
    record.variable == truth.variable
        && record.region == truth.region
        && record.mean_diff.signum() == truth.amplitude.signum()
        && truth.amplitude != 0.0
}

pub fn score_recovery(found: &[ImpactRecord], truth: &GroundTruth) -> RecoveryMetrics {
    let significant: Vec<(usize, &ImpactRecord)> =
        found.iter().enumerate().filter(|(_, r)| r.is_significant()).collect();
    let overlap = |r: &ImpactRecord, t: &TrueImpact| {
        interval_jaccard((r.interval.start_index, r.interval.end_index), (t.start_day, t.end_day))
    };

    let impacts: Vec<ImpactRecovery> = truth
        .impacts
        .iter()
        .map(|t| {
            let best = significant
                .iter()
                .filter(|(_, r)| matches(r, t))
                .map(|&(i, r)| (i, overlap(r, t)))
                .filter(|&(_, j)| j > 0.0)
                .fold(None, |acc: Option<(usize, f64)>, (i, j)| match acc {
                    Some((_, bj)) if bj >= j => acc,
                    _ => Some((i, j)),
                });
            ImpactRecovery {
                variable: t.variable.clone(),
                region: t.region.clone(),
                start_day: t.start_day,
                end_day: t.end_day,
                best_jaccard: best.map_or(0.0, |b| b.1),
                best_match: best.map(|b| b.0),
            }
        })
        .collect();

    let true_positive = significant
        .iter()
        .filter(|(_, r)| truth.impacts.iter().any(|t| matches(r, t) && overlap(r, t) > 0.0))
        .count();
    let precision = if significant.is_empty() {
        1.0
    } else {
        true_positive as f64 / significant.len() as f64
    };
    let recall = if truth.impacts.is_empty() {
        1.0
    } else {
        impacts.iter().filter(|i| i.best_match.is_some()).count() as f64 / truth.impacts.len() as f64
    };
    RecoveryMetrics {
        impacts,
        precision,
        recall,
        significant: significant.len(),
    }
}

/// Ground-truth sidecar as pretty JSON.
pub fn truth_json(truth: &GroundTruth, config_hash: Option<&str>) -> String {
    #[derive(Serialize)]
    struct Stamped<'a> {
        #[serde(skip_serializing_if = "Option::is_none")]
        config_hash: Option<&'a str>,
        #[serde(flatten)]
        truth: &'a GroundTruth,
    }
    let mut s = serde_json::to_string_pretty(&Stamped { config_hash, truth }).expect("ground truth is serialisable");
    s.push('\n');
    s
}

/// Pairs keyed by `(variable, region)`.
pub fn index_pairs(pairs: &[EnsemblePair]) -> BTreeMap<(String, String), &EnsemblePair> {
    pairs
        .iter()
        .map(|p| ((p.variable.clone(), p.region.clone()), p))
        .collect()
}
