//! Cross-fuzzy entropy between paired windows.
//!
//! For embedding dimension `m`, every window of length `n` yields `n - m`
//! baseline-subtracted template vectors of length `m` and, over the same
//! starting indices, `n - m` vectors of length `m + 1`. Templates from the two
//! windows are compared with the Chebyshev distance and mapped through the
//! exponential membership `exp(-d^r2 / r1)`. The entropy is
//! `ln phi_m - ln phi_{m+1}`, where each `phi` is the mean membership over all
//! `(n - m)^2` template pairs, diagonal included.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{build_windows, EnsemblePair};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyParams {
    /// Embedding dimension.
    pub m: usize,
    /// Fuzzy width.
    pub r1: f64,
    /// Fuzzy exponent.
    pub r2: f64,
    /// Window size in days.
    pub n: usize,
    /// Lag between window starts in days.
    pub p: usize,
}

impl Default for EntropyParams {
    fn default() -> Self {
        Self {
            m: 2,
            r1: 0.2,
            r2: 2.0,
            n: 30,
            p: 9,
        }
    }
}

impl EntropyParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameters("embedding dimension m must be >= 1".into()));
        }
        if !(self.r1.is_finite() && self.r1 > 0.0) || !(self.r2.is_finite() && self.r2 > 0.0) {
            return Err(Error::InvalidParameters(format!(
                "fuzzy parameters must be positive (r1={}, r2={})",
                self.r1, self.r2
            )));
        }
        if self.p == 0 {
            return Err(Error::InvalidParameters("lag p must be >= 1".into()));
        }
        if self.n <= self.m + 1 {
            return Err(Error::InvalidParameters(format!(
                "window size n={} must exceed m + 1 = {}",
                self.n,
                self.m + 1
            )));
        }
        Ok(())
    }

    /// 1-based time index of the midpoint of window `window` (1-based).
    pub fn midpoint(&self, window: usize) -> usize {
        (window - 1) * self.p + self.n.div_ceil(2)
    }
}

/// Exponential fuzzy membership `exp(-d^r2 / r1)`.
#[inline]
pub fn fuzzy_membership(d: f64, r1: f64, r2: f64) -> f64 {
    debug_assert!(d >= 0.0);
    if r2 == 2.0 {
        (-(d * d) / r1).exp()
    } else {
        (-d.powf(r2) / r1).exp()
    }
}

/// Row-major `count x dim` matrix of templates, each minus its own mean.
///
/// Centering goes through differences to the template's first sample, so a
/// constant offset on the input cancels before any rounding of the baseline.
fn centered_templates(x: &[f64], dim: usize, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count * dim);
    let mut diffs = vec![0.0; dim];
    for i in 0..count {
        let t = &x[i..i + dim];
        for (d, v) in diffs.iter_mut().zip(t) {
            *d = v - t[0];
        }
        let baseline = diffs.iter().sum::<f64>() / dim as f64;
        out.extend(diffs.iter().map(|d| d - baseline));
    }
    out
}

/// Mean membership over all template pairs.
///
/// Terms are sorted before the compensated sum so the result depends only on
/// the multiset of memberships, which makes swapping the two windows exact.
fn mean_membership(
    a: &[f64],
    b: &[f64],
    dim: usize,
    count: usize,
    r1: f64,
    r2: f64,
    terms: &mut Vec<f64>,
) -> f64 {
    terms.clear();
    for xi in a.chunks_exact(dim) {
        for yj in b.chunks_exact(dim) {
            let d = xi
                .iter()
                .zip(yj)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            terms.push(fuzzy_membership(d, r1, r2));
        }
    }
    terms.sort_unstable_by(f64::total_cmp);
    let mut acc = CompensatedSum::default();
    for &t in terms.iter() {
        acc.add(t);
    }
    acc.value() / (count * count) as f64
}

/// Cross-fuzzy entropy (nats) of two equal-length windows.
pub fn cross_fuzzy_entropy(u: &[f64], v: &[f64], params: &EntropyParams) -> Result<f64> {
    params.validate()?;
    if u.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "window lengths differ ({} vs {})",
            u.len(),
            v.len()
        )));
    }
    let n = u.len();
    let m = params.m;
    if n <= m + 1 {
        return Err(Error::InvalidInput(format!(
            "window of length {n} too short for embedding dimension {m}"
        )));
    }
    let count = n - m;
    let mut terms = Vec::with_capacity(count * count);

    let xm = centered_templates(u, m, count);
    let ym = centered_templates(v, m, count);
    let phi_m = mean_membership(&xm, &ym, m, count, params.r1, params.r2, &mut terms);

    let xm1 = centered_templates(u, m + 1, count);
    let ym1 = centered_templates(v, m + 1, count);
    let phi_m1 = mean_membership(&xm1, &ym1, m + 1, count, params.r1, params.r2, &mut terms);

    if phi_m == 0.0 || phi_m1 == 0.0 {
        return Err(Error::NumericalUnderflow(format!(
            "mean membership underflowed to zero (phi_m={phi_m:e}, phi_m+1={phi_m1:e})"
        )));
    }
    Ok(phi_m.ln() - phi_m1.ln())
}

/// Per-window entropy values with the window-to-time mapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropySeries {
    pub values: Vec<f64>,
    /// 1-based day index of each window's midpoint.
    pub window_midpoints: Vec<usize>,
    pub params: EntropyParams,
}

impl EntropySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn midpoint_dates(&self, start: NaiveDate) -> Vec<NaiveDate> {
        self.window_midpoints
            .iter()
            .map(|&t| start + chrono::Duration::days(t as i64 - 1))
            .collect()
    }
}

/// Entropy of two aligned single series over sliding windows.
pub fn entropy_series_of(u: &[f64], v: &[f64], params: &EntropyParams) -> Result<EntropySeries> {
    params.validate()?;
    if u.len() != v.len() {
        return Err(Error::InvalidInput(format!(
            "series lengths differ ({} vs {})",
            u.len(),
            v.len()
        )));
    }
    let windows = build_windows(u.len(), params.n, params.p)?;
    let mut values = Vec::with_capacity(windows.len());
    let mut window_midpoints = Vec::with_capacity(windows.len());
    for w in &windows {
        let s = cross_fuzzy_entropy(&u[w.range()], &v[w.range()], params).map_err(|e| {
            Error::Window {
                window: w.index,
                source: Box::new(e),
            }
        })?;
        values.push(s);
        window_midpoints.push(params.midpoint(w.index));
    }
    Ok(EntropySeries {
        values,
        window_midpoints,
        params: *params,
    })
}

/// Entropy between the forced and counterfactual ensemble means.
pub fn entropy_series(pair: &EnsemblePair, params: &EntropyParams) -> Result<EntropySeries> {
    entropy_series_of(&pair.forced_mean(), &pair.counterfactual_mean(), params)
}
