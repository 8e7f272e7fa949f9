//! Direct, unoptimised transcriptions used as test oracles.
//!
//! Everything here follows the textbook definitions literally: plain sums,
//! explicit loops, no reuse between dimensions. Shared with the CLI
//! acceptance suite through `#[path]`.

#![allow(dead_code)]

/// Cross-fuzzy entropy of two equal-length windows.
pub fn cross_fuzzy_entropy(u: &[f64], v: &[f64], m: usize, r1: f64, r2: f64) -> f64 {
    let n = u.len();
    assert_eq!(n, v.len());
    let phi = |dim: usize| -> f64 {
        let count = n - m;
        let template = |x: &[f64], i: usize| -> Vec<f64> {
            let w = &x[i..i + dim];
            let mut base = 0.0;
            for a in w {
                base += a;
            }
            base /= dim as f64;
            w.iter().map(|a| a - base).collect()
        };
        let mut total = 0.0;
        for i in 0..count {
            let x = template(u, i);
            for j in 0..count {
                let y = template(v, j);
                let mut d: f64 = 0.0;
                for k in 0..dim {
                    d = d.max((x[k] - y[k]).abs());
                }
                total += (-d.powf(r2) / r1).exp();
            }
        }
        total / (count * count) as f64
    };
    phi(m).ln() - phi(m + 1).ln()
}

/// Sliding-window entropy series; windows of length `n` every `p` days.
pub fn entropy_series(u: &[f64], v: &[f64], n: usize, p: usize, m: usize, r1: f64, r2: f64) -> Vec<f64> {
    let windows = (u.len() - n) / p + 1;
    (0..windows)
        .map(|w| cross_fuzzy_entropy(&u[w * p..w * p + n], &v[w * p..w * p + n], m, r1, r2))
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_sd(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Welch's t statistic and Welch–Satterthwaite degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_sd(a).powi(2), sample_sd(b).powi(2));
    let se2 = va / na + vb / nb;
    let t = (mean(a) - mean(b)) / se2.sqrt();
    let df = se2.powi(2) / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    (t, df)
}

/// Interval impact statistics from per-member forced/counterfactual series
/// over the 1-based inclusive interval `[i, j]`, given the two-sided
/// critical value. Returns `(mean, se, ci_low, ci_high, score)`.
pub fn impact(forced: &[Vec<f64>], cf: &[Vec<f64>], i: usize, j: usize, critical: f64) -> (f64, f64, f64, f64, f64) {
    let w: Vec<f64> = forced
        .iter()
        .zip(cf)
        .map(|(u, v)| {
            let mut s = 0.0;
            for t in i - 1..j {
                s += u[t] - v[t];
            }
            s / (j - i + 1) as f64
        })
        .collect();
    let w_bar = mean(&w);
    let se = sample_sd(&w) / (w.len() as f64).sqrt();
    (w_bar, se, w_bar - critical * se, w_bar + critical * se, w_bar / se)
}

pub mod dag;
