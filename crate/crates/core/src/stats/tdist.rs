//! Student's t tail probabilities and quantiles.

use statrs::function::beta::beta_reg;

/// Upper-tail probability `P(T > x)` for `x >= 0`.
pub fn upper_tail(x: f64, df: f64) -> f64 {
    debug_assert!(x >= 0.0 && df > 0.0);
    if x == 0.0 {
        return 0.5;
    }
    if x.is_infinite() {
        return 0.0;
    }
    0.5 * beta_reg(0.5 * df, 0.5, df / (df + x * x))
}

/// Two-sided p-value `P(|T| >= |t|)`.
pub fn two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    (2.0 * upper_tail(t.abs(), df)).min(1.0)
}

/// Upper-tail quantile: the `x >= 0` with `P(T > x) = tail_prob`.
///
/// Inverts [`upper_tail`] by bracketing and bisection, which is monotone and
/// converges to the last representable bit of `x`.
pub fn t_quantile(tail_prob: f64, df: f64) -> f64 {
    assert!(
        tail_prob > 0.0 && tail_prob <= 0.5,
        "tail probability must lie in (0, 0.5], got {tail_prob}"
    );
    assert!(df > 0.0, "degrees of freedom must be positive, got {df}");
    if tail_prob == 0.5 {
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while upper_tail(hi, df) > tail_prob {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if upper_tail(mid, df) > tail_prob {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
