/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Mean taken about the first element, so a constant slice returns that
/// constant exactly.
pub(crate) fn mean(xs: &[f64]) -> f64 {
    let Some(&base) = xs.first() else {
        return f64::NAN;
    };
    let mut acc = CompensatedSum::default();
    for &x in xs {
        acc.add(x - base);
    }
    base + acc.value() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub(crate) fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    let mut acc = CompensatedSum::default();
    for &x in xs {
        let d = x - mean;
        acc.add(d * d);
    }
    acc.value() / (xs.len() - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::default();
        acc.add(1.0);
        for _ in 0..10 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-15).abs() < 1e-30);
    }

    #[test]
    fn variance_of_small_sample() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let m = mean(&xs);
        assert_eq!(m, 2.5);
        assert!((sample_variance(&xs, m) - 5.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_slices_are_exact() {
        for n in 1..40 {
            let xs = vec![0.7; n];
            assert_eq!(mean(&xs), 0.7);
            if n > 1 {
                assert_eq!(sample_variance(&xs, 0.7), 0.0);
            }
        }
    }
}
