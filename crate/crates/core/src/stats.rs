//! Small statistics helpers: running means, batch-means errors for correlated series,
//! compensated summation.

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = CompensatedSum::default();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Mean and standard error of independent samples (Welford).
#[derive(Clone, Copy, Debug, Default)]
pub struct MeanAccumulator {
    n: usize,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanAccumulator::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Number of batches used by [`batch_means`].
pub const DEFAULT_BATCHES: usize = 20;

/// Mean of a correlated series with a batch-means standard error. Trailing samples that do
/// not fill a batch are dropped from the error estimate but kept in the mean.
pub fn batch_means(series: &[f64], batches: usize) -> (f64, f64) {
    let n = series.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(series.iter().copied()) / n as f64;
    let batches = batches.min(n);
    if batches < 2 {
        return (mean, f64::NAN);
    }
    let size = n / batches;
    let means: MeanAccumulator = (0..batches)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    (mean, means.stderr())
}

/// Batch-means estimate of the variance of a correlated series and its standard error,
/// computed from batch-wise second moments about the global mean.
pub fn batch_variance(series: &[f64], batches: usize) -> (f64, f64) {
    let (mean, _) = batch_means(series, batches);
    let sq: Vec<f64> = series.iter().map(|x| (x - mean) * (x - mean)).collect();
    let (var, se) = batch_means(&sq, batches);
    let n = series.len() as f64;
    (var * n / (n - 1.0), se)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.5, -2.0, 3.25, 0.0, 7.0];
        let acc: MeanAccumulator = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 5.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!((acc.mean() - mean).abs() < 1e-15);
        assert!((acc.variance() - var).abs() < 1e-14);
        assert!((acc.stderr() - (var / 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn batch_means_of_constant_series() {
        let (m, se) = batch_means(&[2.0; 400], 20);
        assert_eq!((m, se), (2.0, 0.0));
    }
}
