use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default histogram resolution of the mode estimate.
pub const DEFAULT_MODE_BINS: usize = 50;

/// Summary of a Monte-Carlo sample around a two-sided percentile pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PercentileStats {
    pub count: usize,
    pub mean: f64,
    /// Centre of the most populated histogram bin.
    pub mode: f64,
    /// Population variance.
    pub variance: f64,
    /// `P_p`.
    pub upper: f64,
    /// `P_(100−p)`.
    pub lower: f64,
    pub min: f64,
    pub max: f64,
}

fn check(samples: &[f64]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::Empty("percentile samples"));
    }
    if let Some(v) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!("non-finite sample {v}")));
    }
    Ok(())
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p * n as f64) / 100.0 - 1e-9).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Nearest-rank percentile: the smallest sample with at least `p`% of the
/// sample at or below it.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    check(samples)?;
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Parameter(format!("percentile must lie in [0, 100], got {p}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(nearest_rank(&sorted, p))
}

/// Mean, histogram mode, variance, `P_p`, `P_(100−p)` and extremes.
pub fn percentile_stats(samples: &[f64], p: f64, bins: usize) -> Result<PercentileStats> {
    check(samples)?;
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Parameter(format!("percentile must lie in [0, 100], got {p}")));
    }
    if bins == 0 {
        return Err(Error::Parameter("mode histogram needs at least one bin".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let variance = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let (min, max) = (sorted[0], sorted[sorted.len() - 1]);
    Ok(PercentileStats {
        count: sorted.len(),
        mean,
        mode: histogram_mode(&sorted, min, max, bins),
        variance,
        upper: nearest_rank(&sorted, p),
        lower: nearest_rank(&sorted, 100.0 - p),
        min,
        max,
    })
}

fn histogram_mode(samples: &[f64], min: f64, max: f64, bins: usize) -> f64 {
    let width = (max - min) / bins as f64;
    if !(width > 0.0) {
        return min;
    }
    let mut counts = vec![0usize; bins];
    for v in samples {
        let b = (((v - min) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    // first bin wins ties
    let best = counts.iter().enumerate().fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
    min + (best as f64 + 0.5) * width
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_sample_collapses_every_statistic() {
        let s = percentile_stats(&[2.5; 17], 99.0, DEFAULT_MODE_BINS).unwrap();
        assert_eq!((s.mean, s.mode, s.upper, s.lower, s.max), (2.5, 2.5, 2.5, 2.5, 2.5));
        assert_eq!(s.variance, 0.0);
    }

    #[test]
    fn nearest_rank_on_one_to_hundred() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&xs, 99.0).unwrap(), 99.0);
        assert_eq!(percentile(&xs, 1.0).unwrap(), 1.0);
        assert_eq!(percentile(&xs, 100.0).unwrap(), 100.0);
        let s = percentile_stats(&xs, 99.0, 10).unwrap();
        assert_eq!((s.upper, s.lower), (99.0, 1.0));
    }

    #[test]
    fn two_point_low_percentile_is_the_smaller_point() {
        assert_eq!(percentile(&[1.0, 0.0], 1.0).unwrap(), 0.0);
    }

    #[test]
    fn mode_finds_the_dense_cluster() {
        let mut xs = vec![0.0, 10.0];
        xs.extend(std::iter::repeat_n(7.05, 20));
        let s = percentile_stats(&xs, 99.0, 100).unwrap();
        assert!((s.mode - 7.05).abs() <= 0.05 + 1e-12);
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(percentile(&[], 50.0).is_err());
        assert!(percentile_stats(&[1.0, f64::NAN], 99.0, 10).is_err());
        assert!(percentile(&[1.0], 101.0).is_err());
    }

    proptest! {
        #[test]
        fn percentiles_are_ordered_samples(xs in prop::collection::vec(-1e3..1e3f64, 1..200), p in 50.0..100.0f64) {
            let s = percentile_stats(&xs, p, DEFAULT_MODE_BINS).unwrap();
            prop_assert!(s.min <= s.lower && s.lower <= s.upper && s.upper <= s.max);
            prop_assert!(xs.contains(&s.upper) && xs.contains(&s.lower));
            prop_assert!(s.mode >= s.min && s.mode <= s.max);
            prop_assert!(s.variance >= 0.0);
        }
    }
}
