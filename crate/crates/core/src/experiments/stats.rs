//! Aggregation over per-instance values.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub count: usize,
    /// Values dropped because the run failed, was censored, or was non-finite.
    pub excluded: usize,
    pub mean: f64,
    pub median: f64,
    /// Standard error of the mean (sample sd / sqrt(count)); NaN below 2 values.
    pub sem: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Midpoint of the two central order statistics for even lengths.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn sem(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

/// Aggregate the `Some` finite values; everything else counts as excluded.
pub fn aggregate(values: &[Option<f64>]) -> Aggregate {
    let kept: Vec<f64> = values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    Aggregate {
        count: kept.len(),
        excluded: values.len() - kept.len(),
        mean: mean(&kept),
        median: median(&kept),
        sem: sem(&kept),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_fixture() {
        let a = aggregate(&[Some(1.0), Some(2.0), None, Some(4.0), Some(f64::NAN)]);
        assert_eq!(a.count, 3);
        assert_eq!(a.excluded, 2);
        assert!((a.mean - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(a.median, 2.0);
        // sd = sqrt(((4/3)^2 + (1/3)^2 + (5/3)^2) / 2) = sqrt(7/3)
        assert!((a.sem - (7.0f64 / 3.0 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn even_median_and_degenerate() {
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
        assert!(median(&[]).is_nan());
        assert!(sem(&[1.0]).is_nan());
    }
}
