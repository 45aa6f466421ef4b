//! Summary statistics shared by the analysis tools and the chart builder.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

/// Mean computed as `x0 + Σ(x - x0)/n`, which is exact for constant input.
pub fn mean(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    let shift: f64 = values.iter().map(|v| v - first).sum();
    Some(first + shift / values.len() as f64)
}

pub fn population_std(values: &[f64], mean: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / values.len() as f64).sqrt()
}

pub fn summarize(values: &[f64]) -> Option<SummaryStats> {
    let mean = mean(values)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(SummaryStats { count: values.len(), min, max, mean, std: population_std(values, mean) })
}

/// Ordinary least-squares slope of `ys` against `xs`; zero when `xs` has no spread.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let (Some(mx), Some(my)) = (mean(xs), mean(ys)) else {
        return 0.0;
    };
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mean_is_exact() {
        let v = vec![35.2; 9];
        assert_eq!(mean(&v), Some(35.2));
        assert_eq!(summarize(&v).unwrap().std, 0.0);
    }

    #[test]
    fn slope_of_line() {
        let xs: Vec<f64> = (0..50).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 2.0).collect();
        assert!((ols_slope(&xs, &ys) - 3.0).abs() < 1e-12);
        assert_eq!(ols_slope(&[1.0, 1.0], &[2.0, 5.0]), 0.0);
    }
}
