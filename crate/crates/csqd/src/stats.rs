//! Measurement statistics backing the `stats` CLI command: summary moments,
//! histogram, and normal QQ data for checking how Gaussian the
//! pre-quantization measurements are.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Moment summary of a sample.
#[derive(Clone, Copy, Debug)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl SummaryStats {
    pub fn from_samples(y: &[f64]) -> Result<Self> {
        if y.len() < 2 {
            return Err(Error::invalid("need at least 2 samples"));
        }
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let m2 = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let m3 = y.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
        let m4 = y.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let std = (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let (skewness, excess_kurtosis) = if m2 > 0.0 {
            (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
        } else {
            (0.0, 0.0)
        };
        Ok(SummaryStats {
            count: y.len(),
            mean,
            std,
            skewness,
            excess_kurtosis,
        })
    }
}

/// A histogram over equal-width bins spanning the sample range. A
/// zero-width range is flagged as degenerate and reported as a single bin.
#[derive(Clone, Debug)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub counts: Vec<u64>,
    pub degenerate: bool,
}

pub fn histogram(y: &[f64], bins: usize) -> Result<Histogram> {
    if y.is_empty() || bins == 0 {
        return Err(Error::invalid("histogram needs samples and bins"));
    }
    let min = y.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let max = y.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::invalid("non-finite samples"));
    }
    if min == max {
        return Ok(Histogram {
            centers: vec![min],
            counts: vec![y.len() as u64],
            degenerate: true,
        });
    }
    let width = (max - min) / bins as f64;
    let mut counts = vec![0u64; bins];
    for &v in y {
        let idx = (((v - min) / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let centers = (0..bins)
        .map(|i| min + (i as f64 + 0.5) * width)
        .collect();
    Ok(Histogram {
        centers,
        counts,
        degenerate: false,
    })
}

/// QQ data: sorted samples paired with standard normal quantiles at the
/// plotting positions `(i + 0.5) / n`.
pub fn qq_data(y: &[f64]) -> Result<Vec<(f64, f64)>> {
    if y.len() < 2 {
        return Err(Error::invalid("need at least 2 samples"));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (normal.inverse_cdf((i as f64 + 0.5) / n), v))
        .collect())
}

/// Pearson correlation of the QQ pairs; 1.0 means perfectly Gaussian order
/// statistics. Returns 0 for a degenerate (zero-variance) sample.
pub fn qq_correlation(y: &[f64]) -> Result<f64> {
    let pairs = qq_data(y)?;
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, v) in &pairs {
        sxy += (x - mx) * (v - my);
        sxx += (x - mx) * (x - mx);
        syy += (v - my) * (v - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(0.0);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Pearson chi-squared statistic of byte counts against the uniform
/// distribution over 256 values.
pub fn byte_uniformity_chi2(bytes: &[u8]) -> f64 {
    let mut counts = [0u64; 256];
    for &b in bytes {
        counts[b as usize] += 1;
    }
    let expected = bytes.len() as f64 / 256.0;
    counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}
