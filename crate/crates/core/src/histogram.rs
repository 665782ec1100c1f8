//! Equal-width binning of summarizing statistics.
//!
//! Bins are half-open, `[lo + kΔ, lo + (k+1)Δ)`, and a statistic is tallied
//! only when `lo <= t < hi`. Statistics outside the range still count toward
//! [`Histogram::total`], since the sample size enters the Poisson offset.

use crate::error::{FdrError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    centers: Vec<f64>,
    counts: Vec<u64>,
    width: f64,
    total: u64,
    range: (f64, f64),
}

impl Histogram {
    /// Builds a histogram with `ceil((hi - lo) / width)` bins.
    pub fn build(stats: &[f64], width: f64, range: (f64, f64)) -> Result<Self> {
        if stats.is_empty() {
            return Err(FdrError::NoStatistics);
        }
        if let Some(index) = stats.iter().position(|t| !t.is_finite()) {
            return Err(FdrError::NonFinite { index });
        }
        let mut hist = Self::empty(width, range, stats.len() as u64)?;
        for &t in stats {
            if let Some(k) = hist.bin_of(t) {
                hist.counts[k] += 1;
            }
        }
        Ok(hist)
    }

    /// Histogram with zero counts and a given total, used to assemble
    /// counts from another source.
    fn empty(width: f64, range: (f64, f64), total: u64) -> Result<Self> {
        let (lo, hi) = range;
        if !(width > 0.0) || !width.is_finite() {
            return Err(FdrError::InvalidArgument(format!(
                "bin width must be positive, got {width}"
            )));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(FdrError::InvalidArgument(format!(
                "histogram range must satisfy lo < hi, got ({lo}, {hi})"
            )));
        }
        let k = ((hi - lo) / width).ceil() as usize;
        if k < 2 {
            return Err(FdrError::InvalidArgument(format!(
                "histogram needs at least 2 bins, got {k}"
            )));
        }
        let centers = (0..k).map(|i| lo + (i as f64 + 0.5) * width).collect();
        Ok(Self {
            centers,
            counts: vec![0; k],
            width,
            total,
            range,
        })
    }

    /// Assembles a histogram from precomputed counts. `total` must be at
    /// least the sum of counts.
    pub fn from_counts(lo: f64, width: f64, counts: Vec<u64>, total: u64) -> Result<Self> {
        let k = counts.len();
        let hi = lo + k as f64 * width;
        let mut hist = Self::empty(width, (lo, hi), total)?;
        if hist.counts.len() != k {
            // ceil rounding on lo + kΔ may add a spurious bin
            hist.centers.truncate(k);
            hist.counts.truncate(k);
        }
        let sum: u64 = counts.iter().sum();
        if sum > total {
            return Err(FdrError::InvalidArgument(format!(
                "counts sum to {sum}, exceeding total {total}"
            )));
        }
        hist.counts = counts;
        Ok(hist)
    }

    /// Returns a copy with new counts and total on the same bin grid.
    pub fn with_counts(&self, counts: Vec<u64>, total: u64) -> Result<Self> {
        if counts.len() != self.len() {
            return Err(FdrError::DimensionMismatch {
                expected: self.len(),
                got: counts.len(),
            });
        }
        let sum: u64 = counts.iter().sum();
        if sum > total {
            return Err(FdrError::InvalidArgument(format!(
                "counts sum to {sum}, exceeding total {total}"
            )));
        }
        Ok(Self {
            counts,
            total,
            ..self.clone()
        })
    }

    /// Bin index of a single statistic, `None` outside `[lo, hi)`.
    pub fn bin_of(&self, t: f64) -> Option<usize> {
        let (lo, hi) = self.range;
        if !(t >= lo && t < hi) {
            return None;
        }
        let k = ((t - lo) / self.width).floor() as usize;
        Some(k.min(self.len() - 1))
    }

    /// Maps every statistic to its bin.
    pub fn assign_bins(&self, stats: &[f64]) -> Result<Vec<Option<usize>>> {
        if let Some(index) = stats.iter().position(|t| !t.is_finite()) {
            return Err(FdrError::NonFinite { index });
        }
        Ok(stats.iter().map(|&t| self.bin_of(t)).collect())
    }

    /// Bin index of a statistic, clamping out-of-range values to the edge bins.
    pub fn nearest_bin(&self, t: f64) -> usize {
        match self.bin_of(t) {
            Some(k) => k,
            None if t < self.range.0 => 0,
            None => self.len() - 1,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn counts_f64(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Number of statistics, including those outside the range.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }
}
