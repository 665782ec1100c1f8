//! Binned local and tail false discovery rate estimates.
//!
//! `log fdr = log ŷ − log y` and `log Fdr = log(Sŷ) − log(Sy)`, where `S`
//! accumulates half of the current bin plus every bin further into the tail.
//! Covariances follow from the delta method with multinomial count
//! covariance `V̂_N = diag(ŷ) − ŷŷᵀ/N`.
//!
//! Bins where a log ratio is undefined (zero count, or zero tail sum) are
//! masked: their entries are zero in every covariance row and column and they
//! must be skipped downstream.

use nalgebra::{DMatrix, DVector};

use crate::error::{FdrError, Result};
use crate::histogram::Histogram;
use crate::null_model::NullFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TailSide {
    /// Accumulates toward larger statistics.
    Right,
    /// Accumulates toward smaller statistics.
    Left,
}

/// Tail accumulation matrix: ½ on the diagonal, 1 on the tail side.
pub fn tail_matrix(k: usize, side: TailSide) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| match (i.cmp(&j), side) {
        (std::cmp::Ordering::Equal, _) => 0.5,
        (std::cmp::Ordering::Less, TailSide::Right) => 1.0,
        (std::cmp::Ordering::Greater, TailSide::Left) => 1.0,
        _ => 0.0,
    })
}

fn tail_sums(v: &[f64], side: TailSide) -> Vec<f64> {
    let k = v.len();
    let mut out = vec![0.0; k];
    let mut acc = 0.0;
    let order: Box<dyn Iterator<Item = usize>> = match side {
        TailSide::Right => Box::new((0..k).rev()),
        TailSide::Left => Box::new(0..k),
    };
    for i in order {
        out[i] = acc + 0.5 * v[i];
        acc += v[i];
    }
    out
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(FdrError::DimensionMismatch { expected, got })
    }
}

/// Per-bin `log ŷ − log y` with a validity mask (`y > 0`).
pub fn fdr_vector(counts: &[f64], fitted: &[f64]) -> Result<(Vec<f64>, Vec<bool>)> {
    check_len(counts.len(), fitted.len())?;
    let mask: Vec<bool> = counts.iter().map(|&y| y > 0.0).collect();
    let log_fdr = counts
        .iter()
        .zip(fitted)
        .map(|(&y, &yh)| if y > 0.0 { yh.ln() - y.ln() } else { f64::NAN })
        .collect();
    Ok((log_fdr, mask))
}

/// Per-bin `log(Sŷ) − log(Sy)` with a validity mask (`(Sy)_k > 0`).
pub fn tail_fdr_vector(counts: &[f64], fitted: &[f64], side: TailSide) -> Result<(Vec<f64>, Vec<bool>)> {
    check_len(counts.len(), fitted.len())?;
    let sy = tail_sums(counts, side);
    let syh = tail_sums(fitted, side);
    let mask: Vec<bool> = sy.iter().map(|&s| s > 0.0).collect();
    let log_tail = sy
        .iter()
        .zip(&syh)
        .map(|(&s, &sh)| if s > 0.0 { sh.ln() - s.ln() } else { f64::NAN })
        .collect();
    Ok((log_tail, mask))
}

/// `M V̂_N Mᵀ`, symmetrized, with masked rows/columns zeroed and tiny
/// negative diagonals floored.
fn sandwich(m: &DMatrix<f64>, fitted: &[f64], total: f64, mask: &[bool]) -> DMatrix<f64> {
    let yh = DVector::from_column_slice(fitted);
    // M diag(ŷ) Mᵀ − (Mŷ)(Mŷ)ᵀ / N
    let mut scaled = m.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= fitted[j];
    }
    let my = m * &yh;
    let mut cov = scaled * m.transpose() - (&my * my.transpose()) / total;
    let sym = (&cov + cov.transpose()) * 0.5;
    cov = sym;
    let k = mask.len();
    for i in 0..k {
        for j in 0..k {
            if !mask[i] || !mask[j] {
                cov[(i, j)] = 0.0;
            }
        }
        if cov[(i, i)] < 0.0 {
            cov[(i, i)] = 0.0;
        }
    }
    cov
}

/// Delta-method covariance of `log fdr` with `A = D_y − diag(y)⁻¹`.
pub fn cov_log_fdr(counts: &[f64], fitted: &[f64], influence: &DMatrix<f64>, total: f64) -> Result<DMatrix<f64>> {
    let k = counts.len();
    check_len(k, fitted.len())?;
    check_len(k, influence.nrows())?;
    check_len(k, influence.ncols())?;
    let mask: Vec<bool> = counts.iter().map(|&y| y > 0.0).collect();
    let mut a = influence.clone();
    for i in 0..k {
        if mask[i] {
            a[(i, i)] -= 1.0 / counts[i];
        }
    }
    Ok(sandwich(&a, fitted, total, &mask))
}

/// Delta-method covariance of `log Fdr` with
/// `B = Û⁻¹ S V̂ D_y − U⁻¹ S`, `U = diag(Sy)`, `Û = diag(Sŷ)`.
pub fn cov_log_tail_fdr(
    counts: &[f64],
    fitted: &[f64],
    influence: &DMatrix<f64>,
    total: f64,
    side: TailSide,
) -> Result<DMatrix<f64>> {
    let k = counts.len();
    check_len(k, fitted.len())?;
    check_len(k, influence.nrows())?;
    check_len(k, influence.ncols())?;
    let s = tail_matrix(k, side);
    let sy = tail_sums(counts, side);
    let syh = tail_sums(fitted, side);
    let mask: Vec<bool> = sy.iter().map(|&v| v > 0.0).collect();

    // S V̂ D_y: scale columns of S by ŷ, then multiply
    let mut sv = s.clone();
    for (j, mut col) in sv.column_iter_mut().enumerate() {
        col *= fitted[j];
    }
    let mut b = sv * influence;
    for i in 0..k {
        let fitted_scale = 1.0 / syh[i];
        let count_scale = if mask[i] { 1.0 / sy[i] } else { 0.0 };
        for j in 0..k {
            b[(i, j)] = b[(i, j)] * fitted_scale - count_scale * s[(i, j)];
        }
    }
    Ok(sandwich(&b, fitted, total, &mask))
}

/// Local and tail estimates with their covariances on one histogram grid.
#[derive(Debug, Clone)]
pub struct FdrEstimates {
    pub log_fdr: Vec<f64>,
    pub log_tail_fdr_right: Vec<f64>,
    pub log_tail_fdr_left: Vec<f64>,
    pub cov_log_fdr: DMatrix<f64>,
    pub cov_log_tail_fdr_right: DMatrix<f64>,
    pub cov_log_tail_fdr_left: DMatrix<f64>,
    /// Bins with a positive count.
    pub valid_mask: Vec<bool>,
    pub valid_right: Vec<bool>,
    pub valid_left: Vec<bool>,
}

impl FdrEstimates {
    pub fn compute(hist: &Histogram, fit: &NullFit) -> Result<Self> {
        check_len(hist.len(), fit.len())?;
        let y = hist.counts_f64();
        let yh = &fit.fitted;
        let n = fit.total() as f64;
        let (log_fdr, valid_mask) = fdr_vector(&y, yh)?;
        let (log_tail_fdr_right, valid_right) = tail_fdr_vector(&y, yh, TailSide::Right)?;
        let (log_tail_fdr_left, valid_left) = tail_fdr_vector(&y, yh, TailSide::Left)?;
        Ok(Self {
            log_fdr,
            log_tail_fdr_right,
            log_tail_fdr_left,
            cov_log_fdr: cov_log_fdr(&y, yh, &fit.influence, n)?,
            cov_log_tail_fdr_right: cov_log_tail_fdr(&y, yh, &fit.influence, n, TailSide::Right)?,
            cov_log_tail_fdr_left: cov_log_tail_fdr(&y, yh, &fit.influence, n, TailSide::Left)?,
            valid_mask,
            valid_right,
            valid_left,
        })
    }

    pub fn len(&self) -> usize {
        self.log_fdr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_fdr.is_empty()
    }

    pub fn log_tail_fdr(&self, side: TailSide) -> &[f64] {
        match side {
            TailSide::Right => &self.log_tail_fdr_right,
            TailSide::Left => &self.log_tail_fdr_left,
        }
    }

    pub fn cov_log_tail_fdr(&self, side: TailSide) -> &DMatrix<f64> {
        match side {
            TailSide::Right => &self.cov_log_tail_fdr_right,
            TailSide::Left => &self.cov_log_tail_fdr_left,
        }
    }

    pub fn valid_tail(&self, side: TailSide) -> &[bool] {
        match side {
            TailSide::Right => &self.valid_right,
            TailSide::Left => &self.valid_left,
        }
    }

    /// Standard errors from the covariance diagonal (NaN on masked bins).
    pub fn std_errors_fdr(&self) -> Vec<f64> {
        diag_se(&self.cov_log_fdr, &self.valid_mask)
    }

    pub fn std_errors_tail_fdr(&self, side: TailSide) -> Vec<f64> {
        diag_se(self.cov_log_tail_fdr(side), self.valid_tail(side))
    }
}

fn diag_se(cov: &DMatrix<f64>, mask: &[bool]) -> Vec<f64> {
    mask.iter()
        .enumerate()
        .map(|(i, &ok)| if ok { cov[(i, i)].sqrt() } else { f64::NAN })
        .collect()
}
