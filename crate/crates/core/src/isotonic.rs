//! Chain-ordered least squares and tail monotonization.
//!
//! [`pava`] solves the diagonally weighted problem exactly; [`qp_isotonic`]
//! handles a full positive-definite weight matrix through the dual of the
//! ordering constraints, which is a nonnegativity-constrained QP solved by an
//! active-set method.

use nalgebra::{DMatrix, DVector};

use crate::error::{FdrError, Result};
use crate::fdr_core::{FdrEstimates, TailSide};
use crate::histogram::Histogram;
use crate::null_model::NullRegion;

/// Relative ridge added to full covariance blocks before inversion.
pub const COV_RIDGE: f64 = 1e-8;

/// Changes smaller than this are not reported in `changed_bins`.
const CHANGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChainWeights {
    Diagonal(Vec<f64>),
    /// Symmetric positive-definite weight matrix.
    Full(DMatrix<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainProblem {
    pub targets: Vec<f64>,
    pub weights: ChainWeights,
    pub direction: Direction,
}

impl ChainProblem {
    pub fn solve(&self) -> Result<Vec<f64>> {
        match &self.weights {
            ChainWeights::Diagonal(w) => pava(&self.targets, w, self.direction),
            ChainWeights::Full(m) => qp_isotonic(&self.targets, m, self.direction),
        }
    }

    /// Objective `(z − a)ᵀ M (z − a)`.
    pub fn objective(&self, z: &[f64]) -> f64 {
        let r: Vec<f64> = z.iter().zip(&self.targets).map(|(a, b)| a - b).collect();
        match &self.weights {
            ChainWeights::Diagonal(w) => r.iter().zip(w).map(|(ri, wi)| wi * ri * ri).sum(),
            ChainWeights::Full(m) => {
                let rv = DVector::from_vec(r);
                (rv.transpose() * m * &rv)[0]
            }
        }
    }
}

fn flip(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

/// Weighted pool-adjacent-violators.
pub fn pava(targets: &[f64], weights: &[f64], direction: Direction) -> Result<Vec<f64>> {
    if targets.len() != weights.len() {
        return Err(FdrError::DimensionMismatch {
            expected: targets.len(),
            got: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
        return Err(FdrError::InvalidArgument(format!(
            "isotonic weights must be positive, got {w}"
        )));
    }
    match direction {
        Direction::NonDecreasing => Ok(pava_increasing(targets, weights)),
        Direction::NonIncreasing => Ok(flip(&pava_increasing(&flip(targets), weights))),
    }
}

fn pava_increasing(y: &[f64], w: &[f64]) -> Vec<f64> {
    // (weighted mean, total weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        let mut cur = (yi, wi, 1usize);
        while let Some(&(mean, weight, len)) = blocks.last() {
            if mean <= cur.0 {
                break;
            }
            blocks.pop();
            let total = weight + cur.1;
            cur = ((mean * weight + cur.0 * cur.1) / total, total, len + cur.2);
        }
        blocks.push(cur);
    }
    blocks
        .into_iter()
        .flat_map(|(mean, _, len)| std::iter::repeat_n(mean, len))
        .collect()
}

/// Chain-constrained QP with full weight matrix. Fails with
/// [`FdrError::CovarianceNotUsable`] if `matrix` is not positive definite.
pub fn qp_isotonic(targets: &[f64], matrix: &DMatrix<f64>, direction: Direction) -> Result<Vec<f64>> {
    qp_isotonic_with_residual(targets, matrix, direction).map(|(z, _)| z)
}

/// As [`qp_isotonic`], also returning the KKT residual of the solution.
pub fn qp_isotonic_with_residual(
    targets: &[f64],
    matrix: &DMatrix<f64>,
    direction: Direction,
) -> Result<(Vec<f64>, f64)> {
    let n = targets.len();
    if matrix.shape() != (n, n) {
        return Err(FdrError::DimensionMismatch {
            expected: n,
            got: matrix.nrows(),
        });
    }
    if n == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let a = match direction {
        Direction::NonDecreasing => targets.to_vec(),
        Direction::NonIncreasing => flip(targets),
    };
    let chol = matrix.clone().cholesky().ok_or(FdrError::CovarianceNotUsable)?;
    let m_inv = chol.inverse();
    if n == 1 {
        return Ok((targets.to_vec(), 0.0));
    }

    // D z: consecutive differences z_{i+1} − z_i
    let diff = |v: &DVector<f64>| DVector::from_fn(n - 1, |i, _| v[i + 1] - v[i]);
    // Dᵀ λ
    let diff_t = |lam: &DVector<f64>| {
        DVector::from_fn(n, |j, _| {
            let up = if j >= 1 { lam[j - 1] } else { 0.0 };
            let down = if j < n - 1 { lam[j] } else { 0.0 };
            up - down
        })
    };
    // Q = D M⁻¹ Dᵀ
    let q = DMatrix::from_fn(n - 1, n - 1, |i, j| {
        m_inv[(i + 1, j + 1)] - m_inv[(i + 1, j)] - m_inv[(i, j + 1)] + m_inv[(i, j)]
    });
    let av = DVector::from_vec(a);
    let c = diff(&av);
    let lam = nonneg_qp(&q, &c)?;
    let z = polish(&av, matrix, &lam).unwrap_or_else(|| &av + &m_inv * diff_t(&lam));

    // KKT: feasibility, dual feasibility, complementarity
    let slack = diff(&z);
    let scale = 1.0 + av.amax();
    let mut resid = 0.0f64;
    for i in 0..n - 1 {
        resid = resid.max((-slack[i]).max(0.0) / scale);
        resid = resid.max((-lam[i]).max(0.0));
        resid = resid.max((lam[i] * slack[i]).abs() / scale);
    }
    let z: Vec<f64> = match direction {
        Direction::NonDecreasing => z.iter().copied().collect(),
        Direction::NonIncreasing => z.iter().map(|v| -v).collect(),
    };
    Ok((z, resid))
}

/// Recomputes the primal solution on the pooled blocks implied by the active
/// constraints, so pooled coordinates come out exactly equal. Constraints left
/// violated by roundoff are pooled as well.
fn polish(a: &DVector<f64>, matrix: &DMatrix<f64>, lam: &DVector<f64>) -> Option<DVector<f64>> {
    let n = a.len();
    let mut joined: Vec<bool> = lam.iter().map(|&l| l > 0.0).collect();
    if !joined.iter().any(|&j| j) {
        return Some(a.clone());
    }
    for _ in 0..n {
        let mut block = vec![0usize; n];
        for i in 1..n {
            block[i] = block[i - 1] + usize::from(!joined[i - 1]);
        }
        let nb = block[n - 1] + 1;
        let b = DMatrix::from_fn(n, nb, |i, j| if block[i] == j { 1.0 } else { 0.0 });
        let lhs = b.transpose() * matrix * &b;
        let rhs = b.transpose() * matrix * a;
        let theta = lhs.cholesky()?.solve(&rhs);
        let violated: Vec<usize> = (0..n - 1).filter(|&i| !joined[i] && theta[block[i + 1]] < theta[block[i]]).collect();
        if violated.is_empty() {
            return Some(b * theta);
        }
        for i in violated {
            joined[i] = true;
        }
    }
    None
}

/// Minimizes `½ λᵀQλ + cᵀλ` over `λ ≥ 0` with an active-set method that
/// keeps a free set and solves the unconstrained subproblem on it.
fn nonneg_qp(q: &DMatrix<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
    let m = c.len();
    let mut lam = DVector::zeros(m);
    let mut free = vec![false; m];
    let tol = 1e-13 * (1.0 + c.amax()) * (1.0 + q.amax());
    let max_outer = 10 * m + 50;

    for _ in 0..max_outer {
        let grad = q * &lam + c;
        let enter = (0..m)
            .filter(|&i| !free[i])
            .min_by(|&i, &j| grad[i].total_cmp(&grad[j]));
        match enter {
            Some(i) if grad[i] < -tol => free[i] = true,
            _ => return Ok(lam),
        }
        loop {
            let idx: Vec<usize> = (0..m).filter(|&i| free[i]).collect();
            let sub = q.select_rows(&idx).select_columns(&idx);
            let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| -c[i]));
            let sol = sub.cholesky().ok_or(FdrError::CovarianceNotUsable)?.solve(&rhs);
            if sol.iter().all(|&v| v > 0.0) {
                for (p, &i) in idx.iter().enumerate() {
                    lam[i] = sol[p];
                }
                break;
            }
            // step toward sol until the first free variable hits zero
            let mut alpha = 1.0f64;
            for (p, &i) in idx.iter().enumerate() {
                if sol[p] <= 0.0 {
                    let denom = lam[i] - sol[p];
                    if denom > 0.0 {
                        alpha = alpha.min(lam[i] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            for (p, &i) in idx.iter().enumerate() {
                lam[i] += alpha * (sol[p] - lam[i]);
                if lam[i] <= 1e-300 || (sol[p] <= 0.0 && lam[i] <= tol) {
                    lam[i] = 0.0;
                    free[i] = false;
                }
            }
            if !free.iter().any(|&f| f) {
                break;
            }
        }
    }
    Ok(lam)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MonoMethod {
    #[default]
    Pava,
    FullQp,
}

impl std::str::FromStr for MonoMethod {
    type Err = FdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pava" => Ok(MonoMethod::Pava),
            "qp" | "fullqp" | "full-qp" => Ok(MonoMethod::FullQp),
            other => Err(FdrError::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for MonoMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MonoMethod::Pava => "pava",
            MonoMethod::FullQp => "qp",
        })
    }
}

/// Which estimates to monotonize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MonoTarget {
    LocalFdr,
    TailFdr,
    #[default]
    Both,
}

impl MonoTarget {
    fn local(self) -> bool {
        matches!(self, MonoTarget::LocalFdr | MonoTarget::Both)
    }

    fn tail(self) -> bool {
        matches!(self, MonoTarget::TailFdr | MonoTarget::Both)
    }
}

/// Tail edges: bins with centers `>= right` (or `<= left`) are monotonized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundaries {
    pub left: Option<f64>,
    pub right: Option<f64>,
}

impl TailBoundaries {
    pub fn from_region(region: &NullRegion, left: bool, right: bool) -> Self {
        Self {
            left: left.then_some(region.lo),
            right: right.then_some(region.hi),
        }
    }

    pub fn right_only(edge: f64) -> Self {
        Self {
            left: None,
            right: Some(edge),
        }
    }

    /// Statistics at or above this value use the right tail Fdr.
    pub fn split_point(&self) -> f64 {
        match (self.left, self.right) {
            (Some(l), Some(r)) => 0.5 * (l + r),
            (Some(_), None) => f64::INFINITY,
            _ => f64::NEG_INFINITY,
        }
    }
}

/// Tail-monotonized estimates on the histogram grid, all on log scale and
/// capped at zero (probability one).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneFdr {
    pub log_fdr_iso: Vec<f64>,
    pub log_tail_fdr_right_iso: Vec<f64>,
    pub log_tail_fdr_left_iso: Vec<f64>,
    pub boundaries: TailBoundaries,
    pub method: MonoMethod,
    /// Valid bins whose local estimate moved by more than 1e-12.
    pub changed_bins: Vec<usize>,
    pub warnings: Vec<String>,
    centers: Vec<f64>,
}

impl MonotoneFdr {
    /// Tail Fdr matched to each bin's side of the split point.
    pub fn log_tail_fdr_iso(&self) -> Vec<f64> {
        let split = self.boundaries.split_point();
        self.centers
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                if t >= split {
                    self.log_tail_fdr_right_iso[k]
                } else {
                    self.log_tail_fdr_left_iso[k]
                }
            })
            .collect()
    }

    pub fn fdr_iso(&self) -> Vec<f64> {
        self.log_fdr_iso.iter().map(|v| v.exp()).collect()
    }

    pub fn tail_fdr_iso(&self) -> Vec<f64> {
        self.log_tail_fdr_iso().iter().map(|v| v.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.log_fdr_iso.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_fdr_iso.is_empty()
    }
}

/// Raw log estimates paired with their mask and covariance.
struct Series<'a> {
    raw: &'a [f64],
    valid: &'a [bool],
    cov: &'a DMatrix<f64>,
}

/// Monotonizes one tail given bin indices in outward order (moving away from
/// the null region), so values must be non-increasing along `outward`.
fn monotonize_segment(
    series: &Series<'_>,
    outward: &[usize],
    method: MonoMethod,
    out: &mut [f64],
    warnings: &mut Vec<String>,
    label: &str,
) {
    let included: Vec<usize> = outward
        .iter()
        .copied()
        .filter(|&k| series.valid[k] && series.raw[k].is_finite() && series.cov[(k, k)] > 0.0)
        .collect();
    if included.is_empty() {
        if !outward.is_empty() {
            warnings.push(format!("{label}: no usable bins, tail left unchanged"));
        }
        return;
    }
    let targets: Vec<f64> = included.iter().map(|&k| series.raw[k]).collect();
    let diagonal = || {
        let w: Vec<f64> = included.iter().map(|&k| 1.0 / series.cov[(k, k)]).collect();
        pava(&targets, &w, Direction::NonIncreasing)
    };
    let fitted = match method {
        MonoMethod::Pava => diagonal(),
        MonoMethod::FullQp => {
            let mut sub = series.cov.select_rows(&included).select_columns(&included);
            let ridge = COV_RIDGE * sub.diagonal().mean();
            for i in 0..sub.nrows() {
                sub[(i, i)] += ridge;
            }
            let weights = sub.cholesky().map(|c| c.inverse());
            match weights.map(|m| qp_isotonic(&targets, &m, Direction::NonIncreasing)) {
                Some(Ok(z)) => Ok(z),
                _ => {
                    warnings.push(format!("{label}: covariance not usable; fell back to diagonal weights"));
                    diagonal()
                }
            }
        }
    };
    // weights are validated positive above, so PAVA cannot fail here
    let fitted = fitted.expect("tail weights are positive");

    let mut value_at = vec![None; out.len()];
    for (&k, &v) in included.iter().zip(&fitted) {
        value_at[k] = Some(v);
    }
    // back-fill excluded bins from the next included bin further out
    let mut next_out: Option<f64> = None;
    let mut filled = vec![0.0; outward.len()];
    for (pos, &k) in outward.iter().enumerate().rev() {
        if let Some(v) = value_at[k] {
            next_out = Some(v);
        }
        filled[pos] = next_out.unwrap_or(f64::NAN);
    }
    let last = *fitted.last().expect("non-empty");
    for (pos, &k) in outward.iter().enumerate() {
        out[k] = if filled[pos].is_nan() { last } else { filled[pos] };
    }
}

fn outward_bins(hist: &Histogram, boundaries: &TailBoundaries) -> (Vec<usize>, Vec<usize>) {
    let centers = hist.centers();
    let right = boundaries
        .right
        .map(|edge| (0..centers.len()).filter(|&k| centers[k] >= edge).collect())
        .unwrap_or_default();
    let left = boundaries
        .left
        .map(|edge| (0..centers.len()).rev().filter(|&k| centers[k] <= edge).collect())
        .unwrap_or_default();
    (left, right)
}

fn start_from_raw(raw: &[f64]) -> Vec<f64> {
    // invalid bins default to probability one
    raw.iter().map(|&v| if v.is_finite() { v } else { 0.0 }).collect()
}

fn cap(v: &mut [f64]) {
    for x in v {
        *x = x.min(0.0);
    }
}

/// Monotonizes the tails of the binned estimates so that each estimate does
/// not increase moving away from the null region, then caps at one.
pub fn monotonize_tails(
    est: &FdrEstimates,
    hist: &Histogram,
    boundaries: TailBoundaries,
    method: MonoMethod,
    which: MonoTarget,
) -> Result<MonotoneFdr> {
    if est.len() != hist.len() {
        return Err(FdrError::DimensionMismatch {
            expected: hist.len(),
            got: est.len(),
        });
    }
    let (left, right) = outward_bins(hist, &boundaries);
    let mut warnings = Vec::new();

    let mut log_fdr_iso = start_from_raw(&est.log_fdr);
    if which.local() {
        let series = Series {
            raw: &est.log_fdr,
            valid: &est.valid_mask,
            cov: &est.cov_log_fdr,
        };
        monotonize_segment(&series, &right, method, &mut log_fdr_iso, &mut warnings, "right tail fdr");
        monotonize_segment(&series, &left, method, &mut log_fdr_iso, &mut warnings, "left tail fdr");
    }
    cap(&mut log_fdr_iso);

    let mut tails = Vec::with_capacity(2);
    for (side, segment) in [(TailSide::Right, &right), (TailSide::Left, &left)] {
        let raw = est.log_tail_fdr(side);
        let mut iso = start_from_raw(raw);
        if which.tail() {
            let series = Series {
                raw,
                valid: est.valid_tail(side),
                cov: est.cov_log_tail_fdr(side),
            };
            let label = match side {
                TailSide::Right => "right tail Fdr",
                TailSide::Left => "left tail Fdr",
            };
            monotonize_segment(&series, segment, method, &mut iso, &mut warnings, label);
        }
        cap(&mut iso);
        tails.push(iso);
    }
    let log_tail_fdr_left_iso = tails.pop().expect("two sides");
    let log_tail_fdr_right_iso = tails.pop().expect("two sides");

    let changed_bins = (0..est.len())
        .filter(|&k| est.valid_mask[k] && (log_fdr_iso[k] - est.log_fdr[k]).abs() > CHANGE_TOL)
        .collect();
    Ok(MonotoneFdr {
        log_fdr_iso,
        log_tail_fdr_right_iso,
        log_tail_fdr_left_iso,
        boundaries,
        method,
        changed_bins,
        warnings,
        centers: hist.centers().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pava_examples() {
        let w1 = [1.0; 3];
        assert_eq!(pava(&[1.0, 2.0, 3.0], &w1, Direction::NonDecreasing).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(pava(&[3.0, 2.0, 1.0], &w1, Direction::NonIncreasing).unwrap(), vec![3.0, 2.0, 1.0]);
        assert_eq!(pava(&[3.0, 1.0, 2.0], &w1, Direction::NonDecreasing).unwrap(), vec![2.0, 2.0, 2.0]);
        assert_eq!(pava(&[1.0, 0.0], &[1.0, 3.0], Direction::NonDecreasing).unwrap(), vec![0.25, 0.25]);
        assert!(pava(&[1.0, 0.0], &[1.0, 0.0], Direction::NonDecreasing).is_err());
        assert!(pava(&[1.0, 0.0], &[1.0], Direction::NonDecreasing).is_err());
    }

    #[test]
    fn qp_examples() {
        let m = DMatrix::identity(3, 3);
        let z = qp_isotonic(&[3.0, 1.0, 2.0], &m, Direction::NonDecreasing).unwrap();
        for v in z {
            assert!((v - 2.0).abs() < 1e-12);
        }
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(
            qp_isotonic(&[0.0, 1.0], &bad, Direction::NonDecreasing),
            Err(FdrError::CovarianceNotUsable)
        );
    }

    #[test]
    fn qp_single_and_empty() {
        let m = DMatrix::from_element(1, 1, 2.0);
        assert_eq!(qp_isotonic(&[0.7], &m, Direction::NonIncreasing).unwrap(), vec![0.7]);
        assert!(qp_isotonic(&[], &DMatrix::zeros(0, 0), Direction::NonIncreasing).unwrap().is_empty());
    }

    fn is_ordered(z: &[f64], dir: Direction, slack: f64) -> bool {
        z.windows(2).all(|w| match dir {
            Direction::NonDecreasing => w[1] >= w[0] - slack,
            Direction::NonIncreasing => w[1] <= w[0] + slack,
        })
    }

    proptest! {
        #[test]
        fn qp_diagonal_equals_pava(
            targets in prop::collection::vec(-3.0f64..3.0, 1..12),
            seed in prop::collection::vec(0.1f64..5.0, 12),
            inc in any::<bool>(),
        ) {
            let n = targets.len();
            let w = &seed[..n];
            let dir = if inc { Direction::NonDecreasing } else { Direction::NonIncreasing };
            let a = pava(&targets, w, dir).unwrap();
            let m = DMatrix::from_diagonal(&DVector::from_column_slice(w));
            let (b, resid) = qp_isotonic_with_residual(&targets, &m, dir).unwrap();
            prop_assert!(resid < 1e-8);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }

        #[test]
        fn pava_blocks_are_weighted_means(
            targets in prop::collection::vec(-3.0f64..3.0, 1..30),
            seed in prop::collection::vec(0.1f64..5.0, 30),
        ) {
            let w = &seed[..targets.len()];
            let z = pava(&targets, w, Direction::NonDecreasing).unwrap();
            prop_assert!(is_ordered(&z, Direction::NonDecreasing, 0.0));
            let mut start = 0;
            while start < z.len() {
                let mut end = start;
                while end + 1 < z.len() && z[end + 1] == z[start] {
                    end += 1;
                }
                let sw: f64 = w[start..=end].iter().sum();
                let swy: f64 = (start..=end).map(|i| w[i] * targets[i]).sum();
                prop_assert!((swy / sw - z[start]).abs() < 1e-10);
                start = end + 1;
            }
            // weighted spread shrinks
            let sw: f64 = w.iter().sum();
            let mean: f64 = targets.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
            let spread = |v: &[f64]| v.iter().zip(w).map(|(x, wi)| wi * (x - mean).powi(2)).sum::<f64>();
            prop_assert!(spread(&z) <= spread(&targets) + 1e-10);
            // idempotent
            prop_assert_eq!(pava(&z, w, Direction::NonDecreasing).unwrap(), z);
        }
    }
}
