//! Empirical null fitting by mode matching.
//!
//! Counts in bins whose centers fall inside the null region are modelled as
//! independent Poisson variables with log-mean `C + x(t)ᵀη + log(NΔ a0(t))`.
//! The regression is solved by IRLS and the fitted means are extrapolated to
//! every bin of the histogram.

use nalgebra::{DMatrix, DVector};
use statrs::function::gamma::ln_gamma;

use crate::error::{FdrError, Result};
use crate::histogram::Histogram;

/// Largest null proportion accepted before a fit is rejected.
pub const MAX_P0: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    /// Basis `(t, t²)` with unit carrier.
    Normal,
    /// Basis `(log t, t)` with unit carrier, `t > 0`. Covers scaled central
    /// chi-square nulls.
    Gamma,
}

impl FamilyKind {
    /// Number of basis columns, excluding the intercept.
    pub fn basis_len(self) -> usize {
        2
    }

    fn basis(self, t: f64) -> [f64; 2] {
        match self {
            FamilyKind::Normal => [t, t * t],
            FamilyKind::Gamma => [t.ln(), t],
        }
    }

    /// Log normalizer `ψ(η) = log ∫ a0(t) exp(x(t)ᵀη) dt`.
    pub fn log_partition(self, eta: &[f64]) -> Result<f64> {
        self.check_admissible(eta)?;
        Ok(match self {
            FamilyKind::Normal => {
                let (e1, e2) = (eta[0], eta[1]);
                -e1 * e1 / (4.0 * e2) + 0.5 * (std::f64::consts::PI / -e2).ln()
            }
            FamilyKind::Gamma => {
                let (e1, e2) = (eta[0], eta[1]);
                ln_gamma(e1 + 1.0) - (e1 + 1.0) * (-e2).ln()
            }
        })
    }

    pub fn check_admissible(self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.basis_len() {
            return Err(FdrError::DimensionMismatch {
                expected: self.basis_len(),
                got: eta.len(),
            });
        }
        match self {
            FamilyKind::Normal if !(eta[1] < 0.0) => Err(FdrError::ImproperNull(format!(
                "quadratic coefficient {} is not negative",
                eta[1]
            ))),
            FamilyKind::Gamma if !(eta[0] > -1.0) || !(eta[1] < 0.0) => {
                Err(FdrError::ImproperNull(format!(
                    "gamma coefficients ({}, {}) need log-t > -1 and t < 0",
                    eta[0], eta[1]
                )))
            }
            _ => Ok(()),
        }
    }

    /// Normalized null density `a0(t) exp(x(t)ᵀη - ψ(η))`.
    pub fn density(self, eta: &[f64], t: f64) -> Result<f64> {
        let psi = self.log_partition(eta)?;
        if self == FamilyKind::Gamma && t <= 0.0 {
            return Ok(0.0);
        }
        let x = self.basis(t);
        Ok((x[0] * eta[0] + x[1] * eta[1] - psi).exp())
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = FdrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "normal" => Ok(FamilyKind::Normal),
            "gamma" => Ok(FamilyKind::Gamma),
            other => Err(FdrError::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FamilyKind::Normal => "normal",
            FamilyKind::Gamma => "gamma",
        })
    }
}

/// Closed interval `[lo, hi]` where the non-null density is assumed zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullRegion {
    pub lo: f64,
    pub hi: f64,
}

impl NullRegion {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(FdrError::InvalidArgument(format!(
                "null region needs lo < hi, got [{lo}, {hi}]"
            )))
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.lo && t <= self.hi
    }

    /// 0/1 indicator of bin centers inside the region.
    pub fn weights(&self, hist: &Histogram) -> Vec<f64> {
        hist.centers()
            .iter()
            .map(|&t| if self.contains(t) { 1.0 } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitControls {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitControls {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
        }
    }
}

/// Design matrix with rows `(1, x(t_k)ᵀ)` and offsets `log(NΔ a0(t_k))`.
pub fn build_design(hist: &Histogram, family: FamilyKind) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let k = hist.len();
    let p = family.basis_len();
    if family == FamilyKind::Gamma {
        if let Some(&t) = hist.centers().iter().find(|&&t| t <= 0.0) {
            return Err(FdrError::Domain(format!(
                "gamma family needs positive bin centers, found {t}"
            )));
        }
    }
    let mut x = DMatrix::zeros(k, p + 1);
    for (row, &t) in hist.centers().iter().enumerate() {
        x[(row, 0)] = 1.0;
        for (j, v) in family.basis(t).into_iter().enumerate() {
            x[(row, j + 1)] = v;
        }
    }
    let offset = (hist.total() as f64 * hist.width()).ln();
    Ok((x, DVector::from_element(k, offset)))
}

/// Outcome of a weighted Poisson IRLS solve.
#[derive(Debug, Clone)]
pub struct IrlsSolution {
    pub coefficients: DVector<f64>,
    pub iterations: usize,
}

fn poisson_loglik(y: &DVector<f64>, eta: &DVector<f64>, w: &DVector<f64>) -> f64 {
    y.iter()
        .zip(eta.iter())
        .zip(w.iter())
        .filter(|(_, &wk)| wk > 0.0)
        .map(|((&yk, &ek), &wk)| wk * (yk * ek - ek.exp()))
        .sum()
}

/// Maximizes `Σ w_k (y_k η_k - exp(η_k))` with `η = Xβ + h` by iteratively
/// reweighted least squares, halving steps that lower the likelihood.
pub fn irls(
    y: &DVector<f64>,
    x: &DMatrix<f64>,
    h: &DVector<f64>,
    w: &DVector<f64>,
    ctl: FitControls,
) -> Result<IrlsSolution> {
    let (k, q) = x.shape();
    if y.len() != k || h.len() != k || w.len() != k {
        return Err(FdrError::DimensionMismatch {
            expected: k,
            got: y.len().min(h.len()).min(w.len()),
        });
    }
    let mass: f64 = y.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
    let base: f64 = h.iter().zip(w.iter()).map(|(a, b)| b * a.exp()).sum();
    let mut beta = DVector::zeros(q);
    beta[0] = (mass / base).ln();

    let mut lin = x * &beta + h;
    let mut loglik = poisson_loglik(y, &lin, w);
    let mut last_change = f64::INFINITY;
    for iter in 1..=ctl.max_iter {
        let mu = lin.map(f64::exp);
        // normal equations XᵀWμX β = XᵀWμ z, z = lin - h + (y - μ)/μ
        let mut info = DMatrix::zeros(q, q);
        let mut rhs = DVector::zeros(q);
        for r in 0..k {
            if w[r] == 0.0 {
                continue;
            }
            let wr = w[r] * mu[r];
            let zr = lin[r] - h[r] + (y[r] - mu[r]) / mu[r];
            let row = x.row(r);
            for a in 0..q {
                rhs[a] += wr * row[a] * zr;
                for b in 0..q {
                    info[(a, b)] += wr * row[a] * row[b];
                }
            }
        }
        let chol = info.cholesky().ok_or(FdrError::Collinear)?;
        let target: DVector<f64> = chol.solve(&rhs);
        if target.iter().any(|v| !v.is_finite()) {
            return Err(FdrError::Collinear);
        }
        let mut step = &target - &beta;
        let mut candidate = &beta + &step;
        let mut cand_lin = x * &candidate + h;
        let mut cand_ll = poisson_loglik(y, &cand_lin, w);
        let mut halvings = 0;
        while !(cand_ll >= loglik - 1e-12 * loglik.abs()) && halvings < 30 {
            step *= 0.5;
            candidate = &beta + &step;
            cand_lin = x * &candidate + h;
            cand_ll = poisson_loglik(y, &cand_lin, w);
            halvings += 1;
        }
        last_change = step.amax();
        beta = candidate;
        lin = cand_lin;
        loglik = cand_ll;
        if last_change < ctl.tol {
            return Ok(IrlsSolution {
                coefficients: beta,
                iterations: iter,
            });
        }
    }
    Err(FdrError::NotConverged {
        iterations: ctl.max_iter,
        last_change,
        last_iterate: beta.iter().copied().collect(),
    })
}

/// Fitted empirical null sub-density on a histogram grid.
#[derive(Debug, Clone)]
pub struct NullFit {
    pub family: FamilyKind,
    pub region: NullRegion,
    /// `(C, η)`.
    pub eta_plus: Vec<f64>,
    /// Expected null counts `ŷ` over all bins.
    pub fitted: Vec<f64>,
    pub p0_hat: f64,
    /// `D_y = X (XᵀWV̂X)⁻¹ XᵀW`.
    pub influence: DMatrix<f64>,
    pub design: DMatrix<f64>,
    pub offset: Vec<f64>,
    pub weights: Vec<f64>,
    pub iterations: usize,
    pub warnings: Vec<String>,
    total: u64,
}

impl NullFit {
    /// Mode-matching fit of `p0 f0` over `region`.
    pub fn fit(hist: &Histogram, family: FamilyKind, region: NullRegion, ctl: FitControls) -> Result<Self> {
        let (x, h) = build_design(hist, family)?;
        Self::fit_with_design(hist, family, x, h, region, ctl)
    }

    pub fn fit_with_design(
        hist: &Histogram,
        family: FamilyKind,
        x: DMatrix<f64>,
        h: DVector<f64>,
        region: NullRegion,
        ctl: FitControls,
    ) -> Result<Self> {
        let weights = region.weights(hist);
        let needed = x.ncols() + 1;
        let found = hist
            .counts()
            .iter()
            .zip(&weights)
            .filter(|(&c, &w)| w > 0.0 && c > 0)
            .count();
        if found < needed {
            return Err(FdrError::InsufficientNullBins { needed, found });
        }
        let y = DVector::from_vec(hist.counts_f64());
        let w = DVector::from_column_slice(&weights);
        let sol = irls(&y, &x, &h, &w, ctl)?;
        let beta = sol.coefficients;
        let eta: Vec<f64> = beta.iter().skip(1).copied().collect();
        family.check_admissible(&eta)?;

        let fitted_v = (&x * &beta + &h).map(f64::exp);
        let influence = influence_matrix(&x, &w, &fitted_v)?;

        let mut fit = Self {
            family,
            region,
            eta_plus: beta.iter().copied().collect(),
            fitted: fitted_v.iter().copied().collect(),
            p0_hat: f64::NAN,
            influence,
            design: x,
            offset: h.iter().copied().collect(),
            weights,
            iterations: sol.iterations,
            warnings: Vec::new(),
            total: hist.total(),
        };
        let p0 = fit.reconstruct_p0()?;
        if p0 > MAX_P0 {
            return Err(FdrError::ImproperNull(format!(
                "estimated null proportion {p0:.4} exceeds {MAX_P0}"
            )));
        }
        if p0 > 1.0 {
            fit.warnings
                .push(format!("estimated null proportion {p0:.4} exceeds 1"));
        }
        fit.p0_hat = p0;
        Ok(fit)
    }

    /// `p̂0 = exp(Ĉ + ψ(η̂))`.
    pub fn reconstruct_p0(&self) -> Result<f64> {
        let psi = self.family.log_partition(self.eta())?;
        Ok((self.eta_plus[0] + psi).exp())
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta_plus[1..]
    }

    pub fn len(&self) -> usize {
        self.fitted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fitted.is_empty()
    }

    /// Sample size `N` used in the offset.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Fitted null density `f̂0(t)`.
    pub fn null_density(&self, t: f64) -> Result<f64> {
        self.family.density(self.eta(), t)
    }

    /// Mean and standard deviation implied by a Normal-family fit.
    pub fn normal_moments(&self) -> Option<(f64, f64)> {
        match self.family {
            FamilyKind::Normal => {
                let (e1, e2) = (self.eta()[0], self.eta()[1]);
                Some((-e1 / (2.0 * e2), (-1.0 / (2.0 * e2)).sqrt()))
            }
            FamilyKind::Gamma => None,
        }
    }

    /// Largest relative score-equation residual over design columns.
    pub fn score_residual(&self, hist: &Histogram) -> f64 {
        let y = hist.counts_f64();
        (0..self.design.ncols())
            .map(|j| {
                let mut resid = 0.0;
                let mut scale = 0.0;
                for k in 0..y.len() {
                    let xj = self.design[(k, j)];
                    resid += self.weights[k] * (y[k] - self.fitted[k]) * xj;
                    scale += self.weights[k] * y[k] * xj.abs();
                }
                resid.abs() / scale.max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max)
    }
}

fn influence_matrix(x: &DMatrix<f64>, w: &DVector<f64>, fitted: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (k, q) = x.shape();
    let mut info = DMatrix::zeros(q, q);
    for r in 0..k {
        let wr = w[r] * fitted[r];
        if wr == 0.0 {
            continue;
        }
        let row = x.row(r);
        for a in 0..q {
            for b in 0..q {
                info[(a, b)] += wr * row[a] * row[b];
            }
        }
    }
    let inv = info.cholesky().ok_or(FdrError::Collinear)?.inverse();
    let mut d = x * inv * x.transpose();
    for (j, mut col) in d.column_iter_mut().enumerate() {
        col *= w[j];
    }
    Ok(d)
}
