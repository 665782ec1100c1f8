//! Distribution functions used by the z-transform and the simulation oracles.
//!
//! Elementary special functions (`erfc`, `ln Γ`, regularized incomplete
//! beta and gamma) come from `statrs`; everything built on top of them lives
//! here.

use statrs::function::{beta::beta_reg, erf::erfc, gamma};
use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

use crate::error::{FdrError, Result};

/// Default bound applied to transformed z-values.
pub const DEFAULT_CLAMP_Z: f64 = 8.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Degrees of freedom, strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Dof(f64);

impl Dof {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value.is_finite() {
            Ok(Self(value))
        } else {
            Err(FdrError::Domain(format!(
                "degrees of freedom must be positive, got {value}"
            )))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Φ(x)` without cancellation.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Inverse of [`normal_cdf`]: Acklam's rational approximation followed by one
/// Newton step against the accurate CDF.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(FdrError::Domain(format!(
            "normal quantile needs 0 < p < 1, got {p}"
        )));
    }
    if p > 0.5 {
        // 1 - p is exact here
        return Ok(-lower_quantile(1.0 - p));
    }
    Ok(lower_quantile(p))
}

// p in (0, 0.5]
fn lower_quantile(p: f64) -> f64 {
    let x = acklam(p);
    if x == 0.0 {
        return 0.0;
    }
    let err = normal_cdf(x) - p;
    x - err / normal_pdf(x)
}

fn acklam(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p == 0.5 {
        return 0.0;
    }
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Smaller of the two Student-t tail probabilities, `P(T > |t|)`.
fn student_t_tail(t: f64, df: Dof) -> f64 {
    let nu = df.value();
    let x = nu / (nu + t * t);
    0.5 * beta_reg(0.5 * nu, 0.5, x)
}

pub fn student_t_cdf(t: f64, df: Dof) -> f64 {
    let tail = student_t_tail(t, df);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Result of transforming a t-statistic onto the normal scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZValue {
    pub z: f64,
    /// The value was limited to `±clamp`.
    pub clamped: bool,
}

/// `z = Φ⁻¹(F_ν(t))`, limited to `[-clamp, clamp]`.
///
/// Both sides are computed through the smaller tail so large statistics keep
/// full relative precision until the tail underflows.
pub fn z_transform_clamped(t: f64, df: Dof, clamp: f64) -> ZValue {
    if t == 0.0 {
        return ZValue {
            z: 0.0,
            clamped: false,
        };
    }
    let tail = student_t_tail(t, df);
    let magnitude = if tail > 0.0 && tail < 0.5 {
        // tail in (0, 0.5) so the quantile is defined
        -lower_quantile(tail)
    } else if tail >= 0.5 {
        0.0
    } else {
        f64::INFINITY
    };
    let (magnitude, clamped) = if magnitude > clamp {
        (clamp, true)
    } else {
        (magnitude, false)
    };
    ZValue {
        z: magnitude.copysign(t),
        clamped,
    }
}

pub fn z_transform(t: f64, df: Dof) -> f64 {
    z_transform_clamped(t, df, DEFAULT_CLAMP_Z).z
}

/// Transformed values for a batch together with the number of clamped ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ZBatch {
    pub values: Vec<f64>,
    pub clamped: usize,
}

pub fn z_transform_all(ts: &[f64], df: Dof, clamp: f64) -> Result<ZBatch> {
    let mut values = Vec::with_capacity(ts.len());
    let mut clamped = 0;
    for (index, &t) in ts.iter().enumerate() {
        if !t.is_finite() {
            return Err(FdrError::NonFinite { index });
        }
        let zv = z_transform_clamped(t, df, clamp);
        clamped += usize::from(zv.clamped);
        values.push(zv.z);
    }
    Ok(ZBatch { values, clamped })
}

fn check_nonneg(x: f64) -> Result<()> {
    if x >= 0.0 {
        Ok(())
    } else {
        Err(FdrError::Domain(format!(
            "chi-square argument must be nonnegative, got {x}"
        )))
    }
}

/// Central chi-square density.
pub fn chisq_pdf(x: f64, df: Dof) -> Result<f64> {
    check_nonneg(x)?;
    let k = df.value();
    if x == 0.0 {
        return Ok(match k {
            k if k < 2.0 => f64::INFINITY,
            k if k == 2.0 => 0.5,
            _ => 0.0,
        });
    }
    Ok(ln_chisq_pdf(x, k).exp())
}

fn ln_chisq_pdf(x: f64, k: f64) -> f64 {
    let half = 0.5 * k;
    (half - 1.0) * x.ln() - 0.5 * x - half * LN_2 - gamma::ln_gamma(half)
}

pub fn chisq_cdf(x: f64, df: Dof) -> Result<f64> {
    check_nonneg(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(gamma::gamma_lr(0.5 * df.value(), 0.5 * x))
}

/// Upper tail of the central chi-square distribution.
pub fn chisq_sf(x: f64, df: Dof) -> Result<f64> {
    check_nonneg(x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    Ok(gamma::gamma_ur(0.5 * df.value(), 0.5 * x))
}

const SERIES_REL_TOL: f64 = 1e-14;
const SERIES_MAX_TERMS: usize = 100_000;

/// Sums `Σ_j Pois(j; δ/2) · term(j)` with terms bounded by 1 times the
/// Poisson weight, stopping past the Poisson mode once a term is negligible.
fn poisson_mixture(delta: f64, tol: f64, term: impl Fn(usize) -> f64) -> f64 {
    let lambda = 0.5 * delta;
    if lambda == 0.0 {
        return term(0);
    }
    let ln_lambda = lambda.ln();
    let mut sum = 0.0;
    for j in 0..SERIES_MAX_TERMS {
        let jf = j as f64;
        let ln_w = -lambda + jf * ln_lambda - gamma::ln_gamma(jf + 1.0);
        let value = ln_w.exp() * term(j);
        sum += value;
        if jf > lambda && (value <= tol * sum || ln_w.exp() <= tol * sum) {
            break;
        }
    }
    sum
}

/// Noncentral chi-square density as a Poisson mixture of central densities.
pub fn noncentral_chisq_pdf(x: f64, df: Dof, delta: f64) -> Result<f64> {
    check_nonneg(x)?;
    if !(delta >= 0.0) {
        return Err(FdrError::Domain(format!(
            "noncentrality must be nonnegative, got {delta}"
        )));
    }
    let k = df.value();
    if x == 0.0 {
        return chisq_pdf(0.0, df).map(|d0| (-0.5 * delta).exp() * d0);
    }
    Ok(poisson_mixture(delta, SERIES_REL_TOL, |j| {
        ln_chisq_pdf(x, k + 2.0 * j as f64).exp()
    }))
}

/// Upper tail of the noncentral chi-square distribution.
pub fn noncentral_chisq_sf(x: f64, df: Dof, delta: f64) -> Result<f64> {
    check_nonneg(x)?;
    if !(delta >= 0.0) {
        return Err(FdrError::Domain(format!(
            "noncentrality must be nonnegative, got {delta}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let k = df.value();
    Ok(poisson_mixture(delta, 1e-12, |j| {
        gamma::gamma_ur(0.5 * (k + 2.0 * j as f64), 0.5 * x)
    }))
}
