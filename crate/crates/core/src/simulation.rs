//! Seeded two-scenario Monte Carlo study with closed-form oracles.
//!
//! Each replication draws its statistics from a generator keyed by
//! `(base_seed, rep_index, stream)`, so replications can run in any order or
//! in parallel and still produce identical summaries.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, Normal, Poisson};
use rayon::prelude::*;

use crate::decision::{adaptive_reject_local, adaptive_reject_tail, per_hypothesis_values, score, ErrorScore};
use crate::error::{FdrError, Result};
use crate::fdr_core::{tail_matrix, TailSide};
use crate::isotonic::{MonoMethod, MonoTarget, TailBoundaries};
use crate::null_model::{FamilyKind, FitControls, NullRegion};
use crate::pipeline::{run_pipeline, PipelineConfig};
use crate::stats_numerics::{chisq_pdf, chisq_sf, noncentral_chisq_pdf, noncentral_chisq_sf, normal_cdf, normal_sf, Dof};

pub const NORMAL_NULL_MEAN: f64 = 0.2;
pub const NORMAL_NULL_SD: f64 = 1.2;
pub const NORMAL_ALT_MEAN: f64 = 3.0;
pub const NORMAL_ALT_SD: f64 = 1.2;
pub const CHISQ_NULL_SCALE: f64 = 0.8;
pub const CHISQ_DF: f64 = 3.0;
pub const CHISQ_ALT_NONCENTRALITY: f64 = 3.0;

/// Raw Fdr increases larger than this count as a monotonicity violation.
pub const NONMONOTONE_TOL: f64 = 1e-10;

/// Bins whose tail sum `(Sy)_k` is below this are ignored by the supported
/// monotonicity check: there every count jump moves the ratio upward.
pub const MIN_TAIL_COUNT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    /// Null N(0.2, 1.2²), alternative N(3, 1.2²).
    NormalMix,
    /// Null 0.8·χ²(3), alternative noncentral χ²(3, 3).
    ChisqMix,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScenarioKind::NormalMix => "normal",
            ScenarioKind::ChisqMix => "chisq",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub p0: f64,
    pub fitting_interval: (f64, f64),
    /// Right-tail monotonization starts at this bin center.
    pub iso_boundary: f64,
    pub n: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub width: f64,
    pub range: (f64, f64),
}

impl ScenarioSpec {
    /// Normal mixture preset: fitting interval `[0.2 ± 1.5]`, right tail from 1.7.
    pub fn normal_preset() -> Self {
        Self {
            kind: ScenarioKind::NormalMix,
            p0: 0.9,
            fitting_interval: (NORMAL_NULL_MEAN - 1.5, NORMAL_NULL_MEAN + 1.5),
            iso_boundary: 1.7,
            n: 10_000,
            reps: 100,
            base_seed: 20_130_901,
            width: 0.1,
            range: (-6.0, 8.0),
        }
    }

    /// Chi-square mixture preset: fitting interval `[0, 4]`, right tail from 4.
    pub fn chisq_preset() -> Self {
        Self {
            kind: ScenarioKind::ChisqMix,
            p0: 0.9,
            fitting_interval: (0.0, 4.0),
            iso_boundary: 4.0,
            n: 10_000,
            reps: 100,
            base_seed: 20_130_902,
            width: 0.1,
            range: (0.0, 30.0),
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "normal-sec4" | "normal" => Some(Self::normal_preset()),
            "chisq-sec4" | "chisq" => Some(Self::chisq_preset()),
            _ => None,
        }
    }

    pub fn family(&self) -> FamilyKind {
        match self.kind {
            ScenarioKind::NormalMix => FamilyKind::Normal,
            ScenarioKind::ChisqMix => FamilyKind::Gamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        // p0 = 1 is allowed for pure-null draws; oracles need p0 in (0, 1]
        if !(self.p0 > 0.0 && self.p0 <= 1.0) {
            return Err(FdrError::InvalidArgument(format!("p0 must lie in (0, 1], got {}", self.p0)));
        }
        let (lo, hi) = self.fitting_interval;
        if !(lo < hi && lo >= self.range.0 && hi <= self.range.1) {
            return Err(FdrError::InvalidArgument(format!(
                "fitting interval [{lo}, {hi}] must lie inside the histogram range ({}, {})",
                self.range.0, self.range.1
            )));
        }
        if self.n == 0 || self.reps == 0 {
            return Err(FdrError::InvalidArgument("n and reps must be positive".into()));
        }
        if !(self.width > 0.0) {
            return Err(FdrError::InvalidArgument("bin width must be positive".into()));
        }
        Ok(())
    }

    pub fn pipeline_config(&self, method: MonoMethod, controls: FitControls) -> Result<PipelineConfig> {
        Ok(PipelineConfig {
            width: self.width,
            range: self.range,
            region: NullRegion::new(self.fitting_interval.0, self.fitting_interval.1)?,
            family: self.family(),
            boundaries: TailBoundaries::right_only(self.iso_boundary),
            method,
            which: MonoTarget::Both,
            controls,
        })
    }
}

/// Counter-style generator for one `(base_seed, rep_index, stream)` triple.
pub fn rng_for(base_seed: u64, rep_index: u64, stream: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&base_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&rep_index.to_le_bytes());
    seed[16..24].copy_from_slice(b"monofdr\0");
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(stream);
    rng
}

const SAMPLE_STREAM: u64 = 0;

/// Draws one replication: statistics and non-null flags.
pub fn sample_scenario(spec: &ScenarioSpec, rep_index: u64) -> (Vec<f64>, Vec<bool>) {
    let mut rng = rng_for(spec.base_seed, rep_index, SAMPLE_STREAM);
    let mut stats = Vec::with_capacity(spec.n);
    let mut truth = Vec::with_capacity(spec.n);
    match spec.kind {
        ScenarioKind::NormalMix => {
            let null = Normal::new(NORMAL_NULL_MEAN, NORMAL_NULL_SD).expect("valid normal");
            let alt = Normal::new(NORMAL_ALT_MEAN, NORMAL_ALT_SD).expect("valid normal");
            for _ in 0..spec.n {
                let nonnull = rng.random::<f64>() >= spec.p0;
                let t = if nonnull { alt.sample(&mut rng) } else { null.sample(&mut rng) };
                stats.push(t);
                truth.push(nonnull);
            }
        }
        ScenarioKind::ChisqMix => {
            let null = ChiSquared::new(CHISQ_DF).expect("valid chi-square");
            let mixing = Poisson::new(0.5 * CHISQ_ALT_NONCENTRALITY).expect("valid poisson");
            for _ in 0..spec.n {
                let nonnull = rng.random::<f64>() >= spec.p0;
                let t = if nonnull {
                    let j: f64 = mixing.sample(&mut rng);
                    ChiSquared::new(CHISQ_DF + 2.0 * j).expect("valid chi-square").sample(&mut rng)
                } else {
                    CHISQ_NULL_SCALE * null.sample(&mut rng)
                };
                stats.push(t);
                truth.push(nonnull);
            }
        }
    }
    (stats, truth)
}

fn check_chisq_domain(spec: &ScenarioSpec, t: f64) -> Result<()> {
    if spec.kind == ScenarioKind::ChisqMix && !(t >= 0.0) {
        return Err(FdrError::Domain(format!("chi-square scenario needs t >= 0, got {t}")));
    }
    Ok(())
}

fn dof() -> Dof {
    Dof::new(CHISQ_DF).expect("positive")
}

/// True local fdr `p0 f0(t) / f(t)`.
pub fn oracle_fdr(spec: &ScenarioSpec, t: f64) -> Result<f64> {
    check_chisq_domain(spec, t)?;
    let p0 = spec.p0;
    let p1 = 1.0 - p0;
    if p1 == 0.0 {
        return Ok(1.0);
    }
    // ratio of non-null to null density
    let log_ratio = match spec.kind {
        ScenarioKind::NormalMix => {
            let z0 = (t - NORMAL_NULL_MEAN) / NORMAL_NULL_SD;
            let z1 = (t - NORMAL_ALT_MEAN) / NORMAL_ALT_SD;
            0.5 * (z0 * z0 - z1 * z1) + (NORMAL_NULL_SD / NORMAL_ALT_SD).ln()
        }
        ScenarioKind::ChisqMix if t == 0.0 => {
            // both densities vanish like t^(ν/2 − 1); take the limit
            -0.5 * CHISQ_ALT_NONCENTRALITY + 0.5 * CHISQ_DF * CHISQ_NULL_SCALE.ln()
        }
        ScenarioKind::ChisqMix => {
            let f0 = chisq_pdf(t / CHISQ_NULL_SCALE, dof())? / CHISQ_NULL_SCALE;
            let f1 = noncentral_chisq_pdf(t, dof(), CHISQ_ALT_NONCENTRALITY)?;
            f1.ln() - f0.ln()
        }
    };
    Ok(1.0 / (1.0 + (p1 / p0) * log_ratio.exp()))
}

/// Null and non-null survival (right) or distribution (left) functions.
fn tail_masses(spec: &ScenarioSpec, t: f64, side: TailSide) -> Result<(f64, f64)> {
    Ok(match (spec.kind, side) {
        (ScenarioKind::NormalMix, TailSide::Right) => (
            normal_sf((t - NORMAL_NULL_MEAN) / NORMAL_NULL_SD),
            normal_sf((t - NORMAL_ALT_MEAN) / NORMAL_ALT_SD),
        ),
        (ScenarioKind::NormalMix, TailSide::Left) => (
            normal_cdf((t - NORMAL_NULL_MEAN) / NORMAL_NULL_SD),
            normal_cdf((t - NORMAL_ALT_MEAN) / NORMAL_ALT_SD),
        ),
        (ScenarioKind::ChisqMix, TailSide::Right) => (
            chisq_sf(t / CHISQ_NULL_SCALE, dof())?,
            noncentral_chisq_sf(t, dof(), CHISQ_ALT_NONCENTRALITY)?,
        ),
        (ScenarioKind::ChisqMix, TailSide::Left) => (
            1.0 - chisq_sf(t / CHISQ_NULL_SCALE, dof())?,
            1.0 - noncentral_chisq_sf(t, dof(), CHISQ_ALT_NONCENTRALITY)?,
        ),
    })
}

/// True tail Fdr `p0 S0 / (p0 S0 + p1 S1)`.
pub fn oracle_tail_fdr(spec: &ScenarioSpec, t: f64, side: TailSide) -> Result<f64> {
    check_chisq_domain(spec, t)?;
    let (s0, s1) = tail_masses(spec, t, side)?;
    let num = spec.p0 * s0;
    let den = num + (1.0 - spec.p0) * s1;
    if den == 0.0 {
        return Ok(f64::NAN);
    }
    Ok(num / den)
}

/// Knobs for [`run_study`] beyond the scenario itself.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub method: MonoMethod,
    pub alphas: Vec<f64>,
    pub parallel: bool,
    pub controls: FitControls,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            method: MonoMethod::Pava,
            alphas: vec![0.05, 0.1],
            parallel: false,
            controls: FitControls::default(),
        }
    }
}

/// Scores of one replication at one α level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepScores {
    pub alpha: f64,
    /// Step-up rule on monotonized local fdr.
    pub local_iso: ErrorScore,
    /// Step-up rule on unadjusted local fdr (capped at one).
    pub local_raw: ErrorScore,
    /// Threshold rule on monotonized tail Fdr.
    pub tail_iso: ErrorScore,
}

/// Per-bin estimates of one successful replication, on the natural scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RepCurves {
    /// NaN where the bin count is zero.
    pub fdr_raw: Vec<f64>,
    pub fdr_iso: Vec<f64>,
    /// NaN where the right tail sum is zero.
    pub tail_fdr_raw: Vec<f64>,
    pub tail_fdr_iso: Vec<f64>,
    pub p0_hat: f64,
    /// Raw right-tail Fdr increases somewhere past the boundary.
    pub nonmonotone_raw_tail: bool,
    /// Same, restricted to bins with tail sum at least [`MIN_TAIL_COUNT`].
    pub nonmonotone_raw_tail_supported: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RepOutcome {
    Ok { curves: RepCurves, scores: Vec<RepScores> },
    Failed(String),
}

/// Whether log Fdr increases anywhere among bins past `boundary` whose tail
/// sum is at least `min_tail`.
pub fn raw_tail_nonmonotone(raw: &[f64], tail_sums: &[f64], centers: &[f64], boundary: f64, min_tail: f64) -> bool {
    let tail: Vec<f64> = (0..raw.len())
        .filter(|&k| centers[k] >= boundary && raw[k].is_finite() && tail_sums[k] >= min_tail)
        .map(|k| raw[k])
        .collect();
    tail.windows(2).any(|w| w[1] > w[0] + NONMONOTONE_TOL)
}

/// Runs one replication end to end.
pub fn run_replication(spec: &ScenarioSpec, cfg: &StudyConfig, rep_index: u64) -> RepOutcome {
    let (stats, truth) = sample_scenario(spec, rep_index);
    let pcfg = match spec.pipeline_config(cfg.method, cfg.controls) {
        Ok(c) => c,
        Err(e) => return RepOutcome::Failed(e.to_string()),
    };
    let out = match run_pipeline(&stats, &pcfg) {
        Ok(o) => o,
        Err(e) => return RepOutcome::Failed(e.to_string()),
    };
    let exp_all = |v: &[f64]| v.iter().map(|x| x.exp()).collect::<Vec<_>>();
    let fdr_raw = exp_all(&out.estimates.log_fdr);
    let tail_fdr_raw = exp_all(&out.estimates.log_tail_fdr_right);
    let fdr_iso = out.mono.fdr_iso();
    let tail_fdr_iso = exp_all(&out.mono.log_tail_fdr_right_iso);
    let counts = out.hist.counts_f64();
    let sy = DVector::from_column_slice(&counts);
    let sy: Vec<f64> = (tail_matrix(counts.len(), TailSide::Right) * sy).iter().copied().collect();
    let raw_log = &out.estimates.log_tail_fdr_right;
    let centers = out.hist.centers();
    let nonmonotone_raw_tail = raw_tail_nonmonotone(raw_log, &sy, centers, spec.iso_boundary, 0.0);
    let nonmonotone_raw_tail_supported = raw_tail_nonmonotone(raw_log, &sy, centers, spec.iso_boundary, MIN_TAIL_COUNT);

    let raw_capped: Vec<f64> = fdr_raw.iter().map(|v| if v.is_finite() { v.min(1.0) } else { 1.0 }).collect();
    let lookups = (|| -> Result<_> {
        Ok((
            per_hypothesis_values(&stats, &out.hist, &fdr_iso)?,
            per_hypothesis_values(&stats, &out.hist, &raw_capped)?,
            per_hypothesis_values(&stats, &out.hist, &tail_fdr_iso)?,
        ))
    })();
    let (h_iso, h_raw, h_tail) = match lookups {
        Ok(v) => v,
        Err(e) => return RepOutcome::Failed(e.to_string()),
    };
    let mut scores = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        let scored = (|| -> Result<RepScores> {
            Ok(RepScores {
                alpha,
                local_iso: score(&adaptive_reject_local(&h_iso, alpha)?, &truth)?,
                local_raw: score(&adaptive_reject_local(&h_raw, alpha)?, &truth)?,
                tail_iso: score(&adaptive_reject_tail(&h_tail, alpha)?, &truth)?,
            })
        })();
        match scored {
            Ok(s) => scores.push(s),
            Err(e) => return RepOutcome::Failed(e.to_string()),
        }
    }
    RepOutcome::Ok {
        curves: RepCurves {
            fdr_raw,
            fdr_iso,
            tail_fdr_raw,
            tail_fdr_iso,
            p0_hat: out.fit.p0_hat,
            nonmonotone_raw_tail,
            nonmonotone_raw_tail_supported,
        },
        scores,
    }
}

/// Averages of one error measure over successful replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub alpha: f64,
    pub mean_fdp: f64,
    pub mean_fnp: f64,
    pub mean_rejections: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub spec: ScenarioSpec,
    pub grid: Vec<f64>,
    pub defined_raw: Vec<usize>,
    pub mean_fdr_raw: Vec<f64>,
    pub mean_fdr_iso: Vec<f64>,
    pub band_lo_raw: Vec<f64>,
    pub band_hi_raw: Vec<f64>,
    pub band_lo_iso: Vec<f64>,
    pub band_hi_iso: Vec<f64>,
    pub mean_tail_fdr_raw: Vec<f64>,
    pub mean_tail_fdr_iso: Vec<f64>,
    pub oracle_fdr: Vec<f64>,
    pub oracle_tail_fdr: Vec<f64>,
    pub nonmonotone_raw_tail_count: usize,
    pub nonmonotone_raw_tail_supported_count: usize,
    pub succeeded: usize,
    pub failures: Vec<(u64, String)>,
    pub mean_p0_hat: f64,
    /// Per-replication scores, indexed like `rep_ids`.
    pub rep_ids: Vec<u64>,
    pub rep_scores: Vec<Vec<RepScores>>,
    pub local_iso: Vec<ErrorSummary>,
    pub local_raw: Vec<ErrorSummary>,
    pub tail_iso: Vec<ErrorSummary>,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = q * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            sorted[lo] + frac * (sorted[hi] - sorted[lo])
        }
    }
}

fn column_stats(rows: &[&[f64]], k: usize) -> (usize, f64, f64, f64) {
    let mut vals: Vec<f64> = rows.iter().map(|r| r[k]).filter(|v| v.is_finite()).collect();
    if vals.is_empty() {
        return (0, f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    vals.sort_by(f64::total_cmp);
    (vals.len(), mean, quantile_sorted(&vals, 0.025), quantile_sorted(&vals, 0.975))
}

fn summarize_errors(
    scores: &[&Vec<RepScores>],
    alphas: &[f64],
    pick: impl Fn(&RepScores) -> ErrorScore,
) -> Vec<ErrorSummary> {
    alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let n = scores.len().max(1) as f64;
            let (mut fdp, mut fnp, mut rej) = (0.0, 0.0, 0.0);
            for s in scores {
                let e = pick(&s[a]);
                fdp += e.fdp;
                fnp += e.fnp;
                rej += e.rejections as f64;
            }
            ErrorSummary {
                alpha,
                mean_fdp: fdp / n,
                mean_fnp: fnp / n,
                mean_rejections: rej / n,
            }
        })
        .collect()
}

/// Runs every replication and aggregates pointwise means, 95% bands and
/// error rates. Failed replications are excluded and listed.
pub fn run_study(spec: &ScenarioSpec, cfg: &StudyConfig) -> Result<SimulationSummary> {
    spec.validate()?;
    for &a in &cfg.alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(FdrError::InvalidArgument(format!("alpha must lie in (0, 1), got {a}")));
        }
    }
    let reps: Vec<u64> = (0..spec.reps as u64).collect();
    let outcomes: Vec<RepOutcome> = if cfg.parallel {
        reps.par_iter().map(|&r| run_replication(spec, cfg, r)).collect()
    } else {
        reps.iter().map(|&r| run_replication(spec, cfg, r)).collect()
    };
    aggregate(spec, cfg, &reps, outcomes)
}

fn aggregate(spec: &ScenarioSpec, cfg: &StudyConfig, reps: &[u64], outcomes: Vec<RepOutcome>) -> Result<SimulationSummary> {
    let pcfg = spec.pipeline_config(cfg.method, cfg.controls)?;
    let grid = crate::histogram::Histogram::build(&[spec.range.0], pcfg.width, pcfg.range)?
        .centers()
        .to_vec();
    let k = grid.len();

    let mut failures = Vec::new();
    let mut curves = Vec::new();
    let mut rep_ids = Vec::new();
    let mut rep_scores = Vec::new();
    for (&rep, outcome) in reps.iter().zip(outcomes) {
        match outcome {
            RepOutcome::Ok { curves: c, scores } => {
                curves.push(c);
                rep_ids.push(rep);
                rep_scores.push(scores);
            }
            RepOutcome::Failed(msg) => failures.push((rep, msg)),
        }
    }

    let mut defined_raw = vec![0; k];
    let (mut mean_fdr_raw, mut band_lo_raw, mut band_hi_raw) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let (mut mean_fdr_iso, mut band_lo_iso, mut band_hi_iso) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let mut mean_tail_fdr_raw = vec![0.0; k];
    let mut mean_tail_fdr_iso = vec![0.0; k];
    let raw_rows: Vec<&[f64]> = curves.iter().map(|c| c.fdr_raw.as_slice()).collect();
    let iso_rows: Vec<&[f64]> = curves.iter().map(|c| c.fdr_iso.as_slice()).collect();
    let traw_rows: Vec<&[f64]> = curves.iter().map(|c| c.tail_fdr_raw.as_slice()).collect();
    let tiso_rows: Vec<&[f64]> = curves.iter().map(|c| c.tail_fdr_iso.as_slice()).collect();
    for i in 0..k {
        let (n, m, lo, hi) = column_stats(&raw_rows, i);
        defined_raw[i] = n;
        mean_fdr_raw[i] = m;
        band_lo_raw[i] = lo;
        band_hi_raw[i] = hi;
        let (_, m, lo, hi) = column_stats(&iso_rows, i);
        mean_fdr_iso[i] = m;
        band_lo_iso[i] = lo;
        band_hi_iso[i] = hi;
        mean_tail_fdr_raw[i] = column_stats(&traw_rows, i).1;
        mean_tail_fdr_iso[i] = column_stats(&tiso_rows, i).1;
    }
    let oracle_fdr = grid.iter().map(|&t| oracle_fdr(spec, t)).collect::<Result<Vec<_>>>()?;
    let oracle_tail_fdr = grid
        .iter()
        .map(|&t| oracle_tail_fdr(spec, t, TailSide::Right))
        .collect::<Result<Vec<_>>>()?;

    let score_refs: Vec<&Vec<RepScores>> = rep_scores.iter().collect();
    let succeeded = curves.len();
    Ok(SimulationSummary {
        spec: spec.clone(),
        grid,
        defined_raw,
        mean_fdr_raw,
        mean_fdr_iso,
        band_lo_raw,
        band_hi_raw,
        band_lo_iso,
        band_hi_iso,
        mean_tail_fdr_raw,
        mean_tail_fdr_iso,
        oracle_fdr,
        oracle_tail_fdr,
        nonmonotone_raw_tail_count: curves.iter().filter(|c| c.nonmonotone_raw_tail).count(),
        nonmonotone_raw_tail_supported_count: curves.iter().filter(|c| c.nonmonotone_raw_tail_supported).count(),
        succeeded,
        failures,
        mean_p0_hat: curves.iter().map(|c| c.p0_hat).sum::<f64>() / succeeded.max(1) as f64,
        local_iso: summarize_errors(&score_refs, &cfg.alphas, |s| s.local_iso),
        local_raw: summarize_errors(&score_refs, &cfg.alphas, |s| s.local_raw),
        tail_iso: summarize_errors(&score_refs, &cfg.alphas, |s| s.tail_iso),
        rep_ids,
        rep_scores,
    })
}
