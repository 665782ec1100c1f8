//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report prints in order; exits
//! nonzero when any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};

use monofdr::decision::{adaptive_reject_local, adaptive_reject_tail};
use monofdr::fdr_core::{FdrEstimates, TailSide};
use monofdr::histogram::Histogram;
use monofdr::isotonic::{monotonize_tails, pava, qp_isotonic, Direction, MonoMethod, MonoTarget, TailBoundaries};
use monofdr::null_model::{FamilyKind, FitControls, NullFit, NullRegion};
use monofdr::pipeline::{run_pipeline, PipelineConfig, PipelineOutput};
use monofdr::simulation::{
    oracle_fdr, oracle_tail_fdr, run_replication, run_study, sample_scenario, RepOutcome, ScenarioKind, ScenarioSpec,
    StudyConfig, CHISQ_DF, CHISQ_NULL_SCALE, NORMAL_NULL_MEAN, NORMAL_NULL_SD,
};
use monofdr::stats_numerics::{chisq_pdf, Dof};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// 1. isotonic oracles

/// Diagonal-weight isotonic regression through FISTA on the dual of
/// `min Σ w (z − a)²  s.t. s (z_i − z_{i+1}) ≤ 0`.
fn fista_isotonic(a: &[f64], w: &[f64], dir: Direction) -> Vec<f64> {
    let n = a.len();
    if n < 2 {
        return a.to_vec();
    }
    let s = match dir {
        Direction::NonDecreasing => 1.0,
        Direction::NonIncreasing => -1.0,
    };
    let m = n - 1;
    let primal = |lam: &[f64]| -> Vec<f64> {
        // z = a − W⁻¹ Dᵀ λ
        let mut z = a.to_vec();
        for i in 0..m {
            z[i] -= s * lam[i] / w[i];
            z[i + 1] += s * lam[i] / w[i + 1];
        }
        z
    };
    // ∇φ(λ) = −D z(λ)
    let grad = |lam: &[f64]| -> Vec<f64> {
        let z = primal(lam);
        (0..m).map(|i| -s * (z[i] - z[i + 1])).collect()
    };
    let lip = (0..m)
        .map(|i| {
            let diag = 1.0 / w[i] + 1.0 / w[i + 1];
            let off = if i > 0 { 1.0 / w[i] } else { 0.0 } + if i + 1 < m { 1.0 / w[i + 1] } else { 0.0 };
            diag + off
        })
        .fold(0.0, f64::max);
    let step = 1.0 / lip;
    let mut lam = vec![0.0; m];
    let mut y = lam.clone();
    let mut t = 1.0f64;
    for _ in 0..2_000_000 {
        let g = grad(&y);
        let next: Vec<f64> = (0..m).map(|i| (y[i] - step * g[i]).max(0.0)).collect();
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // adaptive restart when momentum points uphill
        let uphill: f64 = (0..m).map(|i| g[i] * (next[i] - lam[i])).sum();
        if uphill > 0.0 {
            y = lam.clone();
            t = 1.0;
            continue;
        }
        let beta = (t - 1.0) / t_next;
        y = (0..m).map(|i| next[i] + beta * (next[i] - lam[i])).collect();
        lam = next;
        t = t_next;

        let gl = grad(&lam);
        let resid = (0..m)
            .map(|i| if lam[i] > 0.0 { gl[i].abs() } else { (-gl[i]).max(0.0) })
            .fold(0.0, f64::max);
        if resid < 1e-14 {
            break;
        }
    }
    primal(&lam)
}

/// Exhaustive search over active sets of the chain constraints.
fn enumerate_qp(a: &[f64], m: &DMatrix<f64>, dir: Direction) -> Vec<f64> {
    let n = a.len();
    if n < 2 {
        return a.to_vec();
    }
    let av = DVector::from_column_slice(a);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        // block index per coordinate; constraint i active merges i and i+1
        let mut block = vec![0usize; n];
        for i in 1..n {
            block[i] = block[i - 1] + usize::from(mask & (1 << (i - 1)) == 0);
        }
        let nb = block[n - 1] + 1;
        let b = DMatrix::from_fn(n, nb, |i, j| if block[i] == j { 1.0 } else { 0.0 });
        let lhs = b.transpose() * m * &b;
        let rhs = b.transpose() * m * &av;
        let Some(theta) = lhs.lu().solve(&rhs) else {
            continue;
        };
        let z = &b * theta;
        let feasible = (0..n - 1).all(|i| match dir {
            Direction::NonDecreasing => z[i] <= z[i + 1] + 1e-12,
            Direction::NonIncreasing => z[i] >= z[i + 1] - 1e-12,
        });
        if !feasible {
            continue;
        }
        let r = &z - &av;
        let obj = (r.transpose() * m * &r)[(0, 0)];
        if best.as_ref().map_or(true, |(o, _)| obj < *o) {
            best = Some((obj, z.iter().copied().collect()));
        }
    }
    best.expect("the all-merged set is always feasible").1
}

fn random_dir(rng: &mut ChaCha8Rng) -> Direction {
    if rng.random::<bool>() {
        Direction::NonDecreasing
    } else {
        Direction::NonIncreasing
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst_pava = 0.0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1..=8);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
        let dir = random_dir(&mut rng);
        let got = pava(&a, &w, dir).expect("valid problem");
        worst_pava = worst_pava.max(max_abs_diff(&got, &fista_isotonic(&a, &w, dir)));
    }
    let mut worst_qp = 0.0f64;
    let mut errors = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=6);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let f = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = &f * f.transpose() + DMatrix::identity(n, n) * 0.1;
        let dir = random_dir(&mut rng);
        match qp_isotonic(&a, &m, dir) {
            Ok(got) => worst_qp = worst_qp.max(max_abs_diff(&got, &enumerate_qp(&a, &m, dir))),
            Err(_) => errors += 1,
        }
    }
    outcome(
        worst_pava <= 1e-8 && worst_qp <= 1e-8 && errors == 0,
        format!("pava vs dual FISTA max diff {worst_pava:.2e} (1000 problems); qp vs enumeration max diff {worst_qp:.2e} (200 problems, {errors} solver errors)"),
    )
}

// ---------------------------------------------------------------------------
// 2. monotonicity invariants

fn check_shape(v: &[f64], centers: &[f64], b: &TailBoundaries) -> Result<(), String> {
    let nat: Vec<f64> = v.iter().map(|x| x.exp()).collect();
    if let Some(k) = nat.iter().position(|x| !(*x <= 1.0)) {
        return Err(format!("value {} above one at bin {k}", nat[k]));
    }
    if let Some(r) = b.right {
        let idx: Vec<usize> = (0..nat.len()).filter(|&k| centers[k] >= r).collect();
        for w in idx.windows(2) {
            if nat[w[1]] > nat[w[0]] + 1e-12 {
                return Err(format!("increase past right boundary at bin {}", w[1]));
            }
        }
    }
    if let Some(l) = b.left {
        let idx: Vec<usize> = (0..nat.len()).filter(|&k| centers[k] <= l).collect();
        for w in idx.windows(2) {
            if nat[w[1]] + 1e-12 < nat[w[0]] {
                return Err(format!("decrease before left boundary at bin {}", w[1]));
            }
        }
    }
    Ok(())
}

fn check_output(out: &PipelineOutput, cfg: &PipelineConfig) -> Result<(), String> {
    let c = out.hist.centers();
    let b = &out.mono.boundaries;
    if matches!(cfg.which, MonoTarget::LocalFdr | MonoTarget::Both) {
        check_shape(&out.mono.log_fdr_iso, c, b).map_err(|e| format!("fdr: {e}"))?;
    }
    if matches!(cfg.which, MonoTarget::TailFdr | MonoTarget::Both) {
        // each side's tail Fdr is monotonized on its own tail only
        let right = TailBoundaries { left: None, ..*b };
        let left = TailBoundaries { right: None, ..*b };
        check_shape(&out.mono.log_tail_fdr_right_iso, c, &right).map_err(|e| format!("right Fdr: {e}"))?;
        check_shape(&out.mono.log_tail_fdr_left_iso, c, &left).map_err(|e| format!("left Fdr: {e}"))?;
    }
    let mut again: FdrEstimates = out.estimates.clone();
    again.log_fdr = out.mono.log_fdr_iso.clone();
    again.log_tail_fdr_right = out.mono.log_tail_fdr_right_iso.clone();
    again.log_tail_fdr_left = out.mono.log_tail_fdr_left_iso.clone();
    let twice = monotonize_tails(&again, &out.hist, *b, cfg.method, cfg.which).map_err(|e| e.to_string())?;
    let d = max_abs_diff(&twice.log_fdr_iso, &out.mono.log_fdr_iso)
        .max(max_abs_diff(&twice.log_tail_fdr_right_iso, &out.mono.log_tail_fdr_right_iso))
        .max(max_abs_diff(&twice.log_tail_fdr_left_iso, &out.mono.log_tail_fdr_left_iso));
    if d > 1e-12 {
        return Err(format!("not idempotent, diff {d:.2e}"));
    }
    Ok(())
}

fn criterion_2() -> Outcome {
    let mut runs = 0;
    let mut failures = Vec::new();
    // simulation replications
    for spec in [ScenarioSpec::normal_preset(), ScenarioSpec::chisq_preset()] {
        for method in [MonoMethod::Pava, MonoMethod::FullQp] {
            let cfg = spec.pipeline_config(method, FitControls::default()).unwrap();
            for rep in 0..10 {
                let (stats, _) = sample_scenario(&spec, rep);
                runs += 1;
                match run_pipeline(&stats, &cfg) {
                    Ok(out) => {
                        if let Err(e) = check_output(&out, &cfg) {
                            failures.push(format!("{} {method} rep {rep}: {e}", spec.kind));
                        }
                    }
                    Err(e) => failures.push(format!("{} {method} rep {rep}: {e}", spec.kind)),
                }
            }
        }
    }
    // analyses with both tails and each side alone, all targets
    let spec = ScenarioSpec {
        n: 5000,
        base_seed: 77,
        ..ScenarioSpec::normal_preset()
    };
    let region = NullRegion::new(-1.3, 1.7).unwrap();
    for rep in 0..4 {
        let (stats, _) = sample_scenario(&spec, rep);
        for (l, r) in [(true, true), (true, false), (false, true)] {
            for method in [MonoMethod::Pava, MonoMethod::FullQp] {
                for which in [MonoTarget::Both, MonoTarget::LocalFdr, MonoTarget::TailFdr] {
                    let cfg = PipelineConfig {
                        width: 0.1,
                        range: (-6.0, 8.0),
                        region,
                        family: FamilyKind::Normal,
                        boundaries: TailBoundaries::from_region(&region, l, r),
                        method,
                        which,
                        controls: FitControls::default(),
                    };
                    runs += 1;
                    match run_pipeline(&stats, &cfg) {
                        Ok(out) => {
                            if let Err(e) = check_output(&out, &cfg) {
                                failures.push(format!("analysis rep {rep} ({l},{r}) {method}: {e}"));
                            }
                        }
                        Err(e) => failures.push(format!("analysis rep {rep}: {e}")),
                    }
                }
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{runs} runs monotone past each boundary (slack 1e-12), capped at 1, idempotent")
    } else {
        format!("{} of {runs} runs failed; first: {}", failures.len(), failures[0])
    };
    outcome(failures.is_empty(), detail)
}

// ---------------------------------------------------------------------------
// 3. null fits on pure-null data

fn criterion_3() -> Outcome {
    let mut msgs = Vec::new();
    let mut pass = true;

    let spec = ScenarioSpec {
        p0: 1.0,
        n: 100_000,
        base_seed: 3_000,
        ..ScenarioSpec::normal_preset()
    };
    let cfg = spec.pipeline_config(MonoMethod::Pava, FitControls::default()).unwrap();
    let (mut worst_mean, mut worst_sd, mut p0_lo, mut p0_hi) = (0.0f64, 0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for rep in 0..20 {
        let (stats, _) = sample_scenario(&spec, rep);
        let hist = Histogram::build(&stats, cfg.width, cfg.range).unwrap();
        match NullFit::fit(&hist, FamilyKind::Normal, cfg.region, cfg.controls) {
            Ok(fit) => {
                let (m, s) = fit.normal_moments().unwrap();
                worst_mean = worst_mean.max((m - NORMAL_NULL_MEAN).abs());
                worst_sd = worst_sd.max((s - NORMAL_NULL_SD).abs());
                p0_lo = p0_lo.min(fit.p0_hat);
                p0_hi = p0_hi.max(fit.p0_hat);
            }
            Err(e) => {
                pass = false;
                msgs.push(format!("normal rep {rep}: {e}"));
            }
        }
    }
    pass &= worst_mean <= 0.05 && worst_sd <= 0.05 && p0_lo >= 0.95 && p0_hi <= 1.05;
    msgs.push(format!(
        "normal: max |mean-0.2| {worst_mean:.4}, max |sd-1.2| {worst_sd:.4}, p0 in [{p0_lo:.4}, {p0_hi:.4}]"
    ));

    let spec = ScenarioSpec {
        p0: 1.0,
        n: 100_000,
        base_seed: 3_001,
        ..ScenarioSpec::chisq_preset()
    };
    let cfg = spec.pipeline_config(MonoMethod::Pava, FitControls::default()).unwrap();
    let dof = Dof::new(CHISQ_DF).unwrap();
    let grid: Vec<f64> = (0..=950).map(|i| 0.5 + 0.01 * i as f64).collect();
    let (mut worst_sup, mut p0_lo, mut p0_hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
    for rep in 0..20 {
        let (stats, _) = sample_scenario(&spec, rep);
        let hist = Histogram::build(&stats, cfg.width, cfg.range).unwrap();
        match NullFit::fit(&hist, FamilyKind::Gamma, cfg.region, cfg.controls) {
            Ok(fit) => {
                for &t in &grid {
                    let truth = chisq_pdf(t / CHISQ_NULL_SCALE, dof).unwrap() / CHISQ_NULL_SCALE;
                    worst_sup = worst_sup.max((fit.null_density(t).unwrap() - truth).abs());
                }
                p0_lo = p0_lo.min(fit.p0_hat);
                p0_hi = p0_hi.max(fit.p0_hat);
            }
            Err(e) => {
                pass = false;
                msgs.push(format!("gamma rep {rep}: {e}"));
            }
        }
    }
    pass &= worst_sup < 0.01 && p0_lo >= 0.95 && p0_hi <= 1.05;
    msgs.push(format!(
        "gamma: sup density error on [0.5, 10] {worst_sup:.4}, p0 in [{p0_lo:.4}, {p0_hi:.4}]"
    ));
    outcome(pass, msgs.join("; "))
}

// ---------------------------------------------------------------------------
// 4. delta-method variance against a bootstrap

fn multinomial(rng: &mut ChaCha8Rng, total: u64, probs: &[f64]) -> Vec<u64> {
    let mut left = total;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probs.len());
    for &p in probs {
        if left == 0 || mass <= 0.0 {
            out.push(0);
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(left, q).unwrap().sample(rng);
        out.push(draw);
        left -= draw;
        mass -= p;
    }
    out
}

fn criterion_4() -> Outcome {
    let spec = ScenarioSpec {
        base_seed: 4_000,
        ..ScenarioSpec::normal_preset()
    };
    let cfg = spec.pipeline_config(MonoMethod::Pava, FitControls::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut bins_checked = 0;
    let mut failed_draws = 0;
    for d in 0..5 {
        let (stats, _) = sample_scenario(&spec, d);
        let hist = Histogram::build(&stats, cfg.width, cfg.range).unwrap();
        let fit = NullFit::fit(&hist, cfg.family, cfg.region, cfg.controls).unwrap();
        let est = FdrEstimates::compute(&hist, &fit).unwrap();
        let total = hist.counts().iter().sum::<u64>();
        let probs: Vec<f64> = hist.counts().iter().map(|&c| c as f64 / total as f64).collect();
        let k = hist.len();
        let mut draws: Vec<Vec<f64>> = vec![Vec::new(); k];
        for _ in 0..200 {
            let counts = multinomial(&mut rng, total, &probs);
            let h = hist.with_counts(counts, hist.total()).unwrap();
            let Ok(f) = NullFit::fit(&h, cfg.family, cfg.region, cfg.controls) else {
                failed_draws += 1;
                continue;
            };
            let e = FdrEstimates::compute(&h, &f).unwrap();
            for (j, v) in e.log_fdr.iter().enumerate() {
                if v.is_finite() {
                    draws[j].push(*v);
                }
            }
        }
        for j in 0..k {
            if hist.counts()[j] < 20 || draws[j].len() < 100 {
                continue;
            }
            let m = draws[j].iter().sum::<f64>() / draws[j].len() as f64;
            let boot = draws[j].iter().map(|v| (v - m).powi(2)).sum::<f64>() / (draws[j].len() - 1) as f64;
            let ratio = est.cov_log_fdr[(j, j)] / boot;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            bins_checked += 1;
        }
    }
    outcome(
        lo >= 0.5 && hi <= 2.0 && bins_checked > 0,
        format!("delta/bootstrap variance ratio in [{lo:.3}, {hi:.3}] over {bins_checked} bins (5 datasets x 200 draws, {failed_draws} failed refits)"),
    )
}

// ---------------------------------------------------------------------------
// 5. the two-scenario study

struct StudyCheck {
    band_frac: f64,
    band_points: usize,
    band_frac_any: f64,
    band_points_any: usize,
    mae_raw: f64,
    mae_iso: f64,
    nonmono: usize,
    nonmono_literal: usize,
    fdp: Vec<(f64, f64)>,
    failures: usize,
}

fn study_check(spec: &ScenarioSpec) -> StudyCheck {
    let cfg = StudyConfig {
        parallel: true,
        ..StudyConfig::default()
    };
    let s = run_study(spec, &cfg).expect("study runs");
    let narrower_at = |k: usize| s.band_hi_iso[k] - s.band_lo_iso[k] <= s.band_hi_raw[k] - s.band_lo_raw[k] + 1e-12;
    let tail: Vec<usize> = (0..s.grid.len())
        .filter(|&k| s.grid[k] >= spec.iso_boundary && s.defined_raw[k] > 0)
        .collect();
    // both bands computed over the same replications
    let full: Vec<usize> = tail.iter().copied().filter(|&k| s.defined_raw[k] == s.succeeded).collect();
    let narrower = full.iter().filter(|&&k| narrower_at(k)).count();
    let narrower_any = tail.iter().filter(|&&k| narrower_at(k)).count();

    // per-replication mean absolute error over tail bins with a raw estimate
    let (mut err_raw, mut err_iso, mut m) = (0.0, 0.0, 0usize);
    for rep in 0..spec.reps as u64 {
        if let RepOutcome::Ok { curves, .. } = run_replication(spec, &cfg, rep) {
            for &k in &tail {
                if curves.fdr_raw[k].is_finite() {
                    err_raw += (curves.fdr_raw[k] - s.oracle_fdr[k]).abs();
                    err_iso += (curves.fdr_iso[k] - s.oracle_fdr[k]).abs();
                    m += 1;
                }
            }
        }
    }
    StudyCheck {
        band_frac: narrower as f64 / full.len().max(1) as f64,
        band_points: full.len(),
        band_frac_any: narrower_any as f64 / tail.len().max(1) as f64,
        band_points_any: tail.len(),
        mae_raw: err_raw / m.max(1) as f64,
        mae_iso: err_iso / m.max(1) as f64,
        nonmono: s.nonmonotone_raw_tail_supported_count,
        nonmono_literal: s.nonmonotone_raw_tail_count,
        fdp: s.local_iso.iter().map(|e| (e.alpha, e.mean_fdp)).collect(),
        failures: s.failures.len(),
    }
}

fn criterion_5() -> Vec<(String, Outcome)> {
    let normal = study_check(&ScenarioSpec::normal_preset());
    let chisq = study_check(&ScenarioSpec::chisq_preset());
    let mut out = Vec::new();

    out.push((
        "5a".into(),
        outcome(
            normal.band_frac >= 0.8 && chisq.band_frac >= 0.8,
            format!(
                "monotone band no wider than raw at {:.1}% of {} normal and {:.1}% of {} chi-square tail points with raw defined in every replication (all tail points with any raw estimate: {:.1}% of {}, {:.1}% of {})",
                100.0 * normal.band_frac,
                normal.band_points,
                100.0 * chisq.band_frac,
                chisq.band_points,
                100.0 * normal.band_frac_any,
                normal.band_points_any,
                100.0 * chisq.band_frac_any,
                chisq.band_points_any
            ),
        ),
    ));
    out.push((
        "5b".into(),
        outcome(
            normal.mae_iso <= normal.mae_raw && chisq.mae_iso <= chisq.mae_raw,
            format!(
                "mean |fdr - oracle| on tail points: normal raw {:.4} vs monotone {:.4}; chi-square raw {:.4} vs monotone {:.4}",
                normal.mae_raw, normal.mae_iso, chisq.mae_raw, chisq.mae_iso
            ),
        ),
    ));
    out.push((
        "5c".into(),
        outcome(
            chisq.nonmono > normal.nonmono,
            format!(
                "replications with increasing raw Fdr past the boundary (tail count >= 10): chi-square {} vs normal {}; without the count floor: {} vs {}",
                chisq.nonmono, normal.nonmono, chisq.nonmono_literal, normal.nonmono_literal
            ),
        ),
    ));
    let fdp_ok = |c: &StudyCheck| c.fdp.iter().all(|(a, f)| *f <= a + 0.05);
    let fmt = |c: &StudyCheck| {
        c.fdp
            .iter()
            .map(|(a, f)| format!("{a}: {f:.4}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    out.push((
        "5d".into(),
        outcome(
            fdp_ok(&normal) && fdp_ok(&chisq) && normal.failures == 0 && chisq.failures == 0,
            format!(
                "mean fdp of the local step-up rule: normal [{}], chi-square [{}]; failed replications {} + {}",
                fmt(&normal),
                fmt(&chisq),
                normal.failures,
                chisq.failures
            ),
        ),
    ));
    out
}

// ---------------------------------------------------------------------------
// 6. decision rules

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for (vals, alpha, want) in [
        (vec![0.01, 0.02, 0.10], 0.05, 3),
        (vec![0.06, 0.07], 0.05, 0),
        (vec![0.02, 0.06], 0.05, 2),
    ] {
        let r = adaptive_reject_local(&vals, alpha).unwrap();
        if r.u != want || r.rejected.iter().filter(|b| **b).count() != want {
            ok = false;
            notes.push(format!("local {vals:?} gave u={}", r.u));
        }
    }
    for (vals, alpha, want) in [(vec![0.01, 0.04, 0.06], 0.05, 2), (vec![0.3, 0.4], 0.05, 0)] {
        let r = adaptive_reject_tail(&vals, alpha).unwrap();
        if r.u != want {
            ok = false;
            notes.push(format!("tail {vals:?} gave u={}", r.u));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let alphas = [0.01, 0.05, 0.1, 0.2, 0.3, 0.5, 0.9];
    for _ in 0..100 {
        let n = rng.random_range(1..200);
        let vals: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
        for rule in [adaptive_reject_local, adaptive_reject_tail] {
            let reps: Vec<_> = alphas.iter().map(|&a| rule(&vals, a).unwrap()).collect();
            for w in reps.windows(2) {
                if w[0].rejected.iter().zip(&w[1].rejected).any(|(a, b)| *a && !*b) {
                    ok = false;
                    notes.push(format!("rejections shrank from alpha {} to {}", w[0].alpha, w[1].alpha));
                }
            }
        }
    }
    let detail = if ok {
        "step-up and threshold examples exact; rejection sets nested in alpha on 100 random vectors".to_string()
    } else {
        notes.join("; ")
    };
    outcome(ok, detail)
}

// ---------------------------------------------------------------------------
// 7. oracle level sets

fn criterion_7() -> Outcome {
    let mut ok = true;
    let mut checked = 0;
    let mut notes = Vec::new();
    for spec in [ScenarioSpec::normal_preset(), ScenarioSpec::chisq_preset()] {
        let start = match spec.kind {
            ScenarioKind::NormalMix => NORMAL_NULL_MEAN,
            ScenarioKind::ChisqMix => 0.0,
        };
        let steps = ((spec.range.1 - start) / 0.01).round() as usize;
        for i in 0..=steps {
            let t = start + 0.01 * i as f64;
            let f = oracle_fdr(&spec, t).unwrap();
            let tail = oracle_tail_fdr(&spec, t, TailSide::Right).unwrap();
            for alpha in [0.01, 0.05, 0.1, 0.2] {
                if f <= alpha {
                    checked += 1;
                    if !(tail <= alpha) {
                        ok = false;
                        notes.push(format!("{} t={t:.2} alpha={alpha}: fdr {f:.4} Fdr {tail:.4}", spec.kind));
                    }
                }
            }
        }
    }
    let detail = if ok {
        format!("fdr <= alpha implies Fdr <= alpha at all {checked} qualifying grid points")
    } else {
        format!("{} violations; first: {}", notes.len(), notes[0])
    };
    outcome(ok, detail)
}

// ---------------------------------------------------------------------------
// 8. byte-identical simulate output

fn simulate(dir: &Path, preset: &str, parallel: bool) -> Result<(), String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_monofdr"));
    cmd.args(["simulate", "--preset", preset, "--out-dir"]).arg(dir);
    if parallel {
        cmd.arg("--parallel");
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for preset in ["normal-sec4", "chisq-sec4"] {
        let runs = [("serial-a", false), ("serial-b", false), ("parallel-a", true), ("parallel-b", true)];
        for (name, par) in runs {
            if let Err(e) = simulate(&tmp.path().join(preset).join(name), preset, par) {
                return outcome(false, format!("{preset} {name} failed: {e}"));
            }
        }
        for file in ["study_summary.csv", "study_errors.csv", "study_reps.csv", "study_meta.txt"] {
            let base = std::fs::read(tmp.path().join(preset).join("serial-a").join(file)).unwrap();
            for (name, _) in &runs[1..] {
                let other = std::fs::read(tmp.path().join(preset).join(name).join(file)).unwrap();
                if other != base {
                    return outcome(false, format!("{preset}/{name}/{file} differs from the first serial run"));
                }
                compared += 1;
            }
        }
    }
    outcome(
        true,
        format!("{compared} file comparisons identical across serial and parallel runs of both presets"),
    )
}

fn main() {
    // `cargo test` passes harness flags; a name filter that excludes us is honoured
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if args.iter().any(|a| !"acceptance".contains(a.as_str())) {
        return;
    }
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }

    let mut all_pass = true;
    let mut report = |id: &str, name: &str, o: Outcome, secs: f64| {
        all_pass &= o.pass;
        println!(
            "criterion {id:<3} {} {name}: {} ({secs:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    };
    let timed = |f: fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        (o, t.elapsed().as_secs_f64())
    };

    let (o, s) = timed(criterion_1);
    report("1", "isotonic oracle equivalence", o, s);
    let (o, s) = timed(criterion_2);
    report("2", "monotonicity invariants", o, s);
    let (o, s) = timed(criterion_3);
    report("3", "null-fit consistency", o, s);
    let (o, s) = timed(criterion_4);
    report("4", "covariance validation", o, s);
    let t = Instant::now();
    let parts = criterion_5();
    let secs = t.elapsed().as_secs_f64();
    for (id, o) in parts {
        report(&id, "simulation study", o, secs);
    }
    let (o, s) = timed(criterion_6);
    report("6", "decision rules", o, s);
    let (o, s) = timed(criterion_7);
    report("7", "oracle level-set inclusion", o, s);
    let (o, s) = timed(criterion_8);
    report("8", "determinism", o, s);

    if !all_pass {
        std::process::exit(1);
    }
}
