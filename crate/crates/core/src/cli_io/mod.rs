//! Command front end: ingestion, orchestration and output bundles.
//!
//! Every writer here is deterministic: identical inputs and settings give
//! byte-identical files.

pub mod config;
pub mod csv_io;
pub mod svg;

use std::path::{Path, PathBuf};

use anyhow::Context;

use crate::decision::{
    adaptive_reject_local, adaptive_reject_local_per_tail, adaptive_reject_tail, per_hypothesis_values,
    DecisionReport,
};
use crate::fdr_core::TailSide;
use crate::pipeline::{run_pipeline, PipelineOutput};
use crate::simulation::{run_study, ErrorSummary, SimulationSummary};
use crate::stats_numerics::{z_transform_all, Dof};

pub use config::{AnalysisConfig, ColumnSel, ConfigError, DecisionMode, SimulateConfig, Sides};
pub use csv_io::{fmt_f64, read_column, read_column_file, CsvError, Table};
pub use svg::{Band, Plot, Series};

/// Environment variable that overrides the configured output directory.
pub const OUT_DIR_ENV: &str = "MONOFDR_OUT_DIR";

pub const BINS_CSV: &str = "bins.csv";
pub const DECISIONS_CSV: &str = "decisions.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const FDR_PLOT: &str = "fdr_plot.svg";
pub const STUDY_SUMMARY_CSV: &str = "study_summary.csv";
pub const STUDY_ERRORS_CSV: &str = "study_errors.csv";
pub const STUDY_REPS_CSV: &str = "study_reps.csv";
pub const STUDY_META: &str = "study_meta.txt";
pub const TAIL_PLOT: &str = "tail_fdr_plot.svg";

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn flag(b: bool) -> String {
    if b { "1".into() } else { "0".into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformReport {
    pub z: Vec<f64>,
    pub clamped: usize,
}

/// t-statistics to z-values; no files touched.
pub fn transform_values(ts: &[f64], df: f64, clamp_z: f64) -> crate::Result<TransformReport> {
    let batch = z_transform_all(ts, Dof::new(df)?, clamp_z)?;
    Ok(TransformReport {
        z: batch.values,
        clamped: batch.clamped,
    })
}

/// Reads one column of t-statistics and writes a one-column `z` CSV.
pub fn cmd_transform(
    input: &Path,
    column: &ColumnSel,
    df: f64,
    clamp_z: f64,
    output: &Path,
) -> anyhow::Result<TransformReport> {
    let ts = read_column_file(input, column)?;
    let report = transform_values(&ts, df, clamp_z)?;
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    let mut t = Table::new(["z"]);
    for &z in &report.z {
        t.push(vec![fmt_f64(z)]);
    }
    t.write_file(output)?;
    Ok(report)
}

/// Per-α rejections for the three rules.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaDecisions {
    pub alpha: f64,
    pub local_iso: DecisionReport,
    pub local_raw: DecisionReport,
    pub tail_iso: DecisionReport,
}

/// In-memory result of an analysis.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub config: AnalysisConfig,
    pub stats: Vec<f64>,
    pub clamped: usize,
    pub out: PipelineOutput,
    /// Per-hypothesis monotone local fdr.
    pub fdr_iso: Vec<f64>,
    /// Per-hypothesis unadjusted local fdr, capped at one.
    pub fdr_raw: Vec<f64>,
    /// Per-hypothesis monotone tail Fdr.
    pub tail_fdr_iso: Vec<f64>,
    pub decisions: Vec<AlphaDecisions>,
}

impl Analysis {
    pub fn bin_tail_fdr_raw(&self) -> Vec<f64> {
        let split = self.out.mono.boundaries.split_point();
        let est = &self.out.estimates;
        self.out
            .hist
            .centers()
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let side = if t >= split { TailSide::Right } else { TailSide::Left };
                est.log_tail_fdr(side)[k].exp()
            })
            .collect()
    }

    pub fn bin_tail_se(&self) -> Vec<f64> {
        let split = self.out.mono.boundaries.split_point();
        let right = self.out.estimates.std_errors_tail_fdr(TailSide::Right);
        let left = self.out.estimates.std_errors_tail_fdr(TailSide::Left);
        self.out
            .hist
            .centers()
            .iter()
            .enumerate()
            .map(|(k, &t)| if t >= split { right[k] } else { left[k] })
            .collect()
    }
}

/// Runs the pipeline and the decision rules on in-memory statistics.
pub fn analyze_values(stats: &[f64], cfg: &AnalysisConfig) -> anyhow::Result<Analysis> {
    let pcfg = cfg.pipeline_config()?;
    let (stats, clamped) = match cfg.df {
        Some(df) => {
            let r = transform_values(stats, df, cfg.clamp_z)?;
            (r.z, r.clamped)
        }
        None => (stats.to_vec(), 0),
    };
    let out = run_pipeline(&stats, &pcfg).context("analysis failed")?;
    let hist = &out.hist;

    let fdr_iso = per_hypothesis_values(&stats, hist, &out.mono.fdr_iso())?;
    let raw_bins: Vec<f64> = out
        .estimates
        .log_fdr
        .iter()
        .map(|v| if v.is_finite() { v.exp().min(1.0) } else { 1.0 })
        .collect();
    let fdr_raw = per_hypothesis_values(&stats, hist, &raw_bins)?;
    let tail_fdr_iso = per_hypothesis_values(&stats, hist, &out.mono.tail_fdr_iso())?;
    let split = 0.5 * (cfg.null_region.0 + cfg.null_region.1);

    let local = |values: &[f64], alpha: f64| match cfg.decision_mode {
        DecisionMode::Joint => adaptive_reject_local(values, alpha),
        DecisionMode::PerTail => adaptive_reject_local_per_tail(values, &stats, split, alpha),
    };
    let mut decisions = Vec::with_capacity(cfg.alphas.len());
    for &alpha in &cfg.alphas {
        decisions.push(AlphaDecisions {
            alpha,
            local_iso: local(&fdr_iso, alpha)?,
            local_raw: local(&fdr_raw, alpha)?,
            tail_iso: adaptive_reject_tail(&tail_fdr_iso, alpha)?,
        });
    }
    Ok(Analysis {
        config: cfg.clone(),
        stats,
        clamped,
        out,
        fdr_iso,
        fdr_raw,
        tail_fdr_iso,
        decisions,
    })
}

pub fn bins_table(a: &Analysis) -> Table {
    let hist = &a.out.hist;
    let est = &a.out.estimates;
    let fdr_iso = a.out.mono.fdr_iso();
    let tail_iso = a.out.mono.tail_fdr_iso();
    let tail_raw = a.bin_tail_fdr_raw();
    let se = est.std_errors_fdr();
    let se_tail = a.bin_tail_se();
    let mut t = Table::new([
        "t",
        "count",
        "fitted_null",
        "fdr_raw",
        "fdr_iso",
        "tail_fdr_raw",
        "tail_fdr_iso",
        "se_log_fdr",
        "se_log_tail_fdr",
    ]);
    for k in 0..hist.len() {
        t.push(vec![
            fmt_f64(hist.centers()[k]),
            hist.counts()[k].to_string(),
            fmt_f64(a.out.fit.fitted[k]),
            fmt_f64(est.log_fdr[k].exp()),
            fmt_f64(fdr_iso[k]),
            fmt_f64(tail_raw[k]),
            fmt_f64(tail_iso[k]),
            fmt_f64(se[k]),
            fmt_f64(se_tail[k]),
        ]);
    }
    t
}

pub fn decisions_table(a: &Analysis) -> Table {
    let mut header: Vec<String> = ["index", "statistic", "bin", "in_range", "fdr_iso", "tail_fdr_iso"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for d in &a.decisions {
        header.push(format!("reject_local_{}", d.alpha));
        header.push(format!("reject_tail_{}", d.alpha));
    }
    let mut t = Table::new(header);
    let hist = &a.out.hist;
    for (i, &s) in a.stats.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            fmt_f64(s),
            hist.nearest_bin(s).to_string(),
            flag(hist.bin_of(s).is_some()),
            fmt_f64(a.fdr_iso[i]),
            fmt_f64(a.tail_fdr_iso[i]),
        ];
        for d in &a.decisions {
            row.push(flag(d.local_iso.rejected[i]));
            row.push(flag(d.tail_iso.rejected[i]));
        }
        t.push(row);
    }
    t
}

pub fn summary_text(a: &Analysis) -> String {
    let fit = &a.out.fit;
    let hist = &a.out.hist;
    let in_range = a.stats.iter().filter(|&&s| hist.bin_of(s).is_some()).count();
    let mut s = String::new();
    s.push_str("[data]\n");
    s.push_str(&format!("statistics = {}\n", a.stats.len()));
    s.push_str(&format!("in_range = {in_range}\n"));
    s.push_str(&format!("bins = {}\n", hist.len()));
    if a.config.df.is_some() {
        s.push_str(&format!("clamped_z = {}\n", a.clamped));
    }
    s.push_str("\n[settings]\n");
    s.push_str(&a.config.render());
    s.push_str("\n[null fit]\n");
    s.push_str(&format!("p0_hat = {}\n", fmt_f64(fit.p0_hat)));
    let eta: Vec<String> = fit.eta().iter().map(|v| fmt_f64(*v)).collect();
    s.push_str(&format!("eta = {}\n", eta.join(",")));
    if let Some((m, sd)) = fit.normal_moments() {
        s.push_str(&format!("null_mean = {}\n", fmt_f64(m)));
        s.push_str(&format!("null_sd = {}\n", fmt_f64(sd)));
    }
    s.push_str(&format!("irls_iterations = {}\n", fit.iterations));
    s.push_str(&format!("score_residual = {}\n", fmt_f64(fit.score_residual(hist))));
    let nbins = fit.weights.iter().filter(|w| **w > 0.0).count();
    s.push_str(&format!("null_region_bins = {nbins}\n"));
    s.push_str("\n[monotonization]\n");
    s.push_str(&format!("method = {}\n", a.out.mono.method));
    let changed: Vec<String> = a.out.mono.changed_bins.iter().map(|k| k.to_string()).collect();
    s.push_str(&format!("changed_bins = {}\n", changed.join(",")));
    s.push_str("\n[warnings]\n");
    for w in fit.warnings.iter().chain(&a.out.mono.warnings) {
        s.push_str(&format!("{w}\n"));
    }
    s.push_str("\n[rejections]\n");
    s.push_str("alpha,local_iso,local_raw,tail_iso\n");
    for d in &a.decisions {
        s.push_str(&format!(
            "{},{},{},{}\n",
            d.alpha, d.local_iso.u, d.local_raw.u, d.tail_iso.u
        ));
    }
    s
}

pub fn analysis_plot(a: &Analysis) -> Plot {
    let x = a.out.hist.centers();
    let raw: Vec<f64> = a.out.estimates.log_fdr.iter().map(|v| v.exp().min(1.0)).collect();
    let mut p = Plot::new("Local and tail fdr", "statistic", "fdr");
    p.y_range = Some((0.0, 1.05));
    p.series.push(Series::line("fdr (raw)", x, &raw, "#888888").points());
    p.series.push(Series::line("fdr (monotone)", x, &a.out.mono.fdr_iso(), "#1f4e9a"));
    p.series
        .push(Series::line("Fdr (monotone)", x, &a.out.mono.tail_fdr_iso(), "#c0392b").dashed());
    p
}

/// Files written by one command, in write order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

pub fn write_analysis(a: &Analysis, dir: &Path) -> anyhow::Result<Written> {
    ensure_dir(dir)?;
    let mut files = Vec::new();
    let p = dir.join(BINS_CSV);
    bins_table(a).write_file(&p)?;
    files.push(p);
    let p = dir.join(DECISIONS_CSV);
    decisions_table(a).write_file(&p)?;
    files.push(p);
    let p = dir.join(SUMMARY_TXT);
    write_text(&p, &summary_text(a))?;
    files.push(p);
    let p = dir.join(FDR_PLOT);
    write_text(&p, &analysis_plot(a).render())?;
    files.push(p);
    Ok(Written { files })
}

pub fn cmd_analyze(input: &Path, cfg: &AnalysisConfig) -> anyhow::Result<(Analysis, Written)> {
    cfg.validate()?;
    let stats = read_column_file(input, &cfg.column)?;
    let a = analyze_values(&stats, cfg)?;
    let w = write_analysis(&a, &cfg.out_dir)?;
    Ok((a, w))
}

pub fn study_summary_table(s: &SimulationSummary) -> Table {
    let mut t = Table::new([
        "t",
        "defined_raw",
        "mean_fdr_raw",
        "mean_fdr_iso",
        "band_lo_raw",
        "band_hi_raw",
        "band_lo_iso",
        "band_hi_iso",
        "mean_tail_fdr_raw",
        "mean_tail_fdr_iso",
        "oracle_fdr",
        "oracle_tail_fdr",
    ]);
    for k in 0..s.grid.len() {
        t.push(vec![
            fmt_f64(s.grid[k]),
            s.defined_raw[k].to_string(),
            fmt_f64(s.mean_fdr_raw[k]),
            fmt_f64(s.mean_fdr_iso[k]),
            fmt_f64(s.band_lo_raw[k]),
            fmt_f64(s.band_hi_raw[k]),
            fmt_f64(s.band_lo_iso[k]),
            fmt_f64(s.band_hi_iso[k]),
            fmt_f64(s.mean_tail_fdr_raw[k]),
            fmt_f64(s.mean_tail_fdr_iso[k]),
            fmt_f64(s.oracle_fdr[k]),
            fmt_f64(s.oracle_tail_fdr[k]),
        ]);
    }
    t
}

pub fn study_errors_table(s: &SimulationSummary) -> Table {
    let mut t = Table::new(["alpha", "rule", "mean_fdp", "mean_fnp", "mean_rejections"]);
    let groups: [(&str, &[ErrorSummary]); 3] =
        [("local_iso", &s.local_iso), ("local_raw", &s.local_raw), ("tail_iso", &s.tail_iso)];
    for (name, rows) in groups {
        for e in rows {
            t.push(vec![
                e.alpha.to_string(),
                name.to_string(),
                fmt_f64(e.mean_fdp),
                fmt_f64(e.mean_fnp),
                fmt_f64(e.mean_rejections),
            ]);
        }
    }
    t
}

pub fn study_reps_table(s: &SimulationSummary) -> Table {
    let mut t = Table::new(["rep", "alpha", "rule", "fdp", "fnp", "rejections"]);
    for (rep, scores) in s.rep_ids.iter().zip(&s.rep_scores) {
        for sc in scores {
            for (name, e) in [("local_iso", sc.local_iso), ("local_raw", sc.local_raw), ("tail_iso", sc.tail_iso)] {
                t.push(vec![
                    rep.to_string(),
                    sc.alpha.to_string(),
                    name.to_string(),
                    fmt_f64(e.fdp),
                    fmt_f64(e.fnp),
                    e.rejections.to_string(),
                ]);
            }
        }
    }
    t
}

pub fn study_meta_text(cfg: &SimulateConfig, s: &SimulationSummary) -> String {
    let spec = &s.spec;
    let alphas: Vec<String> = cfg.study.alphas.iter().map(|a| a.to_string()).collect();
    let mut m = String::new();
    m.push_str(&format!("preset = {}\n", cfg.preset));
    m.push_str(&format!("scenario = {}\n", spec.kind));
    m.push_str(&format!("p0 = {}\n", spec.p0));
    m.push_str(&format!("fitting_interval = {},{}\n", spec.fitting_interval.0, spec.fitting_interval.1));
    m.push_str(&format!("iso_boundary = {}\n", spec.iso_boundary));
    m.push_str(&format!("n = {}\n", spec.n));
    m.push_str(&format!("reps = {}\n", spec.reps));
    m.push_str(&format!("base_seed = {}\n", spec.base_seed));
    m.push_str(&format!("width = {}\n", spec.width));
    m.push_str(&format!("range = {},{}\n", spec.range.0, spec.range.1));
    m.push_str(&format!("family = {}\n", spec.family()));
    m.push_str(&format!("method = {}\n", cfg.study.method));
    m.push_str(&format!("alpha = {}\n", alphas.join(",")));
    m.push_str("band_scale = natural\n");
    m.push_str("band_quantiles = 0.025,0.975\n");
    m.push_str("quantile_rule = linear interpolation between order statistics\n");
    m.push_str(&format!("succeeded = {}\n", s.succeeded));
    m.push_str(&format!("failed = {}\n", s.failures.len()));
    m.push_str(&format!("mean_p0_hat = {}\n", fmt_f64(s.mean_p0_hat)));
    m.push_str(&format!("nonmonotone_raw_tail = {}\n", s.nonmonotone_raw_tail_count));
    m.push_str(&format!(
        "nonmonotone_raw_tail_supported = {}\n",
        s.nonmonotone_raw_tail_supported_count
    ));
    for (rep, msg) in &s.failures {
        m.push_str(&format!("failure {rep}: {msg}\n"));
    }
    m
}

pub fn study_plots(s: &SimulationSummary) -> (Plot, Plot) {
    let x = &s.grid;
    let mut p = Plot::new(
        &format!("{} scenario: local fdr over {} replications", s.spec.kind, s.succeeded),
        "statistic",
        "fdr",
    );
    p.y_range = Some((0.0, 1.05));
    p.bands.push(Band {
        label: "95% band (raw)".into(),
        x: x.clone(),
        lo: s.band_lo_raw.clone(),
        hi: s.band_hi_raw.clone(),
        color: "#888888",
    });
    p.bands.push(Band {
        label: "95% band (monotone)".into(),
        x: x.clone(),
        lo: s.band_lo_iso.clone(),
        hi: s.band_hi_iso.clone(),
        color: "#1f4e9a",
    });
    p.series.push(Series::line("mean (raw)", x, &s.mean_fdr_raw, "#555555").dashed());
    p.series.push(Series::line("mean (monotone)", x, &s.mean_fdr_iso, "#1f4e9a"));
    p.series.push(Series::line("oracle", x, &s.oracle_fdr, "#c0392b"));

    let mut q = Plot::new(
        &format!("{} scenario: right tail Fdr", s.spec.kind),
        "statistic",
        "Fdr",
    );
    q.y_range = Some((0.0, 1.05));
    q.series.push(Series::line("mean (raw)", x, &s.mean_tail_fdr_raw, "#555555").dashed());
    q.series.push(Series::line("mean (monotone)", x, &s.mean_tail_fdr_iso, "#1f4e9a"));
    q.series.push(Series::line("oracle", x, &s.oracle_tail_fdr, "#c0392b"));
    (p, q)
}

pub fn write_study(cfg: &SimulateConfig, s: &SimulationSummary, dir: &Path) -> anyhow::Result<Written> {
    ensure_dir(dir)?;
    let mut files = Vec::new();
    for (name, table) in [
        (STUDY_SUMMARY_CSV, study_summary_table(s)),
        (STUDY_ERRORS_CSV, study_errors_table(s)),
        (STUDY_REPS_CSV, study_reps_table(s)),
    ] {
        let p = dir.join(name);
        table.write_file(&p)?;
        files.push(p);
    }
    let p = dir.join(STUDY_META);
    write_text(&p, &study_meta_text(cfg, s))?;
    files.push(p);
    let (fdr, tail) = study_plots(s);
    for (name, plot) in [(FDR_PLOT, fdr), (TAIL_PLOT, tail)] {
        let p = dir.join(name);
        write_text(&p, &plot.render())?;
        files.push(p);
    }
    Ok(Written { files })
}

pub fn cmd_simulate(cfg: &SimulateConfig) -> anyhow::Result<(SimulationSummary, Written)> {
    cfg.validate()?;
    let summary = run_study(&cfg.spec, &cfg.study).context("simulation failed")?;
    let w = write_study(cfg, &summary, &cfg.out_dir)?;
    Ok((summary, w))
}
