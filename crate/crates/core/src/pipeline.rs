//! Histogram → null fit → estimates → monotonization, as one call.

use crate::error::Result;
use crate::fdr_core::FdrEstimates;
use crate::histogram::Histogram;
use crate::isotonic::{monotonize_tails, MonoMethod, MonoTarget, MonotoneFdr, TailBoundaries};
use crate::null_model::{FamilyKind, FitControls, NullFit, NullRegion};

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub width: f64,
    pub range: (f64, f64),
    pub region: NullRegion,
    pub family: FamilyKind,
    pub boundaries: TailBoundaries,
    pub method: MonoMethod,
    pub which: MonoTarget,
    pub controls: FitControls,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub hist: Histogram,
    pub fit: NullFit,
    pub estimates: FdrEstimates,
    pub mono: MonotoneFdr,
}

pub fn run_pipeline(stats: &[f64], cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let hist = Histogram::build(stats, cfg.width, cfg.range)?;
    run_on_histogram(hist, cfg)
}

pub fn run_on_histogram(hist: Histogram, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let fit = NullFit::fit(&hist, cfg.family, cfg.region, cfg.controls)?;
    let estimates = FdrEstimates::compute(&hist, &fit)?;
    let mono = monotonize_tails(&estimates, &hist, cfg.boundaries, cfg.method, cfg.which)?;
    Ok(PipelineOutput {
        hist,
        fit,
        estimates,
        mono,
    })
}
