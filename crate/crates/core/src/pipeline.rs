//! Whole-dataset orchestration: categorize every frame, sweep thresholds,
//! assemble a report.

use std::path::Path;

use rayon::prelude::*;

use crate::categorize::{categorize_frame, CategorizerConfig, FrameCategories};
use crate::fp::{categorize_fps, FpConfig, FpPartition};
use crate::ingest::{load_frame_masks, Frame, IngestError, SegMasks};
use crate::matcher::MatchOptions;
use crate::metrics::{sweep_thresholds, MetricConfig, MetricReport, MetricsError, PreparedFrame};

/// Categorizes each frame with masks produced by `load`. Masks are dropped
/// as soon as their frame is done, so at most one set per worker is alive.
pub fn categorize_with<F>(frames: &[Frame], cfg: &CategorizerConfig, load: F) -> Result<Vec<FrameCategories>, IngestError>
where
    F: Fn(&Frame) -> Result<SegMasks, IngestError> + Sync,
{
    frames
        .par_iter()
        .map(|f| load(f).map(|m| categorize_frame(f, &m, cfg)))
        .collect()
}

/// [`categorize_with`] reading `{frame_id}_semantic` / `{frame_id}_instance`
/// masks from `mask_dir`.
pub fn categorize_dataset(frames: &[Frame], mask_dir: &Path, cfg: &CategorizerConfig) -> Result<Vec<FrameCategories>, IngestError> {
    categorize_with(frames, cfg, |f| load_frame_masks(mask_dir, &f.frame_id, f.width, f.height))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalOptions {
    pub matching: MatchOptions,
    pub fp: FpConfig,
}

pub fn prepare(frames: &[Frame], cats: &[FrameCategories], opts: EvalOptions) -> Vec<PreparedFrame> {
    assert_eq!(frames.len(), cats.len(), "one categorization per frame");
    frames
        .par_iter()
        .zip(cats.par_iter())
        .map(|(f, c)| PreparedFrame::new(f, c, opts.matching, opts.fp))
        .collect()
}

pub fn evaluate(
    frames: &[Frame],
    cats: &[FrameCategories],
    opts: EvalOptions,
    metrics: &MetricConfig,
) -> Result<MetricReport, MetricsError> {
    let prepared = prepare(frames, cats, opts);
    let curve = sweep_thresholds(&prepared, metrics.c_min)?;
    Ok(MetricReport::from_curve(curve, metrics))
}

/// FP partition of every frame at threshold `c`.
pub fn fp_partitions(frames: &[Frame], cats: &[FrameCategories], c: f64, opts: EvalOptions) -> Vec<FpPartition> {
    frames
        .par_iter()
        .zip(cats.par_iter())
        .map(|(f, cat)| {
            let m = crate::matcher::match_frame(f, c, &cat.partition.relaxation(), opts.matching);
            categorize_fps(&m.fp, f, opts.fp)
        })
        .collect()
}
