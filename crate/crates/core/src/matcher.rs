//! True-positive / false-negative / false-positive assignment for one frame
//! at a confidence threshold.
//!
//! Rules, applied to detections with `score > c` and boxes clipped to the
//! image:
//!
//! * Each detection picks its best non-ignored ground truth by IoU (ties to
//!   the smaller GT index). It is a witness for that GT when the IoU is
//!   above one half.
//! * A GT with witnesses is a true positive; its winning witness is the one
//!   with the highest IoU, then the highest score, then the smallest index.
//!   Losing witnesses are false positives.
//! * A GT listed in [`Relaxation::relaxed`] that is still unmatched becomes a
//!   true positive through a detection with IoU above one half whose best GT,
//!   once crowd-occluded boxes are disregarded, is that GT. The consuming
//!   detection is not a false positive.
//! * An unconsumed detection overlapping an ignore-flagged GT by more than
//!   one half (IoU, or intersection over the smaller area with
//!   [`MatchOptions::ignore_iom`]) is ignored.
//! * Every other passing detection is a false positive.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geometry::{intersection_over_min, iou_exact, BBox, Overlap};
use crate::ingest::{Detection, Frame};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchOptions {
    /// Test ignore regions by intersection over the smaller box instead of IoU.
    pub ignore_iom: bool,
}

/// GT indices taking part in the relaxed matching clause.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Relaxation {
    /// Boxes that may match irrespective of better-overlapping crowd boxes
    /// (foreground and background).
    pub relaxed: Vec<usize>,
    /// Crowd-occluded boxes disregarded as competitors for `relaxed`.
    pub crowd: Vec<usize>,
}

impl Relaxation {
    pub fn none() -> Self {
        Relaxation::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub threshold: f64,
    /// `(gt, detection)` pairs sorted by GT index. A detection may appear in
    /// two pairs when it also serves a relaxed match.
    pub tp: Vec<(usize, usize)>,
    #[serde(rename = "fn")]
    pub fn_: Vec<usize>,
    pub fp: Vec<usize>,
    pub ignored_dets: Vec<usize>,
    pub ignored_gt: Vec<usize>,
}

impl MatchResult {
    pub fn tp_gt(&self) -> impl Iterator<Item = usize> + '_ {
        self.tp.iter().map(|&(g, _)| g)
    }

    /// Distinct detections consumed by true positives, ascending.
    pub fn tp_dets(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.tp.iter().map(|&(_, d)| d).collect();
        d.sort_unstable();
        d.dedup();
        d
    }
}

/// Clipped boxes and overlap tables of one frame, reusable across
/// thresholds.
#[derive(Debug, Clone)]
pub struct FrameMatcher {
    scores: Vec<f64>,
    n_gt: usize,
    /// Non-ignored GT indices.
    real: Vec<usize>,
    ignored_gt: Vec<usize>,
    /// `iou[d][k]` against `real[k]`.
    iou: Vec<Vec<Overlap>>,
    /// Best overlap of each detection with any ignore-flagged GT.
    ignore_overlap: Vec<Overlap>,
    relaxed: Vec<bool>,
    crowd: Vec<bool>,
}

impl FrameMatcher {
    pub fn new(frame: &Frame, relax: &Relaxation, opts: MatchOptions) -> Self {
        let clip = |b: &BBox| b.clip(frame.width, frame.height);
        let gt_boxes: Vec<Option<BBox>> = frame.gt.iter().map(|g| clip(&g.bbox)).collect();
        let det_boxes: Vec<Option<BBox>> = frame.detections.iter().map(|d| clip(&d.bbox)).collect();
        let (real, ignored_gt): (Vec<usize>, Vec<usize>) =
            (0..frame.gt.len()).partition(|&g| !frame.gt[g].ignore);

        let overlap = |g: &Option<BBox>, d: &Option<BBox>, iom: bool| match (g, d) {
            (Some(g), Some(d)) if iom => intersection_over_min(g, d),
            (Some(g), Some(d)) => iou_exact(g, d),
            _ => Overlap::ZERO,
        };
        let iou = det_boxes
            .iter()
            .map(|d| real.iter().map(|&g| overlap(&gt_boxes[g], d, false)).collect())
            .collect();
        let ignore_overlap = det_boxes
            .iter()
            .map(|d| {
                ignored_gt
                    .iter()
                    .map(|&g| overlap(&gt_boxes[g], d, opts.ignore_iom))
                    .max()
                    .unwrap_or(Overlap::ZERO)
            })
            .collect();

        let mut relaxed = vec![false; frame.gt.len()];
        let mut crowd = vec![false; frame.gt.len()];
        for &g in &relax.relaxed {
            relaxed[g] = true;
        }
        for &g in &relax.crowd {
            crowd[g] = true;
        }

        FrameMatcher {
            scores: frame.detections.iter().map(|d| d.score).collect(),
            n_gt: frame.gt.len(),
            real,
            ignored_gt,
            iou,
            ignore_overlap,
            relaxed,
            crowd,
        }
    }

    pub fn num_detections(&self) -> usize {
        self.scores.len()
    }

    /// Best position in `real` for detection `d`, optionally skipping crowd
    /// boxes. Ties resolve to the smaller GT index.
    fn best_real(&self, d: usize, skip_crowd: bool) -> Option<(usize, Overlap)> {
        let mut best: Option<(usize, Overlap)> = None;
        for (k, &ov) in self.iou[d].iter().enumerate() {
            if skip_crowd && self.crowd[self.real[k]] {
                continue;
            }
            if best.is_none_or(|(_, b)| ov > b) {
                best = Some((k, ov));
            }
        }
        best
    }

    /// Orders candidate detections for one GT: higher overlap, then higher
    /// score, then smaller index wins.
    fn prefer(&self, a: (usize, Overlap), b: (usize, Overlap)) -> Ordering {
        a.1.cmp(&b.1)
            .then_with(|| self.scores[a.0].total_cmp(&self.scores[b.0]))
            .then_with(|| b.0.cmp(&a.0))
    }

    pub fn match_at(&self, c: f64) -> MatchResult {
        let passing: Vec<usize> = (0..self.scores.len()).filter(|&d| self.scores[d] > c).collect();
        let n_real = self.real.len();

        // strict rule
        let mut winner: Vec<Option<(usize, Overlap)>> = vec![None; n_real];
        for &d in &passing {
            if let Some((k, ov)) = self.best_real(d, false) {
                if ov.exceeds_half()
                    && winner[k].is_none_or(|w| self.prefer((d, ov), w) == Ordering::Greater)
                {
                    winner[k] = Some((d, ov));
                }
            }
        }

        // relaxed rule for still-unmatched boxes
        let mut relaxed_winner: Vec<Option<(usize, Overlap)>> = vec![None; n_real];
        if self.relaxed.iter().any(|&r| r) {
            for &d in &passing {
                if let Some((k, ov)) = self.best_real(d, true) {
                    let g = self.real[k];
                    if self.relaxed[g]
                        && winner[k].is_none()
                        && ov.exceeds_half()
                        && relaxed_winner[k]
                            .is_none_or(|w| self.prefer((d, ov), w) == Ordering::Greater)
                    {
                        relaxed_winner[k] = Some((d, ov));
                    }
                }
            }
        }

        let mut consumed = vec![false; self.scores.len()];
        let mut tp = Vec::new();
        let mut fn_ = Vec::new();
        for k in 0..n_real {
            match winner[k].or(relaxed_winner[k]) {
                Some((d, _)) => {
                    consumed[d] = true;
                    tp.push((self.real[k], d));
                }
                None => fn_.push(self.real[k]),
            }
        }

        let mut fp = Vec::new();
        let mut ignored_dets = Vec::new();
        for &d in &passing {
            if consumed[d] {
                continue;
            }
            if self.ignore_overlap[d].exceeds_half() {
                ignored_dets.push(d);
            } else {
                fp.push(d);
            }
        }

        debug_assert_eq!(tp.len() + fn_.len() + self.ignored_gt.len(), self.n_gt);
        MatchResult {
            threshold: c,
            tp,
            fn_,
            fp,
            ignored_dets,
            ignored_gt: self.ignored_gt.clone(),
        }
    }
}

/// Detections with `score > c`, order preserved.
pub fn filter_detections(dets: &[Detection], c: f64) -> Vec<&Detection> {
    dets.iter().filter(|d| d.score > c).collect()
}

pub fn match_frame(frame: &Frame, c: f64, relax: &Relaxation, opts: MatchOptions) -> MatchResult {
    FrameMatcher::new(frame, relax, opts).match_at(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetMatch {
    pub threshold: f64,
    pub tp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub fp: usize,
    pub ignored_dets: usize,
    pub frames: Vec<MatchResult>,
}

/// Matches every frame at `c`; `relax[i]` belongs to `frames[i]`.
pub fn match_dataset(
    frames: &[Frame],
    c: f64,
    relax: &[Relaxation],
    opts: MatchOptions,
) -> DatasetMatch {
    use rayon::prelude::*;
    assert_eq!(frames.len(), relax.len(), "one relaxation per frame");
    let per_frame: Vec<MatchResult> = frames
        .par_iter()
        .zip(relax.par_iter())
        .map(|(f, r)| match_frame(f, c, r, opts))
        .collect();
    DatasetMatch {
        threshold: c,
        tp: per_frame.iter().map(|m| m.tp.len()).sum(),
        fn_: per_frame.iter().map(|m| m.fn_.len()).sum(),
        fp: per_frame.iter().map(|m| m.fp.len()).sum(),
        ignored_dets: per_frame.iter().map(|m| m.ignored_dets.len()).sum(),
        frames: per_frame,
    }
}
