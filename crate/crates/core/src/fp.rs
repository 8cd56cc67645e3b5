//! False-positive taxonomy: scale errors, localization errors and ghost
//! detections.

use serde::{Deserialize, Serialize};

use crate::geometry::{center_aligned, iou, BBox};
use crate::ingest::Frame;
use crate::matcher::{match_frame, MatchOptions, Relaxation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FpCategory {
    #[serde(rename = "S")]
    Scale,
    #[serde(rename = "L")]
    Localization,
    #[serde(rename = "G")]
    Ghost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpConfig {
    /// Maximum center offset as a fraction of the GT width / height.
    pub lambda_o: f64,
    /// Minimum IoU for a localization error.
    pub lambda_i: f64,
}

impl Default for FpConfig {
    fn default() -> Self {
        FpConfig {
            lambda_o: 0.2,
            lambda_i: 0.25,
        }
    }
}

impl FpConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.lambda_o > 0.0 && self.lambda_o.is_finite()) {
            return Err(format!("lambda_o = {} must be positive", self.lambda_o));
        }
        if !(self.lambda_i > 0.0 && self.lambda_i <= 1.0) {
            return Err(format!("lambda_i = {} must lie in (0, 1]", self.lambda_i));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FpPartition {
    #[serde(rename = "S")]
    pub scale: Vec<usize>,
    #[serde(rename = "L")]
    pub localization: Vec<usize>,
    #[serde(rename = "G")]
    pub ghost: Vec<usize>,
}

impl FpPartition {
    pub fn len(&self) -> usize {
        self.scale.len() + self.localization.len() + self.ghost.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Category a detection receives if it is a false positive. Only the
/// clipped boxes of non-ignored GT are considered.
#[derive(Debug, Clone)]
pub struct FpClassifier {
    gt: Vec<BBox>,
    cfg: FpConfig,
}

impl FpClassifier {
    pub fn new(frame: &Frame, cfg: FpConfig) -> Self {
        FpClassifier {
            gt: frame
                .gt
                .iter()
                .filter(|g| !g.ignore)
                .filter_map(|g| g.bbox.clip(frame.width, frame.height))
                .collect(),
            cfg,
        }
    }

    /// `det` must already be clipped to the image.
    pub fn classify(&self, det: Option<&BBox>) -> FpCategory {
        let Some(d) = det else {
            return FpCategory::Ghost;
        };
        if self.gt.iter().any(|g| center_aligned(g, d, self.cfg.lambda_o)) {
            FpCategory::Scale
        } else if self.gt.iter().any(|g| iou(g, d) >= self.cfg.lambda_i) {
            FpCategory::Localization
        } else {
            FpCategory::Ghost
        }
    }

    /// Categories for every detection of `frame`, indexed like the detections.
    pub fn classify_all(&self, frame: &Frame) -> Vec<FpCategory> {
        frame
            .detections
            .iter()
            .map(|d| self.classify(d.bbox.clip(frame.width, frame.height).as_ref()))
            .collect()
    }
}

pub fn categorize_fps(fp: &[usize], frame: &Frame, cfg: FpConfig) -> FpPartition {
    let classifier = FpClassifier::new(frame, cfg);
    let mut part = FpPartition::default();
    for &d in fp {
        let det = frame.detections[d].bbox.clip(frame.width, frame.height);
        match classifier.classify(det.as_ref()) {
            FpCategory::Scale => part.scale.push(d),
            FpCategory::Localization => part.localization.push(d),
            FpCategory::Ghost => part.ghost.push(d),
        }
    }
    part
}

/// Ghost detections per image at threshold `c`, over every frame.
pub fn gdpi(
    frames: &[Frame],
    relax: &[Relaxation],
    c: f64,
    opts: MatchOptions,
    cfg: FpConfig,
) -> Option<f64> {
    use rayon::prelude::*;
    if frames.is_empty() {
        return None;
    }
    let ghosts: usize = frames
        .par_iter()
        .zip(relax.par_iter())
        .map(|(f, r)| categorize_fps(&match_frame(f, c, r, opts).fp, f, cfg).ghost.len())
        .sum();
    Some(ghosts as f64 / frames.len() as f64)
}
