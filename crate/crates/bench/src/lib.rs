//! Synthetic datasets sized for benchmarking.

use pedeval_core::categorize::{categorize_frame, CategorizerConfig, FrameCategories};
use pedeval_core::ingest::{Frame, SegMasks};
use pedeval_synth::{render, DetectionModel, RandomScenes};

pub struct Dataset {
    pub frames: Vec<Frame>,
    pub masks: Vec<SegMasks>,
    pub categories: Vec<FrameCategories>,
    pub config: CategorizerConfig,
}

/// `n` frames of `width`×`height` with up to `crowd` pedestrians each.
pub fn dataset(n: usize, width: u32, height: u32, crowd: usize) -> Dataset {
    let gen = RandomScenes {
        width,
        height,
        max_pedestrians: crowd,
        max_occluders: crowd / 2 + 1,
        min_height: (height as i32 / 12).max(4),
        max_height: (height as i32 * 3 / 4).max(8),
        detections: DetectionModel {
            score_levels: 1000,
            ..DetectionModel::default()
        },
        ..RandomScenes::default()
    };
    let config = CategorizerConfig {
        lambda_f: f64::from(height) / 3.0,
        ..CategorizerConfig::default()
    };
    let (frames, masks): (Vec<_>, Vec<_>) = (0..n as u64)
        .map(|s| {
            let r = render(&gen.generate(s), &config);
            (r.frame, r.masks)
        })
        .unzip();
    let categories = frames
        .iter()
        .zip(&masks)
        .map(|(f, m)| categorize_frame(f, m, &config))
        .collect();
    Dataset {
        frames,
        masks,
        categories,
        config,
    }
}
