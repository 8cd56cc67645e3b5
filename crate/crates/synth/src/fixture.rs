//! Writes rendered scenes in the on-disk input formats.

use std::path::Path;

use pedeval_core::ingest::{
    detections_to_json, ground_truth_to_json, write_masks, DetFrame, GtFrame, IngestError,
};

use crate::scene::Rendered;

pub const GT_FILE: &str = "gt.json";
pub const DETECTIONS_FILE: &str = "detections.json";
pub const MASK_DIR: &str = "masks";

/// Writes `gt.json`, `detections.json` and `masks/{frame_id}_{semantic,instance}.pgm`
/// under `dir`.
pub fn write_fixture(dir: &Path, scenes: &[Rendered]) -> Result<(), IngestError> {
    let masks = dir.join(MASK_DIR);
    std::fs::create_dir_all(&masks).map_err(|e| IngestError::io(&masks, e))?;
    let gt: Vec<GtFrame> = scenes
        .iter()
        .map(|s| GtFrame {
            frame_id: s.frame.frame_id.clone(),
            width: s.frame.width,
            height: s.frame.height,
            boxes: s.frame.gt.clone(),
        })
        .collect();
    let dets: Vec<DetFrame> = scenes
        .iter()
        .map(|s| DetFrame {
            frame_id: s.frame.frame_id.clone(),
            detections: s.frame.detections.clone(),
        })
        .collect();
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| IngestError::io(&p, e))
    };
    write(GT_FILE, ground_truth_to_json(&gt))?;
    write(DETECTIONS_FILE, detections_to_json(&dets))?;
    for s in scenes {
        write_masks(&masks, &s.frame.frame_id, &s.masks)?;
    }
    Ok(())
}
