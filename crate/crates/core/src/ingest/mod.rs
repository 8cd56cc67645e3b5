//! Everything that touches disk: annotation JSON, detection JSON and
//! segmentation masks.

mod annotations;
mod error;
mod masks;
pub mod pgm;

pub use annotations::{
    assemble_frames, detections_to_json, ground_truth_to_json, load_detections,
    load_ground_truth, parse_detections, parse_ground_truth, DetFrame, Detection, Frame,
    GtBox, GtFrame,
};
pub use error::IngestError;
pub use masks::{
    load_frame_masks, load_masks, mask_paths, resolve_instance_id, write_masks, ClassId,
    InstanceEncoding, InstanceId, LabelLegend, MaskConsistency, SegMasks, DEFAULT_OCCLUDERS,
};
