//! Ground-truth and detection JSON files.
//!
//! Ground truth is a JSON array of frame objects:
//!
//! ```json
//! [{"frame_id": "f0", "width": 2048, "height": 1024,
//!   "boxes": [{"x1": 10, "y1": 20, "x2": 40, "y2": 110,
//!              "vis": {"x1": 10, "y1": 20, "x2": 40, "y2": 80},
//!              "instance_id": 24001, "ignore": false}]}]
//! ```
//!
//! Detections are a JSON array of
//! `{"frame_id": .., "detections": [{"x1": .., "y1": .., "x2": .., "y2": .., "score": ..}]}`.
//! Repeated `frame_id` entries are merged in file order.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::error::IngestError;
use super::masks::InstanceId;
use crate::geometry::BBox;

#[derive(Debug, Clone, PartialEq)]
pub struct GtBox {
    /// Full extent, before clipping to the image.
    pub bbox: BBox,
    pub bbox_vis: Option<BBox>,
    pub instance_id: Option<InstanceId>,
    pub ignore: bool,
}

impl GtBox {
    pub fn new(bbox: BBox) -> Self {
        GtBox {
            bbox,
            bbox_vis: None,
            instance_id: None,
            ignore: false,
        }
    }

    pub fn with_instance(mut self, id: InstanceId) -> Self {
        self.instance_id = Some(id);
        self
    }

    pub fn ignored(mut self) -> Self {
        self.ignore = true;
        self
    }

    /// `|R_vis| / |R|`; 1 when no visible box is annotated.
    pub fn visible_fraction(&self) -> f64 {
        self.bbox_vis
            .map_or(1.0, |v| v.area() as f64 / self.bbox.area() as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub bbox: BBox,
    /// Confidence in `(0, 1]`.
    pub score: f64,
}

impl Detection {
    pub fn new(bbox: BBox, score: f64) -> Self {
        Detection { bbox, score }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GtFrame {
    pub frame_id: String,
    pub width: u32,
    pub height: u32,
    pub boxes: Vec<GtBox>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetFrame {
    pub frame_id: String,
    pub detections: Vec<Detection>,
}

/// One image with its annotations and detections. Segmentation masks are
/// kept separately so they can be dropped once a frame is categorized.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub frame_id: String,
    pub width: u32,
    pub height: u32,
    pub gt: Vec<GtBox>,
    pub detections: Vec<Detection>,
}

impl Frame {
    pub fn new(frame_id: impl Into<String>, width: u32, height: u32) -> Self {
        Frame {
            frame_id: frame_id.into(),
            width,
            height,
            gt: Vec::new(),
            detections: Vec::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RawBox {
    x1: i32,
    y1: i32,
    x2: i32,
    y2: i32,
}

#[derive(Serialize, Deserialize)]
struct RawGtBox {
    x1: i32,
    y1: i32,
    x2: i32,
    y2: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vis: Option<RawBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    instance_id: Option<u32>,
    #[serde(default)]
    ignore: bool,
}

#[derive(Serialize, Deserialize)]
struct RawGtFrame {
    frame_id: String,
    width: u32,
    height: u32,
    boxes: Vec<RawGtBox>,
}

#[derive(Serialize, Deserialize)]
struct RawDetection {
    x1: i32,
    y1: i32,
    x2: i32,
    y2: i32,
    score: f64,
}

#[derive(Serialize, Deserialize)]
struct RawDetFrame {
    frame_id: String,
    detections: Vec<RawDetection>,
}

fn read_text(path: &Path) -> Result<String, IngestError> {
    std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<GtFrame>, IngestError> {
    parse_ground_truth(&read_text(path)?, path)
}

pub fn load_detections(path: &Path) -> Result<Vec<DetFrame>, IngestError> {
    parse_detections(&read_text(path)?, path)
}

fn make_box(
    origin: &Path,
    frame: &str,
    what: &str,
    (x1, y1, x2, y2): (i32, i32, i32, i32),
) -> Result<BBox, IngestError> {
    BBox::new(x1, y1, x2, y2)
        .map_err(|e| IngestError::schema(origin, Some(frame), format!("{what}: {e}")))
}

/// `origin` names the source in error messages.
pub fn parse_ground_truth(text: &str, origin: &Path) -> Result<Vec<GtFrame>, IngestError> {
    let raw: Vec<RawGtFrame> =
        serde_json::from_str(text).map_err(|e| IngestError::from_json(origin, e))?;
    let mut frames: Vec<GtFrame> = Vec::with_capacity(raw.len());
    let mut index: HashMap<String, usize> = HashMap::new();
    for rf in raw {
        let fid = rf.frame_id.as_str();
        if rf.width == 0 || rf.height == 0 {
            return Err(IngestError::schema(origin, Some(fid), "image size must be positive"));
        }
        let mut boxes = Vec::with_capacity(rf.boxes.len());
        for (k, rb) in rf.boxes.iter().enumerate() {
            let bbox = make_box(origin, fid, &format!("box {k}"), (rb.x1, rb.y1, rb.x2, rb.y2))?;
            let bbox_vis = match &rb.vis {
                Some(v) => {
                    let vb = make_box(origin, fid, &format!("box {k} vis"), (v.x1, v.y1, v.x2, v.y2))?;
                    if !vb.is_within(&bbox) {
                        return Err(IngestError::schema(
                            origin,
                            Some(fid),
                            format!("box {k}: visible part {vb} not inside {bbox}"),
                        ));
                    }
                    Some(vb)
                }
                None => None,
            };
            let instance_id = match rb.instance_id {
                Some(id) => Some(InstanceId::try_from(id).map_err(|_| {
                    IngestError::schema(origin, Some(fid), format!("box {k}: instance_id {id} exceeds 16 bits"))
                })?),
                None => None,
            };
            boxes.push(GtBox {
                bbox,
                bbox_vis,
                instance_id,
                ignore: rb.ignore,
            });
        }
        match index.get(&rf.frame_id) {
            Some(&i) => {
                let existing = &mut frames[i];
                if (existing.width, existing.height) != (rf.width, rf.height) {
                    return Err(IngestError::schema(
                        origin,
                        Some(fid),
                        "repeated frame with a different image size",
                    ));
                }
                existing.boxes.extend(boxes);
            }
            None => {
                index.insert(rf.frame_id.clone(), frames.len());
                frames.push(GtFrame {
                    frame_id: rf.frame_id,
                    width: rf.width,
                    height: rf.height,
                    boxes,
                });
            }
        }
    }
    Ok(frames)
}

pub fn parse_detections(text: &str, origin: &Path) -> Result<Vec<DetFrame>, IngestError> {
    let raw: Vec<RawDetFrame> =
        serde_json::from_str(text).map_err(|e| IngestError::from_json(origin, e))?;
    let mut frames: Vec<DetFrame> = Vec::with_capacity(raw.len());
    let mut index: HashMap<String, usize> = HashMap::new();
    for rf in raw {
        let fid = rf.frame_id.as_str();
        let mut dets = Vec::with_capacity(rf.detections.len());
        for (k, rd) in rf.detections.iter().enumerate() {
            let bbox = make_box(origin, fid, &format!("detection {k}"), (rd.x1, rd.y1, rd.x2, rd.y2))?;
            if !(rd.score > 0.0 && rd.score <= 1.0) {
                return Err(IngestError::schema(
                    origin,
                    Some(fid),
                    format!("detection {k}: score {} outside (0, 1]", rd.score),
                ));
            }
            dets.push(Detection::new(bbox, rd.score));
        }
        match index.get(&rf.frame_id) {
            Some(&i) => frames[i].detections.extend(dets),
            None => {
                index.insert(rf.frame_id.clone(), frames.len());
                frames.push(DetFrame {
                    frame_id: rf.frame_id,
                    detections: dets,
                });
            }
        }
    }
    Ok(frames)
}

fn raw_box(b: &BBox) -> RawBox {
    RawBox {
        x1: b.x1(),
        y1: b.y1(),
        x2: b.x2(),
        y2: b.y2(),
    }
}

pub fn ground_truth_to_json(frames: &[GtFrame]) -> String {
    let raw: Vec<RawGtFrame> = frames
        .iter()
        .map(|f| RawGtFrame {
            frame_id: f.frame_id.clone(),
            width: f.width,
            height: f.height,
            boxes: f
                .boxes
                .iter()
                .map(|g| RawGtBox {
                    x1: g.bbox.x1(),
                    y1: g.bbox.y1(),
                    x2: g.bbox.x2(),
                    y2: g.bbox.y2(),
                    vis: g.bbox_vis.as_ref().map(raw_box),
                    instance_id: g.instance_id.map(u32::from),
                    ignore: g.ignore,
                })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&raw).expect("ground truth serializes")
}

pub fn detections_to_json(frames: &[DetFrame]) -> String {
    let raw: Vec<RawDetFrame> = frames
        .iter()
        .map(|f| RawDetFrame {
            frame_id: f.frame_id.clone(),
            detections: f
                .detections
                .iter()
                .map(|d| RawDetection {
                    x1: d.bbox.x1(),
                    y1: d.bbox.y1(),
                    x2: d.bbox.x2(),
                    y2: d.bbox.y2(),
                    score: d.score,
                })
                .collect(),
        })
        .collect();
    serde_json::to_string_pretty(&raw).expect("detections serialize")
}

/// Joins ground truth and detections by `frame_id`, in ground-truth order.
///
/// Every detection frame must name a ground-truth frame; ground-truth
/// frames without detections get an empty list.
pub fn assemble_frames(
    gt: Vec<GtFrame>,
    dets: Vec<DetFrame>,
    det_origin: &Path,
) -> Result<Vec<Frame>, IngestError> {
    let mut by_id: HashMap<String, Vec<Detection>> = HashMap::new();
    for df in dets {
        by_id.entry(df.frame_id).or_default().extend(df.detections);
    }
    let mut frames: Vec<Frame> = gt
        .into_iter()
        .map(|g| {
            let detections = by_id.remove(&g.frame_id).unwrap_or_default();
            Frame {
                frame_id: g.frame_id,
                width: g.width,
                height: g.height,
                gt: g.boxes,
                detections,
            }
        })
        .collect();
    if let Some(unknown) = by_id.keys().min() {
        return Err(IngestError::schema(
            det_origin,
            Some(unknown),
            "detections reference a frame absent from the ground truth",
        ));
    }
    frames.shrink_to_fit();
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> &'static Path {
        Path::new("<test>")
    }

    const GT: &str = r#"[
        {"frame_id": "a", "width": 100, "height": 50, "boxes": [
            {"x1": 0, "y1": 0, "x2": 10, "y2": 30, "ignore": false},
            {"x1": 20, "y1": 0, "x2": 30, "y2": 30, "vis": {"x1": 20, "y1": 0, "x2": 30, "y2": 15},
             "instance_id": 24001, "ignore": true}
        ]},
        {"frame_id": "b", "width": 100, "height": 50, "boxes": [
            {"x1": 5, "y1": 5, "x2": 15, "y2": 45, "ignore": false}
        ]}
    ]"#;

    #[test]
    fn ground_truth_counts_preserved() {
        let frames = parse_ground_truth(GT, origin()).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(frames.iter().map(|f| f.boxes.len()).sum::<usize>(), 3);
        let g = &frames[0].boxes[1];
        assert!(g.ignore);
        assert_eq!(g.instance_id, Some(24001));
        assert_eq!(g.visible_fraction(), 0.5);
    }

    #[test]
    fn empty_list_is_fine() {
        assert!(parse_ground_truth("[]", origin()).unwrap().is_empty());
        assert!(parse_detections("[]", origin()).unwrap().is_empty());
    }

    #[test]
    fn degenerate_box_is_schema_error() {
        let text = r#"[{"frame_id": "a", "width": 10, "height": 10,
            "boxes": [{"x1": 5, "y1": 0, "x2": 5, "y2": 3, "ignore": false}]}]"#;
        let err = parse_ground_truth(text, origin()).unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }), "{err}");
    }

    #[test]
    fn missing_field_is_schema_error() {
        let text = r#"[{"frame_id": "a", "width": 10, "boxes": []}]"#;
        let err = parse_ground_truth(text, origin()).unwrap_err();
        assert!(matches!(err, IngestError::Schema { .. }), "{err}");
        assert!(err.to_string().contains("height"));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = parse_ground_truth("[\n {\"frame_id\": }", origin()).unwrap_err();
        match err {
            IngestError::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn vis_outside_box_rejected() {
        let text = r#"[{"frame_id": "a", "width": 10, "height": 10, "boxes": [
            {"x1": 0, "y1": 0, "x2": 5, "y2": 5, "vis": {"x1": 0, "y1": 0, "x2": 6, "y2": 5}, "ignore": false}]}]"#;
        assert!(matches!(
            parse_ground_truth(text, origin()),
            Err(IngestError::Schema { .. })
        ));
    }

    #[test]
    fn detections_keep_order() {
        let text = r#"[{"frame_id": "a", "detections": [
            {"x1": 0, "y1": 0, "x2": 4, "y2": 8, "score": 0.9},
            {"x1": 1, "y1": 0, "x2": 4, "y2": 8, "score": 0.3}]}]"#;
        let frames = parse_detections(text, origin()).unwrap();
        let scores: Vec<f64> = frames[0].detections.iter().map(|d| d.score).collect();
        assert_eq!(scores, vec![0.9, 0.3]);
    }

    #[test]
    fn score_bounds() {
        for bad in ["0", "0.0", "-0.1", "1.0000001"] {
            let text = format!(
                r#"[{{"frame_id": "a", "detections": [{{"x1": 0, "y1": 0, "x2": 4, "y2": 8, "score": {bad}}}]}}]"#
            );
            assert!(
                matches!(parse_detections(&text, origin()), Err(IngestError::Schema { .. })),
                "score {bad} accepted"
            );
        }
        let text = r#"[{"frame_id": "a", "detections": [{"x1": 0, "y1": 0, "x2": 4, "y2": 8, "score": 1}]}]"#;
        assert!(parse_detections(text, origin()).is_ok());
    }

    #[test]
    fn duplicate_detection_frames_merge() {
        let split = r#"[
            {"frame_id": "a", "detections": [{"x1": 0, "y1": 0, "x2": 4, "y2": 8, "score": 0.9}]},
            {"frame_id": "b", "detections": [{"x1": 2, "y1": 2, "x2": 5, "y2": 8, "score": 0.5}]},
            {"frame_id": "a", "detections": [{"x1": 1, "y1": 0, "x2": 4, "y2": 8, "score": 0.3}]}
        ]"#;
        let merged = r#"[
            {"frame_id": "a", "detections": [
                {"x1": 0, "y1": 0, "x2": 4, "y2": 8, "score": 0.9},
                {"x1": 1, "y1": 0, "x2": 4, "y2": 8, "score": 0.3}]},
            {"frame_id": "b", "detections": [{"x1": 2, "y1": 2, "x2": 5, "y2": 8, "score": 0.5}]}
        ]"#;
        assert_eq!(
            parse_detections(split, origin()).unwrap(),
            parse_detections(merged, origin()).unwrap()
        );
    }

    #[test]
    fn assemble_rejects_unknown_frames() {
        let gt = parse_ground_truth(GT, origin()).unwrap();
        let dets = parse_detections(
            r#"[{"frame_id": "zzz", "detections": []}]"#,
            origin(),
        )
        .unwrap();
        assert!(assemble_frames(gt.clone(), dets, origin()).is_err());
        let frames = assemble_frames(gt, Vec::new(), origin()).unwrap();
        assert_eq!(frames.len(), 2);
        assert!(frames.iter().all(|f| f.detections.is_empty()));
    }

    #[test]
    fn json_round_trip() {
        let frames = parse_ground_truth(GT, origin()).unwrap();
        let again = parse_ground_truth(&ground_truth_to_json(&frames), origin()).unwrap();
        assert_eq!(frames, again);

        let text = r#"[{"frame_id": "a", "detections": [{"x1": 0, "y1": 0, "x2": 4, "y2": 8, "score": 0.123456789}]}]"#;
        let dets = parse_detections(text, origin()).unwrap();
        assert_eq!(dets, parse_detections(&detections_to_json(&dets), origin()).unwrap());
    }
}
