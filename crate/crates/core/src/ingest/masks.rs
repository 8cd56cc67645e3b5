//! Semantic and instance segmentation masks and the label legend that gives
//! their values meaning.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::annotations::GtBox;
use super::error::IngestError;
use super::pgm::{self, GrayImage};
use crate::geometry::BBox;

pub type ClassId = u16;
pub type InstanceId = u16;

/// How instance-mask values identify pedestrian instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceEncoding {
    /// `class · 1000 + k`; values below 1000 carry no instance.
    #[default]
    Cityscapes,
    /// Any non-zero value on a pedestrian-class pixel is an instance ID.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelLegend {
    /// Class name to semantic label ID, echoed into reports.
    pub classes: BTreeMap<String, ClassId>,
    pub pedestrian_class: ClassId,
    pub occluder_classes: BTreeSet<ClassId>,
    pub encoding: InstanceEncoding,
}

const CITYSCAPES_LABELS: [(&str, ClassId); 34] = [
    ("unlabeled", 0),
    ("ego vehicle", 1),
    ("rectification border", 2),
    ("out of roi", 3),
    ("static", 4),
    ("dynamic", 5),
    ("ground", 6),
    ("road", 7),
    ("sidewalk", 8),
    ("parking", 9),
    ("rail track", 10),
    ("building", 11),
    ("wall", 12),
    ("fence", 13),
    ("guard rail", 14),
    ("bridge", 15),
    ("tunnel", 16),
    ("pole", 17),
    ("polegroup", 18),
    ("traffic light", 19),
    ("traffic sign", 20),
    ("vegetation", 21),
    ("terrain", 22),
    ("sky", 23),
    ("person", 24),
    ("rider", 25),
    ("car", 26),
    ("truck", 27),
    ("bus", 28),
    ("caravan", 29),
    ("trailer", 30),
    ("train", 31),
    ("motorcycle", 32),
    ("bicycle", 33),
];

/// The 20 occluder classes used by default.
pub const DEFAULT_OCCLUDERS: [&str; 20] = [
    "wall",
    "building",
    "fence",
    "pole",
    "traffic light",
    "traffic sign",
    "vegetation",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
    "caravan",
    "trailer",
    "guard rail",
    "bridge",
    "tunnel",
    "rider",
    "dynamic",
];

impl LabelLegend {
    /// Cityscapes label IDs, `person` as the pedestrian class and the
    /// default occluder set.
    pub fn cityscapes() -> Self {
        let classes: BTreeMap<String, ClassId> = CITYSCAPES_LABELS
            .iter()
            .map(|&(n, id)| (n.to_owned(), id))
            .collect();
        let occluder_classes = DEFAULT_OCCLUDERS.iter().map(|n| classes[*n]).collect();
        LabelLegend {
            pedestrian_class: classes["person"],
            occluder_classes,
            classes,
            encoding: InstanceEncoding::Cityscapes,
        }
    }

    pub fn is_occluder(&self, class: ClassId) -> bool {
        self.occluder_classes.contains(&class)
    }

    pub fn is_pedestrian(&self, class: ClassId) -> bool {
        class == self.pedestrian_class
    }

    /// Whether the instance value at a pixel (with its semantic label)
    /// names a pedestrian instance.
    pub fn is_pedestrian_instance(&self, instance: InstanceId, semantic: ClassId) -> bool {
        match self.encoding {
            InstanceEncoding::Cityscapes => {
                instance >= 1000 && instance / 1000 == self.pedestrian_class
            }
            InstanceEncoding::Raw => instance != 0 && semantic == self.pedestrian_class,
        }
    }

    pub fn class_name(&self, id: ClassId) -> Option<&str> {
        self.classes
            .iter()
            .find_map(|(n, &v)| (v == id).then_some(n.as_str()))
    }
}

impl Default for LabelLegend {
    fn default() -> Self {
        LabelLegend::cityscapes()
    }
}

/// Row-major semantic and instance grids of one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegMasks {
    width: u32,
    height: u32,
    semantic: Vec<ClassId>,
    instance: Vec<InstanceId>,
}

impl SegMasks {
    pub fn from_images(semantic: GrayImage, instance: GrayImage) -> Result<Self, IngestError> {
        if (semantic.width, semantic.height) != (instance.width, instance.height) {
            return Err(IngestError::DimensionMismatch {
                what: "instance mask vs semantic mask".into(),
                expected_w: semantic.width,
                expected_h: semantic.height,
                actual_w: instance.width,
                actual_h: instance.height,
            });
        }
        Ok(SegMasks {
            width: semantic.width,
            height: semantic.height,
            semantic: semantic.data,
            instance: instance.data,
        })
    }

    /// Uniform masks of the given size.
    pub fn filled(width: u32, height: u32, semantic: ClassId, instance: InstanceId) -> Self {
        let n = width as usize * height as usize;
        SegMasks {
            width,
            height,
            semantic: vec![semantic; n],
            instance: vec![instance; n],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn semantic_at(&self, x: u32, y: u32) -> ClassId {
        self.semantic[self.offset(x, y)]
    }

    pub fn instance_at(&self, x: u32, y: u32) -> InstanceId {
        self.instance[self.offset(x, y)]
    }

    /// Sets both labels of one pixel.
    pub fn paint(&mut self, x: u32, y: u32, semantic: ClassId, instance: InstanceId) {
        let o = self.offset(x, y);
        self.semantic[o] = semantic;
        self.instance[o] = instance;
    }

    /// Paints `rect ∩ image`.
    pub fn paint_rect(&mut self, rect: &BBox, semantic: ClassId, instance: InstanceId) {
        if let Some(r) = rect.clip(self.width, self.height) {
            for y in r.y1()..r.y2() {
                for x in r.x1()..r.x2() {
                    self.paint(x as u32, y as u32, semantic, instance);
                }
            }
        }
    }

    pub fn semantic_rows(&self) -> std::slice::ChunksExact<'_, ClassId> {
        self.semantic.chunks_exact(self.width as usize)
    }

    pub fn instance_rows(&self) -> std::slice::ChunksExact<'_, InstanceId> {
        self.instance.chunks_exact(self.width as usize)
    }

    pub fn semantic_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.semantic.clone(),
        }
    }

    pub fn instance_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.instance.clone(),
        }
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    /// Calls `f(semantic, instance)` for every pixel of `rect ∩ image`.
    pub fn for_each_in(&self, rect: &BBox, mut f: impl FnMut(ClassId, InstanceId)) {
        let Some(r) = rect.clip(self.width, self.height) else {
            return;
        };
        let (x1, x2) = (r.x1() as usize, r.x2() as usize);
        for y in r.y1() as usize..r.y2() as usize {
            let o = y * self.width as usize;
            for (s, i) in self.semantic[o + x1..o + x2]
                .iter()
                .zip(&self.instance[o + x1..o + x2])
            {
                f(*s, *i);
            }
        }
    }

    /// Pixels whose pedestrian semantic label disagrees with their instance
    /// value under `legend`.
    pub fn consistency(&self, legend: &LabelLegend) -> MaskConsistency {
        let mut report = MaskConsistency::default();
        for (&s, &i) in self.semantic.iter().zip(&self.instance) {
            match (legend.is_pedestrian(s), legend.is_pedestrian_instance(i, s)) {
                (true, false) => report.pedestrian_without_instance += 1,
                (false, true) => report.instance_without_pedestrian += 1,
                _ => {}
            }
        }
        report
    }

    /// Distinct pedestrian instance IDs present in the mask.
    pub fn pedestrian_instances(&self, legend: &LabelLegend) -> BTreeSet<InstanceId> {
        self.semantic
            .iter()
            .zip(&self.instance)
            .filter(|&(&s, &i)| legend.is_pedestrian_instance(i, s))
            .map(|(_, &i)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MaskConsistency {
    pub pedestrian_without_instance: u64,
    pub instance_without_pedestrian: u64,
}

impl MaskConsistency {
    pub fn is_clean(&self) -> bool {
        self.pedestrian_without_instance == 0 && self.instance_without_pedestrian == 0
    }
}

fn decode_file(path: &Path) -> Result<GrayImage, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::io(path, e))?;
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let decoded = if is_png {
        decode_png(&bytes)
    } else {
        pgm::decode(&bytes).map_err(|e| e.to_string())
    };
    decoded.map_err(|reason| IngestError::Decode {
        path: path.to_owned(),
        reason,
    })
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8]) -> Result<GrayImage, String> {
    let mut decoder = ::png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(::png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(|e| e.to_string())?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| "image too large".to_owned())?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(|e| e.to_string())?;
    if info.color_type != ::png::ColorType::Grayscale {
        return Err(format!("expected single-channel PNG, got {:?}", info.color_type));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let data: Vec<u16> = match info.bit_depth {
        ::png::BitDepth::Sixteen => (0..h)
            .flat_map(|y| {
                let row = &buf[y * info.line_size..y * info.line_size + 2 * w];
                row.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]]))
            })
            .collect(),
        ::png::BitDepth::Eight => (0..h)
            .flat_map(|y| buf[y * info.line_size..y * info.line_size + w].iter().map(|&b| u16::from(b)))
            .collect(),
        other => return Err(format!("unsupported bit depth {other:?}")),
    };
    Ok(GrayImage {
        width: info.width,
        height: info.height,
        data,
    })
}

#[cfg(not(feature = "png"))]
fn decode_png(_: &[u8]) -> Result<GrayImage, String> {
    Err("PNG support not compiled in".to_owned())
}

pub fn load_masks(semantic_path: &Path, instance_path: &Path) -> Result<SegMasks, IngestError> {
    let semantic = decode_file(semantic_path)?;
    let instance = decode_file(instance_path)?;
    SegMasks::from_images(semantic, instance)
}

/// Locates `<frame_id>_semantic.{pgm,png}` and `<frame_id>_instance.{pgm,png}`.
pub fn mask_paths(dir: &Path, frame_id: &str) -> Result<(PathBuf, PathBuf), IngestError> {
    let find = |kind: &'static str| -> Result<PathBuf, IngestError> {
        let tried: Vec<PathBuf> = ["pgm", "png"]
            .iter()
            .map(|ext| dir.join(format!("{frame_id}_{kind}.{ext}")))
            .collect();
        tried
            .iter()
            .find(|p| p.is_file())
            .cloned()
            .ok_or(IngestError::MissingMask {
                frame: frame_id.to_owned(),
                kind,
                tried,
            })
    };
    Ok((find("semantic")?, find("instance")?))
}

/// Loads the masks of one frame and checks them against the image size.
pub fn load_frame_masks(dir: &Path, frame_id: &str, width: u32, height: u32) -> Result<SegMasks, IngestError> {
    let (sem, inst) = mask_paths(dir, frame_id)?;
    let masks = load_masks(&sem, &inst)?;
    if (masks.width, masks.height) != (width, height) {
        return Err(IngestError::DimensionMismatch {
            what: format!("masks of frame `{frame_id}`"),
            expected_w: width,
            expected_h: height,
            actual_w: masks.width,
            actual_h: masks.height,
        });
    }
    Ok(masks)
}

pub fn write_masks(dir: &Path, frame_id: &str, masks: &SegMasks) -> Result<(), IngestError> {
    for (kind, img) in [
        ("semantic", masks.semantic_image()),
        ("instance", masks.instance_image()),
    ] {
        let path = dir.join(format!("{frame_id}_{kind}.pgm"));
        std::fs::write(&path, pgm::encode16(&img)).map_err(|e| IngestError::io(&path, e))?;
    }
    Ok(())
}

/// Instance ID owning a ground-truth box.
///
/// An annotated ID wins; otherwise the pedestrian instance covering the most
/// pixels of `box ∩ image`, ties going to the smaller ID. `None` when the box
/// holds no pedestrian instance pixel.
pub fn resolve_instance_id(g: &GtBox, masks: &SegMasks, legend: &LabelLegend) -> Option<InstanceId> {
    if g.instance_id.is_some() {
        return g.instance_id;
    }
    let mut counts: BTreeMap<InstanceId, u64> = BTreeMap::new();
    masks.for_each_in(&g.bbox, |s, i| {
        if legend.is_pedestrian_instance(i, s) {
            *counts.entry(i).or_default() += 1;
        }
    });
    // BTreeMap iterates ascending, so `>` keeps the smaller ID on ties
    let mut best: Option<(InstanceId, u64)> = None;
    for (id, n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((id, n));
        }
    }
    best.map(|(id, _)| id)
}
