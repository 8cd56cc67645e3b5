//! Layered rectangle scenes with analytically known visibility.

use pedeval_core::categorize::{CategorizerConfig, GtPartition};
use pedeval_core::geometry::BBox;
use pedeval_core::ingest::{ClassId, Detection, Frame, GtBox, InstanceId, LabelLegend, SegMasks};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::oracle::{classify, PixelCounts};

pub const ROAD: ClassId = 7;
pub const BUILDING: ClassId = 11;
pub const POLE: ClassId = 17;
pub const VEGETATION: ClassId = 21;
pub const SKY: ClassId = 23;
pub const PERSON: ClassId = 24;
pub const CAR: ClassId = 26;

/// Instance value of the `k`-th pedestrian actor (Cityscapes encoding).
pub fn pedestrian_instance(k: usize) -> InstanceId {
    PERSON * 1000 + 1 + k as InstanceId
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ActorKind {
    Pedestrian {
        ignore: bool,
        /// Write the instance ID into the annotation instead of leaving it
        /// to majority resolution.
        annotate_instance: bool,
    },
    Occluder {
        class: ClassId,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub rect: BBox,
    pub kind: ActorKind,
}

impl Actor {
    pub fn pedestrian(rect: BBox) -> Self {
        Actor {
            rect,
            kind: ActorKind::Pedestrian {
                ignore: false,
                annotate_instance: true,
            },
        }
    }

    pub fn occluder(rect: BBox, class: ClassId) -> Self {
        Actor {
            rect,
            kind: ActorKind::Occluder { class },
        }
    }
}

/// How detections are derived from the pedestrians of a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    /// Probability that a pedestrian receives a detection.
    pub recall: f64,
    /// Maximum center shift as a fraction of the box size.
    pub jitter: f64,
    /// Maximum relative change of width and height.
    pub scale_noise: f64,
    /// Probability of a second detection on a detected pedestrian.
    pub duplicate_rate: f64,
    /// Expected ghost detections per frame.
    pub ghost_rate: f64,
    /// Scores are drawn from `{1/n, 2/n, ..., 1}`; a small `n` forces ties.
    pub score_levels: u32,
}

impl Default for DetectionModel {
    fn default() -> Self {
        DetectionModel {
            recall: 0.85,
            jitter: 0.25,
            scale_noise: 0.4,
            duplicate_rate: 0.3,
            ghost_rate: 1.0,
            score_levels: 20,
        }
    }
}

impl DetectionModel {
    /// Only exact copies of the pedestrian boxes, all with score 1.
    pub fn perfect() -> Self {
        DetectionModel {
            recall: 1.0,
            jitter: 0.0,
            scale_noise: 0.0,
            duplicate_rate: 0.0,
            ghost_rate: 0.0,
            score_levels: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub frame_id: String,
    pub width: u32,
    pub height: u32,
    pub background: ClassId,
    /// Painted in order, so later actors occlude earlier ones.
    pub actors: Vec<Actor>,
    pub detections: DetectionModel,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(frame_id: impl Into<String>, width: u32, height: u32) -> Self {
        SceneSpec {
            frame_id: frame_id.into(),
            width,
            height,
            background: ROAD,
            actors: Vec::new(),
            detections: DetectionModel::perfect(),
            seed: 0,
        }
    }

    pub fn with(mut self, actor: Actor) -> Self {
        self.actors.push(actor);
        self
    }

    pub fn pedestrians(&self) -> impl Iterator<Item = (usize, &Actor)> {
        self.actors
            .iter()
            .filter(|a| matches!(a.kind, ActorKind::Pedestrian { .. }))
            .enumerate()
    }
}

/// Parameters of the random scene distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomScenes {
    pub width: u32,
    pub height: u32,
    pub max_pedestrians: usize,
    pub max_occluders: usize,
    pub min_height: i32,
    pub max_height: i32,
    pub ignore_rate: f64,
    pub annotate_rate: f64,
    pub detections: DetectionModel,
}

impl Default for RandomScenes {
    fn default() -> Self {
        RandomScenes {
            width: 64,
            height: 64,
            max_pedestrians: 6,
            max_occluders: 3,
            min_height: 4,
            max_height: 48,
            ignore_rate: 0.1,
            annotate_rate: 0.7,
            detections: DetectionModel::default(),
        }
    }
}

const OCCLUDER_CHOICES: [ClassId; 6] = [CAR, BUILDING, POLE, VEGETATION, SKY, ROAD];

impl RandomScenes {
    pub fn generate(&self, seed: u64) -> SceneSpec {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = (self.width as i32, self.height as i32);
        let mut actors = Vec::new();

        let n_ped = rng.random_range(0..=self.max_pedestrians);
        for _ in 0..n_ped {
            let ph = rng.random_range(self.min_height..=self.max_height);
            let pw = rng.random_range(2..=(ph / 2).max(2) + 2);
            let x1 = rng.random_range(-pw / 2..=w - pw / 2);
            let y1 = rng.random_range(-ph / 3..=h - ph / 2);
            let rect = BBox::new(x1, y1, x1 + pw, y1 + ph).expect("positive size");
            actors.push(Actor {
                rect,
                kind: ActorKind::Pedestrian {
                    ignore: rng.random_bool(self.ignore_rate),
                    annotate_instance: rng.random_bool(self.annotate_rate),
                },
            });
        }

        let n_occ = rng.random_range(0..=self.max_occluders);
        for _ in 0..n_occ {
            let ow = rng.random_range(2..=w / 2);
            let oh = rng.random_range(2..=h / 2);
            let x1 = rng.random_range(-ow / 2..w);
            let y1 = rng.random_range(-oh / 2..h);
            let rect = BBox::new(x1, y1, x1 + ow, y1 + oh).expect("positive size");
            let class = OCCLUDER_CHOICES[rng.random_range(0..OCCLUDER_CHOICES.len())];
            actors.push(Actor::occluder(rect, class));
        }

        // random depth order
        for k in (1..actors.len()).rev() {
            actors.swap(k, rng.random_range(0..=k));
        }

        SceneSpec {
            frame_id: format!("scene_{seed:06}"),
            width: self.width,
            height: self.height,
            background: ROAD,
            actors,
            detections: self.detections.clone(),
            seed,
        }
    }
}

/// A rendered scene plus what its construction implies.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub frame: Frame,
    pub masks: SegMasks,
    /// Partition computed from rectangle geometry alone.
    pub expected: GtPartition,
    /// Per GT box, the analytic counts; `None` for ignored boxes.
    pub counts: Vec<Option<PixelCounts>>,
}

pub fn render(spec: &SceneSpec, cfg: &CategorizerConfig) -> Rendered {
    let mut masks = SegMasks::filled(spec.width, spec.height, spec.background, 0);
    let mut frame = Frame::new(spec.frame_id.clone(), spec.width, spec.height);

    let mut k = 0;
    for a in &spec.actors {
        match a.kind {
            ActorKind::Pedestrian { ignore, annotate_instance } => {
                let inst = pedestrian_instance(k);
                masks.paint_rect(&a.rect, PERSON, inst);
                let mut g = GtBox::new(a.rect);
                g.ignore = ignore;
                if annotate_instance {
                    g.instance_id = Some(inst);
                }
                frame.gt.push(g);
                k += 1;
            }
            ActorKind::Occluder { class } => masks.paint_rect(&a.rect, class, 0),
        }
    }

    frame.detections = perturb(spec, &frame.gt);

    let mut expected = GtPartition::default();
    let mut counts = Vec::with_capacity(frame.gt.len());
    for (gi, g) in frame.gt.iter().enumerate() {
        if g.ignore {
            expected.ignored.push(gi);
            counts.push(None);
            continue;
        }
        let c = analytic_counts(spec, gi, g, &cfg.legend);
        let (cat, residual) = classify(&c, g.bbox.height(), cfg);
        push_category(&mut expected, cat, gi);
        expected.residual_candidates += usize::from(residual);
        counts.push(Some(c));
    }

    Rendered {
        frame,
        masks,
        expected,
        counts,
    }
}

pub(crate) fn push_category(p: &mut GtPartition, cat: pedeval_core::GtCategory, g: usize) {
    use pedeval_core::GtCategory::*;
    match cat {
        Foreground => p.foreground.push(g),
        Background => p.background.push(g),
        Environmental => p.environmental.push(g),
        Crowd => p.crowd.push(g),
        Ambiguous => p.ambiguous.push(g),
    }
}

/// Counts over the box by splitting it into cells along every actor edge;
/// each cell lies wholly inside or outside the image and has a single
/// topmost actor.
fn analytic_counts(spec: &SceneSpec, gi: usize, g: &GtBox, legend: &LabelLegend) -> PixelCounts {
    let r = g.bbox;
    let cut = |lo: i32, hi: i32, extent: u32, edges: &mut dyn Iterator<Item = i32>| {
        let mut v: Vec<i32> = [lo, hi, 0, extent as i32]
            .into_iter()
            .chain(edges)
            .filter(|&e| lo <= e && e <= hi)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let xs = cut(r.x1(), r.x2(), spec.width, &mut spec.actors.iter().flat_map(|a| [a.rect.x1(), a.rect.x2()]));
    let ys = cut(r.y1(), r.y2(), spec.height, &mut spec.actors.iter().flat_map(|a| [a.rect.y1(), a.rect.y2()]));

    // top label per cell: (semantic, instance)
    let mut cells = Vec::new();
    for xw in xs.windows(2) {
        for yw in ys.windows(2) {
            let area = ((xw[1] - xw[0]) as u64) * ((yw[1] - yw[0]) as u64);
            let inside = xw[0] >= 0 && xw[1] <= spec.width as i32 && yw[0] >= 0 && yw[1] <= spec.height as i32;
            let mut label = None;
            if inside {
                let mut top = (spec.background, 0);
                let mut k = 0;
                for a in &spec.actors {
                    let covers = a.rect.x1() <= xw[0]
                        && xw[1] <= a.rect.x2()
                        && a.rect.y1() <= yw[0]
                        && yw[1] <= a.rect.y2();
                    match a.kind {
                        ActorKind::Pedestrian { .. } => {
                            if covers {
                                top = (PERSON, pedestrian_instance(k));
                            }
                            k += 1;
                        }
                        ActorKind::Occluder { class } => {
                            if covers {
                                top = (class, 0);
                            }
                        }
                    }
                }
                label = Some(top);
            }
            cells.push((area, label));
        }
    }

    let instance = g.instance_id.or_else(|| {
        let mut by_id: std::collections::BTreeMap<InstanceId, u64> = Default::default();
        for &(area, label) in &cells {
            if let Some((s, i)) = label {
                if legend.is_pedestrian_instance(i, s) {
                    *by_id.entry(i).or_default() += area;
                }
            }
        }
        let max = by_id.values().copied().max()?;
        by_id.into_iter().find(|&(_, n)| n == max).map(|(i, _)| i)
    });
    debug_assert!(g.instance_id.is_none() || g.instance_id == Some(pedestrian_instance(gi)));

    let mut c = PixelCounts {
        area: r.area(),
        ..PixelCounts::default()
    };
    for (area, label) in cells {
        match label {
            None => c.outside += area,
            Some((s, i)) => {
                let own = instance == Some(i);
                let ped = legend.is_pedestrian(s);
                if own {
                    c.own += area;
                }
                if own && ped {
                    c.own_pedestrian += area;
                }
                if ped {
                    c.pedestrian += area;
                }
                if legend.is_occluder(s) {
                    c.occluder += area;
                }
            }
        }
    }
    c
}

fn perturb(spec: &SceneSpec, gt: &[GtBox]) -> Vec<Detection> {
    let m = &spec.detections;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ 0x5eed_de7e_c710_0000);
    let levels = m.score_levels.max(1);
    let score = |rng: &mut ChaCha8Rng| f64::from(rng.random_range(1..=levels)) / f64::from(levels);
    let mut out = Vec::new();

    let jittered = |rng: &mut ChaCha8Rng, r: &BBox| -> BBox {
        let (w, h) = (r.width() as f64, r.height() as f64);
        let mut u = |span: f64| if span > 0.0 { rng.random_range(-span..=span) } else { 0.0 };
        let nw = (w * (1.0 + u(m.scale_noise))).round().max(1.0);
        let nh = (h * (1.0 + u(m.scale_noise))).round().max(1.0);
        let cx = f64::from(r.x1()) + w / 2.0 + u(m.jitter) * w;
        let cy = f64::from(r.y1()) + h / 2.0 + u(m.jitter) * h;
        let x1 = (cx - nw / 2.0).round() as i32;
        let y1 = (cy - nh / 2.0).round() as i32;
        BBox::new(x1, y1, x1 + nw as i32, y1 + nh as i32).expect("positive size")
    };

    for g in gt {
        if m.recall > 0.0 && rng.random_bool(m.recall.min(1.0)) {
            let b = jittered(&mut rng, &g.bbox);
            out.push(Detection::new(b, score(&mut rng)));
            if m.duplicate_rate > 0.0 && rng.random_bool(m.duplicate_rate.min(1.0)) {
                let b = jittered(&mut rng, &g.bbox);
                out.push(Detection::new(b, score(&mut rng)));
            }
        }
    }

    // ghosts: two slots, each firing with half the rate
    for _ in 0..2 {
        if m.ghost_rate > 0.0 && rng.random_bool((m.ghost_rate / 2.0).min(1.0)) {
            let w = rng.random_range(2..=(spec.width as i32 / 3).max(2));
            let h = rng.random_range(2..=(spec.height as i32 / 2).max(2));
            let x1 = rng.random_range(-w / 2..spec.width as i32);
            let y1 = rng.random_range(-h / 2..spec.height as i32);
            out.push(Detection::new(BBox::new(x1, y1, x1 + w, y1 + h).expect("positive size"), score(&mut rng)));
        }
    }

    // interleave so detection order carries no information
    for k in (1..out.len()).rev() {
        out.swap(k, rng.random_range(0..=k));
    }
    out
}
