//! Ground-truth error categories from segmentation masks.
//!
//! Every non-ignored box gets three ratios over its pre-clip pixel set `R`
//! and its instance `i`:
//!
//! * `phi   = |R ∩ {inst = i}| / |R|`
//! * `phi_e = (|R ∩ image ∩ {sem ∈ occluders}| + |R \ image|) / |R|`
//! * `phi_c = |R ∩ {inst = i} ∩ {sem = ped}| / |R ∩ {sem = ped}|`, 1 when the
//!   box holds no pedestrian pixel
//!
//! Boxes with `phi < lambda_phi` are occlusion candidates. Candidates split
//! into environmental (`phi_e > lambda_e`), crowd (`phi_c > lambda_c`) and
//! ambiguous occlusion; all remaining boxes are visible and split into
//! foreground and background by pixel height.

use serde::{Deserialize, Serialize};

use crate::ingest::{resolve_instance_id, Frame, GtBox, InstanceId, LabelLegend, SegMasks};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GtCategory {
    #[serde(rename = "F")]
    Foreground,
    #[serde(rename = "B")]
    Background,
    #[serde(rename = "E")]
    Environmental,
    #[serde(rename = "C")]
    Crowd,
    #[serde(rename = "A")]
    Ambiguous,
}

impl GtCategory {
    pub const ALL: [GtCategory; 5] = [
        GtCategory::Foreground,
        GtCategory::Background,
        GtCategory::Environmental,
        GtCategory::Crowd,
        GtCategory::Ambiguous,
    ];

    pub fn code(self) -> &'static str {
        match self {
            GtCategory::Foreground => "F",
            GtCategory::Background => "B",
            GtCategory::Environmental => "E",
            GtCategory::Crowd => "C",
            GtCategory::Ambiguous => "A",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CategorizerConfig {
    pub lambda_phi: f64,
    pub lambda_e: f64,
    pub lambda_c: f64,
    pub lambda_a: f64,
    /// Foreground height threshold in pixels.
    pub lambda_f: f64,
    /// Use the ambiguity sets exactly as typeset (`phi_e` tested against
    /// `lambda_e · lambda_a` inside the environmental set) instead of the
    /// cross-relaxed tests.
    pub literal_ambiguity: bool,
    pub reasonable_min_height: f64,
    pub reasonable_min_visibility: f64,
    pub legend: LabelLegend,
}

impl Default for CategorizerConfig {
    fn default() -> Self {
        CategorizerConfig {
            lambda_phi: 0.6,
            lambda_e: 0.7,
            lambda_c: 0.5,
            lambda_a: 0.75,
            lambda_f: 190.0,
            literal_ambiguity: false,
            reasonable_min_height: 50.0,
            reasonable_min_visibility: 0.65,
            legend: LabelLegend::cityscapes(),
        }
    }
}

impl CategorizerConfig {
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("lambda_phi", self.lambda_phi),
            ("lambda_e", self.lambda_e),
            ("lambda_c", self.lambda_c),
            ("lambda_a", self.lambda_a),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(format!("{name} = {v} must lie in (0, 1)"));
            }
        }
        if !(self.lambda_f > 0.0 && self.lambda_f.is_finite()) {
            return Err(format!("lambda_f = {} must be positive", self.lambda_f));
        }
        if !(self.reasonable_min_visibility >= 0.0 && self.reasonable_min_visibility <= 1.0) {
            return Err("reasonable_min_visibility must lie in [0, 1]".into());
        }
        if !(self.reasonable_min_height >= 0.0 && self.reasonable_min_height.is_finite()) {
            return Err("reasonable_min_height must be non-negative".into());
        }
        if self.legend.is_occluder(self.legend.pedestrian_class) {
            return Err("the pedestrian class cannot be an occluder class".into());
        }
        Ok(())
    }
}

/// Pixel counts of one box against the masks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BoxCounts {
    /// `|R|`, pre-clip.
    pub area: u64,
    pub outside: u64,
    pub own: u64,
    pub own_pedestrian: u64,
    pub occluder: u64,
    pub pedestrian: u64,
}

impl BoxCounts {
    pub fn measure(g: &GtBox, instance: Option<InstanceId>, masks: &SegMasks, legend: &LabelLegend) -> Self {
        let area = g.bbox.area();
        let inside = g
            .bbox
            .clip(masks.width(), masks.height())
            .map_or(0, |r| r.area());
        let mut c = BoxCounts {
            area,
            outside: area - inside,
            ..BoxCounts::default()
        };
        masks.for_each_in(&g.bbox, |s, i| {
            let is_ped = legend.is_pedestrian(s);
            let is_own = instance == Some(i);
            c.own += u64::from(is_own);
            c.own_pedestrian += u64::from(is_own && is_ped);
            c.occluder += u64::from(legend.is_occluder(s));
            c.pedestrian += u64::from(is_ped);
        });
        c
    }

    pub fn phi(&self) -> f64 {
        self.own as f64 / self.area as f64
    }

    pub fn phi_e(&self) -> f64 {
        (self.occluder + self.outside) as f64 / self.area as f64
    }

    pub fn phi_c(&self) -> f64 {
        if self.pedestrian == 0 {
            1.0
        } else {
            self.own_pedestrian as f64 / self.pedestrian as f64
        }
    }
}

/// Segmentation-based visibility; 0 for an unresolved instance.
pub fn visibility_phi(g: &GtBox, masks: &SegMasks, instance: Option<InstanceId>) -> f64 {
    let Some(i) = instance else {
        return 0.0;
    };
    let mut own = 0u64;
    masks.for_each_in(&g.bbox, |_, v| own += u64::from(v == i));
    own as f64 / g.bbox.area() as f64
}

/// Fraction of the box covered by occluder classes or lying outside the image.
pub fn visibility_env(g: &GtBox, masks: &SegMasks, cfg: &CategorizerConfig) -> f64 {
    BoxCounts::measure(g, None, masks, &cfg.legend).phi_e()
}

/// Share of the box's pedestrian pixels that belong to `instance`.
pub fn visibility_crowd(
    g: &GtBox,
    masks: &SegMasks,
    instance: Option<InstanceId>,
    cfg: &CategorizerConfig,
) -> f64 {
    BoxCounts::measure(g, instance, masks, &cfg.legend).phi_c()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxAssessment {
    pub instance_id: Option<InstanceId>,
    pub counts: BoxCounts,
    pub phi: f64,
    pub phi_e: f64,
    pub phi_c: f64,
    pub candidate: bool,
    /// Candidate that fell into no occlusion set and was routed by height.
    pub residual: bool,
    pub category: GtCategory,
    pub height: u64,
    pub reasonable: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GtPartition {
    #[serde(rename = "F")]
    pub foreground: Vec<usize>,
    #[serde(rename = "B")]
    pub background: Vec<usize>,
    #[serde(rename = "E")]
    pub environmental: Vec<usize>,
    #[serde(rename = "C")]
    pub crowd: Vec<usize>,
    #[serde(rename = "A")]
    pub ambiguous: Vec<usize>,
    pub ignored: Vec<usize>,
    pub residual_candidates: usize,
}

impl GtPartition {
    pub fn get(&self, cat: GtCategory) -> &[usize] {
        match cat {
            GtCategory::Foreground => &self.foreground,
            GtCategory::Background => &self.background,
            GtCategory::Environmental => &self.environmental,
            GtCategory::Crowd => &self.crowd,
            GtCategory::Ambiguous => &self.ambiguous,
        }
    }

    fn get_mut(&mut self, cat: GtCategory) -> &mut Vec<usize> {
        match cat {
            GtCategory::Foreground => &mut self.foreground,
            GtCategory::Background => &mut self.background,
            GtCategory::Environmental => &mut self.environmental,
            GtCategory::Crowd => &mut self.crowd,
            GtCategory::Ambiguous => &mut self.ambiguous,
        }
    }

    /// Indices of the visible set `F ∪ B`, ascending.
    pub fn visible(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.foreground.iter().chain(&self.background).copied().collect();
        v.sort_unstable();
        v
    }

    /// Whether the six sets are disjoint and cover `0..n`.
    pub fn is_partition_of(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for &g in GtCategory::ALL
            .iter()
            .flat_map(|&c| self.get(c))
            .chain(&self.ignored)
        {
            if g >= n || seen[g] {
                return false;
            }
            seen[g] = true;
        }
        seen.into_iter().all(|s| s)
    }

    /// Category of a GT index; `None` when ignored.
    pub fn category_of(&self, g: usize) -> Option<GtCategory> {
        GtCategory::ALL.into_iter().find(|&c| self.get(c).contains(&g))
    }

    pub fn relaxation(&self) -> crate::matcher::Relaxation {
        crate::matcher::Relaxation {
            relaxed: self.visible(),
            crowd: self.crowd.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameCategories {
    pub partition: GtPartition,
    /// `None` for ignore-flagged boxes.
    pub boxes: Vec<Option<BoxAssessment>>,
}

impl FrameCategories {
    pub fn reasonable(&self) -> Vec<usize> {
        self.boxes
            .iter()
            .enumerate()
            .filter_map(|(g, a)| a.as_ref().filter(|a| a.reasonable).map(|_| g))
            .collect()
    }
}

fn assess(g: &GtBox, masks: &SegMasks, cfg: &CategorizerConfig) -> BoxAssessment {
    let legend = &cfg.legend;
    let instance = resolve_instance_id(g, masks, legend);
    let counts = BoxCounts::measure(g, instance, masks, legend);
    let (phi, phi_e, phi_c) = (counts.phi(), counts.phi_e(), counts.phi_c());

    let candidate = phi < cfg.lambda_phi;
    let env = candidate && phi_e > cfg.lambda_e;
    let crowd = candidate && phi_c > cfg.lambda_c;
    let (amb_env, amb_crowd) = if cfg.literal_ambiguity {
        (
            env && phi_e > cfg.lambda_e * cfg.lambda_a,
            crowd && phi_c > cfg.lambda_c * cfg.lambda_a,
        )
    } else {
        (
            env && phi_c > cfg.lambda_c * cfg.lambda_a,
            crowd && phi_e > cfg.lambda_e * cfg.lambda_a,
        )
    };

    let height = g.bbox.height();
    let category = if amb_env || amb_crowd {
        GtCategory::Ambiguous
    } else if env {
        GtCategory::Environmental
    } else if crowd {
        GtCategory::Crowd
    } else if height as f64 >= cfg.lambda_f {
        GtCategory::Foreground
    } else {
        GtCategory::Background
    };
    let occluded = matches!(
        category,
        GtCategory::Ambiguous | GtCategory::Environmental | GtCategory::Crowd
    );

    BoxAssessment {
        instance_id: instance,
        counts,
        phi,
        phi_e,
        phi_c,
        candidate,
        residual: candidate && !occluded,
        category,
        height,
        reasonable: height as f64 >= cfg.reasonable_min_height
            && g.visible_fraction() >= cfg.reasonable_min_visibility,
    }
}

pub fn categorize_frame(frame: &Frame, masks: &SegMasks, cfg: &CategorizerConfig) -> FrameCategories {
    let mut partition = GtPartition::default();
    let boxes: Vec<Option<BoxAssessment>> = frame
        .gt
        .iter()
        .enumerate()
        .map(|(k, g)| {
            if g.ignore {
                partition.ignored.push(k);
                return None;
            }
            let a = assess(g, masks, cfg);
            partition.get_mut(a.category).push(k);
            partition.residual_candidates += usize::from(a.residual);
            Some(a)
        })
        .collect();
    debug_assert!(partition.is_partition_of(frame.gt.len()));
    FrameCategories { partition, boxes }
}

/// Indices below `lambda_phi`, i.e. the occlusion candidates.
pub fn occlusion_candidates(frame: &Frame, masks: &SegMasks, cfg: &CategorizerConfig) -> Vec<usize> {
    frame
        .gt
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.ignore)
        .filter(|(_, g)| {
            visibility_phi(g, masks, resolve_instance_id(g, masks, &cfg.legend)) < cfg.lambda_phi
        })
        .map(|(k, _)| k)
        .collect()
}

/// Braking-distance model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AebParams {
    /// Pedestrian height, m.
    pub h: f64,
    /// Processing time, s.
    pub t_proc: f64,
    /// Friction coefficient.
    pub mu: f64,
    /// Velocity, m/s.
    pub v: f64,
    /// Gravitational acceleration, m/s².
    pub g: f64,
    /// Added distance, m.
    pub d_s: f64,
    /// Rear axle to front, m.
    pub d_v: f64,
    /// Vertical focal length, px.
    pub focal_y: f64,
}

impl Default for AebParams {
    /// 30 km/h braking parameters. `focal_y` is the value for which a
    /// 1.7 m pedestrian at 22 m spans 190 px.
    fn default() -> Self {
        AebParams {
            h: 1.7,
            t_proc: 0.4,
            mu: 0.3,
            v: 8.33,
            g: 9.81,
            d_s: 2.0,
            d_v: 4.0,
            focal_y: 2459.0,
        }
    }
}

impl AebParams {
    pub fn validate(&self) -> Result<(), String> {
        let fields = [
            ("h", self.h),
            ("t_proc", self.t_proc),
            ("mu", self.mu),
            ("g", self.g),
            ("d_s", self.d_s),
            ("d_v", self.d_v),
            ("focal_y", self.focal_y),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} = {v} must be positive"));
            }
        }
        if !(self.v >= 0.0 && self.v.is_finite()) {
            return Err(format!("v = {} must be non-negative", self.v));
        }
        Ok(())
    }
}

/// `d_s + d_v + ⌈v² / (2 μ g)⌉ + ⌈v · t_proc⌉`, in meters.
pub fn aeb_distance(p: &AebParams) -> f64 {
    let braking = (p.v * p.v / (2.0 * p.mu * p.g)).ceil();
    let reaction = (p.v * p.t_proc).ceil();
    p.d_s + p.d_v + braking + reaction
}

/// Pinhole pixel height of a pedestrian at `distance` meters, rounded.
pub fn height_threshold(p: &AebParams, distance: f64) -> u32 {
    (p.focal_y * p.h / distance).round() as u32
}
