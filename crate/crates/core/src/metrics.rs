//! Miss-rate curves over the confidence threshold and the aggregate scores
//! built from them.
//!
//! A curve is evaluated at `c_min` and at every distinct detection score
//! `>= c_min`; between two consecutive points nothing changes, so the step
//! functions are represented exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::categorize::{FrameCategories, GtCategory};
use crate::fp::{FpCategory, FpClassifier, FpConfig};
use crate::ingest::Frame;
use crate::matcher::{FrameMatcher, MatchOptions, MatchResult};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("dataset holds no frames")]
    EmptyDataset,
}

/// GT subsets for which a miss rate is tracked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subset {
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
    #[serde(rename = "reasonable")]
    Reasonable,
}

impl Subset {
    pub const ALL: [Subset; 6] = [
        Subset::Foreground,
        Subset::Background,
        Subset::Environmental,
        Subset::Crowd,
        Subset::Ambiguous,
        Subset::Reasonable,
    ];

    pub const CATEGORIES: [Subset; 5] = [
        Subset::Foreground,
        Subset::Background,
        Subset::Environmental,
        Subset::Crowd,
        Subset::Ambiguous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subset::Foreground => "F",
            Subset::Background => "B",
            Subset::Environmental => "E",
            Subset::Crowd => "C",
            Subset::Ambiguous => "A",
            Subset::Reasonable => "reasonable",
        }
    }

    pub fn parse(s: &str) -> Option<Subset> {
        Subset::ALL.into_iter().find(|x| x.name().eq_ignore_ascii_case(s))
    }

    fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl From<GtCategory> for Subset {
    fn from(c: GtCategory) -> Self {
        match c {
            GtCategory::Foreground => Subset::Foreground,
            GtCategory::Background => Subset::Background,
            GtCategory::Environmental => Subset::Environmental,
            GtCategory::Crowd => Subset::Crowd,
            GtCategory::Ambiguous => Subset::Ambiguous,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub c: f64,
    /// Filtered miss rate per subset; subsets empty over the whole dataset
    /// are absent.
    pub mr: BTreeMap<Subset, f64>,
    pub fppi: f64,
    pub gdpi: f64,
    /// Matched ground-truth boxes.
    pub tp: usize,
    pub fp: usize,
    pub ghosts: usize,
}

impl CurvePoint {
    /// A point with no miss rates, for building curves by hand.
    pub fn new(c: f64, fppi: f64, gdpi: f64) -> Self {
        CurvePoint {
            c,
            mr: BTreeMap::new(),
            fppi,
            gdpi,
            tp: 0,
            fp: 0,
            ghosts: 0,
        }
    }

    pub fn with_mr(mut self, subset: Subset, mr: f64) -> Self {
        self.mr.insert(subset, mr);
        self
    }

    pub fn rate(&self, rate: Rate) -> f64 {
        match rate {
            Rate::Fppi => self.fppi,
            Rate::Gdpi => self.gdpi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rate {
    Fppi,
    Gdpi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub c_min: f64,
    /// Floor applied to miss rates before taking logarithms.
    pub epsilon: f64,
    /// Reference rates at which confidence levels are picked.
    pub fppi_refs: Vec<f64>,
}

/// `10^(-2 + k/4)` for `k = 0..=8`.
pub fn default_refs() -> Vec<f64> {
    (0..9).map(|k| 10f64.powf(-2.0 + 0.25 * f64::from(k))).collect()
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            c_min: 0.01,
            epsilon: 1e-4,
            fppi_refs: default_refs(),
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c_min >= 0.0 && self.c_min < 1.0) {
            return Err(format!("c_min = {} must lie in [0, 1)", self.c_min));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(format!("epsilon = {} must lie in (0, 1)", self.epsilon));
        }
        if self.fppi_refs.is_empty() || self.fppi_refs.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return Err("fppi_refs must be a non-empty list of positive rates".into());
        }
        Ok(())
    }
}

/// `|FN ∩ P| / (|TP ∩ P| + |FN ∩ P|)`; `None` for an empty subset.
pub fn mr_filtered(tp: usize, fn_: usize) -> Option<f64> {
    let total = tp + fn_;
    (total > 0).then(|| fn_ as f64 / total as f64)
}

/// Confidence levels picked from a curve for a list of reference rates.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConfidenceLevels {
    /// Distinct curve indices, ascending by threshold.
    pub points: Vec<usize>,
    pub thresholds: Vec<f64>,
    /// References no point satisfied; each fell back to the highest threshold.
    pub unmet_refs: Vec<f64>,
}

impl ConfidenceLevels {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// For each reference `f`, the point whose rate is largest subject to
/// `rate <= f` (ties to the smaller threshold). `curve` must be sorted by `c`.
pub fn confidence_levels(curve: &[CurvePoint], rate: Rate, refs: &[f64]) -> ConfidenceLevels {
    let mut out = ConfidenceLevels::default();
    if curve.is_empty() {
        return out;
    }
    let mut picked = Vec::with_capacity(refs.len());
    for &f in refs {
        let mut best: Option<usize> = None;
        for (k, p) in curve.iter().enumerate() {
            let r = p.rate(rate);
            if r <= f && best.is_none_or(|b| r > curve[b].rate(rate)) {
                best = Some(k);
            }
        }
        match best {
            Some(k) => picked.push(k),
            None => {
                out.unmet_refs.push(f);
                picked.push(curve.len() - 1);
            }
        }
    }
    picked.sort_unstable();
    picked.dedup();
    out.thresholds = picked.iter().map(|&k| curve[k].c).collect();
    out.points = picked;
    out
}

/// Geometric mean of `max(MR_P(c), epsilon)` over the given levels.
///
/// `None` when the subset is undefined on the curve or no level was picked.
pub fn flamr(curve: &[CurvePoint], subset: Subset, levels: &ConfidenceLevels, epsilon: f64) -> Option<f64> {
    if levels.is_empty() {
        return None;
    }
    let clamped = levels
        .points
        .iter()
        .map(|&k| curve[k].mr.get(&subset).map(|m| m.max(epsilon)))
        .collect::<Option<Vec<f64>>>()?;
    // a constant sequence is its own geometric mean; skip the exp/ln round trip
    if clamped.iter().all(|&m| m == clamped[0]) {
        return Some(clamped[0]);
    }
    let sum: f64 = clamped.iter().map(|m| m.ln()).sum();
    Some((sum / clamped.len() as f64).exp())
}

/// [`flamr`] with levels chosen by ghost detections per image.
pub fn flamr_ghost(curve: &[CurvePoint], subset: Subset, refs: &[f64], epsilon: f64) -> Option<f64> {
    flamr(curve, subset, &confidence_levels(curve, Rate::Gdpi, refs), epsilon)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatingPoint {
    #[serde(rename = "c_star_F")]
    pub c_star: f64,
    #[serde(rename = "mr_F_at_star")]
    pub mr_at_star: f64,
    pub gdpi_at_star: f64,
    pub fppi_at_star: f64,
    /// `MR_F(c_min) != 0`: some foreground box is missed at every threshold.
    #[serde(rename = "mr_F_at_c_min_nonzero")]
    pub misses_at_c_min: bool,
}

/// Largest threshold attaining the minimum foreground miss rate.
pub fn operating_point(curve: &[CurvePoint]) -> Option<OperatingPoint> {
    let mr = |p: &CurvePoint| p.mr.get(&Subset::Foreground).copied();
    let first = mr(curve.first()?)?;
    let min = curve.iter().filter_map(mr).fold(f64::INFINITY, f64::min);
    let star = curve.iter().rev().find(|p| mr(p) == Some(min))?;
    Some(OperatingPoint {
        c_star: star.c,
        mr_at_star: min,
        gdpi_at_star: star.gdpi,
        fppi_at_star: star.fppi,
        misses_at_c_min: first != 0.0,
    })
}

/// Per-frame state reused at every threshold of a sweep.
#[derive(Debug, Clone)]
pub struct PreparedFrame {
    matcher: FrameMatcher,
    /// Subset bits per GT index; 0 for ignored boxes.
    membership: Vec<u8>,
    fp_class: Vec<FpCategory>,
    scores: Vec<f64>,
}

impl PreparedFrame {
    pub fn new(frame: &Frame, cats: &FrameCategories, opts: MatchOptions, fp: FpConfig) -> Self {
        let membership = cats
            .boxes
            .iter()
            .map(|a| {
                a.as_ref().map_or(0, |a| {
                    let mut bits = Subset::from(a.category).bit();
                    if a.reasonable {
                        bits |= Subset::Reasonable.bit();
                    }
                    bits
                })
            })
            .collect();
        PreparedFrame {
            matcher: FrameMatcher::new(frame, &cats.partition.relaxation(), opts),
            membership,
            fp_class: FpClassifier::new(frame, fp).classify_all(frame),
            scores: frame.detections.iter().map(|d| d.score).collect(),
        }
    }

    pub fn match_at(&self, c: f64) -> MatchResult {
        self.matcher.match_at(c)
    }

    pub fn fp_class(&self, det: usize) -> FpCategory {
        self.fp_class[det]
    }

    pub fn summarize(&self, m: &MatchResult) -> FrameTally {
        let mut t = FrameTally::default();
        for g in m.tp_gt() {
            t.add_gt(self.membership[g], true);
        }
        for &g in &m.fn_ {
            t.add_gt(self.membership[g], false);
        }
        t.fp = m.fp.len();
        t.ghosts = m.fp.iter().filter(|&&d| self.fp_class[d] == FpCategory::Ghost).count();
        t
    }

    pub fn tally_at(&self, c: f64) -> FrameTally {
        self.summarize(&self.match_at(c))
    }
}

/// Counts of one frame (or a sum of frames) at one threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FrameTally {
    pub tp: [usize; 6],
    pub fn_: [usize; 6],
    pub tp_total: usize,
    pub fp: usize,
    pub ghosts: usize,
}

impl FrameTally {
    fn add_gt(&mut self, bits: u8, matched: bool) {
        if matched {
            self.tp_total += 1;
        }
        for s in Subset::ALL {
            if bits & s.bit() != 0 {
                if matched {
                    self.tp[s as usize] += 1;
                } else {
                    self.fn_[s as usize] += 1;
                }
            }
        }
    }

    fn add(&mut self, o: &FrameTally) {
        for k in 0..6 {
            self.tp[k] += o.tp[k];
            self.fn_[k] += o.fn_[k];
        }
        self.tp_total += o.tp_total;
        self.fp += o.fp;
        self.ghosts += o.ghosts;
    }

    fn sub(&mut self, o: &FrameTally) {
        for k in 0..6 {
            self.tp[k] -= o.tp[k];
            self.fn_[k] -= o.fn_[k];
        }
        self.tp_total -= o.tp_total;
        self.fp -= o.fp;
        self.ghosts -= o.ghosts;
    }

    pub fn sum<'a>(tallies: impl IntoIterator<Item = &'a FrameTally>) -> FrameTally {
        let mut t = FrameTally::default();
        for x in tallies {
            t.add(x);
        }
        t
    }

    pub fn to_point(&self, c: f64, images: usize) -> CurvePoint {
        let mr = Subset::ALL
            .into_iter()
            .filter_map(|s| mr_filtered(self.tp[s as usize], self.fn_[s as usize]).map(|v| (s, v)))
            .collect();
        CurvePoint {
            c,
            mr,
            fppi: self.fp as f64 / images as f64,
            gdpi: self.ghosts as f64 / images as f64,
            tp: self.tp_total,
            fp: self.fp,
            ghosts: self.ghosts,
        }
    }
}

/// The sweep's threshold set: `c_min` plus every distinct score `>= c_min`,
/// ascending.
pub fn sweep_grid(frames: &[PreparedFrame], c_min: f64) -> Vec<f64> {
    let mut grid: Vec<f64> = frames
        .iter()
        .flat_map(|f| f.scores.iter().copied())
        .filter(|&s| s >= c_min)
        .chain(std::iter::once(c_min))
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Exact step curve over [`sweep_grid`], sorted by `c`.
///
/// Walks thresholds from high to low; each step admits the detections
/// scored at the previous threshold and re-matches only their frames.
pub fn sweep_thresholds(frames: &[PreparedFrame], c_min: f64) -> Result<Vec<CurvePoint>, MetricsError> {
    use rayon::prelude::*;
    if frames.is_empty() {
        return Err(MetricsError::EmptyDataset);
    }
    let grid = sweep_grid(frames, c_min);
    let top = *grid.last().expect("grid holds c_min");

    // (score, frame) for every detection that enters somewhere on the grid
    let mut arrivals: Vec<(f64, usize)> = frames
        .iter()
        .enumerate()
        .flat_map(|(k, f)| f.scores.iter().map(move |&s| (s, k)))
        .filter(|&(s, _)| s > c_min)
        .collect();
    arrivals.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

    let mut tallies: Vec<FrameTally> = frames.par_iter().map(|f| f.tally_at(top)).collect();
    let mut total = FrameTally::sum(&tallies);
    let mut points = Vec::with_capacity(grid.len());
    points.push(total.to_point(top, frames.len()));

    let mut next = 0;
    for w in grid.windows(2).rev() {
        let (c, prev) = (w[0], w[1]);
        let mut touched = Vec::new();
        while next < arrivals.len() && arrivals[next].0 > c {
            debug_assert!(arrivals[next].0 <= prev);
            touched.push(arrivals[next].1);
            next += 1;
        }
        touched.dedup();
        for k in touched {
            let fresh = frames[k].tally_at(c);
            total.sub(&tallies[k]);
            total.add(&fresh);
            tallies[k] = fresh;
        }
        points.push(total.to_point(c, frames.len()));
    }
    points.reverse();
    Ok(points)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub curve: Vec<CurvePoint>,
    pub lamr_reasonable: Option<f64>,
    pub flamr: BTreeMap<Subset, Option<f64>>,
    pub flamr_ghost: BTreeMap<Subset, Option<f64>>,
    pub fppi_levels: ConfidenceLevels,
    pub gdpi_levels: ConfidenceLevels,
    pub operating_point: Option<OperatingPoint>,
    pub epsilon: f64,
    pub refs: Vec<f64>,
}

impl MetricReport {
    pub fn from_curve(curve: Vec<CurvePoint>, cfg: &MetricConfig) -> Self {
        let fppi_levels = confidence_levels(&curve, Rate::Fppi, &cfg.fppi_refs);
        let gdpi_levels = confidence_levels(&curve, Rate::Gdpi, &cfg.fppi_refs);
        let eps = cfg.epsilon;
        MetricReport {
            lamr_reasonable: flamr(&curve, Subset::Reasonable, &fppi_levels, eps),
            flamr: Subset::CATEGORIES
                .into_iter()
                .map(|s| (s, flamr(&curve, s, &fppi_levels, eps)))
                .collect(),
            flamr_ghost: Subset::CATEGORIES
                .into_iter()
                .map(|s| (s, flamr(&curve, s, &gdpi_levels, eps)))
                .collect(),
            operating_point: operating_point(&curve),
            fppi_levels,
            gdpi_levels,
            epsilon: eps,
            refs: cfg.fppi_refs.clone(),
            curve,
        }
    }
}
