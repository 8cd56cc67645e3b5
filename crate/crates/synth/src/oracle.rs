//! Brute-force reference evaluators.
//!
//! Every quantity is recomputed from explicit pixel sets and every set is
//! built by testing each candidate element against its defining condition.
//! Nothing here is fast and nothing is shared with the library beyond the
//! data types.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use pedeval_core::categorize::{CategorizerConfig, GtCategory, GtPartition};
use pedeval_core::fp::{FpConfig, FpPartition};
use pedeval_core::geometry::BBox;
use pedeval_core::ingest::{Frame, GtBox, InstanceId, SegMasks};
use pedeval_core::matcher::{MatchOptions, MatchResult, Relaxation};
use serde::Serialize;

use crate::scene::push_category;

/// Pixel subset of a `width × height` image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelSet {
    width: u32,
    bits: Vec<u64>,
}

impl PixelSet {
    /// `{(x, y) ∈ image : (x, y) ∈ b}`.
    pub fn of_box(b: &BBox, width: u32, height: u32) -> Self {
        let n = (width as usize) * (height as usize);
        let mut bits = vec![0u64; n.div_ceil(64)];
        for y in 0..height {
            for x in 0..width {
                if b.contains_pixel(x as i32, y as i32) {
                    let k = (y * width + x) as usize;
                    bits[k / 64] |= 1 << (k % 64);
                }
            }
        }
        PixelSet { width, bits }
    }

    pub fn len(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn intersection_len(&self, o: &PixelSet) -> u64 {
        self.bits
            .iter()
            .zip(&o.bits)
            .map(|(a, b)| u64::from((a & b).count_ones()))
            .sum()
    }

    pub fn union_len(&self, o: &PixelSet) -> u64 {
        self.bits
            .iter()
            .zip(&o.bits)
            .map(|(a, b)| u64::from((a | b).count_ones()))
            .sum()
    }

    fn pixels(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let w = u64::from(self.width);
        self.bits.iter().enumerate().flat_map(move |(k, &word)| {
            (0..64)
                .filter(move |b| word >> b & 1 == 1)
                .map(move |b| {
                    let i = k as u64 * 64 + b;
                    (i % w, i / w)
                })
        })
    }

    /// Mean pixel coordinate; `None` for the empty set.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let (mut sx, mut sy, mut n) = (0u64, 0u64, 0u64);
        for (x, y) in self.pixels() {
            sx += x;
            sy += y;
            n += 1;
        }
        (n > 0).then(|| (sx as f64 / n as f64, sy as f64 / n as f64))
    }

    /// Width and height of the bounding extent.
    pub fn extent(&self) -> Option<(u64, u64)> {
        let mut it = self.pixels();
        let (x, y) = it.next()?;
        let (mut x1, mut x2, mut y1, mut y2) = (x, x, y, y);
        for (x, y) in it {
            x1 = x1.min(x);
            x2 = x2.max(x);
            y1 = y1.min(y);
            y2 = y2.max(y);
        }
        Some((x2 - x1 + 1, y2 - y1 + 1))
    }
}

/// A ratio `n / d` compared exactly; `0 / 0` reads as zero.
#[derive(Debug, Clone, Copy)]
struct Ratio(u64, u64);

impl Ratio {
    fn cmp(self, o: Ratio) -> Ordering {
        let d1 = self.1.max(1);
        let d2 = o.1.max(1);
        (u128::from(self.0) * u128::from(d2)).cmp(&(u128::from(o.0) * u128::from(d1)))
    }

    fn gt_half(self) -> bool {
        self.cmp(Ratio(1, 2)) == Ordering::Greater
    }
}

struct Sets {
    gt: Vec<PixelSet>,
    det: Vec<PixelSet>,
    /// `(|g ∩ d|, |g ∪ d|, min(|g|, |d|))` per `[g][d]`.
    counts: Vec<Vec<(u64, u64, u64)>>,
}

impl Sets {
    fn new(frame: &Frame) -> Self {
        let (w, h) = (frame.width, frame.height);
        let gt: Vec<PixelSet> = frame.gt.iter().map(|g| PixelSet::of_box(&g.bbox, w, h)).collect();
        let det: Vec<PixelSet> = frame.detections.iter().map(|d| PixelSet::of_box(&d.bbox, w, h)).collect();
        let counts = gt
            .iter()
            .map(|a| {
                det.iter()
                    .map(|b| (a.intersection_len(b), a.union_len(b), a.len().min(b.len())))
                    .collect()
            })
            .collect();
        Sets { gt, det, counts }
    }

    fn iou(&self, g: usize, d: usize) -> Ratio {
        let (i, u, _) = self.counts[g][d];
        Ratio(i, u)
    }

    fn iom(&self, g: usize, d: usize) -> Ratio {
        let (i, _, m) = self.counts[g][d];
        Ratio(i, m)
    }
}

/// Evaluates the TP / FP definitions by quantifying over every pair.
///
/// * `witness(g, d)`: `d` passes the threshold, `IoU(g, d) > 1/2`, and no
///   other non-ignored GT overlaps `d` more (equal overlap: the smaller GT
///   index counts as more).
/// * `g` is TP via `d` when `d` is a witness and no other witness of `g` is
///   preferred (higher IoU, then higher score, then smaller index).
/// * A relaxed GT that is not TP through a witness may be TP via `d` when
///   the same conditions hold with crowd-occluded GT left out of the
///   "no other GT overlaps more" check.
pub fn oracle_match(frame: &Frame, c: f64, relax: &Relaxation, opts: MatchOptions) -> MatchResult {
    let sets = Sets::new(frame);
    let n_gt = frame.gt.len();
    let n_det = frame.detections.len();
    let real = |g: usize| !frame.gt[g].ignore;
    let passes = |d: usize| frame.detections[d].score > c;
    let is_crowd = |g: usize| relax.crowd.contains(&g);
    let is_relaxed = |g: usize| relax.relaxed.contains(&g);

    let beats_gt = |g2: usize, g: usize, d: usize| match sets.iou(g2, d).cmp(sets.iou(g, d)) {
        Ordering::Greater => true,
        Ordering::Equal => g2 < g,
        Ordering::Less => false,
    };
    let best_for = |g: usize, d: usize, skip_crowd: bool| {
        (0..n_gt).all(|g2| g2 == g || !real(g2) || (skip_crowd && is_crowd(g2)) || !beats_gt(g2, g, d))
    };
    let witness = |g: usize, d: usize| real(g) && passes(d) && sets.iou(g, d).gt_half() && best_for(g, d, false);
    let relaxed_witness =
        |g: usize, d: usize| real(g) && passes(d) && sets.iou(g, d).gt_half() && best_for(g, d, true);
    let prefers = |d2: usize, d: usize, g: usize| match sets.iou(g, d2).cmp(sets.iou(g, d)) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match frame.detections[d2].score.total_cmp(&frame.detections[d].score) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => d2 < d,
        },
    };

    let strict_tp = |g: usize, d: usize| witness(g, d) && !(0..n_det).any(|d2| d2 != d && witness(g, d2) && prefers(d2, d, g));
    let has_strict = |g: usize| (0..n_det).any(|d| strict_tp(g, d));
    let relaxed_tp = |g: usize, d: usize| {
        is_relaxed(g)
            && !has_strict(g)
            && relaxed_witness(g, d)
            && !(0..n_det).any(|d2| d2 != d && relaxed_witness(g, d2) && prefers(d2, d, g))
    };

    let mut tp = Vec::new();
    let mut fn_ = Vec::new();
    let mut ignored_gt = Vec::new();
    for g in 0..n_gt {
        if !real(g) {
            ignored_gt.push(g);
            continue;
        }
        match (0..n_det).find(|&d| strict_tp(g, d) || relaxed_tp(g, d)) {
            Some(d) => tp.push((g, d)),
            None => fn_.push(g),
        }
    }

    let consumed = |d: usize| tp.iter().any(|&(_, d2)| d2 == d);
    let near_ignore = |d: usize| {
        (0..n_gt).any(|g| {
            !real(g)
                && if opts.ignore_iom {
                    sets.iom(g, d).gt_half()
                } else {
                    sets.iou(g, d).gt_half()
                }
        })
    };
    let mut fp = Vec::new();
    let mut ignored_dets = Vec::new();
    for d in (0..n_det).filter(|&d| passes(d) && !consumed(d)) {
        if near_ignore(d) {
            ignored_dets.push(d);
        } else {
            fp.push(d);
        }
    }

    MatchResult {
        threshold: c,
        tp,
        fn_,
        fp,
        ignored_dets,
        ignored_gt,
    }
}

/// Integer pixel counts behind the three visibility ratios.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PixelCounts {
    pub area: u64,
    pub outside: u64,
    pub own: u64,
    pub own_pedestrian: u64,
    pub occluder: u64,
    pub pedestrian: u64,
}

impl PixelCounts {
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

/// Category of one box from its counts, evaluated as set membership:
/// `A = A^E ∪ A^C`, `E = Ẽ \ A`, `C = C̃ \ (A ∪ E)`, visible boxes split by
/// height. The flag marks candidates outside `Ẽ ∪ C̃`.
pub fn classify(c: &PixelCounts, height: u64, cfg: &CategorizerConfig) -> (GtCategory, bool) {
    let in_candidates = c.phi() < cfg.lambda_phi;
    let in_env_tilde = in_candidates && c.phi_e() > cfg.lambda_e;
    let in_crowd_tilde = in_candidates && c.phi_c() > cfg.lambda_c;
    let (in_a_env, in_a_crowd) = if cfg.literal_ambiguity {
        (
            in_env_tilde && c.phi_e() > cfg.lambda_e * cfg.lambda_a,
            in_crowd_tilde && c.phi_c() > cfg.lambda_c * cfg.lambda_a,
        )
    } else {
        (
            in_env_tilde && c.phi_c() > cfg.lambda_c * cfg.lambda_a,
            in_crowd_tilde && c.phi_e() > cfg.lambda_e * cfg.lambda_a,
        )
    };
    let in_a = in_a_env || in_a_crowd;
    let in_e = in_env_tilde && !in_a;
    let in_c = in_crowd_tilde && !in_a && !in_e;
    let residual = in_candidates && !in_env_tilde && !in_crowd_tilde;
    let cat = if in_a {
        GtCategory::Ambiguous
    } else if in_e {
        GtCategory::Environmental
    } else if in_c {
        GtCategory::Crowd
    } else if height as f64 >= cfg.lambda_f {
        GtCategory::Foreground
    } else {
        GtCategory::Background
    };
    (cat, residual)
}

/// Counts by visiting every pixel of the pre-clip box.
pub fn oracle_counts(g: &GtBox, masks: &SegMasks, cfg: &CategorizerConfig) -> PixelCounts {
    let legend = &cfg.legend;
    let (w, h) = (masks.width() as i64, masks.height() as i64);
    let b = g.bbox;
    let inside = |x: i64, y: i64| 0 <= x && x < w && 0 <= y && y < h;
    let pixels = || {
        (i64::from(b.y1())..i64::from(b.y2()))
            .flat_map(move |y| (i64::from(b.x1())..i64::from(b.x2())).map(move |x| (x, y)))
    };

    let instance: Option<InstanceId> = g.instance_id.or_else(|| {
        let mut by_id: BTreeMap<InstanceId, u64> = BTreeMap::new();
        for (x, y) in pixels().filter(|&(x, y)| inside(x, y)) {
            let (s, i) = (masks.semantic_at(x as u32, y as u32), masks.instance_at(x as u32, y as u32));
            if legend.is_pedestrian_instance(i, s) {
                *by_id.entry(i).or_default() += 1;
            }
        }
        let max = by_id.values().copied().max()?;
        by_id.into_iter().find(|&(_, n)| n == max).map(|(i, _)| i)
    });

    let mut c = PixelCounts::default();
    for (x, y) in pixels() {
        c.area += 1;
        if !inside(x, y) {
            c.outside += 1;
            continue;
        }
        let (s, i) = (masks.semantic_at(x as u32, y as u32), masks.instance_at(x as u32, y as u32));
        let own = instance == Some(i);
        let ped = legend.is_pedestrian(s);
        c.own += u64::from(own);
        c.own_pedestrian += u64::from(own && ped);
        c.pedestrian += u64::from(ped);
        c.occluder += u64::from(legend.is_occluder(s));
    }
    c
}

pub fn oracle_categorize(frame: &Frame, masks: &SegMasks, cfg: &CategorizerConfig) -> GtPartition {
    let mut p = GtPartition::default();
    for (k, g) in frame.gt.iter().enumerate() {
        if g.ignore {
            p.ignored.push(k);
            continue;
        }
        let counts = oracle_counts(g, masks, cfg);
        let (cat, residual) = classify(&counts, g.bbox.height(), cfg);
        push_category(&mut p, cat, k);
        p.residual_candidates += usize::from(residual);
    }
    p
}

/// FP categories by direct predicate evaluation on pixel sets.
pub fn oracle_fp(frame: &Frame, fp: &[usize], cfg: FpConfig) -> FpPartition {
    let sets = Sets::new(frame);
    let anchors: Vec<usize> = (0..frame.gt.len())
        .filter(|&g| !frame.gt[g].ignore && !sets.gt[g].is_empty())
        .collect();
    let aligned = |g: usize, d: usize| {
        let (Some((gx, gy)), Some((dx, dy))) = (sets.gt[g].centroid(), sets.det[d].centroid()) else {
            return false;
        };
        let (w, h) = sets.gt[g].extent().expect("non-empty");
        (gx - dx).abs() <= cfg.lambda_o * w as f64 && (gy - dy).abs() <= cfg.lambda_o * h as f64
    };
    let iou = |g: usize, d: usize| {
        let Ratio(n, u) = sets.iou(g, d);
        if u == 0 {
            0.0
        } else {
            n as f64 / u as f64
        }
    };

    let mut part = FpPartition::default();
    for &d in fp {
        if anchors.iter().any(|&g| aligned(g, d)) {
            part.scale.push(d);
        } else if anchors.iter().any(|&g| iou(g, d) >= cfg.lambda_i) {
            part.localization.push(d);
        } else {
            part.ghost.push(d);
        }
    }
    part
}
