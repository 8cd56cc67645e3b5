//! Library-versus-oracle comparison on one scene.

use pedeval_core::categorize::{categorize_frame, BoxCounts, CategorizerConfig};
use pedeval_core::fp::{categorize_fps, FpConfig};
use pedeval_core::matcher::{match_frame, MatchOptions, MatchResult};

use crate::oracle::{oracle_categorize, oracle_counts, oracle_fp, oracle_match, PixelCounts};
use crate::scene::{render, SceneSpec};

/// Mismatch counts; all zero means the scene agrees everywhere.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Audit {
    pub thresholds: usize,
    pub matcher: usize,
    pub categorizer: usize,
    pub fp: usize,
    /// Broken partition invariants (GT sets, detection sets or FP sets).
    pub partition: usize,
}

impl Audit {
    pub fn is_clean(&self) -> bool {
        self.matcher + self.categorizer + self.fp + self.partition == 0
    }

    pub fn merge(&mut self, o: &Audit) {
        self.thresholds += o.thresholds;
        self.matcher += o.matcher;
        self.categorizer += o.categorizer;
        self.fp += o.fp;
        self.partition += o.partition;
    }
}

fn as_pixel_counts(c: &BoxCounts) -> PixelCounts {
    PixelCounts {
        area: c.area,
        outside: c.outside,
        own: c.own,
        own_pedestrian: c.own_pedestrian,
        occluder: c.occluder,
        pedestrian: c.pedestrian,
    }
}

/// Thresholds at which a frame's outcome can change: 0 and every score.
pub fn thresholds(scores: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut t: Vec<f64> = scores.into_iter().chain([0.0]).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn match_partitions(m: &MatchResult, n_gt: usize, passing: &[usize]) -> bool {
    let mut gt: Vec<usize> = m.tp_gt().chain(m.fn_.iter().copied()).chain(m.ignored_gt.iter().copied()).collect();
    gt.sort_unstable();
    let mut det: Vec<usize> = m.tp_dets();
    det.extend(&m.fp);
    det.extend(&m.ignored_dets);
    det.sort_unstable();
    gt == (0..n_gt).collect::<Vec<_>>() && det == passing
}

pub fn audit_scene(spec: &SceneSpec, cfg: &CategorizerConfig, opts: MatchOptions, fp_cfg: FpConfig) -> Audit {
    let r = render(spec, cfg);
    let f = &r.frame;
    let mut a = Audit::default();

    let cats = categorize_frame(f, &r.masks, cfg);
    let oracle = oracle_categorize(f, &r.masks, cfg);
    if cats.partition != oracle || cats.partition != r.expected {
        a.categorizer += 1;
    }
    for (k, g) in f.gt.iter().enumerate() {
        let lib = cats.boxes[k].as_ref().map(|b| as_pixel_counts(&b.counts));
        let brute = (!g.ignore).then(|| oracle_counts(g, &r.masks, cfg));
        if lib != brute || lib != r.counts[k] {
            a.categorizer += 1;
        }
    }
    if !cats.partition.is_partition_of(f.gt.len()) {
        a.partition += 1;
    }

    let relax = cats.partition.relaxation();
    for c in thresholds(f.detections.iter().map(|d| d.score)) {
        a.thresholds += 1;
        let lib = match_frame(f, c, &relax, opts);
        if lib != oracle_match(f, c, &relax, opts) {
            a.matcher += 1;
        }
        let passing: Vec<usize> = (0..f.detections.len()).filter(|&d| f.detections[d].score > c).collect();
        if !match_partitions(&lib, f.gt.len(), &passing) {
            a.partition += 1;
        }
        let fps = categorize_fps(&lib.fp, f, fp_cfg);
        if fps != oracle_fp(f, &lib.fp, fp_cfg) {
            a.fp += 1;
        }
        let mut all: Vec<usize> = fps.scale.iter().chain(&fps.localization).chain(&fps.ghost).copied().collect();
        all.sort_unstable();
        if all != lib.fp {
            a.partition += 1;
        }
    }
    a
}
