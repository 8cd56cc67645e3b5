use pedeval_core::categorize::{categorize_frame, CategorizerConfig, GtCategory};
use pedeval_core::geometry::{iou, BBox};
use pedeval_core::ingest::{assemble_frames, load_detections, load_frame_masks, load_ground_truth, Detection, Frame, GtBox};
use pedeval_core::matcher::{match_frame, MatchOptions, Relaxation};
use pedeval_synth::scene::{CAR, PERSON};
use pedeval_synth::{oracle_match, render, write_fixture, Actor, RandomScenes, SceneSpec};

fn b(x1: i32, y1: i32, x2: i32, y2: i32) -> BBox {
    BBox::new(x1, y1, x2, y2).unwrap()
}

fn category(spec: &SceneSpec, g: usize) -> GtCategory {
    let cfg = CategorizerConfig::default();
    let r = render(spec, &cfg);
    let lib = categorize_frame(&r.frame, &r.masks, &cfg).partition;
    assert_eq!(lib, r.expected);
    lib.category_of(g).unwrap()
}

#[test]
fn unoccluded_tall_pedestrian_is_foreground() {
    let spec = SceneSpec::new("f", 300, 300).with(Actor::pedestrian(b(100, 50, 180, 250)));
    assert_eq!(category(&spec, 0), GtCategory::Foreground);
}

#[test]
fn car_occlusion() {
    let ped = b(100, 50, 180, 250);
    // half hidden: phi = phi_e = 0.5, so only the crowd test (phi_c = 1) passes
    let half = SceneSpec::new("h", 300, 300)
        .with(Actor::pedestrian(ped))
        .with(Actor::occluder(b(90, 150, 200, 260), CAR));
    assert_eq!(category(&half, 0), GtCategory::Crowd);

    // 80% hidden and alone in the box: both relaxed tests hold
    let deep = SceneSpec::new("d", 300, 300)
        .with(Actor::pedestrian(ped))
        .with(Actor::occluder(b(90, 90, 200, 260), CAR));
    assert_eq!(category(&deep, 0), GtCategory::Ambiguous);

    // 80% hidden with a second pedestrian taking most person pixels
    let env = SceneSpec::new("e", 300, 300)
        .with(Actor::pedestrian(ped))
        .with(Actor::pedestrian(b(116, 40, 180, 90)))
        .with(Actor::occluder(b(90, 90, 200, 260), CAR));
    let cfg = CategorizerConfig::default();
    let r = render(&env, &cfg);
    let c = r.counts[0].unwrap();
    assert!(c.phi() < 0.6 && c.phi_e() > 0.7 && c.phi_c() <= 0.375, "{c:?}");
    assert_eq!(category(&env, 0), GtCategory::Environmental);
}

#[test]
fn stacked_pedestrians_at_45_percent() {
    // the front pedestrian covers 45 of the back one's 100 columns
    let spec = SceneSpec::new("c", 400, 300)
        .with(Actor::pedestrian(b(100, 0, 200, 200)))
        .with(Actor::pedestrian(b(155, 0, 255, 200)));
    let cfg = CategorizerConfig::default();
    let r = render(&spec, &cfg);
    let c = r.counts[0].unwrap();
    assert_eq!((c.phi(), c.phi_e(), c.phi_c()), (0.55, 0.0, 0.55));
    assert_eq!(category(&spec, 0), GtCategory::Crowd);
    assert_eq!(category(&spec, 1), GtCategory::Foreground);
}

fn frame(gt: Vec<GtBox>, dets: Vec<Detection>) -> Frame {
    let mut f = Frame::new("m", 200, 200);
    f.gt = gt;
    f.detections = dets;
    f
}

#[test]
fn oracle_on_matcher_examples() {
    let opts = MatchOptions::default();
    let none = Relaxation::none();
    let g = b(0, 0, 100, 100);

    let empty = frame(vec![], vec![]);
    let m = oracle_match(&empty, 0.0, &none, opts);
    assert!(m.tp.is_empty() && m.fn_.is_empty() && m.fp.is_empty());

    let single_det = b(0, 0, 60, 100);
    assert_eq!(iou(&g, &single_det), 0.6);
    let single = frame(vec![GtBox::new(g)], vec![Detection::new(single_det, 0.9)]);
    assert_eq!(oracle_match(&single, 0.0, &none, opts).tp, vec![(0, 0)]);

    let dup = frame(
        vec![GtBox::new(g)],
        vec![Detection::new(b(0, 0, 60, 100), 0.9), Detection::new(b(0, 0, 80, 100), 0.5)],
    );
    let m = oracle_match(&dup, 0.0, &none, opts);
    assert_eq!(m.tp, vec![(0, 1)]);
    assert_eq!(m.fp, vec![0]);

    let d = b(0, 0, 100, 100);
    let pair = frame(
        vec![GtBox::new(b(0, 0, 100, 60)), GtBox::new(b(0, 0, 100, 70))],
        vec![Detection::new(d, 0.9)],
    );
    let strict = oracle_match(&pair, 0.0, &none, opts);
    assert_eq!(strict.fn_, vec![0]);
    let relax = Relaxation {
        relaxed: vec![0],
        crowd: vec![1],
    };
    let relaxed = oracle_match(&pair, 0.0, &relax, opts);
    assert_eq!(relaxed.tp, vec![(0, 0), (1, 0)]);
    for (f, r) in [(&single, &none), (&dup, &none), (&pair, &none), (&pair, &relax)] {
        assert_eq!(oracle_match(f, 0.0, r, opts), match_frame(f, 0.0, r, opts));
    }
}

#[test]
fn categories_follow_gt_permutations() {
    let cfg = CategorizerConfig {
        lambda_f: 24.0,
        ..CategorizerConfig::default()
    };
    let gen = RandomScenes::default();
    for seed in 0..300 {
        let r = render(&gen.generate(seed), &cfg);
        let base = categorize_frame(&r.frame, &r.masks, &cfg);
        let n = r.frame.gt.len();
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut shuffled = r.frame.clone();
        shuffled.gt = perm.iter().map(|&k| r.frame.gt[k].clone()).collect();
        let p = categorize_frame(&shuffled, &r.masks, &cfg).partition;
        for (new, &old) in perm.iter().enumerate() {
            assert_eq!(p.category_of(new), base.partition.category_of(old), "seed {seed}");
        }
    }
}

#[test]
fn rendering_is_seed_deterministic() {
    let gen = RandomScenes::default();
    let cfg = CategorizerConfig::default();
    for seed in [0, 7, 12345] {
        let a = render(&gen.generate(seed), &cfg);
        let b = render(&gen.generate(seed), &cfg);
        assert_eq!(a.frame, b.frame);
        assert_eq!(a.masks, b.masks);
    }
    assert_ne!(gen.generate(1), gen.generate(2));
}

#[test]
fn fixture_round_trip() {
    let cfg = CategorizerConfig {
        lambda_f: 24.0,
        ..CategorizerConfig::default()
    };
    let gen = RandomScenes::default();
    let scenes: Vec<_> = (0..8).map(|s| render(&gen.generate(s), &cfg)).collect();
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path(), &scenes).unwrap();

    let gt = load_ground_truth(&dir.path().join("gt.json")).unwrap();
    let det_path = dir.path().join("detections.json");
    let dets = load_detections(&det_path).unwrap();
    let frames = assemble_frames(gt, dets, &det_path).unwrap();
    assert_eq!(frames.len(), scenes.len());
    for (f, s) in frames.iter().zip(&scenes) {
        assert_eq!(f, &s.frame);
        let masks = load_frame_masks(&dir.path().join("masks"), &f.frame_id, f.width, f.height).unwrap();
        assert_eq!(masks, s.masks);
        assert_eq!(categorize_frame(f, &masks, &cfg).partition, s.expected);
    }
    assert_eq!(PERSON, cfg.legend.pedestrian_class);
}

#[test]
fn demo_fixture_has_its_constructed_partition() {
    use pedeval_core::categorize::GtCategory;
    let cfg = CategorizerConfig::default();
    let mut counts = [0usize; 5];
    let mut ignored = 0;
    for spec in pedeval_synth::demo::demo_scenes() {
        let r = render(&spec, &cfg);
        let p = categorize_frame(&r.frame, &r.masks, &cfg).partition;
        assert_eq!(p, r.expected, "{}", spec.frame_id);
        for (k, c) in GtCategory::ALL.into_iter().enumerate() {
            counts[k] += p.get(c).len();
        }
        ignored += p.ignored.len();
    }
    assert_eq!((counts, ignored), pedeval_synth::demo::EXPECTED);
}
