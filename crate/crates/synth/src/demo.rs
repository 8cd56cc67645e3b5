//! The five hand-laid frames of the bundled demo fixture.

use pedeval_core::geometry::BBox;

use crate::scene::{Actor, ActorKind, DetectionModel, SceneSpec, BUILDING, CAR, POLE};

pub const WIDTH: u32 = 480;
pub const HEIGHT: u32 = 320;

/// Expected `[F, B, E, C, A]` and ignored counts of [`demo_scenes`] under
/// the default categorizer configuration.
pub const EXPECTED: ([usize; 5], usize) = ([3, 5, 1, 2, 1], 1);

fn b(x1: i32, y1: i32, x2: i32, y2: i32) -> BBox {
    BBox::new(x1, y1, x2, y2).expect("non-empty demo box")
}

fn ignored(rect: BBox) -> Actor {
    Actor {
        rect,
        kind: ActorKind::Pedestrian {
            ignore: true,
            annotate_instance: true,
        },
    }
}

fn unannotated(rect: BBox) -> Actor {
    Actor {
        rect,
        kind: ActorKind::Pedestrian {
            ignore: false,
            annotate_instance: false,
        },
    }
}

pub fn demo_scenes() -> Vec<SceneSpec> {
    let noisy = DetectionModel {
        recall: 0.9,
        jitter: 0.15,
        scale_noise: 0.25,
        duplicate_rate: 0.4,
        ghost_rate: 1.2,
        score_levels: 1000,
    };
    let scene = |k: usize| {
        let mut s = SceneSpec::new(format!("demo_{k}"), WIDTH, HEIGHT);
        s.detections = noisy.clone();
        s.seed = 1000 + k as u64;
        s
    };
    vec![
        // tall and short pedestrians in the open, one ignore region
        scene(0)
            .with(Actor::pedestrian(b(40, 60, 120, 260)))
            .with(Actor::pedestrian(b(300, 150, 330, 230)))
            .with(ignored(b(400, 200, 420, 240))),
        // half behind a car, then mostly hidden by a car
        scene(1)
            .with(Actor::pedestrian(b(60, 40, 140, 240)))
            .with(Actor::occluder(b(50, 140, 160, 250), CAR))
            .with(Actor::pedestrian(b(260, 40, 340, 240)))
            .with(Actor::occluder(b(250, 80, 360, 250), CAR)),
        // hidden behind a building with a second pedestrian in its box
        scene(2)
            .with(Actor::pedestrian(b(100, 50, 180, 250)))
            .with(Actor::pedestrian(b(116, 40, 180, 90)))
            .with(Actor::occluder(b(90, 90, 200, 260), BUILDING)),
        // two pedestrians, the front one covering 45% of the back one
        scene(3)
            .with(Actor::pedestrian(b(100, 20, 200, 220)))
            .with(Actor::pedestrian(b(155, 20, 255, 220)))
            .with(Actor::pedestrian(b(380, 100, 410, 170))),
        // a small group behind a pole (the back pedestrian is a residual
        // candidate), plus a box without an instance annotation
        scene(4)
            .with(Actor::pedestrian(b(200, 120, 230, 200)))
            .with(Actor::pedestrian(b(215, 125, 245, 205)))
            .with(Actor::occluder(b(205, 100, 212, 250), POLE))
            .with(unannotated(b(40, 20, 120, 230))),
    ]
}
