//! Synthetic scenes built from layered rectangles, and brute-force
//! evaluators to check the library against.

pub mod audit;
pub mod demo;
pub mod fixture;
pub mod oracle;
pub mod scene;

pub use audit::{audit_scene, Audit};
pub use fixture::write_fixture;
pub use oracle::{classify, oracle_categorize, oracle_counts, oracle_fp, oracle_match, PixelCounts, PixelSet};
pub use scene::{
    pedestrian_instance, render, Actor, ActorKind, DetectionModel, RandomScenes, Rendered, SceneSpec,
};
