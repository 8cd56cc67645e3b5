//! Pedestrian detection evaluation with segmentation-derived error
//! categories.
//!
//! The pipeline runs bottom-up: [`ingest`] decodes annotations, detections
//! and masks into [`Frame`]s; [`matcher`] computes TP/FN/FP at a threshold;
//! [`categorize`] and [`fp`] split misses and false alarms into categories;
//! [`metrics`] sweeps thresholds and aggregates.

pub mod categorize;
pub mod fp;
pub mod geometry;
pub mod ingest;
pub mod matcher;
pub mod metrics;
pub mod pipeline;

pub use categorize::{
    aeb_distance, categorize_frame, height_threshold, AebParams, BoxAssessment, CategorizerConfig,
    FrameCategories, GtCategory, GtPartition,
};
pub use fp::{categorize_fps, gdpi, FpCategory, FpClassifier, FpConfig, FpPartition};
pub use geometry::{center_aligned, intersection_over_min, iou, iou_exact, BBox, EmptyBox, Overlap};
pub use ingest::{Detection, Frame, GtBox, IngestError, InstanceId, LabelLegend, SegMasks};
pub use matcher::{match_dataset, match_frame, FrameMatcher, MatchOptions, MatchResult, Relaxation};
pub use metrics::{
    confidence_levels, flamr, flamr_ghost, mr_filtered, operating_point, sweep_thresholds,
    ConfidenceLevels, CurvePoint, MetricConfig, MetricReport, MetricsError, OperatingPoint,
    PreparedFrame, Rate, Subset,
};
pub use pipeline::{categorize_dataset, evaluate, EvalOptions};
