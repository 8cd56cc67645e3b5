use std::path::{Path, PathBuf};

use pedeval_core::categorize::{CategorizerConfig, FrameCategories};
use pedeval_core::ingest::{
    assemble_frames, load_detections, load_frame_masks, load_ground_truth, Frame, GtFrame,
};
use pedeval_core::metrics::{MetricReport, Rate, Subset};
use pedeval_core::pipeline::{categorize_dataset, evaluate, fp_partitions};
use pedeval_synth::{render, write_fixture, DetectionModel, RandomScenes};

use crate::config::{Format, Resolved, RunConfig};
use crate::error::CliError;
use crate::report::{
    curve_csv, fp_categories_json, gt_categories_json, report_json, write_json, write_text, Cardinalities,
};

fn load_frames(cfg: &Resolved, need_detections: bool) -> Result<Vec<Frame>, CliError> {
    let gt = load_ground_truth(&cfg.ground_truth)?;
    match &cfg.detections {
        Some(p) => Ok(assemble_frames(gt, load_detections(p)?, p)?),
        None if need_detections => Err(CliError::Config("`detections` is required for evaluate".into())),
        None => Ok(gt.into_iter().map(frame_without_detections).collect()),
    }
}

fn frame_without_detections(g: GtFrame) -> Frame {
    Frame {
        frame_id: g.frame_id,
        width: g.width,
        height: g.height,
        gt: g.boxes,
        detections: Vec::new(),
    }
}

fn output_dir(cfg: &Resolved) -> Result<&Path, CliError> {
    std::fs::create_dir_all(&cfg.output_dir).map_err(|source| CliError::Output {
        path: cfg.output_dir.clone(),
        source,
    })?;
    Ok(&cfg.output_dir)
}

fn categorize_all(cfg: &Resolved, frames: &[Frame]) -> Result<Vec<FrameCategories>, CliError> {
    Ok(categorize_dataset(frames, &cfg.masks, &cfg.categorizer)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    Lamr,
    Flamr,
    FlamrGhost,
    CStar,
    MrAtStar,
    GdpiAtStar,
}

/// The scalar `--metric` prints; `None` when undefined.
pub fn scalar(report: &MetricReport, metric: Metric, subset: Subset) -> Result<Option<f64>, CliError> {
    let category = |m: &std::collections::BTreeMap<Subset, Option<f64>>| {
        m.get(&subset)
            .copied()
            .ok_or_else(|| CliError::Config(format!("--category {} has no {metric:?} value", subset.name())))
    };
    Ok(match metric {
        Metric::Lamr => report.lamr_reasonable,
        Metric::Flamr if subset == Subset::Reasonable => report.lamr_reasonable,
        Metric::Flamr => category(&report.flamr)?,
        Metric::FlamrGhost => category(&report.flamr_ghost)?,
        Metric::CStar => report.operating_point.as_ref().map(|o| o.c_star),
        Metric::MrAtStar => report.operating_point.as_ref().map(|o| o.mr_at_star),
        Metric::GdpiAtStar => report.operating_point.as_ref().map(|o| o.gdpi_at_star),
    })
}

pub fn fmt_scalar(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| x.to_string())
}

pub fn evaluate_cmd(config: &Path, metric: Option<(Metric, Subset)>) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let frames = load_frames(&cfg, true)?;
    let cats = categorize_all(&cfg, &frames)?;
    let report = evaluate(&frames, &cats, cfg.eval, &cfg.raw.metrics)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let cards = Cardinalities::count(&cats);
    let echo = cfg.echo();
    let out = output_dir(&cfg)?;

    if cfg.wants(Format::Json) {
        write_json(&out.join("report.json"), &report_json(&report, &cards, &frames, &echo))?;
        write_json(&out.join("gt_categories.json"), &gt_categories_json(&frames, &cats, &echo))?;
        let c_min = cfg.raw.metrics.c_min;
        let mut at = vec![("c_min", c_min, fp_partitions(&frames, &cats, c_min, cfg.eval))];
        if let Some(op) = &report.operating_point {
            at.push(("c_star_F", op.c_star, fp_partitions(&frames, &cats, op.c_star, cfg.eval)));
        }
        write_json(&out.join("fp_categories.json"), &fp_categories_json(&frames, &at, &echo))?;
    }
    if cfg.wants(Format::Csv) {
        for (name, rate) in [("curve_fppi.csv", Rate::Fppi), ("curve_gdpi.csv", Rate::Gdpi)] {
            let text = curve_csv(&report, rate).map_err(|e| CliError::Invalid(e.to_string()))?;
            write_text(&out.join(name), &text)?;
        }
    }

    match metric {
        Some((m, s)) => println!("{}", fmt_scalar(scalar(&report, m, s)?)),
        None => {
            println!("frames {}  curve points {}", frames.len(), report.curve.len());
            println!("LAMR (reasonable) {}", fmt_scalar(report.lamr_reasonable));
            for s in Subset::CATEGORIES {
                println!(
                    "{:<2} FLAMR {:<24} FLAMR^G {}",
                    s.name(),
                    fmt_scalar(report.flamr[&s]),
                    fmt_scalar(report.flamr_ghost[&s])
                );
            }
            if let Some(op) = &report.operating_point {
                println!(
                    "c*_F {}  MR_F {}  GDPI {}{}",
                    op.c_star,
                    op.mr_at_star,
                    op.gdpi_at_star,
                    if op.misses_at_c_min { "  (foreground misses at c_min)" } else { "" }
                );
            }
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

pub fn categorize_cmd(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let frames = load_frames(&cfg, false)?;
    let cats = categorize_all(&cfg, &frames)?;
    let out = output_dir(&cfg)?;
    write_json(&out.join("gt_categories.json"), &gt_categories_json(&frames, &cats, &cfg.echo()))?;
    print!("{}", Cardinalities::count(&cats).table());
    Ok(())
}

pub fn validate_cmd(config: &Path) -> Result<(), CliError> {
    let cfg = RunConfig::load(config)?;
    let frames = load_frames(&cfg, false)?;
    let legend = &cfg.categorizer.legend;
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    for f in &frames {
        match load_frame_masks(&cfg.masks, &f.frame_id, f.width, f.height) {
            Err(e) => errors.push(e.to_string()),
            Ok(m) => {
                let c = m.consistency(legend);
                if !c.is_clean() {
                    warnings.push(format!(
                        "frame `{}`: {} pedestrian pixels without instance, {} instance pixels outside the pedestrian class",
                        f.frame_id, c.pedestrian_without_instance, c.instance_without_pedestrian
                    ));
                }
                let present = m.pedestrian_instances(legend);
                for (k, g) in f.gt.iter().enumerate() {
                    if let Some(id) = g.instance_id {
                        if !present.contains(&id) {
                            warnings.push(format!("frame `{}` box {k}: instance {id} not in the instance mask", f.frame_id));
                        }
                    }
                }
            }
        }
    }
    let n_gt: usize = frames.iter().map(|f| f.gt.len()).sum();
    let n_det: usize = frames.iter().map(|f| f.detections.len()).sum();
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    for e in &errors {
        eprintln!("error: {e}");
    }
    println!(
        "{} frames, {n_gt} ground-truth boxes, {n_det} detections, {} warnings, {} errors",
        frames.len(),
        warnings.len(),
        errors.len()
    );
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invalid(format!("{} frames failed validation", errors.len())))
    }
}

pub struct SynthArgs {
    pub out: PathBuf,
    pub frames: usize,
    pub seed: u64,
    pub width: u32,
    pub height: u32,
    pub demo: bool,
}

/// Writes a random fixture plus a `config.json` pointing at it.
pub fn synth_cmd(a: &SynthArgs) -> Result<(), CliError> {
    if a.width < 16 || a.height < 16 {
        return Err(CliError::Config("canvas must be at least 16x16".into()));
    }
    let gen = RandomScenes {
        width: a.width,
        height: a.height,
        max_pedestrians: 8,
        max_occluders: 4,
        min_height: (a.height as i32 / 12).max(4),
        max_height: (a.height as i32 * 3 / 4).max(8),
        detections: DetectionModel {
            score_levels: 1000,
            ..DetectionModel::default()
        },
        ..RandomScenes::default()
    };
    let cfg = CategorizerConfig::default();
    let specs: Vec<_> = if a.demo {
        pedeval_synth::demo::demo_scenes()
    } else {
        (0..a.frames as u64)
            .map(|k| {
                let mut spec = gen.generate(a.seed.wrapping_add(k));
                spec.frame_id = format!("frame_{k:04}");
                spec
            })
            .collect()
    };
    let scenes: Vec<_> = specs.iter().map(|s| render(s, &cfg)).collect();
    write_fixture(&a.out, &scenes)?;
    let config = serde_json::json!({
        "ground_truth": pedeval_synth::fixture::GT_FILE,
        "detections": pedeval_synth::fixture::DETECTIONS_FILE,
        "masks": pedeval_synth::fixture::MASK_DIR,
        "output_dir": "out",
    });
    write_json(&a.out.join("config.json"), &config)?;
    println!("wrote {} frames to {}", scenes.len(), a.out.display());
    Ok(())
}
