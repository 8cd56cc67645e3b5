//! Run configuration file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use pedeval_core::categorize::{aeb_distance, height_threshold, AebParams, CategorizerConfig};
use pedeval_core::fp::FpConfig;
use pedeval_core::ingest::{InstanceEncoding, LabelLegend, DEFAULT_OCCLUDERS};
use pedeval_core::matcher::MatchOptions;
use pedeval_core::metrics::MetricConfig;
use pedeval_core::pipeline::EvalOptions;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Labels {
    /// Class name of pedestrians.
    #[serde(default = "default_pedestrian")]
    pub pedestrian: String,
    /// Occluder class names.
    #[serde(default = "default_occluders")]
    pub occluders: Vec<String>,
    #[serde(default)]
    pub encoding: InstanceEncoding,
    /// Extra or replacement `name → label ID` entries on top of the
    /// Cityscapes table.
    #[serde(default)]
    pub classes: std::collections::BTreeMap<String, u16>,
}

fn default_pedestrian() -> String {
    "person".into()
}

fn default_occluders() -> Vec<String> {
    DEFAULT_OCCLUDERS.iter().map(|s| s.to_string()).collect()
}

impl Default for Labels {
    fn default() -> Self {
        Labels {
            pedestrian: default_pedestrian(),
            occluders: default_occluders(),
            encoding: InstanceEncoding::default(),
            classes: Default::default(),
        }
    }
}

impl Labels {
    pub fn legend(&self) -> Result<LabelLegend, String> {
        let mut legend = LabelLegend::cityscapes();
        legend.classes.extend(self.classes.clone());
        let id = |name: &str| {
            legend
                .classes
                .get(name)
                .copied()
                .ok_or_else(|| format!("unknown class name `{name}`"))
        };
        let pedestrian_class = id(&self.pedestrian)?;
        let occluder_classes = self.occluders.iter().map(|n| id(n)).collect::<Result<BTreeSet<_>, _>>()?;
        legend.pedestrian_class = pedestrian_class;
        legend.occluder_classes = occluder_classes;
        legend.encoding = self.encoding;
        Ok(legend)
    }
}

/// Categorizer thresholds; `lambda_f` defaults to the braking-model value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub lambda_phi: f64,
    pub lambda_e: f64,
    pub lambda_c: f64,
    pub lambda_a: f64,
    pub lambda_f: Option<f64>,
    pub reasonable_min_height: f64,
    pub reasonable_min_visibility: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        let d = CategorizerConfig::default();
        Thresholds {
            lambda_phi: d.lambda_phi,
            lambda_e: d.lambda_e,
            lambda_c: d.lambda_c,
            lambda_a: d.lambda_a,
            lambda_f: None,
            reasonable_min_height: d.reasonable_min_height,
            reasonable_min_visibility: d.reasonable_min_visibility,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Switches {
    pub ignore_iom: bool,
    pub literal_ambiguity: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

fn default_output() -> PathBuf {
    PathBuf::from("pedeval_out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub ground_truth: PathBuf,
    #[serde(default)]
    pub detections: Option<PathBuf>,
    pub masks: PathBuf,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub labels: Labels,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub aeb: AebParams,
    #[serde(default)]
    pub switches: Switches,
    #[serde(default)]
    pub fp: FpConfig,
    #[serde(default)]
    pub metrics: MetricConfig,
}

/// Everything a run needs, with paths resolved and defaults applied.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub raw: RunConfig,
    pub ground_truth: PathBuf,
    pub detections: Option<PathBuf>,
    pub masks: PathBuf,
    pub output_dir: PathBuf,
    pub categorizer: CategorizerConfig,
    pub eval: EvalOptions,
    pub aeb_distance: f64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Resolved, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let raw: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        raw.resolve(base)
    }

    pub fn resolve(self, base: &Path) -> Result<Resolved, CliError> {
        let cfg_err = CliError::Config;
        let abs = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

        let ground_truth = abs(&self.ground_truth);
        let detections = self.detections.as_deref().map(abs);
        let masks = abs(&self.masks);
        for (what, p) in [("ground_truth", Some(&ground_truth)), ("detections", detections.as_ref()), ("masks", Some(&masks))] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(cfg_err(format!("{what} path {} does not exist", p.display())));
                }
            }
        }

        self.aeb.validate().map_err(cfg_err)?;
        let d = aeb_distance(&self.aeb);
        let t = &self.thresholds;
        let categorizer = CategorizerConfig {
            lambda_phi: t.lambda_phi,
            lambda_e: t.lambda_e,
            lambda_c: t.lambda_c,
            lambda_a: t.lambda_a,
            lambda_f: t.lambda_f.unwrap_or_else(|| f64::from(height_threshold(&self.aeb, d))),
            literal_ambiguity: self.switches.literal_ambiguity,
            reasonable_min_height: t.reasonable_min_height,
            reasonable_min_visibility: t.reasonable_min_visibility,
            legend: self.labels.legend().map_err(cfg_err)?,
        };
        categorizer.validate().map_err(cfg_err)?;
        self.fp.validate().map_err(cfg_err)?;
        self.metrics.validate().map_err(cfg_err)?;
        if self.formats.is_empty() {
            return Err(cfg_err("formats must name at least one of json, csv".into()));
        }

        Ok(Resolved {
            ground_truth,
            detections,
            masks,
            output_dir: abs(&self.output_dir),
            categorizer,
            eval: EvalOptions {
                matching: MatchOptions {
                    ignore_iom: self.switches.ignore_iom,
                },
                fp: self.fp,
            },
            aeb_distance: d,
            raw: self,
        })
    }
}

impl Resolved {
    pub fn wants(&self, f: Format) -> bool {
        self.raw.formats.contains(&f)
    }

    /// Thresholds and label choices as echoed into every output.
    pub fn echo(&self) -> serde_json::Value {
        let c = &self.categorizer;
        let legend = &c.legend;
        let occluders: Vec<serde_json::Value> = legend
            .occluder_classes
            .iter()
            .map(|&id| serde_json::json!({ "id": id, "name": legend.class_name(id) }))
            .collect();
        serde_json::json!({
            "categorizer": {
                "lambda_phi": c.lambda_phi,
                "lambda_e": c.lambda_e,
                "lambda_c": c.lambda_c,
                "lambda_a": c.lambda_a,
                "lambda_f": c.lambda_f,
                "lambda_f_source": if self.raw.thresholds.lambda_f.is_some() { "config" } else { "aeb" },
                "reasonable_min_height": c.reasonable_min_height,
                "reasonable_min_visibility": c.reasonable_min_visibility,
            },
            "aeb": self.raw.aeb,
            "aeb_distance_m": self.aeb_distance,
            "switches": self.raw.switches,
            "fp": self.raw.fp,
            "metrics": self.raw.metrics,
            "labels": {
                "pedestrian": { "id": legend.pedestrian_class, "name": legend.class_name(legend.pedestrian_class) },
                "occluders": occluders,
                "encoding": legend.encoding,
            },
        })
    }
}
