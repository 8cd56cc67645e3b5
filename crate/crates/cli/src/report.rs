//! Output files.

use std::path::Path;

use pedeval_core::categorize::{FrameCategories, GtCategory};
use pedeval_core::fp::FpPartition;
use pedeval_core::ingest::Frame;
use pedeval_core::metrics::{MetricReport, Rate, Subset};
use serde_json::{json, Value};

use crate::error::CliError;

/// Dataset-wide category cardinalities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Cardinalities {
    pub by_category: [usize; 5],
    pub ignored: usize,
    pub reasonable: usize,
    pub residual_candidates: usize,
}

impl Cardinalities {
    pub fn count(cats: &[FrameCategories]) -> Self {
        let mut c = Cardinalities::default();
        for f in cats {
            for (k, cat) in GtCategory::ALL.into_iter().enumerate() {
                c.by_category[k] += f.partition.get(cat).len();
            }
            c.ignored += f.partition.ignored.len();
            c.reasonable += f.reasonable().len();
            c.residual_candidates += f.partition.residual_candidates;
        }
        c
    }

    pub fn non_ignored(&self) -> usize {
        self.by_category.iter().sum()
    }

    pub fn get(&self, cat: GtCategory) -> usize {
        let k = GtCategory::ALL.iter().position(|&c| c == cat).expect("listed category");
        self.by_category[k]
    }

    pub fn to_json(&self) -> Value {
        let mut m = serde_json::Map::new();
        for cat in GtCategory::ALL {
            m.insert(cat.code().into(), json!(self.get(cat)));
        }
        m.insert("ignored".into(), json!(self.ignored));
        m.insert("non_ignored".into(), json!(self.non_ignored()));
        m.insert("reasonable".into(), json!(self.reasonable));
        m.insert("residual_candidates".into(), json!(self.residual_candidates));
        Value::Object(m)
    }

    pub fn table(&self) -> String {
        let mut out = String::from("category  count\n");
        for cat in GtCategory::ALL {
            out.push_str(&format!("{:<9} {}\n", cat.code(), self.get(cat)));
        }
        out.push_str(&format!("{:<9} {}\n", "ignored", self.ignored));
        out.push_str(&format!("{:<9} {}\n", "total", self.non_ignored() + self.ignored));
        out
    }
}

pub fn gt_categories_json(frames: &[Frame], cats: &[FrameCategories], echo: &Value) -> Value {
    let per_frame: Vec<Value> = frames
        .iter()
        .zip(cats)
        .map(|(f, c)| {
            let boxes: Vec<Value> = c
                .boxes
                .iter()
                .enumerate()
                .map(|(k, a)| match a {
                    None => json!({ "index": k, "category": "ignored" }),
                    Some(a) => json!({
                        "index": k,
                        "category": a.category,
                        "instance_id": a.instance_id,
                        "phi": a.phi,
                        "phi_e": a.phi_e,
                        "phi_c": a.phi_c,
                        "candidate": a.candidate,
                        "residual": a.residual,
                        "height": a.height,
                        "reasonable": a.reasonable,
                        "counts": a.counts,
                    }),
                })
                .collect();
            json!({ "frame_id": f.frame_id, "partition": c.partition, "boxes": boxes })
        })
        .collect();
    json!({
        "config": echo,
        "summary": Cardinalities::count(cats).to_json(),
        "frames": per_frame,
    })
}

pub fn fp_categories_json(frames: &[Frame], at: &[(&str, f64, Vec<FpPartition>)], echo: &Value) -> Value {
    let sections: Vec<Value> = at
        .iter()
        .map(|(label, c, parts)| {
            let totals = parts.iter().fold([0usize; 3], |mut t, p| {
                t[0] += p.scale.len();
                t[1] += p.localization.len();
                t[2] += p.ghost.len();
                t
            });
            let per_frame: Vec<Value> = frames
                .iter()
                .zip(parts)
                .map(|(f, p)| json!({ "frame_id": f.frame_id, "S": p.scale, "L": p.localization, "G": p.ghost }))
                .collect();
            json!({
                "label": label,
                "c": c,
                "totals": { "S": totals[0], "L": totals[1], "G": totals[2] },
                "frames": per_frame,
            })
        })
        .collect();
    json!({ "config": echo, "thresholds": sections })
}

pub fn report_json(report: &MetricReport, cards: &Cardinalities, frames: &[Frame], echo: &Value) -> Value {
    let detections: usize = frames.iter().map(|f| f.detections.len()).sum();
    let mut v = serde_json::to_value(report).expect("report serializes");
    let obj = v.as_object_mut().expect("report is an object");
    obj.insert("config".into(), echo.clone());
    obj.insert(
        "dataset".into(),
        json!({
            "frames": frames.len(),
            "detections": detections,
            "gt": cards.to_json(),
        }),
    );
    v
}

/// `c`, one MR column per subset, then the rate column. Undefined miss rates
/// are written as `n/a`.
pub fn curve_csv(report: &MetricReport, rate: Rate) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["c".to_string()];
    header.extend(Subset::ALL.iter().map(|s| format!("mr_{}", s.name())));
    header.push(match rate {
        Rate::Fppi => "fppi".into(),
        Rate::Gdpi => "gdpi".into(),
    });
    w.write_record(&header)?;
    for p in &report.curve {
        let mut row = vec![p.c.to_string()];
        row.extend(
            Subset::ALL
                .iter()
                .map(|s| p.mr.get(s).map_or_else(|| "n/a".to_string(), |m| m.to_string())),
        );
        row.push(p.rate(rate).to_string());
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().expect("in-memory writer")).expect("ascii csv"))
}

pub fn write_json(path: &Path, v: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("value serializes");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}
