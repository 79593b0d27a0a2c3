use std::path::Path;

use keed_core::pipeline::delineate_record;
use keed_core::DelineationResult;

use super::{build_method, emit, with_threads, Method};
use crate::config::{DataConfig, Format, RunConfig};
use crate::data::load_record;
use crate::error::CliResult;
use crate::table::aligned;

pub fn to_rows(result: &DelineationResult) -> Vec<Vec<String>> {
    let mut rows = vec![[
        "interval",
        "r_start",
        "r_end",
        "kind",
        "present",
        "location",
        "confidence",
    ]
    .map(String::from)
    .to_vec()];
    for (i, iv) in result.intervals.iter().enumerate() {
        for (kind, p) in &iv.keypoints {
            rows.push(vec![
                i.to_string(),
                iv.r_start.to_string(),
                iv.r_end.to_string(),
                kind.to_string(),
                p.present.to_string(),
                p.location.to_string(),
                format!("{:.6}", p.confidence),
            ]);
        }
    }
    rows
}

/// Detects R peaks in one record and writes its delineation.
pub fn run(cfg: &RunConfig, record: &Path, method: Method, fs: Option<f64>) -> CliResult<()> {
    let data = DataConfig {
        fs: fs.unwrap_or(cfg.data.fs),
        ..cfg.data.clone()
    };
    let rec = load_record(record, &data)?.record;
    let delineator = build_method(method, cfg, false)?;
    let result = with_threads(cfg.threads, || delineate_record(&rec, &cfg.qrs, delineator.as_ref()))??;
    let text = match cfg.output.format {
        Format::Json => result.to_json()? + "\n",
        Format::Csv => to_rows(&result).iter().map(|r| r.join(",") + "\n").collect(),
        Format::Table => aligned(&to_rows(&result)),
    };
    emit(cfg, &text)
}
