//! Loading records and truth from disk.
//!
//! A data directory may mix synthetic exports (`<id>.csv` with an optional
//! `<id>.truth.json`) and WFDB records (`<id>.hea`, its signal file and an
//! optional annotation file).

use std::path::{Path, PathBuf};

use keed_core::io::{annotations_to_truth, read_csv_record, read_wfdb_annotations, read_wfdb_record, WfdbHeader};
use keed_core::synth::TruthFile;
use keed_core::TimeSeriesRecord;

use crate::config::DataConfig;
use crate::error::{read_bytes, read_to_string, CliError, CliResult};

pub const TRUTH_SUFFIX: &str = ".truth.json";

#[derive(Debug, Clone)]
pub struct LabeledRecord {
    pub record: TimeSeriesRecord,
    pub truth: Option<TruthFile>,
}

fn stem(path: &Path) -> CliResult<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| CliError::Data(format!("{}: unusable file name", path.display())))
}

fn data_err(path: &Path, e: keed_core::Error) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

/// Reads one record file (`.csv` or `.hea`) and whatever truth sits beside it.
pub fn load_record(path: &Path, cfg: &DataConfig) -> CliResult<LabeledRecord> {
    if !path.exists() {
        return Err(CliError::Data(format!("{}: file not found", path.display())));
    }
    let id = stem(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let truth_path = dir.join(format!("{id}{TRUTH_SUFFIX}"));
            let truth = if truth_path.exists() {
                Some(TruthFile::from_json(&read_to_string(&truth_path)?).map_err(|e| data_err(&truth_path, e))?)
            } else {
                None
            };
            let fs = truth.as_ref().map_or(cfg.fs, |t| t.fs);
            let record = read_csv_record(&read_to_string(path)?, fs, &id).map_err(|e| data_err(path, e))?;
            Ok(LabeledRecord { record, truth })
        }
        Some("hea") => {
            let header_text = read_to_string(path)?;
            let header = WfdbHeader::parse(&header_text).map_err(|e| data_err(path, e))?;
            let spec = header
                .signals
                .get(cfg.lead)
                .ok_or_else(|| CliError::Data(format!("{}: no signal {} in header", path.display(), cfg.lead)))?;
            let signal_path = dir.join(&spec.file_name);
            let bytes = read_bytes(&signal_path)?;
            let record = read_wfdb_record(&header_text, &bytes, cfg.lead).map_err(|e| data_err(&signal_path, e))?;
            let ann_path = dir.join(format!("{id}.{}", cfg.annotation_ext));
            let truth = if ann_path.exists() {
                let anns = read_wfdb_annotations(&read_bytes(&ann_path)?).map_err(|e| data_err(&ann_path, e))?;
                Some(
                    annotations_to_truth(&anns, record.fs, &id, &cfg.annotations)
                        .map_err(|e| data_err(&ann_path, e))?,
                )
            } else {
                None
            };
            Ok(LabeledRecord { record, truth })
        }
        _ => Err(CliError::Data(format!(
            "{}: expected a .csv or .hea record",
            path.display()
        ))),
    }
}

/// Every record in `dir`, sorted by file name.
pub fn load_dir(dir: &Path, cfg: &DataConfig) -> CliResult<Vec<LabeledRecord>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str());
        if matches!(ext, Some("csv") | Some("hea")) {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!("{}: no .csv or .hea records", dir.display())));
    }
    paths.iter().map(|p| load_record(p, cfg)).collect()
}

/// Records that carry truth; errors if none do.
pub fn labeled_only(records: Vec<LabeledRecord>, dir: &Path) -> CliResult<Vec<(TimeSeriesRecord, TruthFile)>> {
    let out: Vec<_> = records
        .into_iter()
        .filter_map(|r| r.truth.map(|t| (r.record, t)))
        .collect();
    if out.is_empty() {
        return Err(CliError::Data(format!("{}: no record has ground truth", dir.display())));
    }
    Ok(out)
}
