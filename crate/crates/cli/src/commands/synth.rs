use std::path::PathBuf;

use keed_core::synth::{gen_corpus, CorpusParams};

use crate::config::RunConfig;
use crate::data::TRUTH_SUFFIX;
use crate::error::{write, CliError, CliResult};

/// Writes `<id>.csv` and `<id>.truth.json` for every generated record.
pub fn run(cfg: &RunConfig, records: Option<usize>, beats: Option<usize>) -> CliResult<()> {
    let dir: PathBuf = cfg
        .output
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("synth needs --out <directory>".into()))?;
    let params = CorpusParams {
        n_records: records.unwrap_or(cfg.synth.n_records),
        beats_per_record: beats.unwrap_or(cfg.synth.beats_per_record),
        seed: cfg.seed,
        ..cfg.synth.clone()
    };
    if params.n_records == 0 {
        return Err(CliError::Usage("--records must be at least 1".into()));
    }
    let corpus = gen_corpus(&params)?;
    let mut intervals = 0;
    for rec in &corpus {
        let id = &rec.record.record_id;
        write(&dir.join(format!("{id}.csv")), rec.to_csv())?;
        write(&dir.join(format!("{id}{TRUTH_SUFFIX}")), rec.truth_file().to_json()?)?;
        intervals += rec.beats.len() - 1;
    }
    let summary = serde_json::json!({
        "dir": dir,
        "records": corpus.len(),
        "intervals": intervals,
        "seed": cfg.seed,
    });
    println!("{summary}");
    Ok(())
}
