use std::fmt::Write as _;
use std::path::PathBuf;

use keed_core::heatmap::make_target;
use keed_core::net::{load_weights, save_weights, Trainer, TrainingPair};
use keed_core::synth::labelled_intervals;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{require_dir, with_threads};
use crate::config::RunConfig;
use crate::data::{labeled_only, load_dir};
use crate::error::{read_bytes, write, CliError, CliResult};

fn pairs_of(
    records: &[(keed_core::TimeSeriesRecord, keed_core::synth::TruthFile)],
    cfg: &RunConfig,
) -> CliResult<Vec<TrainingPair>> {
    let mut out = Vec::new();
    for (rec, truth) in records {
        for (iv, fids) in labelled_intervals(rec, &truth.beats, cfg.model.length)? {
            out.push(TrainingPair {
                input: iv.values,
                target: make_target(&fids, cfg.model.length, &cfg.decode)?,
            });
        }
    }
    Ok(out)
}

/// Trains on every labelled record in the data directory, holding out whole
/// records for validation, and writes weights plus a loss curve.
pub fn run(cfg: &RunConfig, data: Option<PathBuf>, epochs: Option<usize>, loss_csv: Option<PathBuf>) -> CliResult<()> {
    let dir = require_dir(data.as_ref().or(cfg.data.dir.as_ref()), "train")?;
    let out = cfg
        .output
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("train needs --out <weights file>".into()))?;
    let loss_path = loss_csv.unwrap_or_else(|| out.with_extension("loss.csv"));
    let epochs = epochs.unwrap_or(cfg.train.epochs);

    let mut records = labeled_only(load_dir(&dir, &cfg.data)?, &dir)?;
    records.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let n_val = if records.len() >= 2 {
        ((records.len() as f64 * cfg.train.val_fraction).round() as usize).min(records.len() - 1)
    } else {
        0
    };
    let val_records = records.split_off(records.len() - n_val);
    let train = pairs_of(&records, cfg)?;
    let val = pairs_of(&val_records, cfg)?;
    if train.is_empty() {
        return Err(CliError::Data(format!("{}: no training intervals", dir.display())));
    }

    let (model_cfg, init) = match &cfg.output.weights {
        Some(path) => {
            let (p, c) =
                load_weights(&read_bytes(path)?).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
            (c, Some(p))
        }
        None => (cfg.model, None),
    };
    let adam = cfg.train.adam();
    let mut trainer = match init {
        Some(p) => Trainer::from_params(model_cfg, p, adam, cfg.train.batch_size, cfg.seed)?,
        None => Trainer::new(model_cfg, adam, cfg.train.batch_size, cfg.seed)?,
    };

    // training stays on one thread so runs reproduce regardless of machine
    let curve = with_threads(Some(1), || -> CliResult<String> {
        let mut csv = String::from("epoch,train_loss,val_loss\n");
        let val_loss = |t: &Trainer| -> CliResult<String> {
            Ok(if val.is_empty() {
                String::new()
            } else {
                t.evaluate(&val)?.to_string()
            })
        };
        let initial = trainer.evaluate(&train)?;
        let _ = writeln!(csv, "0,{initial},{}", val_loss(&trainer)?);
        for e in 1..=epochs {
            let loss = trainer.epoch(&train)?;
            let v = val_loss(&trainer)?;
            eprintln!("epoch {e}/{epochs}: train {loss:.6} val {v}");
            let _ = writeln!(csv, "{e},{loss},{v}");
        }
        Ok(csv)
    })??;
    write(&out, save_weights(&trainer.params, &model_cfg)?)?;
    write(&loss_path, curve)?;
    eprintln!(
        "{} training / {} validation intervals; weights in {}, loss curve in {}",
        train.len(),
        val.len(),
        out.display(),
        loss_path.display()
    );
    Ok(())
}
