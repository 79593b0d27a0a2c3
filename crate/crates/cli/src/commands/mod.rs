pub mod bench;
pub mod delineate;
pub mod eval;
pub mod fetch;
pub mod synth;
pub mod train;

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use keed_core::heatmap::DecodeConfig;
use keed_core::net::{ModelConfig, Parameters};
use keed_core::pipeline::{Delineator, DwtDelineator, KeedDelineator, PeakDelineator};

use crate::config::{Format, RunConfig};
use crate::error::{read_bytes, write, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Keed,
    Dwt,
    Peak,
}

pub const ALL_METHODS: [Method; 3] = [Method::Keed, Method::Dwt, Method::Peak];

/// Builds the delineator for `method`. KEED needs weights unless
/// `allow_random` is set, in which case a seeded untrained network is used.
pub fn build_method(method: Method, cfg: &RunConfig, allow_random: bool) -> CliResult<Box<dyn Delineator>> {
    Ok(match method {
        Method::Dwt => Box::new(DwtDelineator { cfg: cfg.wt.clone() }),
        Method::Peak => Box::new(PeakDelineator { cfg: cfg.wt.clone() }),
        Method::Keed => Box::new(load_keed(cfg, allow_random)?),
    })
}

pub fn load_keed(cfg: &RunConfig, allow_random: bool) -> CliResult<KeedDelineator> {
    let decode: DecodeConfig = cfg.decode.clone();
    match &cfg.output.weights {
        Some(path) => {
            if !path.exists() {
                return Err(CliError::Data(format!("{}: weights file not found", path.display())));
            }
            KeedDelineator::from_weights(&read_bytes(path)?, decode)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        }
        None if allow_random => {
            let model: ModelConfig = cfg.model;
            Ok(KeedDelineator::new(Parameters::init(&model, cfg.seed)?, model, decode)?)
        }
        None => Err(CliError::Usage("the keed method needs --weights".into())),
    }
}

/// Writes `text` to `--out` or stdout.
pub fn emit(cfg: &RunConfig, text: &str) -> CliResult<()> {
    match &cfg.output.out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn require_dir(dir: Option<&PathBuf>, what: &str) -> CliResult<PathBuf> {
    let dir = dir.ok_or_else(|| CliError::Usage(format!("{what} needs --data or data.dir in the config")))?;
    if !Path::new(dir).is_dir() {
        return Err(CliError::Data(format!("{}: data directory not found", dir.display())));
    }
    Ok(dir.clone())
}

pub fn format_name(f: Format) -> &'static str {
    match f {
        Format::Json => "json",
        Format::Table => "table",
        Format::Csv => "csv",
    }
}

/// Runs `f` inside a pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads:?} threads: {e}")))?;
    Ok(pool.install(f))
}
