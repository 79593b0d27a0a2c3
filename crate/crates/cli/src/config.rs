//! Run configuration: built-in defaults, overlaid by a TOML file, overlaid
//! by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use keed_core::baseline::WtConfig;
use keed_core::heatmap::DecodeConfig;
use keed_core::io::AnnotationMap;
use keed_core::net::{AdamConfig, ModelConfig};
use keed_core::qrs::QrsConfig;
use keed_core::synth::CorpusParams;
use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Table,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Share of records held out for the validation loss.
    pub val_fraction: f64,
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 64,
            lr: AdamConfig::default().lr,
            weight_decay: AdamConfig::default().weight_decay,
            val_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub dir: Option<PathBuf>,
    /// Sampling rate assumed for CSV records without a truth sidecar.
    pub fs: f64,
    /// Signal index read from WFDB records.
    pub lead: usize,
    /// Extension of the WFDB annotation file holding wave truth.
    pub annotation_ext: String,
    pub annotations: AnnotationMap,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            dir: None,
            fs: 250.0,
            lead: 0,
            annotation_ext: "q1c".into(),
            annotations: AnnotationMap::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Synthetic intervals timed when no data directory is given.
    pub intervals: usize,
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            intervals: 1000,
            repeats: 3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogEntry {
    /// Directory URL ending in `/`; file names are appended to it.
    pub base_url: String,
    /// Explicit record names. When empty the `RECORDS` index is fetched.
    pub records: Vec<String>,
    pub annotation_exts: Vec<String>,
    /// Expected SHA-256 hex digests keyed by file name.
    pub checksums: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FetchConfig {
    pub dest: PathBuf,
    pub timeout_secs: u64,
    pub catalog: BTreeMap<String, CatalogEntry>,
}

impl Default for FetchConfig {
    fn default() -> Self {
        let entry = |url: &str, exts: &[&str]| CatalogEntry {
            base_url: url.to_string(),
            annotation_exts: exts.iter().map(|s| s.to_string()).collect(),
            ..CatalogEntry::default()
        };
        let mut catalog = BTreeMap::new();
        catalog.insert(
            "qtdb".into(),
            entry("https://physionet.org/files/qtdb/1.0.0/", &["q1c", "pu"]),
        );
        catalog.insert(
            "pwave".into(),
            entry("https://physionet.org/files/pwave/1.0.0/", &["pwave"]),
        );
        catalog.insert(
            "butpdb".into(),
            entry("https://physionet.org/files/butpdb/1.0.0/", &["pwave"]),
        );
        Self {
            dest: PathBuf::from("data"),
            timeout_secs: 60,
            catalog,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub out: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub format: Format,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            out: None,
            weights: None,
            format: Format::Json,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads for delineation; all cores when unset.
    pub threads: Option<usize>,
    pub model: ModelConfig,
    pub decode: DecodeConfig,
    pub qrs: QrsConfig,
    pub wt: WtConfig,
    pub train: TrainConfig,
    pub synth: CorpusParams,
    pub bench: BenchConfig,
    pub data: DataConfig,
    pub output: OutputConfig,
    pub fetch: FetchConfig,
}

/// Values given on the command line; `None` leaves the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub lambda: Option<f64>,
    pub weights: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string_pretty(self).map_err(|e| CliError::Data(format!("cannot render config: {e}")))
    }

    /// Defaults, then `file`, then `flags`.
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> CliResult<Self> {
        let mut cfg = match file {
            Some(path) => {
                if !path.exists() {
                    return Err(CliError::Data(format!("{}: config file not found", path.display())));
                }
                Self::from_toml(&read_to_string(path)?)?
            }
            None => Self::default(),
        };
        if let Some(l) = flags.lambda {
            cfg.decode.lambda = l;
        }
        if let Some(s) = flags.seed {
            cfg.seed = s;
        }
        if let Some(t) = flags.threads {
            cfg.threads = Some(t);
        }
        if let Some(w) = &flags.weights {
            cfg.output.weights = Some(w.clone());
        }
        if let Some(o) = &flags.out {
            cfg.output.out = Some(o.clone());
        }
        if let Some(f) = flags.format {
            cfg.output.format = f;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let usage = |e: keed_core::Error| CliError::Usage(e.to_string());
        self.decode.validate().map_err(usage)?;
        self.model.validate().map_err(usage)?;
        self.wt.validate().map_err(usage)?;
        if self.threads == Some(0) {
            return Err(CliError::Usage("threads must be at least 1".into()));
        }
        if self.train.batch_size == 0 || !(0.0..1.0).contains(&self.train.val_fraction) {
            return Err(CliError::Usage(
                "train.batch_size must be positive and val_fraction in [0, 1)".into(),
            ));
        }
        if self.bench.repeats == 0 {
            return Err(CliError::Usage("bench.repeats must be at least 1".into()));
        }
        if let Some(dir) = &self.data.dir {
            if !dir.is_dir() {
                return Err(CliError::Data(format!("{}: data directory not found", dir.display())));
            }
        }
        Ok(())
    }
}
