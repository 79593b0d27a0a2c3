//! Command-line front end: argument parsing, configuration and the
//! subcommands wiring the delineation pipeline.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use keed_core::Wave;

use commands::Method;
use config::{Format, Overrides, RunConfig};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "keed", version, about = "ECG P/T wave delineation with keypoint heatmaps")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Presence threshold on heatmap maxima, in [0, 1].
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// Weight file to load.
    #[arg(long, global = true)]
    pub weights: Option<PathBuf>,
    /// Seed for synthesis, initialisation and shuffling
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for delineation (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WaveArg {
    P,
    T,
}

impl From<WaveArg> for Wave {
    fn from(w: WaveArg) -> Self {
        match w {
            WaveArg::P => Wave::P,
            WaveArg::T => Wave::T,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic records with truth sidecars into --out.
    Synth {
        /// Number of records
        #[arg(long)]
        records: Option<usize>,
        /// Beats per record
        #[arg(long)]
        beats: Option<usize>,
    },
    /// Train the network on labelled records; writes weights to --out.
    Train {
        /// Directory of records with truth
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Loss curve path (default: next to the weights).
        /// Per-epoch loss curve (default: beside the weights)
        #[arg(long)]
        loss_csv: Option<PathBuf>,
    },
    /// Delineate one record (.csv or WFDB .hea).
    Delineate {
        /// Record file: .csv or WFDB .hea
        record: PathBuf,
        #[arg(long, value_enum, default_value = "keed")]
        method: Method,
        /// Sampling rate for CSV records without a truth sidecar.
        /// Sampling rate for CSV records without a truth sidecar
        #[arg(long)]
        fs: Option<f64>,
    },
    /// Score methods against labelled records.
    Eval {
        /// Directory of records with truth
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',')]
        methods: Vec<Method>,
        #[arg(long, value_enum, default_value = "p")]
        wave: WaveArg,
        /// Use annotated R peaks instead of detecting them.
        #[arg(long)]
        truth_rpeaks: bool,
        /// Write the λ trade-off curve here.
        #[arg(long)]
        sweep_csv: Option<PathBuf>,
    },
    /// Time every method from R peaks to keypoints.
    Bench {
        /// Directory of records with truth
        #[arg(long)]
        data: Option<PathBuf>,
        /// Synthetic intervals to time when --data is absent
        #[arg(long)]
        intervals: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
    },
    /// Download a catalogued dataset.
    Fetch {
        /// Catalog name, e.g. qtdb
        dataset: String,
        /// Destination directory (default: <fetch.dest>/<dataset>)
        #[arg(long)]
        dest: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config,
}

fn execute(cli: Cli) -> CliResult<()> {
    let g = cli.global;
    if let Some(l) = g.lambda {
        if !(0.0..=1.0).contains(&l) {
            return Err(CliError::Usage(format!("--lambda {l} outside [0, 1]")));
        }
    }
    let flags = Overrides {
        lambda: g.lambda,
        weights: g.weights,
        seed: g.seed,
        out: g.out,
        format: g.format,
        threads: g.threads,
    };
    let cfg = RunConfig::resolve(g.config.as_deref(), &flags)?;
    match cli.command {
        Command::Synth { records, beats } => commands::synth::run(&cfg, records, beats),
        Command::Train { data, epochs, loss_csv } => commands::train::run(&cfg, data, epochs, loss_csv),
        Command::Delineate { record, method, fs } => commands::delineate::run(&cfg, &record, method, fs),
        Command::Eval {
            data,
            methods,
            wave,
            truth_rpeaks,
            sweep_csv,
        } => commands::eval::run(
            &cfg,
            commands::eval::EvalArgs {
                data,
                methods,
                wave: wave.into(),
                truth_rpeaks,
                sweep_csv,
            },
        ),
        Command::Bench {
            data,
            intervals,
            repeats,
        } => commands::bench::run(&cfg, data, intervals, repeats),
        Command::Fetch { dataset, dest } => commands::fetch::run(&cfg, &dataset, dest),
        Command::Config => commands::emit(&cfg, &cfg.to_toml()?),
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
