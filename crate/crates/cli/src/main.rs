//! `cimon` — mine, train, encode, evaluate and plot from the command line.
//!
//! Every subcommand writes into `--out-dir` and finishes with a
//! `manifest.json` listing parameters and SHA-256 digests of its inputs and
//! outputs. Exit status: 0 on success, 2 for invalid input or configuration,
//! 1 for runtime failures.

mod commands;
mod error;
mod manifest;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "cimon", version, about = "Unsupervised hashing with confidence-weighted similarity mining")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate Gaussian-blob features and labels.
    Synth(SynthArgs),
    /// Mine refined, confidence-weighted similarity graphs for both views.
    Mine(MineArgs),
    /// Train a hash head and encode the training items.
    Train(TrainArgs),
    /// Encode features with a trained model.
    Encode(EncodeArgs),
    /// Hamming-ranking retrieval metrics for query vs. database codes.
    Eval(EvalArgs),
    /// Bit flips and MAP change under query-feature noise.
    Robustness(RobustnessArgs),
    /// Train and score every ablation variant on shared mined guidance.
    Ablate(AblateArgs),
    /// Render a CSV report as an SVG chart.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4)]
    pub clusters: usize,
    /// Database items per cluster.
    #[arg(long, default_value_t = 100)]
    pub per_cluster: usize,
    /// Extra held-out query items per cluster; 0 writes no query files.
    #[arg(long, default_value_t = 0)]
    pub queries: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long, default_value_t = 10.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct ConfigArgs {
    /// `key=value` training configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set epochs=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Augmentation noise for single-view feature files.
    #[arg(long, default_value_t = 0.3)]
    pub noise_sigma: f64,
    /// Augmentation dropout for single-view feature files.
    #[arg(long, default_value_t = 0.1)]
    pub dropout_rate: f64,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CodesFrom {
    /// The first augmented view (the default).
    View1,
    /// The un-augmented features; needs a single-view input file.
    Base,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long, value_enum, default_value_t = CodesFrom::View1)]
    pub codes_from: CodesFrom,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Query codes (`.cimb`).
    #[arg(long)]
    pub queries: PathBuf,
    /// Database codes (`.cimb`).
    #[arg(long)]
    pub database: PathBuf,
    #[arg(long)]
    pub query_labels: PathBuf,
    #[arg(long)]
    pub db_labels: PathBuf,
    /// MAP cutoff; defaults to the database size.
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 5, 10, 20, 50, 100])]
    pub topn: Vec<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RobustnessArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Query features (`.cimf`, first view is used).
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub query_labels: PathBuf,
    /// Database codes (`.cimb`).
    #[arg(long)]
    pub database: PathBuf,
    #[arg(long)]
    pub db_labels: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub dropout_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Database features; augmented for training when single-view.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub queries: PathBuf,
    #[arg(long)]
    pub query_labels: PathBuf,
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long, value_delimiter = ',', default_values_t = vec!["M1".to_string(), "M2".into(), "M3".into(), "M4".into(), "M5".into()])]
    pub variants: Vec<String>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![16])]
    pub code_lens: Vec<usize>,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub csv: PathBuf,
    /// Column to plot; defaults to the last one. The first column is the x axis.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Mine(a) => commands::mine(a),
        Command::Train(a) => commands::train(a),
        Command::Encode(a) => commands::encode(a),
        Command::Eval(a) => commands::eval(a),
        Command::Robustness(a) => commands::robustness(a),
        Command::Ablate(a) => commands::ablate(a),
        Command::Plot(a) => commands::plot(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
