use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod analysis;
mod failure;
mod generate;
mod manifest;
mod modelling;

/// Moment-based analysis of wearable heartbeat and accelerometer data.
#[derive(Debug, Parser)]
#[command(name = "loadlens", version, about, propagate_version = true)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sliding-window moments of one channel.
    Moments(MomentsArgs),
    /// Moments-plane trajectory of a heartbeat file as JSON.
    Plane(PlaneArgs),
    /// Per-session feature table from a sessions file.
    Features(FeaturesArgs),
    /// Pairwise Pearson correlations between feature columns.
    Correlate(CorrelateArgs),
    /// k-means clusters of sessions labelled by activity intensity.
    Cluster(ClusterArgs),
    /// Fit an activity model and evaluate it on held-out splits.
    Train(TrainArgs),
    /// Apply a saved model to a feature table.
    Predict(PredictArgs),
    /// Generate synthetic data.
    #[command(subcommand)]
    Synth(SynthCommand),
    /// Compare trained models across presets.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Accel,
    Rr,
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub channel: Channel,
    #[arg(long, default_value_t = loadlens::stats::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = loadlens::stats::DEFAULT_STRIDE)]
    pub stride: usize,
    /// Subtract the mean acceleration magnitude (accel channel only).
    #[arg(long)]
    pub center: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PlaneArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = loadlens::stats::DEFAULT_WINDOW)]
    pub window: usize,
    #[arg(long, default_value_t = loadlens::stats::DEFAULT_STRIDE)]
    pub stride: usize,
    /// Bootstrap resamples of the final window (0 disables the cloud).
    #[arg(long, default_value_t = 0)]
    pub bootstrap: usize,
    #[arg(long, env = "LOADLENS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Vicinity radius around the normal and uniform landmarks.
    #[arg(long, default_value_t = 0.3)]
    pub radius: f64,
    /// Half-width of the gamma-line and Weibull-curve bands.
    #[arg(long, default_value_t = 0.15)]
    pub band: f64,
    /// Synthetic protocol preset whose phase starts are marked.
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub sessions: PathBuf,
    /// Subtract each session's mean acceleration magnitude.
    #[arg(long)]
    pub center: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Comma-separated feature names; all numeric features by default.
    #[arg(long)]
    pub columns: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ClusterArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, default_value = "acc_std,acc_skewness,acc_kurtosis")]
    pub columns: String,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, env = "LOADLENS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelArg {
    Lrm,
    Dnn,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// all, dist_dur_hr, hr, acc_with_metrics or acc.
    #[arg(long, default_value = "all")]
    pub preset: String,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Hidden layer widths, comma-separated.
    #[arg(long, default_value = "16,16")]
    pub hidden: String,
    #[arg(long, default_value_t = 16)]
    pub batch: usize,
    #[arg(long, env = "LOADLENS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Shuffles per feature for permutation importance.
    #[arg(long, default_value_t = 10)]
    pub importance_repeats: usize,
    /// Output directory for model, report, loss curve and manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Output directories of `train` runs.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Labelled sessions with accelerometer and heartbeat files.
    Sessions(SynthSessionsArgs),
    /// Heartbeat series for a load protocol.
    Rr(SynthRrArgs),
    /// Accelerometer trace for an intensity class.
    Accel(SynthAccelArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthSessionsArgs {
    /// Sessions per activity.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, env = "LOADLENS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthRrArgs {
    /// staircase, rest, rest:<seconds> or dumbbell:<kg>.
    #[arg(long, default_value = "staircase")]
    pub protocol: String,
    #[arg(long, env = "LOADLENS_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Also write the phase of every beat (`t_ms,phase`).
    #[arg(long)]
    pub phases: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthAccelArgs {
    /// passive, moderate or active.
    #[arg(long)]
    pub class: String,
    #[arg(long, default_value_t = 60.0)]
    pub duration: f64,
    #[arg(long, env = "LOADLENS_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let result = match &cli.command {
        Command::Moments(a) => analysis::moments(a),
        Command::Plane(a) => analysis::plane(a),
        Command::Features(a) => analysis::features(a),
        Command::Correlate(a) => analysis::correlate(a),
        Command::Cluster(a) => analysis::cluster(a),
        Command::Train(a) => modelling::train(a),
        Command::Predict(a) => modelling::predict(a),
        Command::Report(a) => modelling::report(a),
        Command::Synth(SynthCommand::Sessions(a)) => generate::sessions(a),
        Command::Synth(SynthCommand::Rr(a)) => generate::rr(a),
        Command::Synth(SynthCommand::Accel(a)) => generate::accel(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.kind.exit_code())
        }
    }
}
