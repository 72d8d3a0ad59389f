use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn positive_usize(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v > 0 => Ok(v),
        _ => Err(format!("`{s}` must be a positive integer")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "hyprl", version, about = "Hyperparameter tuning as deep Q-learning over tabular response surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic meta-dataset directory.
    Synth(SynthArgs),
    /// Compute the 16 metafeatures of a numeric CSV table.
    Featurize(FeaturizeArgs),
    /// Train the Q-network on one split's training datasets.
    Train(TrainArgs),
    /// Benchmark tuners on one split's test datasets.
    Evaluate(EvaluateArgs),
    /// Redraw report plots from their CSV tables.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct SeedArg {
    /// Base random seed.
    #[arg(long, env = "HYPRL_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 25)]
    pub datasets: usize,
    /// `full-nnmeta` or `name:kind:v1,v2;...` with kind onehot or scalar.
    #[arg(long, default_value = "full-nnmeta")]
    pub grid: String,
    /// Cross-validation folds per response.
    #[arg(long, default_value_t = 5, value_parser = positive_usize)]
    pub folds: usize,
    /// Cross-dataset train/test splits.
    #[arg(long, default_value_t = 5, value_parser = positive_usize)]
    pub splits: usize,
    #[arg(long, default_value_t = 8, value_parser = positive_usize)]
    pub latent_dim: usize,
    #[arg(long, default_value_t = 0.01)]
    pub noise_std: f64,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Replace an existing run in --out.
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Numeric CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub metadata: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub split: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Discount factor.
    #[arg(long, default_value_t = 0.9, value_parser = unit_interval)]
    pub gamma: f64,
    /// Environment steps between target-network syncs.
    #[arg(long, default_value_t = 500, value_parser = positive_usize)]
    pub target_update: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive_usize)]
    pub buffer_size: usize,
    #[arg(long, default_value_t = 100)]
    pub episodes_per_dataset: usize,
    /// Actions per episode.
    #[arg(long, default_value_t = 10, value_parser = positive_usize)]
    pub budget: usize,
    /// Environment steps per gradient update.
    #[arg(long, default_value_t = 4, value_parser = positive_usize)]
    pub train_freq: usize,
    #[arg(long, default_value_t = 1e-3, value_parser = positive_f64)]
    pub lr: f64,
    #[arg(long, default_value_t = 32, value_parser = positive_usize)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1.0, value_parser = unit_interval)]
    pub epsilon_start: f64,
    #[arg(long, default_value_t = 0.1, value_parser = unit_interval)]
    pub epsilon_end: f64,
    /// Anneal length in frames [default: 25% of the frames left once the buffer fills].
    #[arg(long)]
    pub anneal_frames: Option<usize>,
    /// Stop at the first episode boundary past this many frames.
    #[arg(long)]
    pub max_frames: Option<usize>,
    /// LSTM hidden units.
    #[arg(long, default_value_t = 16, value_parser = positive_usize)]
    pub hidden: usize,
    /// Width of the dense layer before the Q head.
    #[arg(long, default_value_t = 32, value_parser = positive_usize)]
    pub layer: usize,
    /// Constant added to each learning reward.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub reward_offset: f64,
    /// Write a checkpoint every this many episodes (0 disables).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: usize,
    /// Also write every step to trace.csv.
    #[arg(long)]
    pub trace: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub metadata: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub split: usize,
    /// Comma-separated subset of random, i-gp, spearmint, hyp-rl.
    #[arg(long, value_delimiter = ',', default_value = "random,i-gp,spearmint")]
    pub methods: Vec<String>,
    /// Trained network, required for hyp-rl.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 10, value_parser = positive_usize)]
    pub budget: usize,
    /// Number of seeds, starting at --seed.
    #[arg(long, default_value_t = 5, value_parser = positive_usize)]
    pub seeds: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1, value_parser = positive_usize)]
    pub jobs: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Directory holding adtm.csv and rank.csv.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}
