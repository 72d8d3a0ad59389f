use std::fmt;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use super::args::{Cli, Command, EvaluateArgs, FeaturizeArgs, PlotArgs, SynthArgs, TrainArgs};
use crate::agent::{train_with_callback, write_training_log, TrainConfig, HYP_RL};
use crate::baselines::KernelKind;
use crate::environment::write_trace;
use crate::error::Error;
use crate::evaluation::{emit_report, plot_from_csv, run_benchmark, BenchmarkConfig, HypRl, RandomSearch, Smbo, Strategy};
use crate::metadata::{
    compute_metafeatures, generate_synthetic_with, load_metadataset, save_metadataset, HyperparameterGrid, Manifest,
    MetaDataset, Schema, SyntheticConfig, METAFEATURE_NAMES,
};
use crate::neuralnet::{read_checkpoint, write_checkpoint};
use crate::QNetwork;

/// File holding the configuration of the run that produced a directory.
pub const RUN_MANIFEST: &str = "manifest.txt";

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations (exit code 2).
    Usage(String),
    /// Failure while running (exit code 1).
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Runtime(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Synth(a) => synth(&a),
        Command::Featurize(a) => featurize(&a),
        Command::Train(a) => train(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Plot(a) => plot(&a),
    }
}

/// Refuses to clobber a previous run unless asked to.
fn claim_output(dir: &Path, overwrite: bool) -> CliResult {
    if dir.join(RUN_MANIFEST).exists() && !overwrite {
        return Err(usage(format!("{} already holds a run; pass --overwrite to replace it", dir.display())));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(())
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set so that reruns
/// can be byte-identical.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

fn stamp(m: &mut Manifest, command: &str, seed: u64) {
    m.set("command", command);
    m.set("version", concat!("v", env!("CARGO_PKG_VERSION")));
    m.set("timestamp", timestamp());
    m.set("run_seed", seed);
}

fn load(dir: &Path) -> CliResult<MetaDataset> {
    if !dir.is_dir() {
        return Err(usage(format!("metadata directory {} does not exist", dir.display())));
    }
    Ok(load_metadataset(dir)?)
}

fn check_split(md: &MetaDataset, split: usize) -> CliResult {
    if split >= md.splits.len() {
        return Err(usage(format!("split {split} does not exist ({} splits)", md.splits.len())));
    }
    Ok(())
}

fn synth(a: &SynthArgs) -> CliResult {
    if a.datasets < 2 {
        return Err(usage("need ≥ 2 datasets for splits"));
    }
    if !(a.noise_std >= 0.0 && a.noise_std.is_finite()) {
        return Err(usage("--noise-std must be ≥ 0"));
    }
    let schema = Schema::parse(&a.grid).map_err(|e| usage(format!("--grid: {e}")))?;
    let grid = HyperparameterGrid::from_schema(schema).map_err(|e| usage(format!("--grid: {e}")))?;
    claim_output(&a.out, a.overwrite)?;
    let cfg = SyntheticConfig { latent_dim: a.latent_dim, noise_std: a.noise_std, n_splits: a.splits };
    let md = generate_synthetic_with(a.datasets, &grid, a.folds, a.seed.seed, &cfg)?;
    save_metadataset(&md, &a.out)?;
    // the data manifest doubles as the run manifest
    let path = a.out.join(RUN_MANIFEST);
    let mut m = Manifest::read(&path)?;
    stamp(&mut m, "synth", a.seed.seed);
    m.set("grid_arg", &a.grid);
    m.set("latent_dim", a.latent_dim);
    m.set("noise_std", a.noise_std);
    m.set("n_splits", md.splits.len());
    m.write(&path)?;
    log::info!("wrote {} datasets × {} configs to {}", md.n_datasets(), md.n_configs(), a.out.display());
    Ok(())
}

fn featurize(a: &FeaturizeArgs) -> CliResult {
    let file = a.data.display().to_string();
    let f = fs::File::open(&a.data).map_err(|e| Error::io(&a.data, e))?;
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(f);
    let header = r.headers().map_err(Error::from)?.clone();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(Error::from)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, raw)| {
                raw.trim().parse::<f64>().map_err(|_| {
                    Error::parse(&file, line, format!("column {} ({:?}) holds non-numeric {raw:?}", j + 1, header.get(j).unwrap_or("")))
                })
            })
            .collect::<Result<Vec<f64>, Error>>()?;
        rows.push(row);
    }
    let mf = compute_metafeatures(&rows)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let out = fs::File::create(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METAFEATURE_NAMES).map_err(Error::from)?;
    w.write_record(mf.0.iter().map(|v| v.to_string())).map_err(Error::from)?;
    w.flush().map_err(|e| Error::io(&a.out, e))?;
    Ok(())
}

fn train_config(a: &TrainArgs) -> TrainConfig {
    TrainConfig {
        gamma: a.gamma,
        target_update: a.target_update,
        buffer_size: a.buffer_size,
        episodes_per_dataset: a.episodes_per_dataset,
        budget: a.budget,
        train_freq: a.train_freq,
        lr: a.lr,
        batch_size: a.batch_size,
        epsilon_start: a.epsilon_start,
        epsilon_end: a.epsilon_end,
        anneal_frames: a.anneal_frames,
        max_frames: a.max_frames,
        seed: a.seed.seed,
        n_hidden: a.hidden,
        n_layer: a.layer,
        reward_offset: a.reward_offset,
        record_traces: a.trace,
        ..TrainConfig::default()
    }
}

fn record_config(m: &mut Manifest, c: &TrainConfig) {
    m.set("gamma", c.gamma);
    m.set("target_update", c.target_update);
    m.set("buffer_size", c.buffer_size);
    m.set("episodes_per_dataset", c.episodes_per_dataset);
    m.set("budget", c.budget);
    m.set("train_freq", c.train_freq);
    m.set("lr", c.lr);
    m.set("batch_size", c.batch_size);
    m.set("epsilon_start", c.epsilon_start);
    m.set("epsilon_end", c.epsilon_end);
    m.set("anneal_frames", c.anneal_frames.map_or("auto".to_string(), |v| v.to_string()));
    m.set("max_frames", c.max_frames.map_or("none".to_string(), |v| v.to_string()));
    m.set("seed", c.seed);
    m.set("n_hidden", c.n_hidden);
    m.set("n_layer", c.n_layer);
    m.set("reward_offset", c.reward_offset);
    m.set("adam_beta1", c.adam.beta1);
    m.set("adam_beta2", c.adam.beta2);
    m.set("adam_eps", c.adam.eps);
}

fn train(a: &TrainArgs) -> CliResult {
    let cfg = train_config(a);
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let md = load(&a.metadata)?;
    check_split(&md, a.split)?;
    claim_output(&a.out, a.overwrite)?;
    let ckpt_dir = a.out.join("checkpoints");
    if a.checkpoint_every > 0 {
        fs::create_dir_all(&ckpt_dir).map_err(|e| Error::io(&ckpt_dir, e))?;
    }
    let train_ids = md.splits[a.split].train.clone();
    let out = train_with_callback(&md, &train_ids, &cfg, |episode, params| {
        if a.checkpoint_every > 0 && (episode + 1) % a.checkpoint_every == 0 {
            write_checkpoint(params, &ckpt_dir.join(format!("episode_{:06}.txt", episode + 1)))?;
        }
        Ok(())
    })?;
    write_checkpoint(&out.params, &a.out.join("checkpoint.txt"))?;
    let log_path = a.out.join("training_log.csv");
    write_training_log(fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?, &out.log)?;
    if a.trace {
        let p = a.out.join("trace.csv");
        write_trace(fs::File::create(&p).map_err(|e| Error::io(&p, e))?, &out.log.traces)?;
    }
    let mut m = Manifest::new();
    stamp(&mut m, "train", a.seed.seed);
    m.set("metadata", a.metadata.display());
    m.set("split", a.split);
    record_config(&mut m, &cfg);
    m.set("checkpoint_every", a.checkpoint_every);
    m.set("episodes_run", out.log.episodes.len());
    m.set("frames", out.log.frames());
    m.set("gradient_updates", out.log.gradient_updates);
    m.set("target_syncs", out.log.target_syncs());
    m.set("buffer_fill_frame", out.log.fill_frame.map_or("never".to_string(), |f| f.to_string()));
    m.write(&a.out.join(RUN_MANIFEST))?;
    if out.log.fill_frame.is_none() {
        log::warn!("replay buffer never filled; no gradient updates were made");
    }
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> CliResult {
    let md = load(&a.metadata)?;
    check_split(&md, a.split)?;
    if a.budget > md.n_configs() {
        return Err(usage(format!("budget {} exceeds the grid size {}", a.budget, md.n_configs())));
    }
    let mut methods: Vec<Box<dyn Strategy>> = Vec::new();
    for name in &a.methods {
        let m: Box<dyn Strategy> = match name.as_str() {
            "random" => Box::new(RandomSearch),
            "i-gp" => Box::new(Smbo::new(KernelKind::SeArd)),
            "spearmint" => Box::new(Smbo::new(KernelKind::Matern52)),
            HYP_RL => {
                let path = a.checkpoint.as_ref().ok_or_else(|| usage("hyp-rl needs --checkpoint"))?;
                if !path.is_file() {
                    return Err(usage(format!("missing checkpoint ({})", path.display())));
                }
                let params: QNetwork = read_checkpoint(path)?;
                let shape = params.shape();
                if shape.n_actions != md.n_configs() || shape.n_input != md.grid.encoded_dim() + 1 {
                    return Err(Error::Shape(format!(
                        "checkpoint expects {} actions and {} inputs, metadata has {} configs and {}",
                        shape.n_actions,
                        shape.n_input,
                        md.n_configs(),
                        md.grid.encoded_dim() + 1
                    ))
                    .into());
                }
                Box::new(HypRl::for_split(a.split, params))
            }
            other => return Err(usage(format!("unknown method `{other}` (expected random, i-gp, spearmint, hyp-rl)"))),
        };
        if methods.iter().any(|x| x.name() == m.name()) {
            return Err(usage(format!("method `{name}` listed twice")));
        }
        methods.push(m);
    }
    if methods.is_empty() {
        return Err(usage("--methods is empty"));
    }
    claim_output(&a.out, a.overwrite)?;
    let cfg = BenchmarkConfig {
        splits: vec![a.split],
        budget: a.budget,
        seeds: (0..a.seeds as u64).map(|i| a.seed.seed + i).collect(),
        jobs: a.jobs,
    };
    let refs: Vec<&dyn Strategy> = methods.iter().map(|m| m.as_ref()).collect();
    let report = run_benchmark(&md, &refs, &cfg)?;
    emit_report(&report, &a.out)?;
    let mut m = Manifest::new();
    stamp(&mut m, "evaluate", a.seed.seed);
    m.set("metadata", a.metadata.display());
    m.set("split", a.split);
    m.set("methods", a.methods.join(","));
    m.set("checkpoint", a.checkpoint.as_ref().map_or("none".to_string(), |p| p.display().to_string()));
    m.set("budget", a.budget);
    m.set("seeds", cfg.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
    m.set("jobs", a.jobs);
    m.set("smbo_n_init", 3);
    m.set("gp_fit_iterations", 50);
    m.set("gp_noise_floor", 1e-6);
    m.set("degenerate_problems", report.n_degenerate);
    m.set("failed_problems", report.failures.len());
    m.write(&a.out.join(RUN_MANIFEST))?;
    if let Some(first) = report.failures.first() {
        return Err(Error::InvalidArgument(format!(
            "{} problem(s) failed, partial report written; first: {first}",
            report.failures.len()
        ))
        .into());
    }
    Ok(())
}

fn plot(a: &PlotArgs) -> CliResult {
    if !a.report.is_dir() {
        return Err(usage(format!("report directory {} does not exist", a.report.display())));
    }
    plot_from_csv(&a.report, &a.out)?;
    Ok(())
}
