use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::policy::{compute_targets, epsilon_greedy, sync_target};
use super::replay::{Experience, ReplayBuffer};
use crate::environment::{DatasetSampler, Environment, TraceRow};
use crate::error::{Error, Result};
use crate::metadata::{MetaDataset, Scaler};
use crate::neuralnet::{AdamConfig, AdamState, NetworkShape};
use crate::QNetwork;

const STREAM_INIT: u64 = 0;
const STREAM_DATASET: u64 = 1;
const STREAM_EXPLORE: u64 = 2;
const STREAM_REPLAY: u64 = 3;

/// Hyperparameters of the DQN learner.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    /// Target sync period N_u, in environment steps.
    pub target_update: usize,
    pub buffer_size: usize,
    pub episodes_per_dataset: usize,
    /// Actions per episode T.
    pub budget: usize,
    /// Environment steps per gradient update N_train.
    pub train_freq: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Length of the linear anneal. `None` means 25% of the frames left
    /// after the buffer first fills.
    pub anneal_frames: Option<usize>,
    /// Hard cap on environment steps; training stops at the first episode
    /// boundary past it.
    pub max_frames: Option<usize>,
    pub seed: u64,
    pub n_hidden: usize,
    pub n_layer: usize,
    /// Constant added to every learning reward (not to the rewards held in
    /// the state history). Zero reproduces the plain negated loss.
    pub reward_offset: f64,
    pub adam: AdamConfig,
    pub record_traces: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            target_update: 500,
            buffer_size: 10_000,
            episodes_per_dataset: 100,
            budget: 10,
            train_freq: 4,
            lr: 1e-3,
            batch_size: 32,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            anneal_frames: None,
            max_frames: None,
            seed: 0,
            n_hidden: 16,
            n_layer: 32,
            reward_offset: 0.0,
            adam: AdamConfig::default(),
            record_traces: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(msg.to_string()));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        for (name, v) in [
            ("target_update", self.target_update),
            ("buffer_size", self.buffer_size),
            ("budget", self.budget),
            ("train_freq", self.train_freq),
            ("batch_size", self.batch_size),
            ("n_hidden", self.n_hidden),
            ("n_layer", self.n_layer),
        ] {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be ≥ 1")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return bad("epsilon values must lie in [0, 1]");
        }
        if !self.reward_offset.is_finite() {
            return bad("reward offset must be finite");
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// Exploration rate as a function of the frame counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    /// Frame at which the buffer first filled.
    pub fill_frame: Option<usize>,
    pub anneal_frames: usize,
}

impl EpsilonSchedule {
    pub fn at(&self, frame: usize) -> f64 {
        let Some(fill) = self.fill_frame else { return self.start };
        if frame <= fill {
            return self.start;
        }
        if frame - fill >= self.anneal_frames {
            return self.end;
        }
        let frac = (frame - fill) as f64 / self.anneal_frames as f64;
        self.start + frac * (self.end - self.start)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub dataset_id: usize,
    pub steps: usize,
    /// Sum of learning rewards, offset included.
    pub ret: f64,
    /// Mean online Q-value of the actions taken.
    pub mean_q: f64,
    /// Exploration rate at the episode's first step.
    pub epsilon: f64,
    /// Environment steps after the episode.
    pub frames: usize,
    pub target_syncs: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
    pub traces: Vec<TraceRow>,
    pub gradient_updates: usize,
    pub fill_frame: Option<usize>,
}

impl TrainingLog {
    pub fn frames(&self) -> usize {
        self.episodes.last().map_or(0, |e| e.frames)
    }

    pub fn target_syncs(&self) -> usize {
        self.episodes.last().map_or(0, |e| e.target_syncs)
    }
}

pub const TRAINING_LOG_HEADER: [&str; 8] =
    ["episode", "dataset_id", "steps", "return", "mean_q", "epsilon", "frames", "target_syncs"];

pub fn write_training_log<W: Write>(out: W, log: &TrainingLog) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAINING_LOG_HEADER)?;
    for e in &log.episodes {
        w.write_record([
            e.episode.to_string(),
            e.dataset_id.to_string(),
            e.steps.to_string(),
            e.ret.to_string(),
            e.mean_q.to_string(),
            e.epsilon.to_string(),
            e.frames.to_string(),
            e.target_syncs.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("training log", e))?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: QNetwork,
    /// Metafeature scaler fitted on the training datasets.
    pub scaler: Scaler,
    pub log: TrainingLog,
}

/// Runs the DQN loop over `train_ids`.
pub fn train(md: &MetaDataset, train_ids: &[usize], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_callback(md, train_ids, cfg, |_, _| Ok(()))
}

/// As [`train`], calling `on_episode(episode, params)` after every episode
/// (used for periodic checkpoints).
pub fn train_with_callback<F>(md: &MetaDataset, train_ids: &[usize], cfg: &TrainConfig, mut on_episode: F) -> Result<TrainOutcome>
where
    F: FnMut(usize, &QNetwork) -> Result<()>,
{
    cfg.validate()?;
    if train_ids.is_empty() {
        return Err(Error::InvalidArgument("no training datasets".into()));
    }
    for &d in train_ids {
        md.check_dataset(d)?;
    }
    let scaler = Scaler::fit(train_ids.iter().map(|&d| &md.metafeatures[d]))?;
    let env = Environment::new(md, &scaler, cfg.budget)?;
    let shape = NetworkShape::new(cfg.n_hidden, md.grid.encoded_dim() + 1, cfg.n_layer, md.n_configs());
    let mut params = QNetwork::random(shape, &mut cfg.rng(STREAM_INIT))?;
    let mut target = sync_target(&params);
    let mut adam = AdamState::new(&params, cfg.adam);

    let n_episodes = cfg.episodes_per_dataset * train_ids.len();
    let planned_frames = cfg.max_frames.unwrap_or(n_episodes * cfg.budget);
    let mut datasets = DatasetSampler::new(train_ids, cfg.rng(STREAM_DATASET))?;
    let mut explore = cfg.rng(STREAM_EXPLORE);
    let mut replay_rng = cfg.rng(STREAM_REPLAY);
    let mut buffer = ReplayBuffer::new(cfg.buffer_size);
    let mut schedule = EpsilonSchedule { start: cfg.epsilon_start, end: cfg.epsilon_end, fill_frame: None, anneal_frames: 0 };
    let mut log = TrainingLog::default();
    let mut frames = 0usize;
    let mut syncs = 0usize;

    for episode in 0..n_episodes {
        if cfg.max_frames.is_some_and(|m| frames >= m) {
            break;
        }
        let dataset_id = datasets.next().expect("sampler is infinite");
        let mut state = env.reset(dataset_id)?;
        let epsilon0 = schedule.at(frames + 1);
        let (mut ret, mut q_sum, mut steps) = (0.0, 0.0, 0usize);
        loop {
            frames += 1;
            let q = params.q_forward(&state)?;
            let action = epsilon_greedy(&q, schedule.at(frames), &mut explore);
            q_sum += q[action];
            let out = env.step(&state, action)?;
            let r = out.reward + cfg.reward_offset;
            ret += r;
            steps += 1;
            if cfg.record_traces {
                log.traces.push(TraceRow {
                    episode,
                    t: steps,
                    dataset_id,
                    action,
                    reward: out.reward,
                    terminal_reason: out.terminal_reason,
                });
            }
            buffer.push(Experience {
                s: state,
                s_next: out.next_state.clone(),
                a: action,
                r,
                terminal: out.terminal,
            });
            if schedule.fill_frame.is_none() && buffer.is_full() {
                schedule.fill_frame = Some(frames);
                schedule.anneal_frames =
                    cfg.anneal_frames.unwrap_or(planned_frames.saturating_sub(frames) / 4);
            }
            if buffer.is_full() && frames.is_multiple_of(cfg.train_freq) {
                let batch = buffer.sample(cfg.batch_size, &mut replay_rng);
                let labelled = compute_targets(&batch, &target, cfg.gamma)?;
                let (grads, _) = params.q_gradients(&labelled)?;
                adam.step(&mut params, &grads, cfg.lr);
                log.gradient_updates += 1;
            }
            if frames.is_multiple_of(cfg.target_update) {
                target = sync_target(&params);
                syncs += 1;
            }
            state = out.next_state;
            if out.terminal {
                break;
            }
        }
        log.episodes.push(EpisodeLog {
            episode,
            dataset_id,
            steps,
            ret,
            mean_q: q_sum / steps as f64,
            epsilon: epsilon0,
            frames,
            target_syncs: syncs,
        });
        on_episode(episode, &params)?;
    }
    log.fill_frame = schedule.fill_frame;
    Ok(TrainOutcome { params, scaler, log })
}
