//! DQN learner over the tuning environment.

mod policy;
mod replay;
mod train;

pub use policy::{argmax, compute_targets, deploy, deploy_timed, epsilon_greedy, select_action, sync_target, HYP_RL};
pub use replay::{Experience, ReplayBuffer};
pub use train::{
    train, train_with_callback, write_training_log, EpisodeLog, EpsilonSchedule, TrainConfig, TrainOutcome, TrainingLog,
    TRAINING_LOG_HEADER,
};
