//! Reference tuners: random search and GP-based SMBO.

mod gp;
mod random;
mod smbo;

pub use crate::trial::{read_trials, write_trials, Trial, TrialRecord, TRIALS_HEADER};
pub use gp::{fit_gp, gp_posterior, kernel, FitOptions, GpSurrogate, KernelKind, KernelParams, MAX_JITTER};
pub use random::random_search;
pub use smbo::{expected_improvement, smbo_method_name, smbo_run, smbo_run_timed, SmboOptions};
