use std::time::{Duration, Instant};

use rand::Rng;

use super::replay::Experience;
use crate::environment::{EnvState, Environment};
use crate::error::{Error, Result};
use crate::trial::TrialRecord;
use crate::QNetwork;

/// Method label of the learned policy in reports.
pub const HYP_RL: &str = "hyp-rl";

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy choice over precomputed Q-values. Always draws the coin first,
/// then the uniform action only when exploring.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], epsilon: f64, rng: &mut R) -> usize {
    let p: f64 = rng.random();
    if p < epsilon {
        rng.random_range(0..q.len())
    } else {
        argmax(q)
    }
}

pub fn select_action<R: Rng + ?Sized>(state: &EnvState, params: &QNetwork, epsilon: f64, rng: &mut R) -> Result<usize> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside [0, 1]")));
    }
    let q = params.q_forward(state)?;
    Ok(epsilon_greedy(&q, epsilon, rng))
}

/// Bellman labels: `r` for terminal transitions, otherwise
/// `r + γ · max_a' Q_target(s', a')`.
pub fn compute_targets<'e>(batch: &[&'e Experience], target: &QNetwork, gamma: f64) -> Result<Vec<(&'e EnvState, usize, f64)>> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("target batch is empty".into()));
    }
    batch
        .iter()
        .map(|e| {
            let label = if e.terminal {
                e.r
            } else {
                let q = target.q_forward(&e.s_next)?;
                e.r + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            };
            Ok((&e.s, e.a, label))
        })
        .collect()
}

/// Independent copy of the online parameters.
pub fn sync_target(params: &QNetwork) -> QNetwork {
    params.clone()
}

/// Greedy roll-out for `budget` trials. An action already tried on this
/// dataset is replaced by the highest-Q untried one, so records hold
/// `budget` distinct configs.
pub fn deploy(params: &QNetwork, env: &Environment<'_>, dataset_id: usize, budget: usize) -> Result<TrialRecord> {
    deploy_timed(params, env, dataset_id, budget).map(|(r, _)| r)
}

/// As [`deploy`], also returning the wall time of each suggestion.
pub fn deploy_timed(
    params: &QNetwork,
    env: &Environment<'_>,
    dataset_id: usize,
    budget: usize,
) -> Result<(TrialRecord, Vec<Duration>)> {
    let n = env.n_actions();
    if budget > n {
        return Err(Error::BudgetTooLarge { budget, n_configs: n });
    }
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be ≥ 1".into()));
    }
    let env = env.with_budget(budget)?;
    let mut state = env.reset(dataset_id)?;
    let mut tried = vec![false; n];
    let mut picks = Vec::with_capacity(budget);
    let mut times = Vec::with_capacity(budget);
    for _ in 0..budget {
        let start = Instant::now();
        let q = params.q_forward(&state)?;
        let mut best: Option<usize> = None;
        for a in (0..n).filter(|&a| !tried[a]) {
            if best.is_none_or(|b| q[a] > q[b]) {
                best = Some(a);
            }
        }
        let a = best.expect("budget ≤ grid size leaves an untried action");
        tried[a] = true;
        picks.push(a);
        times.push(start.elapsed());
        state = env.step(&state, a)?.next_state;
    }
    Ok((TrialRecord::from_configs(HYP_RL, env.metadataset(), dataset_id, 0, &picks), times))
}
