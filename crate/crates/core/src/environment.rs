//! The tuning MDP over a tabular meta-dataset.
//!
//! A state is the dataset's standardized metafeatures plus the chronological
//! history of `(encoded config, reward)` pairs, starting with an all-zero
//! sentinel entry. Rewards are negated fold-averaged losses. An episode ends when the same config is chosen twice in
//! a row or when the budget of `T` actions is used up.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::metadata::{MetaDataset, Scaler, N_METAFEATURES};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminalReason {
    None,
    Budget,
    Repeat,
}

impl TerminalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalReason::None => "none",
            TerminalReason::Budget => "budget",
            TerminalReason::Repeat => "repeat",
        }
    }
}

/// One history entry: the encoded config and the reward it produced.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryEntry {
    /// `None` for the sentinel.
    pub action: Option<usize>,
    pub encoded: Vec<f64>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub dataset_id: usize,
    /// Standardized metafeatures.
    pub metafeatures: [f64; N_METAFEATURES],
    pub history: Vec<HistoryEntry>,
    terminal: bool,
}

impl EnvState {
    /// Assembles a non-terminal state from an explicit history, whose first
    /// entry must be the sentinel.
    pub fn from_parts(dataset_id: usize, metafeatures: [f64; N_METAFEATURES], history: Vec<HistoryEntry>) -> Self {
        assert!(!history.is_empty(), "history needs the sentinel entry");
        Self { dataset_id, metafeatures, history, terminal: false }
    }

    pub fn step_count(&self) -> usize {
        self.history.len() - 1
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn last_action(&self) -> Option<usize> {
        self.history.last().and_then(|h| h.action)
    }

    /// Actions taken so far, in order.
    pub fn actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.history.iter().filter_map(|h| h.action)
    }

    /// Rewards observed so far, in order (sentinel excluded).
    pub fn rewards(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.iter().skip(1).map(|h| h.reward)
    }

    /// Width of one input step: encoded config plus the reward channel.
    pub fn input_dim(&self) -> usize {
        self.history[0].encoded.len() + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub next_state: EnvState,
    pub reward: f64,
    pub terminal: bool,
    pub terminal_reason: TerminalReason,
}

/// Environment bound to one meta-dataset and one metafeature scaler.
#[derive(Debug, Clone)]
pub struct Environment<'a> {
    md: &'a MetaDataset,
    standardized: Vec<[f64; N_METAFEATURES]>,
    budget: usize,
}

impl<'a> Environment<'a> {
    pub fn new(md: &'a MetaDataset, scaler: &Scaler, budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidArgument("budget T must be ≥ 1".into()));
        }
        let standardized = md.metafeatures.iter().map(|m| scaler.transform(m)).collect();
        Ok(Self { md, standardized, budget })
    }

    /// Environment whose metafeature scaler is fitted on the meta-train part of `split`.
    pub fn for_split(md: &'a MetaDataset, split: usize, budget: usize) -> Result<Self> {
        Self::new(md, &md.scaler_for_split(split)?, budget)
    }

    /// Same environment with a different action budget.
    pub fn with_budget(&self, budget: usize) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidArgument("budget T must be ≥ 1".into()));
        }
        Ok(Self { budget, ..self.clone() })
    }

    pub fn metadataset(&self) -> &'a MetaDataset {
        self.md
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    pub fn n_actions(&self) -> usize {
        self.md.n_configs()
    }

    pub fn reset(&self, dataset_id: usize) -> Result<EnvState> {
        self.md.check_dataset(dataset_id)?;
        let sentinel = HistoryEntry { action: None, encoded: vec![0.0; self.md.grid.encoded_dim()], reward: 0.0 };
        Ok(EnvState {
            dataset_id,
            metafeatures: self.standardized[dataset_id],
            history: vec![sentinel],
            terminal: false,
        })
    }

    /// Negated fold-averaged loss of `action` on `dataset_id`.
    pub fn reward(&self, dataset_id: usize, action: usize) -> Result<f64> {
        self.md.check_dataset(dataset_id)?;
        self.check_action(action)?;
        Ok(-self.md.mean_loss(dataset_id, action))
    }

    pub fn step(&self, state: &EnvState, action: usize) -> Result<StepOutcome> {
        if state.terminal {
            return Err(Error::TerminalState);
        }
        let reward = self.reward(state.dataset_id, action)?;
        let terminal_reason = if state.last_action() == Some(action) {
            TerminalReason::Repeat
        } else if state.step_count() + 1 >= self.budget {
            TerminalReason::Budget
        } else {
            TerminalReason::None
        };
        let mut next_state = state.clone();
        next_state.history.push(HistoryEntry {
            action: Some(action),
            encoded: self.md.grid.encoded(action).to_vec(),
            reward,
        });
        let terminal = terminal_reason != TerminalReason::None;
        next_state.terminal = terminal;
        Ok(StepOutcome { next_state, reward, terminal, terminal_reason })
    }

    fn check_action(&self, action: usize) -> Result<()> {
        if action < self.n_actions() {
            Ok(())
        } else {
            Err(Error::ActionOutOfRange { action, n_configs: self.n_actions() })
        }
    }
}

/// Uniform, seeded sampling of dataset ids for episode starts.
pub struct DatasetSampler<'s, R> {
    ids: &'s [usize],
    rng: R,
}

impl<'s, R: Rng> DatasetSampler<'s, R> {
    pub fn new(ids: &'s [usize], rng: R) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidArgument("no datasets to sample from".into()));
        }
        Ok(Self { ids, rng })
    }
}

impl<R: Rng> Iterator for DatasetSampler<'_, R> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        Some(self.ids[self.rng.random_range(0..self.ids.len())])
    }
}

/// One row of an episode trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub episode: usize,
    pub t: usize,
    pub dataset_id: usize,
    pub action: usize,
    pub reward: f64,
    pub terminal_reason: TerminalReason,
}

/// Writes `episode,t,dataset_id,action,reward,terminal_reason`.
pub fn write_trace<W: Write>(out: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["episode", "t", "dataset_id", "action", "reward", "terminal_reason"])?;
    for r in rows {
        w.write_record([
            r.episode.to_string(),
            r.t.to_string(),
            r.dataset_id.to_string(),
            r.action.to_string(),
            r.reward.to_string(),
            r.terminal_reason.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("trace", e))?;
    Ok(())
}
