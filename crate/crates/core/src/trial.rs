//! Ordered evaluation records shared by every tuning strategy.

use std::collections::HashSet;
use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::metadata::MetaDataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    /// 1-based trial index.
    pub t: usize,
    pub config_id: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: String,
    pub dataset_id: usize,
    pub seed: u64,
    pub trials: Vec<Trial>,
}

impl TrialRecord {
    /// Builds a record by looking up the fold-averaged loss of each config.
    pub fn from_configs(method: &str, md: &MetaDataset, dataset_id: usize, seed: u64, configs: &[usize]) -> Self {
        let trials = configs
            .iter()
            .enumerate()
            .map(|(i, &c)| Trial { t: i + 1, config_id: c, loss: md.mean_loss(dataset_id, c) })
            .collect();
        Self { method: method.to_string(), dataset_id, seed, trials }
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn config_ids(&self) -> Vec<usize> {
        self.trials.iter().map(|t| t.config_id).collect()
    }

    /// Lowest loss among the first `t` trials.
    pub fn best_within(&self, t: usize) -> f64 {
        self.trials[..t.min(self.trials.len())].iter().map(|x| x.loss).fold(f64::INFINITY, f64::min)
    }

    /// Checks contiguous 1-based indices and distinct configs.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (i, tr) in self.trials.iter().enumerate() {
            if tr.t != i + 1 {
                return Err(Error::InvalidArgument(format!("{}: trial index {} at position {}", self.method, tr.t, i + 1)));
            }
            if !seen.insert(tr.config_id) {
                return Err(Error::InvalidArgument(format!("{}: config {} repeated", self.method, tr.config_id)));
            }
        }
        Ok(())
    }
}

pub const TRIALS_HEADER: [&str; 6] = ["method", "dataset_id", "seed", "t", "config_id", "loss"];

/// Writes `method,dataset_id,seed,t,config_id,loss`, one row per trial.
pub fn write_trials<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRIALS_HEADER)?;
    for r in records {
        for tr in &r.trials {
            w.write_record([
                r.method.clone(),
                r.dataset_id.to_string(),
                r.seed.to_string(),
                tr.t.to_string(),
                tr.config_id.to_string(),
                tr.loss.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("trials", e))?;
    Ok(())
}

/// Reads back what [`write_trials`] wrote, grouping consecutive rows into records.
pub fn read_trials<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != TRIALS_HEADER {
        return Err(Error::SchemaMismatch {
            file: "trials.csv".into(),
            detail: format!("expected columns [{}]", TRIALS_HEADER.join(",")),
        });
    }
    let mut out: Vec<TrialRecord> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Result<&str> { Ok(&rec[i]) };
        let parse_err = |i: usize| Error::parse("trials.csv", line, format!("bad value in column {}", TRIALS_HEADER[i]));
        let method = num(0)?.to_string();
        let dataset_id: usize = num(1)?.parse().map_err(|_| parse_err(1))?;
        let seed: u64 = num(2)?.parse().map_err(|_| parse_err(2))?;
        let t: usize = num(3)?.parse().map_err(|_| parse_err(3))?;
        let config_id: usize = num(4)?.parse().map_err(|_| parse_err(4))?;
        let loss: f64 = num(5)?.parse().map_err(|_| parse_err(5))?;
        let starts_new = t == 1 || out.last().is_none_or(|l| l.method != method || l.dataset_id != dataset_id || l.seed != seed);
        if starts_new {
            out.push(TrialRecord { method, dataset_id, seed, trials: Vec::new() });
        }
        out.last_mut().expect("pushed above").trials.push(Trial { t, config_id, loss });
    }
    Ok(out)
}
