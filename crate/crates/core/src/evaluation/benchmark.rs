use std::collections::BTreeMap;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::metrics::{distance_curve, rank_with_ties};
use crate::agent::{deploy_timed, HYP_RL};
use crate::baselines::{random_search, smbo_method_name, smbo_run_timed, KernelKind, SmboOptions};
use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::metadata::MetaDataset;
use crate::trial::TrialRecord;
use crate::QNetwork;

/// A tuner that can be benchmarked on held-out datasets.
pub trait Strategy: Sync {
    fn name(&self) -> &str;

    /// Runs `budget` trials on `dataset_id`, a test dataset of `split`,
    /// returning the record and the time spent on each suggestion.
    fn run(
        &self,
        md: &MetaDataset,
        split: usize,
        dataset_id: usize,
        budget: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<(TrialRecord, Vec<Duration>)>;
}

pub struct RandomSearch;

impl Strategy for RandomSearch {
    fn name(&self) -> &str {
        "random"
    }

    fn run(&self, md: &MetaDataset, _: usize, d: usize, budget: usize, rng: &mut ChaCha8Rng) -> Result<(TrialRecord, Vec<Duration>)> {
        let start = std::time::Instant::now();
        let ids = random_search(&md.grid, budget, rng)?;
        let each = start.elapsed() / budget.max(1) as u32;
        Ok((TrialRecord::from_configs("random", md, d, 0, &ids), vec![each; budget]))
    }
}

pub struct Smbo {
    pub kind: KernelKind,
    pub options: SmboOptions,
}

impl Smbo {
    pub fn new(kind: KernelKind) -> Self {
        Self { kind, options: SmboOptions::default() }
    }
}

impl Strategy for Smbo {
    fn name(&self) -> &str {
        smbo_method_name(self.kind)
    }

    fn run(&self, md: &MetaDataset, _: usize, d: usize, budget: usize, rng: &mut ChaCha8Rng) -> Result<(TrialRecord, Vec<Duration>)> {
        smbo_run_timed(md, d, budget, self.kind, rng, &self.options)
    }
}

/// Greedy learned policy, one network per split it was trained for.
pub struct HypRl {
    pub networks: BTreeMap<usize, QNetwork>,
}

impl HypRl {
    pub fn for_split(split: usize, params: QNetwork) -> Self {
        Self { networks: BTreeMap::from([(split, params)]) }
    }
}

impl Strategy for HypRl {
    fn name(&self) -> &str {
        HYP_RL
    }

    fn run(&self, md: &MetaDataset, split: usize, d: usize, budget: usize, _: &mut ChaCha8Rng) -> Result<(TrialRecord, Vec<Duration>)> {
        let params = self
            .networks
            .get(&split)
            .ok_or_else(|| Error::InvalidArgument(format!("no trained network for split {split}")))?;
        let env = Environment::for_split(md, split, budget)?;
        deploy_timed(params, &env, d, budget)
    }
}

/// One point of an aggregated curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub method: String,
    pub split: usize,
    pub t: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub method: String,
    pub mean_seconds: f64,
    pub n_suggestions: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkReport {
    pub methods: Vec<String>,
    pub budget: usize,
    /// Mean ADTM over the split's test datasets and seeds.
    pub adtm: Vec<CurveRow>,
    /// Mean rank over the split's test datasets and seeds.
    pub rank: Vec<CurveRow>,
    pub timing: Vec<TimingRow>,
    /// Every record, ordered by split, seed, dataset, method.
    pub records: Vec<TrialRecord>,
    /// Problems excluded from ADTM because the surface is flat.
    pub n_degenerate: usize,
    /// Tasks that failed; their problems are missing from every table.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub splits: Vec<usize>,
    pub budget: usize,
    pub seeds: Vec<u64>,
    /// Worker threads; 1 runs everything on the calling thread.
    pub jobs: usize,
}

struct Task {
    split: usize,
    seed: u64,
    dataset_id: usize,
}

type TaskOutput = Vec<(TrialRecord, Vec<Duration>)>;

/// Every method on every (split, seed, test dataset). Each problem gets its
/// own rng, seeded by the seed and keyed by dataset, so results do not
/// depend on `jobs`.
pub fn run_benchmark(md: &MetaDataset, methods: &[&dyn Strategy], cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if cfg.budget == 0 {
        return Err(Error::InvalidArgument("budget must be ≥ 1".into()));
    }
    if cfg.budget > md.n_configs() {
        return Err(Error::BudgetTooLarge { budget: cfg.budget, n_configs: md.n_configs() });
    }
    let mut names: Vec<String> = Vec::new();
    for m in methods {
        if names.iter().any(|n| n == m.name()) {
            return Err(Error::InvalidArgument(format!("method `{}` listed twice", m.name())));
        }
        names.push(m.name().to_string());
    }
    let mut tasks = Vec::new();
    for &split in &cfg.splits {
        let s = md
            .splits
            .get(split)
            .ok_or_else(|| Error::InvalidArgument(format!("split {split} does not exist ({} splits)", md.splits.len())))?;
        for &seed in &cfg.seeds {
            tasks.extend(s.test.iter().map(|&dataset_id| Task { split, seed, dataset_id }));
        }
    }

    let run_task = |task: &Task| -> Result<TaskOutput> {
        methods
            .iter()
            .map(|m| {
                let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
                rng.set_stream(task.dataset_id as u64);
                let (mut rec, times) = m.run(md, task.split, task.dataset_id, cfg.budget, &mut rng)?;
                rec.seed = task.seed;
                Ok((rec, times))
            })
            .collect()
    };
    let outputs: Vec<Result<TaskOutput>> = if cfg.jobs <= 1 {
        tasks.iter().map(run_task).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run_task).collect())
    };

    let mut report = BenchmarkReport { methods: names.clone(), budget: cfg.budget, ..Default::default() };
    let m = methods.len();
    let t_max = cfg.budget;
    // (split) -> per method per t: sums and counts
    let mut adtm_acc: BTreeMap<usize, (Vec<Vec<f64>>, Vec<usize>)> = BTreeMap::new();
    let mut rank_acc: BTreeMap<usize, (Vec<Vec<f64>>, usize)> = BTreeMap::new();
    let mut time_acc = vec![(Duration::ZERO, 0usize); m];

    for (task, out) in tasks.iter().zip(outputs) {
        let out = match out {
            Ok(o) => o,
            Err(e) => {
                report.failures.push(format!("split {} seed {} dataset {}: {e}", task.split, task.seed, task.dataset_id));
                continue;
            }
        };
        let a = adtm_acc.entry(task.split).or_insert_with(|| (vec![vec![0.0; t_max]; m], vec![0; m]));
        let mut degenerate = false;
        for (i, (rec, _)) in out.iter().enumerate() {
            match distance_curve(rec, md)? {
                Some(c) => {
                    for (s, v) in a.0[i].iter_mut().zip(c) {
                        *s += v;
                    }
                    a.1[i] += 1;
                }
                None => degenerate = true,
            }
        }
        if degenerate {
            report.n_degenerate += 1;
        }
        let r = rank_acc.entry(task.split).or_insert_with(|| (vec![vec![0.0; t_max]; m], 0));
        for t in 1..=t_max {
            let best: Vec<f64> = out.iter().map(|(rec, _)| rec.best_within(t)).collect();
            for (i, rank) in rank_with_ties(&best).into_iter().enumerate() {
                r.0[i][t - 1] += rank;
            }
        }
        r.1 += 1;
        for (i, (rec, times)) in out.into_iter().enumerate() {
            time_acc[i].0 += times.iter().sum::<Duration>();
            time_acc[i].1 += times.len();
            report.records.push(rec);
        }
    }
    if report.n_degenerate > 0 {
        log::warn!("{} problem(s) with flat response surfaces excluded from ADTM", report.n_degenerate);
    }

    for (&split, (sums, counts)) in &adtm_acc {
        for (i, name) in names.iter().enumerate() {
            if counts[i] == 0 {
                continue;
            }
            for t in 1..=t_max {
                report.adtm.push(CurveRow { method: name.clone(), split, t, value: sums[i][t - 1] / counts[i] as f64 });
            }
        }
    }
    for (&split, (sums, count)) in &rank_acc {
        for (i, name) in names.iter().enumerate() {
            for t in 1..=t_max {
                report.rank.push(CurveRow { method: name.clone(), split, t, value: sums[i][t - 1] / *count as f64 });
            }
        }
    }
    report.timing = names
        .iter()
        .zip(&time_acc)
        .filter(|(_, (_, n))| *n > 0)
        .map(|(name, (total, n))| TimingRow {
            method: name.clone(),
            mean_seconds: total.as_secs_f64() / *n as f64,
            n_suggestions: *n,
        })
        .collect();
    Ok(report)
}

impl BenchmarkReport {
    /// Curve averaged over splits, in method order.
    pub fn mean_curve(rows: &[CurveRow], method: &str) -> Vec<(usize, f64)> {
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for r in rows.iter().filter(|r| r.method == method) {
            let e = acc.entry(r.t).or_default();
            e.0 += r.value;
            e.1 += 1;
        }
        acc.into_iter().map(|(t, (s, n))| (t, s / n as f64)).collect()
    }

    /// Split-averaged ADTM of `method` at trial `t`.
    pub fn adtm_at(&self, method: &str, t: usize) -> Option<f64> {
        Self::mean_curve(&self.adtm, method).into_iter().find(|&(tt, _)| tt == t).map(|(_, v)| v)
    }

    pub fn rank_at(&self, method: &str, t: usize) -> Option<f64> {
        Self::mean_curve(&self.rank, method).into_iter().find(|&(tt, _)| tt == t).map(|(_, v)| v)
    }

    pub fn seconds_per_trial(&self, method: &str) -> Option<f64> {
        self.timing.iter().find(|r| r.method == method).map(|r| r.mean_seconds)
    }
}
