//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use hyprl::agent::{compute_targets, deploy, train, Experience, TrainConfig};
use hyprl::baselines::{expected_improvement, gp_posterior, kernel, GpSurrogate, KernelKind, KernelParams};
use hyprl::environment::{EnvState, Environment, HistoryEntry, TerminalReason};
use hyprl::evaluation::{adtm, run_benchmark, BenchmarkConfig, HypRl, RandomSearch, Smbo};
use hyprl::metadata::{
    generate_synthetic_metadataset, HyperparameterGrid, MetaDataset, MetafeatureVector, Scaler, Schema, Split,
    N_METAFEATURES,
};
use hyprl::neuralnet::NetworkShape;
use hyprl::trial::TrialRecord;
use hyprl::QNetwork;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRID_64: &str = "act:onehot:relu,tanh;layers:scalar:1,2,3,4;dropout:scalar:0,0.2,0.4,0.6;opt:onehot:adam,sgd";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_gradients() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let (p, s, a, t) = common::gradient_case(1000 + seed);
        worst = worst.max(common::max_relative_gradient_error(&p, &[(&s, a, t)], 1e-5, 1e-6));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(worst < 1e-4 && secs < 60.0, format!("max relative error {worst:.2e} (< 1e-4) over 20 networks in {secs:.2} s (< 60 s)"))
}

fn c2_bellman() -> Outcome {
    let shape = NetworkShape::new(3, 3, 4, 3);
    // all-zero weights leave Q = head bias in every state
    let mut target = QNetwork::zeros(shape).unwrap();
    target.head_b = vec![0.2, -0.5, 0.7];
    let s = EnvState::from_parts(0, [0.0; N_METAFEATURES], vec![HistoryEntry { action: None, encoded: vec![0.0; 2], reward: 0.0 }]);
    let mut s_next = s.clone();
    s_next.history.push(HistoryEntry { action: Some(1), encoded: vec![1.0, 0.0], reward: -0.3 });
    let exp = |r: f64, terminal: bool| Experience { s: s.clone(), s_next: s_next.clone(), a: 1, r, terminal };
    let label = |e: &Experience, gamma: f64| compute_targets(&[e], &target, gamma).unwrap()[0].2;
    let terminal = exp(-0.3, true);
    let live = exp(-0.4, false);
    let cases = [
        ("terminal γ=0.9", label(&terminal, 0.9), -0.3),
        ("terminal γ=0", label(&terminal, 0.0), -0.3),
        ("non-terminal γ=0", label(&live, 0.0), -0.4),
        ("non-terminal γ=0.9", label(&live, 0.9), -0.4 + 0.9 * 0.7),
        ("non-terminal γ=0.5", label(&live, 0.5), -0.4 + 0.5 * 0.7),
    ];
    let zero = QNetwork::zeros(shape).unwrap();
    let zero_label = compute_targets(&[&exp(0.5, false)], &zero, 0.9).unwrap()[0].2;
    let bad: Vec<&str> = cases.iter().filter(|(_, got, want)| (got - want).abs() > 1e-15).map(|c| c.0).collect();
    let pass = bad.is_empty() && zero_label == 0.5;
    outcome(pass, format!("{} labels match hand values, zero target gives {zero_label}{}", cases.len() + 1, if bad.is_empty() { String::new() } else { format!("; mismatched {bad:?}") }))
}

fn toy_md(losses: &[f64]) -> MetaDataset {
    let levels: Vec<String> = (0..losses.len()).map(|i| format!("c{i}")).collect();
    let grid = HyperparameterGrid::from_schema(Schema::parse(&format!("k:onehot:{}", levels.join(","))).unwrap()).unwrap();
    MetaDataset::new(grid, vec![MetafeatureVector([1.0; N_METAFEATURES])], 1, losses.to_vec(), vec![Split { train: vec![0], test: vec![] }], None).unwrap()
}

fn c3_environment() -> Outcome {
    let md = toy_md(&[0.4, 0.3, 0.2, 0.1, 0.5]);
    let scaler = Scaler::fit(md.metafeatures.iter()).unwrap();
    let env = Environment::new(&md, &scaler, 3).unwrap();
    let mut checks = Vec::new();

    let s0 = env.reset(0).unwrap();
    let a = env.step(&s0, 2).unwrap();
    let b = env.step(&a.next_state, 2).unwrap();
    checks.push(("repeat terminates", !a.terminal && b.terminal && b.terminal_reason == TerminalReason::Repeat && b.reward == -0.2));

    let mut s = env.reset(0).unwrap();
    let mut reasons = Vec::new();
    for act in [0, 4, 1] {
        let o = env.step(&s, act).unwrap();
        reasons.push(o.terminal_reason);
        s = o.next_state;
    }
    checks.push(("budget terminates", reasons == [TerminalReason::None, TerminalReason::None, TerminalReason::Budget]));
    checks.push(("terminal state refuses steps", env.step(&s, 3).is_err()));
    let acts: Vec<usize> = s.actions().collect();
    let rewards: Vec<f64> = s.rewards().collect();
    checks.push(("history replays actions and rewards", acts == [0, 4, 1] && rewards == [-0.4, -0.5, -0.3]));
    checks.push(("history holds encodings", s.history[2].encoded == md.grid.encoded(4)));

    let full = HyperparameterGrid::from_schema(Schema::full_nnmeta()).unwrap();
    let dims = (full.len(), full.encoded_dim());
    checks.push(("full-nnmeta 2916 × 13", dims == (2916, 13)));
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(failed.is_empty(), format!("{} fixtures, full-nnmeta grid {} configs × {} dims{}", checks.len(), dims.0, dims.1, if failed.is_empty() { String::new() } else { format!("; failed {failed:?}") }))
}

/// The ADTM formula evaluated straight from the loss table.
fn brute_adtm(surfaces: &[Vec<f64>], picks: &[Vec<usize>], t: usize) -> f64 {
    let mut sum = 0.0;
    for (s, p) in surfaces.iter().zip(picks) {
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        sum += p[..t].iter().map(|&c| (s[c] - lo) / (hi - lo)).fold(f64::INFINITY, f64::min);
    }
    sum / surfaces.len() as f64
}

fn md_from(surfaces: &[Vec<f64>]) -> MetaDataset {
    let n_c = surfaces[0].len();
    let levels: Vec<String> = (0..n_c).map(|i| format!("c{i}")).collect();
    let grid = HyperparameterGrid::from_schema(Schema::parse(&format!("k:onehot:{}", levels.join(","))).unwrap()).unwrap();
    let mf = (0..surfaces.len()).map(|d| MetafeatureVector([d as f64; N_METAFEATURES])).collect();
    MetaDataset::new(grid, mf, 1, surfaces.concat(), vec![], None).unwrap()
}

fn adtm_curve(surfaces: &[Vec<f64>], picks: &[Vec<usize>]) -> Vec<f64> {
    let md = md_from(surfaces);
    let recs: Vec<TrialRecord> = picks.iter().enumerate().map(|(d, p)| TrialRecord::from_configs("m", &md, d, 0, p)).collect();
    let refs: Vec<&TrialRecord> = recs.iter().collect();
    (1..=picks[0].len()).map(|t| adtm(&refs, &md, t).unwrap().value.unwrap()).collect()
}

fn c4_adtm() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let (mut oracle_err, mut affine_err, mut monotone_violations) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..1000 {
        let n_d = rng.random_range(1..6);
        let n_c = rng.random_range(2..10);
        let surfaces: Vec<Vec<f64>> = (0..n_d)
            .map(|_| {
                let mut s: Vec<f64> = (0..n_c).map(|_| rng.random()).collect();
                s[0] = s[1] + 0.5; // never flat
                s
            })
            .collect();
        let t_max = rng.random_range(1..=n_c);
        let picks: Vec<Vec<usize>> = (0..n_d)
            .map(|_| {
                let mut p: Vec<usize> = (0..n_c).collect();
                p.shuffle(&mut rng);
                p.truncate(t_max);
                p
            })
            .collect();
        let (a, b) = (rng.random_range(0.01..50.0), rng.random_range(-5.0..5.0));
        let curve = adtm_curve(&surfaces, &picks);
        let scaled: Vec<Vec<f64>> = surfaces.iter().map(|s| s.iter().map(|v| a * v + b).collect()).collect();
        let scaled_curve = adtm_curve(&scaled, &picks);
        for t in 1..=t_max {
            oracle_err = oracle_err.max((curve[t - 1] - brute_adtm(&surfaces, &picks, t)).abs());
            affine_err = affine_err.max((curve[t - 1] - scaled_curve[t - 1]).abs());
        }
        monotone_violations += curve.windows(2).filter(|w| w[1] > w[0]).count();
    }
    let pass = oracle_err <= 1e-12 && affine_err <= 1e-12 && monotone_violations == 0;
    outcome(pass, format!("1000 cases: oracle error {oracle_err:.1e}, affine drift {affine_err:.1e} (both ≤ 1e-12), {monotone_violations} increases in t"))
}

fn c5_gp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut mean_err, mut var_err) = (0.0f64, 0.0f64);
    let mut interp_err = 0.0f64;
    for case in 0..16 {
        let kind = if case % 2 == 0 { KernelKind::SeArd } else { KernelKind::Matern52 };
        let n = 3 + case % 8;
        let d = rng.random_range(1..5);
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let p = KernelParams {
            length_scales: (0..d).map(|_| rng.random_range(0.2..1.0)).collect(),
            signal_var: rng.random_range(0.5..2.0),
            noise_var: 1e-2,
        };
        let m0 = 0.3;
        let gp = GpSurrogate::new(kind, x.clone(), y.clone(), p.clone(), m0).unwrap();
        let k = DMatrix::from_fn(n, n, |i, j| kernel(kind, &x[i], &x[j], &p.length_scales, p.signal_var) + if i == j { p.noise_var } else { 0.0 });
        let k_inv = k.try_inverse().unwrap();
        for _ in 0..5 {
            let xs: Vec<f64> = (0..d).map(|_| rng.random()).collect();
            let ks = DVector::from_fn(n, |i, _| kernel(kind, &x[i], &xs, &p.length_scales, p.signal_var));
            let yc = DVector::from_fn(n, |i, _| y[i] - m0);
            let mo = m0 + (ks.transpose() * &k_inv * yc)[0];
            let vo = p.signal_var - (ks.transpose() * &k_inv * &ks)[0];
            let (m, v) = gp_posterior(&gp, &xs).unwrap();
            mean_err = mean_err.max((m - mo).abs());
            var_err = var_err.max((v - vo).abs());
        }
        // noiseless interpolation on a well-separated design
        let xn: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 / 3.0, ((i * 7) % 4) as f64 / 3.0]).collect();
        let yn: Vec<f64> = (0..4).map(|_| rng.random()).collect();
        let pn = KernelParams { length_scales: vec![0.3, 0.3], signal_var: 1.0, noise_var: 0.0 };
        let gpn = GpSurrogate::new(kind, xn.clone(), yn.clone(), pn, 0.0).unwrap();
        for (xi, yi) in xn.iter().zip(&yn) {
            interp_err = interp_err.max((gpn.posterior(xi).0 - yi).abs());
        }
    }
    let ei: f64 = expected_improvement(0.5, 1.0, 0.5);
    let ei0: f64 = expected_improvement(0.5, 0.0, 0.5);
    let pass = mean_err < 1e-8 && var_err < 1e-8 && interp_err < 1e-6 && (ei - 0.39894).abs() < 1e-5 && ei0 == 0.0;
    outcome(pass, format!("oracle |Δmean| {mean_err:.1e}, |Δvar| {var_err:.1e} (< 1e-8); interpolation {interp_err:.1e} (< 1e-6); EI(μ=best, σ=1) = {ei:.5}"))
}

fn c6_toy_policy() -> Outcome {
    let md = toy_md(&[0.9, 0.7, 0.5, 0.1]);
    let start = Instant::now();
    let mut firsts = Vec::new();
    for seed in 0..5 {
        let cfg = TrainConfig {
            episodes_per_dataset: 2000,
            budget: 4,
            gamma: 0.9,
            buffer_size: 500,
            target_update: 100,
            train_freq: 2,
            n_hidden: 8,
            n_layer: 16,
            lr: 3e-3,
            seed,
            ..Default::default()
        };
        let out = train(&md, &[0], &cfg).unwrap();
        let env = Environment::new(&md, &out.scaler, 4).unwrap();
        firsts.push(deploy(&out.params, &env, 0, 1).unwrap().trials[0].config_id);
    }
    let secs = start.elapsed().as_secs_f64();
    let hits = firsts.iter().filter(|&&a| a == 3).count();
    outcome(hits as f64 >= 0.95 * 5.0 && secs < 120.0, format!("{hits}/5 seeds open with the loss-0.1 config (first actions {firsts:?}), 2000 episodes each, {secs:.1} s total"))
}

struct TransferRun {
    adtm1: (f64, f64),
    adtm10: (f64, f64),
    lengths: Vec<(f64, f64)>,
    frames: Vec<usize>,
    secs: f64,
}

/// Five seeded trainings on split 0 of a 25-dataset synthetic meta-dataset.
fn transfer_run() -> (MetaDataset, TransferRun, Vec<QNetwork>) {
    let grid = HyperparameterGrid::from_schema(Schema::parse(GRID_64).unwrap()).unwrap();
    let md = generate_synthetic_metadataset(25, &grid, 3, 0).unwrap();
    let train_ids = md.splits[0].train.clone();
    let start = Instant::now();
    let (mut rl1, mut rnd1, mut rl10, mut rnd10) = (0.0, 0.0, 0.0, 0.0);
    let mut lengths = Vec::new();
    let mut frames = Vec::new();
    let mut nets = Vec::new();
    for seed in 0..5u64 {
        let cfg = TrainConfig {
            episodes_per_dataset: 250,
            budget: 10,
            max_frames: Some(50_000),
            reward_offset: 1.0,
            seed,
            ..Default::default()
        };
        let out = train(&md, &train_ids, &cfg).unwrap();
        let fill = out.log.fill_frame.expect("buffer fills");
        let after: Vec<f64> = out.log.episodes.iter().filter(|e| e.frames - e.steps >= fill).map(|e| e.steps as f64).collect();
        let k = after.len() / 10;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        lengths.push((mean(&after[..k]), mean(&after[after.len() - k..])));
        frames.push(out.log.frames());
        let rl = HypRl::for_split(0, out.params.clone());
        let bench = BenchmarkConfig { splits: vec![0], budget: 10, seeds: vec![seed], jobs: 1 };
        let rep = run_benchmark(&md, &[&RandomSearch, &rl], &bench).unwrap();
        rl1 += rep.adtm_at("hyp-rl", 1).unwrap() / 5.0;
        rnd1 += rep.adtm_at("random", 1).unwrap() / 5.0;
        rl10 += rep.adtm_at("hyp-rl", 10).unwrap() / 5.0;
        rnd10 += rep.adtm_at("random", 10).unwrap() / 5.0;
        nets.push(out.params);
    }
    let run = TransferRun { adtm1: (rl1, rnd1), adtm10: (rl10, rnd10), lengths, frames, secs: start.elapsed().as_secs_f64() };
    (md, run, nets)
}

fn c7_transfer(r: &TransferRun) -> Outcome {
    let (rl10, rnd10) = r.adtm10;
    let (rl1, rnd1) = r.adtm1;
    let max_frames = *r.frames.iter().max().unwrap();
    let pass = rl10 <= 0.9 * rnd10 && rl1 < rnd1 && max_frames <= 50_000 && r.secs < 1800.0;
    outcome(
        pass,
        format!(
            "ADTM@10 hyp-rl {rl10:.4} vs 0.9 × random {:.4}; ADTM@1 hyp-rl {rl1:.4} vs random {rnd1:.4}; ≤ {max_frames} frames per run, {:.0} s for 5 runs",
            0.9 * rnd10,
            r.secs
        ),
    )
}

fn c8_lengths(r: &TransferRun) -> Outcome {
    let pass = r.lengths.iter().all(|(early, late)| late > early);
    let shown: Vec<String> = r.lengths.iter().map(|(e, l)| format!("{e:.2}→{l:.2}")).collect();
    outcome(pass, format!("mean episode length first→last 10% after buffer fill, per seed: {}", shown.join(", ")))
}

fn c9_timing(md: &MetaDataset, nets: &[QNetwork]) -> Outcome {
    let rl = HypRl::for_split(0, nets[0].clone());
    let (se, m52) = (Smbo::new(KernelKind::SeArd), Smbo::new(KernelKind::Matern52));
    let bench = BenchmarkConfig { splits: vec![0], budget: 30, seeds: vec![0], jobs: 1 };
    let rep = run_benchmark(md, &[&rl, &se, &m52], &bench).unwrap();
    let dir = tempfile::tempdir().unwrap();
    hyprl::evaluation::emit_report(&rep, dir.path()).unwrap();
    let timing = fs::read_to_string(dir.path().join("timing.csv")).unwrap();
    let t_rl = rep.seconds_per_trial("hyp-rl").unwrap();
    let t_se = rep.seconds_per_trial("i-gp").unwrap();
    let t_m = rep.seconds_per_trial("spearmint").unwrap();
    let pass = t_rl < t_se && t_rl < t_m && timing.lines().count() == 4;
    outcome(pass, format!("seconds per suggestion at budget 30: hyp-rl {t_rl:.2e}, i-gp {t_se:.2e}, spearmint {t_m:.2e} (timing.csv written)"))
}

fn snapshot(dir: &Path, skip: &[&str]) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            let rel = p.strip_prefix(dir).unwrap().display().to_string();
            if p.is_dir() {
                stack.push(p);
            } else if !skip.contains(&rel.as_str()) {
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_hyprl"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("HYPRL_SEED")
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let p = |n: &str| tmp.path().join(n).display().to_string();
    let mut identical = Vec::new();
    let mut ran = true;
    for run in ["a", "b"] {
        let md = p(&format!("md_{run}"));
        ran &= cli(&["synth", "--out", &md, "--datasets", "10", "--grid", GRID_64, "--folds", "2", "--seed", "7"]);
    }
    identical.push(("synth", snapshot(Path::new(&p("md_a")), &[]) == snapshot(Path::new(&p("md_b")), &[])));
    let md = p("md_a");
    for run in ["a", "b"] {
        let out = p(&format!("train_{run}"));
        ran &= cli(&[
            "train", "--metadata", &md, "--split", "1", "--out", &out, "--episodes-per-dataset", "30", "--buffer-size", "500",
            "--target-update", "100", "--checkpoint-every", "100", "--trace", "--seed", "3",
        ]);
    }
    identical.push(("train", snapshot(Path::new(&p("train_a")), &[]) == snapshot(Path::new(&p("train_b")), &[])));
    let ckpt = format!("{}/checkpoint.txt", p("train_a"));
    for run in ["a", "b"] {
        let out = p(&format!("eval_{run}"));
        ran &= cli(&[
            "evaluate", "--metadata", &md, "--split", "1", "--methods", "random,i-gp,spearmint,hyp-rl", "--checkpoint", &ckpt,
            "--budget", "8", "--seeds", "2", "--jobs", "1", "--out", &out,
        ]);
    }
    identical.push(("evaluate", snapshot(Path::new(&p("eval_a")), &["timing.csv"]) == snapshot(Path::new(&p("eval_b")), &["timing.csv"])));
    let same: Vec<String> = identical.iter().map(|(c, ok)| format!("{c} {}", if *ok { "identical" } else { "DIFFERS" })).collect();
    outcome(ran && identical.iter().all(|c| c.1), format!("two runs each, byte comparison (wall-clock timing.csv excluded): {}", same.join(", ")))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = vec![
        (1, "gradient correctness", c1_gradients()),
        (2, "Bellman targets", c2_bellman()),
        (3, "environment semantics", c3_environment()),
        (4, "ADTM oracle", c4_adtm()),
        (5, "GP correctness", c5_gp()),
        (6, "toy policy optimality", c6_toy_policy()),
    ];
    let (md, run, nets) = transfer_run();
    results.push((7, "transfer behaviour", c7_transfer(&run)));
    results.push((8, "learning-curve trend", c8_lengths(&run)));
    results.push((9, "timing report", c9_timing(&md, &nets)));
    results.push((10, "determinism", c10_determinism()));

    for (n, name, o) in &results {
        println!("{} criterion {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed = results.iter().filter(|r| !r.2.pass).count();
    println!("acceptance: {}/{} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
