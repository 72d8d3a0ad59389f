use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hyprl::metadata::{compute_metafeatures, load_metadataset, METAFEATURE_NAMES};
use hyprl::neuralnet::read_checkpoint;
use hyprl::QNetwork;

const SMALL_GRID: &str = "act:onehot:relu,tanh;width:scalar:1,2,3";

fn hyprl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyprl"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("HYPRL_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = hyprl(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file under `dir`, relative path to bytes, sorted.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn synth(dir: &Path, seed: &str) {
    ok(&["synth", "--out", s(dir), "--datasets", "6", "--grid", SMALL_GRID, "--folds", "2", "--splits", "3", "--seed", seed]);
}

#[test]
fn synth_full_grid_and_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    ok(&["synth", "--out", s(&a), "--datasets", "3", "--grid", "full-nnmeta", "--folds", "1", "--splits", "3"]);
    let grid = fs::read_to_string(a.join("grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 2916 + 1);
    let enc_cols = grid.lines().next().unwrap().split(',').filter(|c| c.starts_with("enc_")).count();
    assert_eq!(enc_cols, 13);

    let (x, y) = (tmp.path().join("x"), tmp.path().join("y"));
    synth(&x, "4");
    synth(&y, "4");
    assert_eq!(snapshot(&x), snapshot(&y));
    let md = load_metadataset(&x).unwrap();
    assert_eq!((md.n_datasets(), md.n_configs(), md.splits.len()), (6, 6, 3));
}

#[test]
fn synth_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = hyprl(&["synth", "--out", s(tmp.path()), "--datasets", "1"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("need ≥ 2 datasets for splits"));
    assert_eq!(code(&hyprl(&["synth", "--out", s(tmp.path()), "--grid", "x:weird:1,2"])), 2);
    assert_eq!(code(&hyprl(&["synth"])), 2);

    let d = tmp.path().join("d");
    synth(&d, "1");
    assert_eq!(code(&hyprl(&["synth", "--out", s(&d), "--datasets", "6", "--grid", SMALL_GRID])), 2);
    ok(&["synth", "--out", s(&d), "--datasets", "6", "--grid", SMALL_GRID, "--overwrite"]);
}

#[test]
fn seed_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth(&a, "9");
    let out = Command::new(env!("CARGO_BIN_EXE_hyprl"))
        .args(["synth", "--out", s(&b), "--datasets", "6", "--grid", SMALL_GRID, "--folds", "2", "--splits", "3"])
        .env("HYPRL_SEED", "9")
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(snapshot(&a), snapshot(&b));
}

#[test]
fn featurize_round_trip_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("t.csv");
    fs::write(&data, "a,b\n1,2\n3,5\n4,4\n10,1\n").unwrap();
    let out = tmp.path().join("mf.csv");
    ok(&["featurize", "--data", s(&data), "--out", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), METAFEATURE_NAMES.join(","));
    let values: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(values.len(), 16);
    let expected = compute_metafeatures(&[vec![1.0, 2.0], vec![3.0, 5.0], vec![4.0, 4.0], vec![10.0, 1.0]]).unwrap();
    assert_eq!(values, expected.0.to_vec());
    assert_eq!((expected.num_instances(), expected.num_features()), (4.0, 2.0));

    fs::write(&data, "a,b\n1,2\n3,oops\n").unwrap();
    let bad = hyprl(&["featurize", "--data", s(&data), "--out", s(&out)]);
    assert_eq!(code(&bad), 1);
    let msg = String::from_utf8_lossy(&bad.stderr);
    assert!(msg.contains("line 3") && msg.contains("column 2"), "{msg}");
}

fn train_args<'a>(md: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "train", "--metadata", md, "--split", "0", "--out", out, "--episodes-per-dataset", "20", "--budget", "4",
        "--buffer-size", "60", "--target-update", "25", "--hidden", "4", "--layer", "6", "--seed", "3",
        "--checkpoint-every", "40",
    ]
}

#[test]
fn train_and_evaluate_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let md_dir = tmp.path().join("md");
    synth(&md_dir, "2");
    let (t1, t2) = (tmp.path().join("t1"), tmp.path().join("t2"));
    ok(&train_args(s(&md_dir), s(&t1)));
    ok(&train_args(s(&md_dir), s(&t2)));
    assert_eq!(snapshot(&t1), snapshot(&t2));
    let params: QNetwork = read_checkpoint(&t1.join("checkpoint.txt")).unwrap();
    assert_eq!(params.shape().n_actions, 6);
    assert!(t1.join("checkpoints").read_dir().unwrap().count() >= 1);
    let log = fs::read_to_string(t1.join("training_log.csv")).unwrap();
    assert!(log.starts_with("episode,dataset_id,steps,return,mean_q,epsilon,frames,target_syncs\n"));
    assert_eq!(code(&hyprl(&train_args(s(&md_dir), s(&t1)))), 2, "existing manifest needs --overwrite");

    let mut bad = train_args(s(&md_dir), s(&t2));
    bad.extend(["--gamma", "1.5", "--overwrite"]);
    assert_eq!(code(&hyprl(&bad)), 2);

    let ckpt = t1.join("checkpoint.txt");
    let eval = |out: &Path, methods: &str, budget: &str| {
        hyprl(&[
            "evaluate", "--metadata", s(&md_dir), "--split", "0", "--methods", methods, "--checkpoint", s(&ckpt), "--budget",
            budget, "--seeds", "3", "--out", s(out),
        ])
    };
    let (e1, e2) = (tmp.path().join("e1"), tmp.path().join("e2"));
    assert!(eval(&e1, "random,hyp-rl,i-gp", "5").status.success());
    assert!(eval(&e2, "random,hyp-rl,i-gp", "5").status.success());
    let strip = |v: Vec<(String, Vec<u8>)>| v.into_iter().filter(|(n, _)| n != "timing.csv").collect::<Vec<_>>();
    assert_eq!(strip(snapshot(&e1)), strip(snapshot(&e2)));
    let adtm = fs::read_to_string(e1.join("adtm.csv")).unwrap();
    assert_eq!(adtm.lines().count(), 1 + 3 * 5);
    let timing = fs::read_to_string(e1.join("timing.csv")).unwrap();
    assert_eq!(timing.lines().count(), 4);

    let e3 = tmp.path().join("e3");
    assert!(eval(&e3, "random", "5").status.success());
    let rank = fs::read_to_string(e3.join("rank.csv")).unwrap();
    assert!(rank.lines().skip(1).all(|l| l.ends_with(",1")));

    assert_eq!(code(&eval(&tmp.path().join("e4"), "random", "7")), 2);
    assert_eq!(code(&eval(&tmp.path().join("e5"), "random,bogus", "3")), 2);
    let no_ckpt = hyprl(&[
        "evaluate", "--metadata", s(&md_dir), "--methods", "hyp-rl", "--budget", "3", "--out", s(&tmp.path().join("e6")),
    ]);
    assert_eq!(code(&no_ckpt), 2);

    let p = tmp.path().join("plots");
    ok(&["plot", "--report", s(&e1), "--out", s(&p)]);
    for svg in ["adtm.svg", "rank.svg"] {
        assert_eq!(fs::read(e1.join(svg)).unwrap(), fs::read(p.join(svg)).unwrap());
    }
    fs::write(e3.join("adtm.csv"), "method,oops\n").unwrap();
    let bad_plot = hyprl(&["plot", "--report", s(&e3), "--out", s(&p)]);
    assert_eq!(code(&bad_plot), 1);
    assert!(String::from_utf8_lossy(&bad_plot.stderr).contains("method,split,t,value"));
}

#[test]
fn help_lists_defaults() {
    let out = ok(&["train", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in ["--gamma", "[default: 0.9]", "--target-update", "[default: 500]", "--buffer-size", "[default: 10000]", "--batch-size"] {
        assert!(text.contains(flag), "missing {flag}");
    }
    for cmd in ["synth", "featurize", "evaluate", "plot"] {
        ok(&[cmd, "--help"]);
    }
}
