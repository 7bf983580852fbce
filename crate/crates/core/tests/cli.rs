use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn expgraph(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expgraph"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = expgraph(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Every file under `root`, keyed by relative path.
fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const TINY: &[&str] = &["--landmarks", "10", "--feature-dim", "8"];
const FAST: &[&str] = &["--hidden", "16", "--epochs", "4"];

fn synth_tiny(dir: &Path, name: &str, extra: &[&str]) {
    let mut args = vec!["synth", "--out-dir", name];
    args.extend_from_slice(TINY);
    if extra.is_empty() {
        args.extend_from_slice(&["--per-class", "6"]);
    }
    args.extend_from_slice(extra);
    ok(dir, &args);
}

#[test]
fn synth_counts_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "synth",
        "--classes",
        "6",
        "--per-class",
        "20",
        "--seed",
        "1000",
        "--images",
    ];
    ok(d, &[&args[..], &["--out-dir", "a"]].concat());
    ok(d, &[&args[..], &["--out-dir", "b"]].concat());
    let manifest = json(&d.join("a/manifest.json"));
    assert_eq!(manifest["samples"].as_array().unwrap().len(), 120);
    let (a, b) = (tree(&d.join("a")), tree(&d.join("b")));
    let strip = |t: BTreeMap<PathBuf, Vec<u8>>| {
        t.into_iter()
            .filter(|(p, _)| p != Path::new("effective_config.json"))
            .collect::<BTreeMap<_, _>>()
    };
    assert_eq!(strip(a), strip(b));
    assert!(d.join("a/images/c0_s0000.pgm").exists());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = expgraph(d, &["synth", "--per-class", "0", "--out-dir", "x"]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("samples_per_class"),
        "{}",
        stderr(&out)
    );

    assert_eq!(code(&expgraph(d, &["train"])), 1, "no dataset");
    assert_eq!(code(&expgraph(d, &["frobnicate"])), 1);
    assert_eq!(code(&expgraph(d, &["train", "--tau", "abc"])), 1);
    assert_eq!(code(&expgraph(d, &["--help"])), 0);
    assert_eq!(code(&expgraph(d, &["--version"])), 0);

    fs::write(d.join("bad.json"), r#"{"epoch": 3}"#).unwrap();
    let out = expgraph(d, &["--config", "bad.json", "synth"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("epoch"));
}

#[test]
fn data_and_numeric_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = expgraph(d, &["train", "--dataset", "missing/manifest.json"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("missing/manifest.json"));

    synth_tiny(d, "data", &[]);
    let out = expgraph(
        d,
        &[
            "eval",
            "--dataset",
            "data/manifest.json",
            "--checkpoint",
            "nope.bin",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nope.bin"));

    let out = expgraph(
        d,
        &[
            "train",
            "--dataset",
            "data/manifest.json",
            "--out-dir",
            "t",
            "--hidden",
            "8",
            "--epochs",
            "3",
            "--lr",
            "1e300",
            "--lr-min",
            "1e300",
        ],
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn train_eval_and_exports_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_tiny(d, "data", &[]);
    let mut train = vec![
        "train",
        "--dataset",
        "data/manifest.json",
        "--out-dir",
        "run",
    ];
    train.extend_from_slice(FAST);
    ok(d, &train);
    for f in [
        "checkpoint.bin",
        "history.csv",
        "metrics.json",
        "metrics.txt",
        "effective_config.json",
    ] {
        assert!(d.join("run").join(f).exists(), "{f}");
    }
    let history = fs::read_to_string(d.join("run/history.csv")).unwrap();
    assert_eq!(history.lines().next(), Some("epoch,lr,loss,accuracy"));
    assert_eq!(history.lines().count(), 5);

    ok(
        d,
        &[
            "eval",
            "--dataset",
            "data/manifest.json",
            "--checkpoint",
            "run/checkpoint.bin",
            "--out-dir",
            "ev",
        ],
    );
    let trained = json(&d.join("run/metrics.json"));
    let evaluated = json(&d.join("ev/eval_metrics.json"));
    assert_eq!(
        trained["metrics"], evaluated,
        "reloaded checkpoint evaluates identically"
    );

    ok(
        d,
        &[
            "export-embeddings",
            "--dataset",
            "data/manifest.json",
            "--checkpoint",
            "run/checkpoint.bin",
            "--out-dir",
            "emb",
        ],
    );
    let emb = fs::read_to_string(d.join("emb/embeddings.csv")).unwrap();
    assert_eq!(emb.lines().count(), 36 + 1);
    assert_eq!(emb.lines().next().unwrap().split(',').count(), 3 + 16);

    ok(
        d,
        &[
            "build-graph",
            "--dataset",
            "data/manifest.json",
            "--out-dir",
            "g",
        ],
    );
    ok(
        d,
        &[
            "export-graph",
            "--dataset",
            "data/manifest.json",
            "--out-dir",
            "g",
            "--format",
            "json",
        ],
    );
    let summary = fs::read_to_string(d.join("g/graphs.csv")).unwrap();
    for line in summary.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let graph = json(&d.join(format!("g/graphs/{}.json", cols[0])));
        assert_eq!(
            graph["edges"].as_array().unwrap().len().to_string(),
            cols[3]
        );
    }
}

#[test]
fn zero_epochs_writes_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_tiny(d, "data", &[]);
    ok(
        d,
        &[
            "train",
            "--dataset",
            "data/manifest.json",
            "--out-dir",
            "z",
            "--epochs",
            "0",
            "--hidden",
            "8",
        ],
    );
    assert_eq!(
        fs::read_to_string(d.join("z/history.csv")).unwrap(),
        "epoch,lr,loss,accuracy\n"
    );
    assert!(d.join("z/checkpoint.bin").exists());
    assert_eq!(
        json(&d.join("z/metrics.json"))["final_train_loss"],
        Value::Null
    );
}

#[test]
fn runs_repeat_exactly_for_any_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_tiny(d, "data", &[]);
    let mut outputs = vec![];
    for (name, threads) in [("r1", "1"), ("r2", "1"), ("r3", "3")] {
        let mut args = vec![
            "train",
            "--dataset",
            "data/manifest.json",
            "--out-dir",
            name,
            "--threads",
            threads,
        ];
        args.extend_from_slice(FAST);
        ok(d, &args);
        let run = d.join(name);
        outputs.push((
            fs::read(run.join("history.csv")).unwrap(),
            fs::read(run.join("checkpoint.bin")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn config_file_precedence_and_echo() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_tiny(d, "data", &[]);
    fs::write(
        d.join("run.json"),
        r#"{"dataset": "data/manifest.json", "tau": 0.3, "epochs": 2, "hidden": 8, "out-dir": "from-file"}"#,
    )
    .unwrap();
    ok(d, &["--config", "run.json", "train", "--tau", "0.7"]);
    let cfg = json(&d.join("from-file/effective_config.json"));
    assert_eq!(cfg["tau"], 0.7);
    assert_eq!(cfg["epochs"], 2);
    assert_eq!(cfg["hidden"], 8);
    assert_eq!(cfg["lr"], 0.001);
    assert_eq!(cfg["seed"], 1000);
    assert_eq!(
        fs::read_to_string(d.join("from-file/history.csv"))
            .unwrap()
            .lines()
            .count(),
        3
    );
}

fn sweep_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn tau_sweep_has_nine_rows_with_nonincreasing_edges() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_tiny(d, "data", &[]);
    ok(
        d,
        &[
            "sweep",
            "--dataset",
            "data/manifest.json",
            "--out-dir",
            "s",
            "--epochs",
            "1",
            "--hidden",
            "8",
        ],
    );
    let text = fs::read_to_string(d.join("s/sweep.csv")).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("param,value,Acc,F1-Score,WAR,UAR,loss,mean_edges,status")
    );
    let rows = sweep_rows(&d.join("s/sweep.csv"));
    let values: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(
        values,
        ["0.2", "0.25", "0.3", "0.35", "0.4", "0.45", "0.5", "0.7", "0.9"]
    );
    let edges: Vec<f64> = rows.iter().map(|r| r[7].parse().unwrap()).collect();
    assert!(edges.windows(2).all(|w| w[1] <= w[0]), "{edges:?}");
    assert!(rows.iter().all(|r| r[8] == "ok" && r[2] == r[4]));
    assert!(d.join("s/tau_00_0.2/checkpoint.bin").exists());
}

#[test]
fn patch_sweep_has_six_rows_and_records_failures() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth_tiny(d, "imgs", &["--images", "--per-class", "2"]);
    let args = [
        "sweep",
        "--param",
        "patch",
        "--epochs",
        "1",
        "--hidden",
        "8",
        "--encoder-dim",
        "8",
    ];
    ok(
        d,
        &[
            &args[..],
            &["--dataset", "imgs/manifest.json", "--out-dir", "p"],
        ]
        .concat(),
    );
    let rows = sweep_rows(&d.join("p/sweep.csv"));
    let values: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(values, ["10", "20", "30", "50", "70", "90"]);
    assert!(rows.iter().all(|r| r[0] == "patch" && r[8] == "ok"));

    // no images: every point fails, the table is still written, exit is nonzero
    synth_tiny(d, "plain", &[]);
    let out = expgraph(
        d,
        &[
            &args[..],
            &[
                "--dataset",
                "plain/manifest.json",
                "--out-dir",
                "q",
                "--grid",
                "10,20",
            ],
        ]
        .concat(),
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let rows = sweep_rows(&d.join("q/sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert!(rows
        .iter()
        .all(|r| r[8].starts_with("error:") && r[2].is_empty()));
}
