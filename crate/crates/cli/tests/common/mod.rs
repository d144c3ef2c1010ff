//! Shared driver for running the full CLI pipeline in a scratch directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

pub const BIN: &str = env!("CARGO_BIN_EXE_cimon");

pub fn cimon(args: &[&str]) {
    let out = Command::new(BIN).args(args).env("CIMON_THREADS", "2").output().expect("spawn cimon");
    assert!(out.status.success(), "cimon {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

pub fn p(dir: &Path, rel: &str) -> String {
    dir.join(rel).to_string_lossy().into_owned()
}

/// Runs the whole pipeline into `root` and returns each subcommand's output dir.
pub fn pipeline(root: &Path) -> Vec<(&'static str, PathBuf)> {
    let small = ["--set", "epochs=3", "--set", "hidden=32", "--set", "k=8", "--set", "seed=11"];
    cimon(&[
        "synth",
        "--clusters",
        "3",
        "--per-cluster",
        "30",
        "--queries",
        "5",
        "--dim",
        "12",
        "--seed",
        "5",
        "--out-dir",
        &p(root, "synth"),
    ]);
    let feats = p(root, "synth/features.cimf");
    let labels = p(root, "synth/labels.ciml");
    let queries = p(root, "synth/queries.cimf");
    let qlabels = p(root, "synth/query_labels.ciml");

    let mut mine = vec!["mine", "--features", &feats];
    let out = p(root, "mine");
    mine.extend(small);
    mine.extend(["--out-dir", &out]);
    cimon(&mine);

    let mut train = vec!["train", "--features", &feats, "--codes-from", "base"];
    let out = p(root, "train");
    train.extend(small);
    train.extend(["--out-dir", &out]);
    cimon(&train);

    let model = p(root, "train/model.cimm");
    let db = p(root, "train/codes.cimb");
    cimon(&["encode", "--model", &model, "--features", &queries, "--out-dir", &p(root, "encode")]);
    let qcodes = p(root, "encode/codes.cimb");
    cimon(&[
        "eval",
        "--queries",
        &qcodes,
        "--database",
        &db,
        "--query-labels",
        &qlabels,
        "--db-labels",
        &labels,
        "--out-dir",
        &p(root, "eval"),
    ]);
    cimon(&[
        "robustness",
        "--model",
        &model,
        "--queries",
        &queries,
        "--query-labels",
        &qlabels,
        "--database",
        &db,
        "--db-labels",
        &labels,
        "--noise-sigma",
        "0.5",
        "--seed",
        "2",
        "--out-dir",
        &p(root, "robustness"),
    ]);

    let mut ablate =
        vec!["ablate", "--features", &feats, "--labels", &labels, "--queries", &queries, "--query-labels", &qlabels];
    let out = p(root, "ablate");
    ablate.extend(small);
    ablate.extend(["--code-lens", "8,12", "--out-dir", &out]);
    cimon(&ablate);

    cimon(&["plot", "--csv", &p(root, "eval/pr.csv"), "--out-dir", &p(root, "plot")]);
    cimon(&["plot", "--csv", &p(root, "ablate/ablation.csv"), "--y", "map", "--out-dir", &p(root, "plot")]);
    cimon(&["plot", "--csv", &p(root, "train/train.log"), "--y", "total", "--out-dir", &p(root, "plot")]);

    ["synth", "mine", "train", "encode", "eval", "robustness", "ablate", "plot"]
        .into_iter()
        .map(|c| (c, root.join(c)))
        .collect()
}
