use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_cimon");

fn status(args: &[&str]) -> i32 {
    Command::new(BIN).args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_string_lossy().into_owned();
    assert_eq!(status(&["synth", "--per-cluster", "10", "--dim", "4", "--out-dir", &format!("{d}/s")]), 0);
    let feats = format!("{d}/s/features.cimf");
    // Unknown flag (clap), bad config values, too many clusters for the data.
    assert_eq!(status(&["train", "--bogus"]), 2);
    assert_eq!(status(&["train", "--features", &feats, "--set", "tau=0", "--out-dir", &d]), 2);
    assert_eq!(status(&["train", "--features", &feats, "--set", "nonsense=1", "--out-dir", &d]), 2);
    assert_eq!(status(&["train", "--features", &feats, "--set", "k=40", "--out-dir", &d]), 2);
    // A malformed feature file is invalid input, not a crash.
    let junk = format!("{d}/junk.cimf");
    std::fs::write(&junk, b"not a feature file").unwrap();
    assert_eq!(status(&["encode", "--model", &junk, "--features", &junk, "--out-dir", &d]), 2);
    assert_eq!(status(&["train", "--features", &junk, "--out-dir", &d]), 2);
}

#[test]
fn missing_files_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_string_lossy().into_owned();
    assert_eq!(
        status(&["encode", "--model", "/nonexistent/m.cimm", "--features", "/nonexistent/f", "--out-dir", &d]),
        1
    );
}

#[test]
fn code_length_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_string_lossy().into_owned();
    let train = |l: &str, out: &str| {
        status(&[
            "train",
            "--features",
            &format!("{d}/s/features.cimf"),
            "--set",
            "epochs=1",
            "--set",
            "hidden=8",
            "--set",
            "k=4",
            "--set",
            &format!("code_len={l}"),
            "--out-dir",
            &format!("{d}/{out}"),
        ])
    };
    assert_eq!(status(&["synth", "--per-cluster", "10", "--dim", "4", "--out-dir", &format!("{d}/s")]), 0);
    assert_eq!(train("8", "a"), 0);
    assert_eq!(train("12", "b"), 0);
    let labels = format!("{d}/s/labels.ciml");
    assert_eq!(
        status(&[
            "eval",
            "--queries",
            &format!("{d}/a/codes.cimb"),
            "--database",
            &format!("{d}/b/codes.cimb"),
            "--query-labels",
            &labels,
            "--db-labels",
            &labels,
            "--out-dir",
            &format!("{d}/e"),
        ]),
        2
    );
}
