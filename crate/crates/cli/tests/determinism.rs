//! Every subcommand, run twice with the same seed and configuration, must
//! write byte-identical files.

mod common;

use std::process::Command;

use common::{cimon, p, pipeline, snapshot, BIN};

#[test]
fn every_subcommand_is_bitwise_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = pipeline(a.path());
    let rb = pipeline(b.path());
    for ((cmd, da), (_, db)) in ra.iter().zip(&rb) {
        let (sa, sb) = (snapshot(da), snapshot(db));
        assert!(sa.contains_key("manifest.json"), "{cmd} wrote no manifest");
        assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>(), "{cmd}: file sets differ");
        for (name, bytes) in &sa {
            assert!(bytes == &sb[name], "{cmd}/{name} differs between runs");
        }
    }
    let ablation = std::fs::read_to_string(a.path().join("ablate/ablation.csv")).unwrap();
    assert_eq!(ablation.lines().count(), 1 + 5 * 2);
}

#[test]
fn thread_budget_does_not_change_ablation() {
    let root = tempfile::tempdir().unwrap();
    let r = root.path();
    cimon(&[
        "synth",
        "--clusters",
        "3",
        "--per-cluster",
        "20",
        "--queries",
        "4",
        "--dim",
        "8",
        "--out-dir",
        &p(r, "d"),
    ]);
    let run = |threads: &str, out: &str| {
        let status = Command::new(BIN)
            .args([
                "ablate",
                "--features",
                &p(r, "d/features.cimf"),
                "--labels",
                &p(r, "d/labels.ciml"),
                "--queries",
                &p(r, "d/queries.cimf"),
                "--query-labels",
                &p(r, "d/query_labels.ciml"),
                "--set",
                "epochs=2",
                "--set",
                "hidden=16",
                "--set",
                "k=5",
                "--out-dir",
                &p(r, out),
            ])
            .env("CIMON_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(r.join(out).join("ablation.csv")).unwrap()
    };
    assert_eq!(run("1", "one"), run("5", "five"));
}
