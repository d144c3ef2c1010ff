//! End-to-end runs through the public API, including every on-disk format.

use cimon::evalkit::{evaluate, hamming_rank, pr_curve, relevance_lists, robustness_eval, EvalConfig};
use cimon::hashnet::{read_checkpoint, read_codes, to_f64, write_checkpoint, write_codes};
use cimon::ingest::{
    augment_features, load_feature_views, load_features, load_labels, make_synthetic, split_per_class, write_features,
    write_labels, AugmentConfig,
};
use cimon::simgraph::{generate_semantic_info, read_semantic_info, write_semantic_info};
use cimon::trainer::{train, TrainConfig, Variant};
use proptest::prelude::*;

fn small_cfg(seed: u64) -> TrainConfig {
    TrainConfig { k: 8, hidden: vec![64], epochs: 40, batch_size: 16, code_len: 16, seed, ..TrainConfig::default() }
}

#[test]
fn train_save_reload_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let (set, labels) = make_synthetic(4, 40, 16, 10.0, 3).unwrap();
    let ((db, db_l), (q, q_l)) = split_per_class(&set, &labels, 10).unwrap();

    // Features and labels survive the binary formats.
    let fpath = dir.path().join("db.cimf");
    let lpath = dir.path().join("db.ciml");
    write_features(std::fs::File::create(&fpath).unwrap(), &db).unwrap();
    write_labels(std::fs::File::create(&lpath).unwrap(), &db_l).unwrap();
    assert_eq!(load_features(&fpath).unwrap(), db);
    assert_eq!(load_labels(&lpath).unwrap(), db_l);

    let views = augment_features(&db.views[0], &AugmentConfig::new(0.3, 0.1, 3)).unwrap();
    let two = dir.path().join("views.cimf");
    write_features(std::fs::File::create(&two).unwrap(), &views.clone().into_set()).unwrap();
    assert_eq!(load_feature_views(&two).unwrap(), views);

    let (model, codes, report) = train(&views, &small_cfg(3)).unwrap();
    assert_eq!(report.semantic_passes, 2);
    assert!(report.history.last().unwrap().total < report.history[0].total);

    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &model).unwrap();
    let back = read_checkpoint(&buf).unwrap();
    assert_eq!(back.encode(to_f64(&views.view1).view()).unwrap(), codes);

    let mut cbuf = Vec::new();
    write_codes(&mut cbuf, &codes).unwrap();
    assert_eq!(read_codes(&cbuf).unwrap(), codes);

    let db_codes = model.encode(to_f64(&db.views[0]).view()).unwrap();
    let q_codes = model.encode(to_f64(&q.views[0]).view()).unwrap();
    let rep = evaluate(&q_codes, &db_codes, &q_l, &db_l, &EvalConfig::default()).unwrap();
    assert!(rep.map > 0.8, "map {}", rep.map);
    assert_eq!(rep.pr_points.len(), 101);
    assert_eq!(rep.topn_points.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1, 5, 10, 20, 50, 100]);

    let rob = robustness_eval(
        &model,
        &q.views[0],
        &q_l,
        &db_codes,
        &db_l,
        &AugmentConfig::identity(),
        &EvalConfig::default(),
    )
    .unwrap();
    assert_eq!(rob.changed_bits_histogram[0], q.n());
    assert_eq!(rob.map_before, rep.map);
}

#[test]
fn semantic_sidecar_round_trip() {
    let (set, _) = make_synthetic(3, 20, 8, 6.0, 9).unwrap();
    let info = generate_semantic_info(&set.views[0], 0.1, 4, 9).unwrap();
    info.validate().unwrap();
    let mut buf = Vec::new();
    write_semantic_info(&mut buf, &info).unwrap();
    assert_eq!(read_semantic_info(&buf).unwrap(), info);
}

#[test]
fn every_variant_trains() {
    let (set, _) = make_synthetic(3, 20, 8, 6.0, 2).unwrap();
    let views = augment_features(&set.views[0], &AugmentConfig::default()).unwrap();
    for v in Variant::ALL {
        let cfg = TrainConfig { epochs: 2, ..small_cfg(2).with_variant(v) };
        let (_, codes, rep) = train(&views, &cfg).unwrap();
        assert_eq!(codes.len(), 60);
        let last = rep.history.last().unwrap();
        assert_eq!(last.csc == 0.0, !cfg.ablation.semantic_consistency, "{v:?}");
        assert_eq!(last.cc == 0.0, !cfg.ablation.contrastive, "{v:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn metrics_stay_in_range(seed in any::<u64>(), n in 2usize..40, l in 1usize..24) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut codes = |rows: usize| cimon::BinaryCodes::new(
            ndarray::Array2::from_shape_fn((rows, l), |_| if rng.random::<bool>() { 1i8 } else { -1 })).unwrap();
        let db = codes(n);
        let q = codes(5);
        let dl = cimon::LabelVector::single((0..n as u32).map(|i| i % 3));
        let ql = cimon::LabelVector::single([0, 1, 2, 0, 1]);
        let rep = evaluate(&q, &db, &ql, &dl, &EvalConfig { topn_grid: vec![1, n], ..EvalConfig::default() }).unwrap();
        prop_assert!((0.0..=1.0).contains(&rep.map));
        prop_assert!(rep.per_query_ap.iter().all(|a| (0.0..=1.0).contains(a)));
        let rel = relevance_lists(&hamming_rank(&q, &db).unwrap(), &ql, &dl).unwrap();
        let pr = pr_curve(&rel);
        for w in pr.windows(2) {
            prop_assert!(w[1].1 <= w[0].1);
        }
    }
}
