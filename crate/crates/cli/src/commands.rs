use std::path::Path;

use cimon::evalkit::{evaluate, robustness_eval, EvalConfig};
use cimon::hashnet::{read_checkpoint, read_codes, to_f64, write_checkpoint, write_codes, BinaryCodes, HashModel};
use cimon::ingest::{
    make_synthetic, read_features, read_labels, split_per_class, write_features, write_labels, AugmentConfig,
    FeatureSet, FeatureViewPair, LabelVector,
};
use cimon::simgraph::write_semantic_info;
use cimon::trainer::{ablation_suite, AblationData, AblationRow, MinedPair, TrainConfig, Variant};
use ndarray::Array2;
use serde_json::json;

use crate::error::CliError;
use crate::manifest::Run;
use crate::{plot as svg, AblateArgs, CodesFrom, ConfigArgs, EncodeArgs, EvalArgs, MineArgs, PlotArgs};
use crate::{RobustnessArgs, SynthArgs, TrainArgs};

fn bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to a Vec cannot fail");
    buf
}

fn json_bytes(v: &serde_json::Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s.into_bytes()
}

fn features(run: &mut Run, path: &Path) -> Result<FeatureSet, CliError> {
    Ok(read_features(&run.read(path)?)?)
}

fn labels(run: &mut Run, path: &Path) -> Result<LabelVector, CliError> {
    Ok(read_labels(&run.read(path)?)?)
}

fn codes(run: &mut Run, path: &Path) -> Result<BinaryCodes, CliError> {
    Ok(read_codes(&run.read(path)?)?)
}

fn model(run: &mut Run, path: &Path) -> Result<HashModel, CliError> {
    Ok(read_checkpoint(&run.read(path)?)?)
}

/// Loads the configuration file (if any) and applies `--set` overrides.
fn train_config(run: &mut Run, args: &ConfigArgs) -> Result<TrainConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = String::from_utf8(run.read(p)?)
                .map_err(|_| CliError::Usage(format!("{}: config is not UTF-8", p.display())))?;
            TrainConfig::from_kv(&text)?
        }
        None => TrainConfig::default(),
    };
    for o in &args.overrides {
        let (k, v) = o.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {o:?}")))?;
        cfg.set(k.trim(), v.trim()).map_err(CliError::Usage)?;
    }
    cfg.validate()?;
    run.param("noise_sigma", args.noise_sigma).param("dropout_rate", args.dropout_rate);
    for line in cfg.to_kv().lines() {
        if let Some((k, v)) = line.split_once('=') {
            run.param(k, v);
        }
    }
    Ok(cfg)
}

/// Two views for training plus the single base view when augmentation was
/// applied.
fn training_views(
    set: FeatureSet,
    args: &ConfigArgs,
    seed: u64,
) -> Result<(FeatureViewPair, Option<Array2<f32>>), CliError> {
    let base = (set.views.len() == 1).then(|| set.views[0].clone());
    let pair = set.into_pair(&AugmentConfig::new(args.noise_sigma, args.dropout_rate, seed))?;
    Ok((pair, base))
}

pub fn synth(a: SynthArgs) -> Result<(), CliError> {
    let mut run = Run::new("synth", &a.out_dir);
    run.param("clusters", a.clusters)
        .param("per_cluster", a.per_cluster)
        .param("queries", a.queries)
        .param("dim", a.dim)
        .param("separation", a.separation)
        .param("seed", a.seed);
    let (set, lab) = make_synthetic(a.clusters, a.per_cluster + a.queries, a.dim, a.separation, a.seed)?;
    if a.queries == 0 {
        run.output("features.cimf", bytes(|b| write_features(b, &set)));
        run.output("labels.ciml", bytes(|b| write_labels(b, &lab)));
    } else {
        let ((db, db_l), (q, q_l)) = split_per_class(&set, &lab, a.queries)?;
        run.output("features.cimf", bytes(|b| write_features(b, &db)));
        run.output("labels.ciml", bytes(|b| write_labels(b, &db_l)));
        run.output("queries.cimf", bytes(|b| write_features(b, &q)));
        run.output("query_labels.ciml", bytes(|b| write_labels(b, &q_l)));
    }
    run.finish()
}

pub fn mine(a: MineArgs) -> Result<(), CliError> {
    let mut run = Run::new("mine", &a.out_dir);
    let cfg = train_config(&mut run, &a.cfg)?;
    let set = features(&mut run, &a.features)?;
    let (views, _) = training_views(set, &a.cfg, cfg.seed)?;
    let mined = MinedPair::mine(&views, &cfg)?;
    let (info1, info2) = mined.semantic_info(cfg.ablation)?;
    run.output("semantic_view1.cims", bytes(|b| write_semantic_info(b, &info1)));
    run.output("semantic_view2.cims", bytes(|b| write_semantic_info(b, &info2)));
    let fit =
        |f: cimon::simgraph::HalfGaussianFit| json!({"m1": f.m1, "sigma1": f.sigma1, "m2": f.m2, "sigma2": f.sigma2});
    run.output("fit.json", json_bytes(&json!({"view1": fit(info1.fit), "view2": fit(info2.fit)})));
    run.finish()
}

pub fn train(a: TrainArgs) -> Result<(), CliError> {
    let mut run = Run::new("train", &a.out_dir);
    let cfg = train_config(&mut run, &a.cfg)?;
    run.param("codes_from", format!("{:?}", a.codes_from).to_lowercase());
    let set = features(&mut run, &a.features)?;
    let (views, base) = training_views(set, &a.cfg, cfg.seed)?;
    let (model, codes, report) = cimon::trainer::train(&views, &cfg)?;
    let codes = match a.codes_from {
        CodesFrom::View1 => codes,
        CodesFrom::Base => {
            let base =
                base.ok_or_else(|| CliError::Usage("--codes-from base needs a single-view feature file".to_string()))?;
            model.encode(to_f64(&base).view())?
        }
    };
    run.output("model.cimm", bytes(|b| write_checkpoint(b, &model)));
    run.output("codes.cimb", bytes(|b| write_codes(b, &codes)));
    run.output("train.log", report.log().into_bytes());
    run.output("config.txt", cfg.to_kv().into_bytes());
    run.finish()
}

pub fn encode(a: EncodeArgs) -> Result<(), CliError> {
    let mut run = Run::new("encode", &a.out_dir);
    let model = model(&mut run, &a.model)?;
    let set = features(&mut run, &a.features)?;
    let codes = model.encode(to_f64(&set.views[0]).view())?;
    run.output("codes.cimb", bytes(|b| write_codes(b, &codes)));
    run.finish()
}

fn eval_config(r: Option<usize>, topn: Vec<usize>) -> EvalConfig {
    EvalConfig { r, topn_grid: topn, ..EvalConfig::default() }
}

pub fn eval(a: EvalArgs) -> Result<(), CliError> {
    let mut run = Run::new("eval", &a.out_dir);
    run.param("r", a.r.map_or_else(|| "all".to_string(), |r| r.to_string()));
    run.param("topn", a.topn.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
    let q = codes(&mut run, &a.queries)?;
    let db = codes(&mut run, &a.database)?;
    let ql = labels(&mut run, &a.query_labels)?;
    let dl = labels(&mut run, &a.db_labels)?;
    // Grid values beyond the database are dropped; zero is never meaningful.
    if let Some(&n) = a.topn.iter().find(|&&n| n == 0) {
        return Err(cimon::evalkit::EvalError::GridOutOfRange { n, db: db.len() }.into());
    }
    let cfg = eval_config(a.r, a.topn);
    let rep = evaluate(&q, &db, &ql, &dl, &cfg)?;
    let mut ap = String::from("query,ap\n");
    for (i, v) in rep.per_query_ap.iter().enumerate() {
        ap.push_str(&format!("{i},{v}\n"));
    }
    run.output("pr.csv", rep.pr_csv().into_bytes());
    run.output("topn.csv", rep.topn_csv().into_bytes());
    run.output("ap.csv", ap.into_bytes());
    run.output(
        "summary.json",
        json_bytes(&json!({
            "map": rep.map,
            "r": cfg.cutoff(db.len()),
            "queries": q.len(),
            "database": db.len(),
            "code_len": db.code_len(),
        })),
    );
    run.finish()
}

pub fn robustness(a: RobustnessArgs) -> Result<(), CliError> {
    let mut run = Run::new("robustness", &a.out_dir);
    run.param("noise_sigma", a.noise_sigma).param("dropout_rate", a.dropout_rate).param("seed", a.seed);
    let model = model(&mut run, &a.model)?;
    let q = features(&mut run, &a.queries)?;
    let ql = labels(&mut run, &a.query_labels)?;
    let db = codes(&mut run, &a.database)?;
    let dl = labels(&mut run, &a.db_labels)?;
    let noise = AugmentConfig::new(a.noise_sigma, a.dropout_rate, a.seed);
    let cfg = eval_config(a.r, Vec::new());
    let rep = robustness_eval(&model, &q.views[0], &ql, &db, &dl, &noise, &cfg)?;
    run.output("changed_bits.csv", rep.histogram_csv().into_bytes());
    run.output("bit_balance.csv", rep.balance_csv().into_bytes());
    run.output(
        "summary.json",
        json_bytes(&json!({
            "map_before": rep.map_before,
            "map_after": rep.map_after,
            "median_changed_bits": rep.median_changed_bits(),
            "queries": rep.changed_bits.len(),
            "code_len": model.code_len(),
        })),
    );
    run.finish()
}

/// Worker count for ablation runs: `CIMON_THREADS` if set, otherwise all
/// available cores. Results do not depend on it.
fn thread_budget() -> usize {
    std::env::var("CIMON_THREADS")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn ablate(a: AblateArgs) -> Result<(), CliError> {
    let mut run = Run::new("ablate", &a.out_dir);
    let cfg = train_config(&mut run, &a.cfg)?;
    let variants = a
        .variants
        .iter()
        .map(|v| Variant::parse(v).ok_or_else(|| CliError::Usage(format!("unknown variant {v:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if a.code_lens.contains(&0) {
        return Err(CliError::Usage("code lengths must be >= 1".into()));
    }
    run.param("variants", variants.iter().map(|v| v.name()).collect::<Vec<_>>().join(","));
    run.param("code_lens", a.code_lens.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(","));
    run.param("r", a.r.map_or_else(|| "all".to_string(), |r| r.to_string()));
    let set = features(&mut run, &a.features)?;
    let db_labels = labels(&mut run, &a.labels)?;
    let queries = features(&mut run, &a.queries)?;
    let query_labels = labels(&mut run, &a.query_labels)?;
    let (views, base) = training_views(set, &a.cfg, cfg.seed)?;
    let database = base.unwrap_or_else(|| views.view1.clone());
    let data = AblationData {
        views: &views,
        database: &database,
        db_labels: &db_labels,
        queries: &queries.views[0],
        query_labels: &query_labels,
    };
    let rows = ablation_suite(data, &cfg, &variants, &a.code_lens, &eval_config(a.r, Vec::new()), thread_budget())?;
    let mut csv = format!("{}\n", AblationRow::CSV_HEADER);
    for r in &rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    run.output("ablation.csv", csv.into_bytes());
    run.finish()
}

pub fn plot(a: PlotArgs) -> Result<(), CliError> {
    let mut run = Run::new("plot", &a.out_dir);
    let data = run.read(&a.csv)?;
    let table = svg::Table::parse(&data).map_err(|message| CliError::Csv { path: a.csv.clone(), message })?;
    let y = a.y.clone().unwrap_or_else(|| table.headers.last().cloned().unwrap_or_default());
    let stem = a.csv.file_stem().map_or_else(|| "plot".to_string(), |s| s.to_string_lossy().into_owned());
    let title = a.title.clone().unwrap_or_else(|| stem.clone());
    run.param("y", &y).param("title", &title);
    let doc = svg::render(&table, &y, &title).map_err(|message| CliError::Csv { path: a.csv.clone(), message })?;
    run.output(&format!("{stem}.svg"), doc.into_bytes());
    run.finish()
}
