use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ndarray::Array2;

use super::{train_prepared, MinedPair, TrainConfig, TrainError, Variant};
use crate::evalkit::{evaluate, EvalConfig};
use crate::hashnet::{to_f64, HashModel};
use crate::ingest::{FeatureViewPair, LabelVector};

/// Training views plus the labelled retrieval split used to score them.
#[derive(Debug, Clone, Copy)]
pub struct AblationData<'a> {
    pub views: &'a FeatureViewPair,
    /// Features encoded as the retrieval database.
    pub database: &'a Array2<f32>,
    pub db_labels: &'a LabelVector,
    pub queries: &'a Array2<f32>,
    pub query_labels: &'a LabelVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub variant: Variant,
    pub code_len: usize,
    pub map: f64,
    pub final_loss: f64,
}

impl AblationRow {
    pub const CSV_HEADER: &'static str = "variant,refinement,confidence,semantic_consistency,contrastive,code_len,map";

    pub fn csv_line(&self) -> String {
        let a = self.variant.ablation();
        format!(
            "{},{},{},{},{},{},{}",
            self.variant.name(),
            a.refinement as u8,
            a.confidence as u8,
            a.semantic_consistency as u8,
            a.contrastive as u8,
            self.code_len,
            self.map
        )
    }
}

/// Trains every `variant x code_len` combination on shared mined guidance
/// and scores each by MAP. Runs on up to `threads` workers; the output
/// order (variants outer, code lengths inner) and values do not depend on
/// the worker count.
pub fn ablation_suite(
    data: AblationData<'_>,
    base: &TrainConfig,
    variants: &[Variant],
    code_lens: &[usize],
    eval: &EvalConfig,
    threads: usize,
) -> Result<Vec<AblationRow>, TrainError> {
    let mined = MinedPair::mine(data.views, base)?;
    let jobs: Vec<(Variant, usize)> = variants.iter().flat_map(|&v| code_lens.iter().map(move |&l| (v, l))).collect();
    let run = |(variant, code_len): (Variant, usize)| -> Result<AblationRow, TrainError> {
        let cfg = TrainConfig { code_len, ..base.with_variant(variant) };
        let (model, _, report) = train_prepared(data.views, &mined, &cfg)?;
        let map = score(&model, data, eval)?;
        let final_loss = report.history.last().map_or(f64::NAN, |h| h.total);
        Ok(AblationRow { variant, code_len, map, final_loss })
    };

    let threads = threads.clamp(1, jobs.len().max(1));
    if threads == 1 {
        return jobs.into_iter().map(run).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<AblationRow, TrainError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&job) = jobs.get(i) else { break };
                let out = run(job);
                slots.lock().unwrap()[i] = Some(out);
            });
        }
    });
    slots.into_inner().unwrap().into_iter().map(|r| r.expect("every job ran")).collect()
}

fn score(model: &HashModel, data: AblationData<'_>, eval: &EvalConfig) -> Result<f64, TrainError> {
    let db = model.encode(to_f64(data.database).view())?;
    let q = model.encode(to_f64(data.queries).view())?;
    Ok(evaluate(&q, &db, data.query_labels, data.db_labels, eval)?.map)
}
