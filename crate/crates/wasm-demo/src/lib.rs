//! Browser bindings for three interactive views of the pipeline: the
//! confidence-weight curve, the half-Gaussian fit of a distance histogram,
//! and a small end-to-end training run on synthetic clusters.
//!
//! Each operation has a plain Rust entry point (tested natively) and a thin
//! `#[wasm_bindgen]` wrapper that turns errors into JS exceptions.

use cimon::evalkit::{evaluate, EvalConfig};
use cimon::hashnet::to_f64;
use cimon::ingest::{augment_features, make_synthetic, split_per_class, AugmentConfig};
use cimon::simgraph::{cosine_distances, fit_half_gaussians, ConfidenceModel, HalfGaussianFit};
use cimon::trainer::{train, TrainConfig, Variant};
use wasm_bindgen::prelude::*;

/// Histogram bins over the cosine-distance range `[0, 2]`.
pub const HIST_BINS: usize = 64;

/// Confidence weight at `points` evenly spaced distances on `[0, 2]`.
pub fn confidence_curve_impl(t: f64, fit: HalfGaussianFit, points: usize) -> Result<Vec<f64>, String> {
    if points < 2 {
        return Err("need at least two points".into());
    }
    let model = ConfidenceModel::new(t, fit).map_err(|e| e.to_string())?;
    Ok((0..points).map(|i| model.weight(2.0 * i as f64 / (points - 1) as f64)).collect())
}

#[wasm_bindgen]
pub fn confidence_curve(t: f64, m1: f64, s1: f64, m2: f64, s2: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let fit = HalfGaussianFit { m1, sigma1: s1, m2, sigma2: s2 };
    confidence_curve_impl(t, fit, points).map_err(|e| JsError::new(&e))
}

/// Pairwise-distance histogram of a synthetic set and its two-lobe fit.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct DistanceFit {
    counts: Vec<u32>,
    fit: HalfGaussianFit,
}

#[wasm_bindgen]
impl DistanceFit {
    /// Counts per bin; bin `b` covers `[b, b + 1) * 2 / HIST_BINS`.
    pub fn counts(&self) -> Vec<u32> {
        self.counts.clone()
    }

    pub fn m1(&self) -> f64 {
        self.fit.m1
    }

    pub fn sigma1(&self) -> f64 {
        self.fit.sigma1
    }

    pub fn m2(&self) -> f64 {
        self.fit.m2
    }

    pub fn sigma2(&self) -> f64 {
        self.fit.sigma2
    }
}

impl DistanceFit {
    pub fn fit(&self) -> HalfGaussianFit {
        self.fit
    }
}

pub fn distance_fit_impl(
    clusters: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<DistanceFit, cimon::Error> {
    let (set, _) = make_synthetic(clusters, per_cluster, dim, separation, seed)?;
    let dist = cosine_distances(&set.views[0])?;
    let fit = fit_half_gaussians(&dist)?;
    let mut counts = vec![0u32; HIST_BINS];
    for d in dist.pairs() {
        counts[((d.clamp(0.0, 2.0) / 2.0 * HIST_BINS as f64) as usize).min(HIST_BINS - 1)] += 1;
    }
    Ok(DistanceFit { counts, fit })
}

#[wasm_bindgen]
pub fn distance_fit(
    clusters: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<DistanceFit, JsError> {
    distance_fit_impl(clusters, per_cluster, dim, separation, seed).map_err(|e| JsError::new(&e.to_string()))
}

/// Outcome of a demo training run.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct DemoRun {
    map: f64,
    recall: Vec<f64>,
    precision: Vec<f64>,
    loss: Vec<f64>,
}

#[wasm_bindgen]
impl DemoRun {
    pub fn map(&self) -> f64 {
        self.map
    }

    pub fn recall(&self) -> Vec<f64> {
        self.recall.clone()
    }

    pub fn precision(&self) -> Vec<f64> {
        self.precision.clone()
    }

    /// Mean total loss per epoch.
    pub fn loss(&self) -> Vec<f64> {
        self.loss.clone()
    }
}

/// Trains one ablation variant on 4 synthetic clusters of 50 points (10 per
/// cluster held out as queries) and scores the held-out queries against the
/// remaining points.
pub fn train_demo_impl(variant: Variant, epochs: usize, code_len: usize, seed: u64) -> Result<DemoRun, cimon::Error> {
    let (set, labels) = make_synthetic(4, 50, 16, 10.0, seed)?;
    let ((db, db_labels), (q, q_labels)) = split_per_class(&set, &labels, 10)?;
    let views = augment_features(&db.views[0], &AugmentConfig::new(0.3, 0.1, seed))?;
    let cfg = TrainConfig { k: 8, hidden: vec![64], batch_size: 16, epochs, code_len, seed, ..TrainConfig::default() }
        .with_variant(variant);
    let (model, _, report) = train(&views, &cfg)?;
    let db_codes = model.encode(to_f64(&db.views[0]).view())?;
    let q_codes = model.encode(to_f64(&q.views[0]).view())?;
    let eval = EvalConfig { topn_grid: vec![1, 10], ..EvalConfig::default() };
    let rep = evaluate(&q_codes, &db_codes, &q_labels, &db_labels, &eval)?;
    Ok(DemoRun {
        map: rep.map,
        recall: rep.pr_points.iter().map(|p| p.0).collect(),
        precision: rep.pr_points.iter().map(|p| p.1).collect(),
        loss: report.history.iter().map(|h| h.total).collect(),
    })
}

#[wasm_bindgen]
pub fn train_demo(variant: &str, epochs: usize, code_len: usize, seed: u64) -> Result<DemoRun, JsError> {
    let v = Variant::parse(variant).ok_or_else(|| JsError::new(&format!("unknown variant {variant:?}")))?;
    train_demo_impl(v, epochs, code_len, seed).map_err(|e| JsError::new(&e.to_string()))
}
