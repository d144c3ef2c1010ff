//! Orchestrates mining, mini-batch optimization and final encoding.

mod ablation;
mod config;

use std::time::Duration;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use thiserror::Error;

pub use ablation::{ablation_suite, AblationData, AblationRow};
pub use config::{Ablation, TrainConfig, Variant};

use crate::evalkit::EvalError;
use crate::hashnet::{
    init_model, sgd_momentum_step, to_f64, BinaryCodes, ForwardCache, HashError, HashModel, OptimState,
};
use crate::ingest::{FeatureViewPair, IngestError};
use crate::losses::{total_loss, LossBreakdown, LossConfig, LossError, LossTerm};
use crate::rng::{salt, stream};
use crate::simgraph::{GraphError, MinedView, SemanticInfo};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean loss components per epoch.
    pub history: Vec<LossBreakdown>,
    pub batches_per_epoch: usize,
    /// How many times semantic guidance was mined; one per view.
    pub semantic_passes: usize,
    pub wall_time: Duration,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.history.len()
    }

    /// One line per epoch; free of timings so reruns compare equal.
    pub fn log(&self) -> String {
        let mut s = String::new();
        for (e, h) in self.history.iter().enumerate() {
            s.push_str(&format!("epoch={} psc={} csc={} cc={} total={}\n", e + 1, h.psc, h.csc, h.cc, h.total));
        }
        s
    }
}

/// Wall-clock timer that reads zero on targets without a clock
/// (`wasm32-unknown-unknown` panics on `Instant::now`).
struct Stopwatch(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Stopwatch {
    fn start() -> Self {
        Self(
            #[cfg(not(target_arch = "wasm32"))]
            std::time::Instant::now(),
        )
    }

    fn elapsed(&self) -> Duration {
        #[cfg(not(target_arch = "wasm32"))]
        return self.0.elapsed();
        #[cfg(target_arch = "wasm32")]
        Duration::ZERO
    }
}

/// Semantic guidance for both views. Mined once per run and reusable across
/// ablation variants that share `t`, `k` and `seed`.
#[derive(Debug, Clone)]
pub struct MinedPair {
    pub view1: MinedView,
    pub view2: MinedView,
}

impl MinedPair {
    pub fn mine(views: &FeatureViewPair, cfg: &TrainConfig) -> Result<Self, TrainError> {
        cfg.validate_for(views.n())?;
        Ok(Self {
            view1: MinedView::mine(&views.view1, cfg.t, cfg.k, cfg.seed)?,
            view2: MinedView::mine(&views.view2, cfg.t, cfg.k, cfg.seed.wrapping_add(1))?,
        })
    }

    pub fn semantic_info(&self, ablation: Ablation) -> Result<(SemanticInfo, SemanticInfo), TrainError> {
        Ok((
            self.view1.semantic_info(ablation.refinement, ablation.confidence)?,
            self.view2.semantic_info(ablation.refinement, ablation.confidence)?,
        ))
    }
}

/// Mines both views, trains the head and encodes view 1.
pub fn train(views: &FeatureViewPair, cfg: &TrainConfig) -> Result<(HashModel, BinaryCodes, TrainReport), TrainError> {
    let start = Stopwatch::start();
    views.validate()?;
    let mined = MinedPair::mine(views, cfg)?;
    let (model, codes, mut report) = train_prepared(views, &mined, cfg)?;
    report.semantic_passes = 2;
    report.wall_time = start.elapsed();
    Ok((model, codes, report))
}

/// Trains against already-mined guidance. `report.semantic_passes` is 0
/// because nothing is mined here.
pub fn train_prepared(
    views: &FeatureViewPair,
    mined: &MinedPair,
    cfg: &TrainConfig,
) -> Result<(HashModel, BinaryCodes, TrainReport), TrainError> {
    let start = Stopwatch::start();
    let n = views.n();
    cfg.validate_for(n)?;
    if mined.view1.pseudo.n() != n || mined.view2.pseudo.n() != n {
        return Err(TrainError::InvalidConfig(format!(
            "mined guidance covers {} items, views have {n}",
            mined.view1.pseudo.n()
        )));
    }
    let (info1, info2) = mined.semantic_info(cfg.ablation)?;
    let loss_cfg = cfg.loss_config();

    let x1 = to_f64(&views.view1);
    let x2 = to_f64(&views.view2);
    let mut model = init_model(views.d(), &cfg.hidden, cfg.code_len, cfg.seed)?;
    let mut opt = OptimState::new(&model, cfg.learning_rate, cfg.momentum)?;
    let mut rng = stream(cfg.seed, salt::SHUFFLE);
    let mut order: Vec<usize> = (0..n).collect();
    // Incomplete trailing batches are dropped so every step sees M items.
    let batches = n / cfg.batch_size;

    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best = f64::INFINITY;
    let mut stale = 0usize;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = [0.0f64; 4];
        for (b, batch) in order.chunks_exact(cfg.batch_size).enumerate() {
            let step = batch_step(&model, x1.view(), x2.view(), &info1, &info2, batch, &loss_cfg)?;
            let br = step.breakdown;
            if !br.total.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b });
            }
            let mut grads = model.backward(&step.cache1, step.term.grad_v1.view())?;
            if loss_cfg.two_view || loss_cfg.eta > 0.0 {
                grads.add_assign(&model.backward(&step.cache2, step.term.grad_v2.view())?);
            }
            if !grads.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: b });
            }
            sgd_momentum_step(&mut model, &mut opt, &grads)?;
            for (s, v) in sum.iter_mut().zip([br.psc, br.csc, br.cc, br.total]) {
                *s += v;
            }
        }
        let k = batches as f64;
        let mean = LossBreakdown {
            psc: sum[0] / k,
            csc: sum[1] / k,
            cc: sum[2] / k,
            total: sum[3] / k,
            eta: loss_cfg.eta,
            tau: loss_cfg.tau,
        };
        history.push(mean);
        if let Some(patience) = cfg.early_stop_patience {
            if mean.total < best - 1e-9 * best.abs().max(1.0) {
                best = mean.total;
                stale = 0;
            } else {
                stale += 1;
                if stale >= patience {
                    break;
                }
            }
        }
    }

    let codes = model.encode(x1.view())?;
    let report = TrainReport { history, batches_per_epoch: batches, semantic_passes: 0, wall_time: start.elapsed() };
    Ok((model, codes, report))
}

struct Step {
    breakdown: LossBreakdown,
    term: LossTerm,
    cache1: ForwardCache,
    cache2: ForwardCache,
}

fn batch_step(
    model: &HashModel,
    x1: ArrayView2<f64>,
    x2: ArrayView2<f64>,
    info1: &SemanticInfo,
    info2: &SemanticInfo,
    batch: &[usize],
    loss_cfg: &LossConfig,
) -> Result<Step, TrainError> {
    let (v1, c1) = model.forward_relaxed(x1.select(Axis(0), batch).view())?;
    let (v2, c2) = model.forward_relaxed(x2.select(Axis(0), batch).view())?;
    let (breakdown, term) = total_loss(v1.v.view(), v2.v.view(), info1, info2, batch, loss_cfg)?;
    Ok(Step { breakdown, term, cache1: c1, cache2: c2 })
}
