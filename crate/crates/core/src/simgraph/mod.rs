//! Semantic information mined from features: cosine distances, the ±1
//! pseudo-graph, spectral-cluster refinement, the two-lobe distance fit and
//! per-pair confidence weights.

mod confidence;
mod distance;
mod fit;
mod kmeans;
mod sidecar;
mod spectral;

use ndarray::{Array2, Zip};
use thiserror::Error;

pub use confidence::{confidence_weights, ConfidenceModel};
pub use distance::{cosine_distances, DistanceMatrix};
pub use fit::{fit_half_gaussians, HalfGaussianFit};
pub use kmeans::{kmeans, KMeansResult};
pub use sidecar::{read_semantic_info, write_semantic_info, SEMANTIC_MAGIC};
pub use spectral::{spectral_cluster, spectral_cluster_distances, spectral_embedding};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("all-zero feature row {0}")]
    ZeroRow(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("eigensolver did not converge")]
    EigenFailure,
    #[error("need at least 6 distinct pairs to fit, got {0}")]
    InsufficientPairs(usize),
    #[error("malformed semantic sidecar: {0}")]
    MalformedSidecar(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Pseudo-graph over item pairs: `+1` where the pair is within the distance
/// threshold, `-1` otherwise. Symmetric with `+1` on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoGraph {
    pub s: Array2<i8>,
    pub t: f64,
}

impl PseudoGraph {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }
}

pub fn build_pseudo_graph(dist: &DistanceMatrix, t: f64) -> Result<PseudoGraph, GraphError> {
    check_threshold(t)?;
    let n = dist.n();
    let s = Array2::from_shape_fn((n, n), |(i, j)| if i == j || dist.get(i, j) <= t { 1 } else { -1 });
    Ok(PseudoGraph { s, t })
}

pub(crate) fn check_threshold(t: f64) -> Result<(), GraphError> {
    if t > 0.0 && t < 2.0 {
        Ok(())
    } else {
        Err(GraphError::InvalidParameter(format!("threshold t must lie in (0,2), got {t}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub labels: Vec<u32>,
    pub k: usize,
}

impl ClusterAssignment {
    pub fn n(&self) -> usize {
        self.labels.len()
    }
}

/// Refined graph over `{-1, 0, +1}`. A zero marks a pair whose local and
/// global similarity signals disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedGraph {
    pub s_hat: Array2<i8>,
}

impl RefinedGraph {
    pub fn n(&self) -> usize {
        self.s_hat.nrows()
    }

    /// The pseudo-graph taken as-is, for runs without global refinement.
    pub fn unrefined(s: &PseudoGraph) -> Self {
        Self { s_hat: s.s.clone() }
    }
}

/// Keeps `+1` only inside a cluster and `-1` only across clusters.
pub fn refine_graph(s: &PseudoGraph, clusters: &ClusterAssignment) -> Result<RefinedGraph, GraphError> {
    let n = s.n();
    if clusters.n() != n {
        return Err(GraphError::InvalidParameter(format!(
            "pseudo-graph has {n} items, clustering has {}",
            clusters.n()
        )));
    }
    let c = &clusters.labels;
    let s_hat = Array2::from_shape_fn((n, n), |(i, j)| {
        let same = c[i] == c[j];
        match (i == j, s.s[[i, j]], same) {
            (true, _, _) => 1,
            (false, 1, true) => 1,
            (false, -1, false) => -1,
            _ => 0,
        }
    });
    Ok(RefinedGraph { s_hat })
}

/// Per-pair confidence in `[0, 1]`, zero wherever the refined graph is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMatrix {
    pub w: Array2<f32>,
}

impl ConfidenceMatrix {
    /// Unit weight on every pair the graph keeps.
    pub fn indicator(g: &RefinedGraph) -> Self {
        Self { w: g.s_hat.mapv(|s| if s == 0 { 0.0 } else { 1.0 }) }
    }
}

/// Guidance for one augmented view.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticInfo {
    pub refined: RefinedGraph,
    pub weights: ConfidenceMatrix,
    pub fit: HalfGaussianFit,
    pub clusters: ClusterAssignment,
    pub t: f64,
}

impl SemanticInfo {
    pub fn n(&self) -> usize {
        self.refined.n()
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.n();
        if self.weights.w.dim() != (n, n) || self.clusters.n() != n {
            return Err(GraphError::InvalidParameter("semantic info components disagree on n".into()));
        }
        let mut bad = None;
        Zip::indexed(&self.refined.s_hat).and(&self.weights.w).for_each(|(i, j), &s, &w| {
            let ok = (-1..=1).contains(&s)
                && (0.0..=1.0).contains(&w)
                && (s != 0 || w == 0.0)
                && self.refined.s_hat[[j, i]] == s
                && self.weights.w[[j, i]] == w;
            if !ok && bad.is_none() {
                bad = Some((i, j));
            }
        });
        match bad {
            Some((i, j)) => Err(GraphError::InvalidParameter(format!("inconsistent entry at ({i},{j})"))),
            None => Ok(()),
        }
    }
}

/// Everything mined from one view before the ablation switches decide how
/// much of it the loss sees.
#[derive(Debug, Clone)]
pub struct MinedView {
    pub distances: DistanceMatrix,
    pub pseudo: PseudoGraph,
    pub clusters: ClusterAssignment,
    pub fit: HalfGaussianFit,
}

impl MinedView {
    pub fn mine(features: &Array2<f32>, t: f64, k: usize, seed: u64) -> Result<Self, GraphError> {
        check_threshold(t)?;
        let distances = cosine_distances(features)?;
        let pseudo = build_pseudo_graph(&distances, t)?;
        let clusters = spectral_cluster_distances(&distances, k, seed)?;
        let fit = fit_half_gaussians(&distances)?;
        Ok(Self { distances, pseudo, clusters, fit })
    }

    /// `refine = false` keeps the raw pseudo-graph; `confidence = false`
    /// replaces the weights by the indicator of kept pairs.
    pub fn semantic_info(&self, refine: bool, confidence: bool) -> Result<SemanticInfo, GraphError> {
        let refined =
            if refine { refine_graph(&self.pseudo, &self.clusters)? } else { RefinedGraph::unrefined(&self.pseudo) };
        let weights = if confidence {
            confidence_weights(&self.distances, &refined, self.pseudo.t, &self.fit)?
        } else {
            ConfidenceMatrix::indicator(&refined)
        };
        Ok(SemanticInfo { refined, weights, fit: self.fit, clusters: self.clusters.clone(), t: self.pseudo.t })
    }
}

/// Distances, pseudo-graph, spectral refinement, distance fit and confidence
/// weights for one view, in that order.
pub fn generate_semantic_info(features: &Array2<f32>, t: f64, k: usize, seed: u64) -> Result<SemanticInfo, GraphError> {
    MinedView::mine(features, t, k, seed)?.semantic_info(true, true)
}
