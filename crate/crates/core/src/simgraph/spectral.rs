//! Ng–Jordan–Weiss spectral clustering on cosine distances.
//!
//! Affinity `A_ij = exp(-d_ij^2 / (2 sigma^2))` with `sigma` the median
//! off-diagonal distance, symmetric normalization
//! `L_sym = I - D^{-1/2} A D^{-1/2}`, the eigenvectors of the `K` smallest
//! eigenvalues as an `n x K` embedding, row-normalized, then k-means.

use nalgebra::DMatrix;
use ndarray::Array2;

use super::{cosine_distances, kmeans, ClusterAssignment, DistanceMatrix, GraphError};

const DEGREE_EPS: f64 = 1e-12;
const KMEANS_RESTARTS: usize = 8;
const KMEANS_MAX_ITER: usize = 100;

pub fn spectral_cluster(features: &Array2<f32>, k: usize, seed: u64) -> Result<ClusterAssignment, GraphError> {
    spectral_cluster_distances(&cosine_distances(features)?, k, seed)
}

pub fn spectral_cluster_distances(dist: &DistanceMatrix, k: usize, seed: u64) -> Result<ClusterAssignment, GraphError> {
    let n = dist.n();
    if k < 2 || n <= k {
        return Err(GraphError::InvalidParameter(format!("spectral clustering needs 2 <= K < n (K={k}, n={n})")));
    }
    let embedding = spectral_embedding(dist, k)?;
    let result = kmeans(&embedding, k, KMEANS_RESTARTS, KMEANS_MAX_ITER, seed);
    Ok(ClusterAssignment { labels: relabel_by_first_use(&result.labels), k })
}

/// Row-normalized `n x k` embedding from the eigenvectors of the `k`
/// smallest eigenvalues of the symmetric-normalized Laplacian.
pub fn spectral_embedding(dist: &DistanceMatrix, k: usize) -> Result<Array2<f64>, GraphError> {
    let n = dist.n();
    let sigma = match dist.median_pair() {
        Some(s) if s > 1e-12 => s,
        _ => 1.0,
    };
    let denom = 2.0 * sigma * sigma;
    let mut affinity = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dist.get(i, j);
            let a = (-d * d / denom).exp();
            affinity[(i, j)] = a;
            affinity[(j, i)] = a;
        }
    }
    let inv_sqrt_deg: Vec<f64> = (0..n).map(|i| 1.0 / (affinity.row(i).sum() + DEGREE_EPS).sqrt()).collect();
    // Eigenvectors of L_sym for its smallest eigenvalues are those of
    // D^{-1/2} A D^{-1/2} for its largest; decompose the latter.
    let mut normalized = affinity;
    for i in 0..n {
        for j in 0..n {
            normalized[(i, j)] *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
        }
    }
    let eig = normalized.try_symmetric_eigen(1e-12, 10_000).ok_or(GraphError::EigenFailure)?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(GraphError::EigenFailure);
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Largest eigenvalue of the normalized affinity first; index breaks ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut embedding = Array2::<f64>::zeros((n, k));
    for (col, &e) in order.iter().take(k).enumerate() {
        let v = eig.eigenvectors.column(e);
        // Fix the arbitrary eigenvector sign: largest-magnitude entry positive.
        let pivot = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            embedding[[i, col]] = sign * v[i];
        }
    }
    for mut row in embedding.outer_iter_mut() {
        let norm = row.dot(&row).sqrt();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(embedding)
}

fn relabel_by_first_use(labels: &[u32]) -> Vec<u32> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len() as u32;
            *map.entry(l).or_insert(next)
        })
        .collect()
}
