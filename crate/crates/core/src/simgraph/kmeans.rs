use ndarray::{Array2, ArrayView1};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rng::{salt, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<u32>,
    pub centroids: Array2<f64>,
    pub inertia: f64,
}

/// Lloyd's k-means with k-means++ seeding; the restart with the lowest
/// inertia wins (earliest restart on ties). A cluster that empties is
/// reseeded with the point of the largest cluster farthest from its centroid.
pub fn kmeans(points: &Array2<f64>, k: usize, restarts: usize, max_iter: usize, seed: u64) -> KMeansResult {
    assert!(k >= 1 && points.nrows() >= k, "k-means needs at least k points");
    let mut rng = stream(seed, salt::KMEANS);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts.max(1) {
        let run = lloyd(points, k, max_iter, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    best.unwrap()
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus(points: &Array2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centroids = Array2::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), centroids.row(0))).collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&points.row(pick));
        for (i, best) in nearest.iter_mut().enumerate() {
            *best = best.min(sq_dist(points.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn assign(points: &Array2<f64>, centroids: &Array2<f64>, labels: &mut [u32]) -> (bool, f64) {
    let mut changed = false;
    let mut inertia = 0.0;
    for (i, p) in points.outer_iter().enumerate() {
        let (mut best, mut best_d) = (0usize, f64::INFINITY);
        for (c, centroid) in centroids.outer_iter().enumerate() {
            let d = sq_dist(p, centroid);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        if labels[i] != best as u32 {
            labels[i] = best as u32;
            changed = true;
        }
        inertia += best_d;
    }
    (changed, inertia)
}

fn update(points: &Array2<f64>, centroids: &mut Array2<f64>, labels: &mut [u32]) {
    let k = centroids.nrows();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l as usize] += 1;
    }
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        // Largest cluster, lowest index on ties.
        let donor = (0..k).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))).unwrap();
        let far = (0..points.nrows())
            .filter(|&i| labels[i] as usize == donor)
            .map(|i| (i, sq_dist(points.row(i), centroids.row(donor))))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc })
            .0;
        labels[far] = empty as u32;
        counts[donor] -= 1;
        counts[empty] += 1;
    }
    centroids.fill(0.0);
    for (p, &l) in points.outer_iter().zip(labels.iter()) {
        let mut row = centroids.row_mut(l as usize);
        row += &p;
    }
    for (mut row, &c) in centroids.outer_iter_mut().zip(counts.iter()) {
        row /= c as f64;
    }
}

fn lloyd(points: &Array2<f64>, k: usize, max_iter: usize, rng: &mut ChaCha8Rng) -> KMeansResult {
    let n = points.nrows();
    let mut centroids = plus_plus(points, k, rng);
    let mut labels = vec![u32::MAX; n];
    assign(points, &centroids, &mut labels);
    for _ in 0..max_iter {
        update(points, &mut centroids, &mut labels);
        let (changed, _) = assign(points, &centroids, &mut labels);
        if !changed {
            break;
        }
    }
    // The final assignment may have emptied a cluster again.
    update(points, &mut centroids, &mut labels);
    let inertia = points.outer_iter().zip(labels.iter()).map(|(p, &l)| sq_dist(p, centroids.row(l as usize))).sum();
    KMeansResult { labels, centroids, inertia }
}
