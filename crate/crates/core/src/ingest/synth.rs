use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};

use super::{row_is_zero, FeatureSet, IngestError, LabelVector};
use crate::rng::{salt, stream};

/// Gaussian blobs around `k_clusters` centers placed uniformly on a sphere of
/// radius `separation`. Points are unit-variance and stored cluster-major;
/// the label of each point is its cluster index.
pub fn make_synthetic(
    k_clusters: usize,
    per_cluster: usize,
    d: usize,
    separation: f64,
    seed: u64,
) -> Result<(FeatureSet, LabelVector), IngestError> {
    if k_clusters < 2 || per_cluster < 2 || d < 1 {
        return Err(IngestError::InvalidParameter(format!(
            "need clusters >= 2, per_cluster >= 2, d >= 1 (got {k_clusters}, {per_cluster}, {d})"
        )));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(IngestError::InvalidParameter(format!("separation must be >= 0, got {separation}")));
    }
    let mut rng = stream(seed, salt::SYNTH);
    let mut centers = Array2::<f64>::zeros((k_clusters, d));
    for mut c in centers.outer_iter_mut() {
        loop {
            c.mapv_inplace(|_| StandardNormal.sample(&mut rng));
            let norm = c.dot(&c).sqrt();
            if norm > 1e-12 {
                c.mapv_inplace(|x| x / norm * separation);
                break;
            }
        }
    }

    let n = k_clusters * per_cluster;
    let mut points = Array2::<f32>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for (i, mut row) in points.outer_iter_mut().enumerate() {
        let k = i / per_cluster;
        loop {
            for (dst, &c) in row.iter_mut().zip(centers.row(k).iter()) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *dst = (c + z) as f32;
            }
            if !row_is_zero(row.view()) {
                break;
            }
        }
        labels.push(k as u32);
    }
    Ok((FeatureSet::single(points), LabelVector::single(labels)))
}

/// A feature set with its labels.
pub type Labelled = (FeatureSet, LabelVector);

/// Splits a labelled set into (database, queries) by moving the last
/// `queries_per_class` items of every class (in file order) into the query
/// side. Multi-label items are classed by their smallest label.
pub fn split_per_class(
    set: &FeatureSet,
    labels: &LabelVector,
    queries_per_class: usize,
) -> Result<(Labelled, Labelled), IngestError> {
    if labels.len() != set.n() {
        return Err(IngestError::ShapeMismatch {
            view: 0,
            expected: format!("{} labels", set.n()),
            found: format!("{}", labels.len()),
        });
    }
    let mut by_class: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
    for (i, l) in labels.iter().enumerate() {
        by_class.entry(l[0]).or_default().push(i);
    }
    let mut is_query = vec![false; set.n()];
    for members in by_class.values() {
        for &i in members.iter().rev().take(queries_per_class) {
            is_query[i] = true;
        }
    }
    let db_idx: Vec<usize> = (0..set.n()).filter(|&i| !is_query[i]).collect();
    let q_idx: Vec<usize> = (0..set.n()).filter(|&i| is_query[i]).collect();
    let take = |idx: &[usize]| FeatureSet {
        views: set.views.iter().map(|v| v.select(ndarray::Axis(0), idx)).collect(),
        ids: idx.iter().map(|&i| set.ids[i]).collect(),
    };
    let db = take(&db_idx);
    let q = take(&q_idx);
    db.validate()?;
    q.validate()?;
    Ok(((db, labels.select(&db_idx)), (q, labels.select(&q_idx))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_clusters() {
        let (set, labels) = make_synthetic(4, 100, 32, 10.0, 1).unwrap();
        assert_eq!((set.n(), set.d()), (400, 32));
        set.validate().unwrap();
        for k in 0..4u32 {
            assert_eq!(labels.iter().filter(|l| l[0] == k).count(), 100);
        }
    }

    #[test]
    fn deterministic() {
        let a = make_synthetic(3, 5, 4, 2.0, 77).unwrap();
        let b = make_synthetic(3, 5, 4, 2.0, 77).unwrap();
        let c = make_synthetic(3, 5, 4, 2.0, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn centers_sit_at_separation() {
        let (set, _) = make_synthetic(2, 2000, 8, 10.0, 5).unwrap();
        let v = &set.views[0];
        let mean: f64 = (0..2000).map(|i| v[[i, 0]] as f64).sum::<f64>() / 2000.0;
        let mean_vec: Vec<f64> = (0..8).map(|j| (0..2000).map(|i| v[[i, j]] as f64).sum::<f64>() / 2000.0).collect();
        let norm = mean_vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 10.0).abs() < 0.2, "center norm {norm}, first coord mean {mean}");
    }

    #[test]
    fn rejects_tiny_configs() {
        assert!(make_synthetic(1, 10, 2, 1.0, 0).is_err());
        assert!(make_synthetic(2, 1, 2, 1.0, 0).is_err());
    }

    #[test]
    fn split_moves_tail_of_each_class() {
        let (set, labels) = make_synthetic(3, 10, 4, 5.0, 2).unwrap();
        let ((db, db_l), (q, q_l)) = split_per_class(&set, &labels, 2).unwrap();
        assert_eq!((db.n(), q.n()), (24, 6));
        assert_eq!(q.ids, vec![8, 9, 18, 19, 28, 29]);
        assert_eq!(q_l.get(0), &[0]);
        assert_eq!(db_l.len(), 24);
    }
}
