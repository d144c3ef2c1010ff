use ndarray::Array2;

use super::GraphError;

/// Symmetric cosine-distance matrix with zero diagonal, entries in `[0, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d: Array2<f64>,
}

impl DistanceMatrix {
    /// Wraps a precomputed matrix, clamping to `[0, 2]` and checking symmetry.
    pub fn from_matrix(mut d: Array2<f64>) -> Result<Self, GraphError> {
        let n = d.nrows();
        if d.ncols() != n {
            return Err(GraphError::InvalidParameter("distance matrix must be square".into()));
        }
        for i in 0..n {
            if d[[i, i]] != 0.0 {
                return Err(GraphError::InvalidParameter(format!("non-zero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (d[[i, j]], d[[j, i]]);
                if !a.is_finite() || a != b {
                    return Err(GraphError::InvalidParameter(format!("asymmetric or non-finite entry at ({i},{j})")));
                }
                let v = a.clamp(0.0, 2.0);
                d[[i, j]] = v;
                d[[j, i]] = v;
            }
        }
        Ok(Self { d })
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[[i, j]]
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.d
    }

    /// Strict upper triangle in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| self.d[[i, j]]))
    }

    /// Median of the off-diagonal distances.
    pub fn median_pair(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.pairs().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let m = v.len() / 2;
        Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
    }
}

/// `d_ij = 1 - cos(F_i, F_j)`, clamped to `[0, 2]`.
pub fn cosine_distances(features: &Array2<f32>) -> Result<DistanceMatrix, GraphError> {
    let (n, dim) = features.dim();
    let mut unit = Array2::<f64>::zeros((n, dim));
    for (i, (src, mut dst)) in features.outer_iter().zip(unit.outer_iter_mut()).enumerate() {
        let norm = src.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(GraphError::ZeroRow(i));
        }
        dst.iter_mut().zip(src.iter()).for_each(|(o, &x)| *o = x as f64 / norm);
    }
    let gram = unit.dot(&unit.t());
    let mut d = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (1.0 - gram[[i, j]]).clamp(0.0, 2.0);
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    Ok(DistanceMatrix { d })
}
