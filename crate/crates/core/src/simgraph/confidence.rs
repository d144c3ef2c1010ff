use ndarray::Array2;
use statrs::function::erf::erfc;

use super::{check_threshold, ConfidenceMatrix, DistanceMatrix, GraphError, HalfGaussianFit, RefinedGraph};

const DEGENERATE_DENOM: f64 = 1e-12;

/// Standard normal CDF.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Confidence of a similarity signal as a function of its distance.
///
/// Below the threshold the weight is the left lobe's CDF mass between `d`
/// and `t`, normalized by the mass between `0` and `t`; above it the right
/// lobe's mass between `t` and `d`, normalized by the mass between `t` and
/// `2`. Both branches reach 1 at the extremes and 0 at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceModel {
    pub t: f64,
    pub fit: HalfGaussianFit,
}

impl ConfidenceModel {
    pub fn new(t: f64, fit: HalfGaussianFit) -> Result<Self, GraphError> {
        check_threshold(t)?;
        fit.validate()?;
        Ok(Self { t, fit })
    }

    fn phi1(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.fit.m1) / self.fit.sigma1)
    }

    fn phi2(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.fit.m2) / self.fit.sigma2)
    }

    /// Weight for a potential positive, evaluated at any `d`.
    pub fn similar_weight(&self, d: f64) -> f64 {
        let den = self.phi1(self.t) - self.phi1(0.0);
        if den < DEGENERATE_DENOM {
            return if d == 0.0 { 1.0 } else { 0.0 };
        }
        ((self.phi1(self.t) - self.phi1(d)) / den).clamp(0.0, 1.0)
    }

    /// Weight for a potential negative, evaluated at any `d`.
    pub fn dissimilar_weight(&self, d: f64) -> f64 {
        let den = self.phi2(2.0) - self.phi2(self.t);
        if den < DEGENERATE_DENOM {
            return if d == 2.0 { 1.0 } else { 0.0 };
        }
        ((self.phi2(d) - self.phi2(self.t)) / den).clamp(0.0, 1.0)
    }

    pub fn weight(&self, d: f64) -> f64 {
        if d <= self.t {
            self.similar_weight(d)
        } else {
            self.dissimilar_weight(d)
        }
    }
}

/// Confidence of every pair kept by the refined graph; zero elsewhere.
pub fn confidence_weights(
    dist: &DistanceMatrix,
    refined: &RefinedGraph,
    t: f64,
    fit: &HalfGaussianFit,
) -> Result<ConfidenceMatrix, GraphError> {
    let n = dist.n();
    if refined.n() != n {
        return Err(GraphError::InvalidParameter(format!(
            "distance matrix has {n} items, refined graph has {}",
            refined.n()
        )));
    }
    let model = ConfidenceModel::new(t, *fit)?;
    let mut w = Array2::<f32>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            if refined.s_hat[[i, j]] != 0 {
                let v = model.weight(dist.get(i, j)) as f32;
                w[[i, j]] = v;
                w[[j, i]] = v;
            }
        }
    }
    Ok(ConfidenceMatrix { w })
}
