//! Consistency losses over relaxed codes, each returned with its exact
//! gradient with respect to the codes of both views.
//!
//! Semantic terms index the precomputed `n x n` graphs and weights by the
//! global ids of the minibatch and normalize by `1/M^2`.

use ndarray::{Array2, ArrayView2, Axis};
use thiserror::Error;

use crate::simgraph::SemanticInfo;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("batch index {index} out of range for {n} items")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("contrastive loss needs at least 2 items per batch, got {0}")]
    BatchTooSmall(usize),
    #[error("relaxed code row {0} is all zeros")]
    ZeroCodeRow(usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Whether `i == j` pairs enter the semantic double sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Diagonal {
    #[default]
    Include,
    Exclude,
}

/// A loss value with its gradients for the view-1 and view-2 codes.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTerm {
    pub value: f64,
    pub grad_v1: Array2<f64>,
    pub grad_v2: Array2<f64>,
}

impl LossTerm {
    fn zeros(m: usize, l: usize) -> Self {
        Self { value: 0.0, grad_v1: Array2::zeros((m, l)), grad_v2: Array2::zeros((m, l)) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub psc: f64,
    pub csc: f64,
    pub cc: f64,
    pub total: f64,
    pub eta: f64,
    pub tau: f64,
}

/// `H = V V^T / L`.
pub fn code_similarity(v: ArrayView2<f64>) -> Array2<f64> {
    let l = v.ncols().max(1) as f64;
    v.dot(&v.t()) / l
}

/// `(1/M^2) sum_ij W_ij (H_ij - S_ij)^2` for one code matrix against one
/// view's guidance, with its gradient.
pub fn weighted_similarity_term(
    v: ArrayView2<f64>,
    info: &SemanticInfo,
    batch: &[usize],
    diagonal: Diagonal,
) -> Result<(f64, Array2<f64>), LossError> {
    let m = batch.len();
    if v.nrows() != m {
        return Err(LossError::ShapeMismatch(format!("{} code rows for a batch of {m}", v.nrows())));
    }
    let n = info.n();
    if let Some(&index) = batch.iter().find(|&&i| i >= n) {
        return Err(LossError::IndexOutOfRange { index, n });
    }
    let l = v.ncols() as f64;
    let h = code_similarity(v);
    let scale = 1.0 / (m * m) as f64;
    let mut value = 0.0;
    let mut g = Array2::<f64>::zeros((m, m));
    for (a, &i) in batch.iter().enumerate() {
        for (b, &j) in batch.iter().enumerate() {
            if diagonal == Diagonal::Exclude && a == b {
                continue;
            }
            let w = info.weights.w[[i, j]] as f64;
            if w == 0.0 {
                continue;
            }
            let r = h[[a, b]] - info.refined.s_hat[[i, j]] as f64;
            value += w * r * r;
            g[[a, b]] = 2.0 * w * r * scale;
        }
    }
    // dL/dV = (G + G^T) V / L
    let sym = &g + &g.t();
    Ok((value * scale, sym.dot(&v) / l))
}

/// Each view's codes against its own guidance.
pub fn parallel_semantic_loss(
    v1: ArrayView2<f64>,
    v2: ArrayView2<f64>,
    info1: &SemanticInfo,
    info2: &SemanticInfo,
    batch: &[usize],
    diagonal: Diagonal,
) -> Result<LossTerm, LossError> {
    let (a, ga) = weighted_similarity_term(v1, info1, batch, diagonal)?;
    let (b, gb) = weighted_similarity_term(v2, info2, batch, diagonal)?;
    Ok(LossTerm { value: a + b, grad_v1: ga, grad_v2: gb })
}

/// Each view's codes against the other view's guidance.
pub fn cross_semantic_loss(
    v1: ArrayView2<f64>,
    v2: ArrayView2<f64>,
    info1: &SemanticInfo,
    info2: &SemanticInfo,
    batch: &[usize],
    diagonal: Diagonal,
) -> Result<LossTerm, LossError> {
    let (a, g2) = weighted_similarity_term(v2, info1, batch, diagonal)?;
    let (b, g1) = weighted_similarity_term(v1, info2, batch, diagonal)?;
    Ok(LossTerm { value: a + b, grad_v1: g1, grad_v2: g2 })
}

/// Contrastive consistency between the two views of a minibatch.
///
/// For every anchor among the `2M` codes the positive is the other view of
/// the same item; the normalizer sums over the `2(M-1)` codes of the other
/// items only, so the positive pair is not part of it. Similarities are
/// cosine similarities divided by `tau`.
pub fn contrastive_loss(v1: ArrayView2<f64>, v2: ArrayView2<f64>, tau: f64) -> Result<LossTerm, LossError> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(LossError::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    if v1.dim() != v2.dim() {
        return Err(LossError::ShapeMismatch("view code matrices differ in shape".into()));
    }
    let (m, l) = v1.dim();
    if m < 2 {
        return Err(LossError::BatchTooSmall(m));
    }
    let stacked = ndarray::concatenate(Axis(0), &[v1.view(), v2.view()]).expect("same shape");
    let two_m = 2 * m;
    let mut norms = Vec::with_capacity(two_m);
    let mut unit = stacked.clone();
    for (a, mut row) in unit.outer_iter_mut().enumerate() {
        let r = row.dot(&row).sqrt();
        if r == 0.0 {
            return Err(LossError::ZeroCodeRow(a % m));
        }
        row /= r;
        norms.push(r);
    }
    let sim = unit.dot(&unit.t()) / tau;

    let mut value = 0.0;
    let mut g = Array2::<f64>::zeros((two_m, two_m));
    for a in 0..two_m {
        let item = a % m;
        let pos = (a + m) % two_m;
        let negatives = (0..two_m).filter(|&b| b % m != item);
        let max = negatives.clone().map(|b| sim[[a, b]]).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = negatives.clone().map(|b| (sim[[a, b]] - max).exp()).sum();
        value += -sim[[a, pos]] + max + z.ln();
        g[[a, pos]] -= 1.0;
        for b in negatives {
            g[[a, b]] += (sim[[a, b]] - max).exp() / z;
        }
    }
    let scale = 1.0 / two_m as f64;
    value *= scale;
    g *= scale;

    // Through sim = U U^T / tau, then through row normalization.
    let grad_unit = (&g + &g.t()).dot(&unit) / tau;
    let mut grad = Array2::<f64>::zeros((two_m, l));
    for (a, &norm) in norms.iter().enumerate() {
        let u = unit.row(a);
        let gu = grad_unit.row(a);
        let proj = gu.dot(&u);
        grad.row_mut(a).assign(&((&gu - &(&u * proj)) / norm));
    }
    let grad_v1 = grad.slice(ndarray::s![..m, ..]).to_owned();
    let grad_v2 = grad.slice(ndarray::s![m.., ..]).to_owned();
    Ok(LossTerm { value, grad_v1, grad_v2 })
}

/// Knobs for [`total_loss`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub eta: f64,
    pub tau: f64,
    pub diagonal: Diagonal,
    /// When false only view 1's codes are matched against view 1's
    /// guidance and the cross term is dropped.
    pub two_view: bool,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { eta: 0.3, tau: 0.5, diagonal: Diagonal::Include, two_view: true }
    }
}

/// `psc + csc + eta * cc` with summed gradients. The contrastive term is
/// skipped entirely when `eta == 0`.
pub fn total_loss(
    v1: ArrayView2<f64>,
    v2: ArrayView2<f64>,
    info1: &SemanticInfo,
    info2: &SemanticInfo,
    batch: &[usize],
    cfg: &LossConfig,
) -> Result<(LossBreakdown, LossTerm), LossError> {
    if !(cfg.eta >= 0.0 && cfg.eta.is_finite()) {
        return Err(LossError::InvalidParameter(format!("eta must be >= 0, got {}", cfg.eta)));
    }
    let (m, l) = v1.dim();
    let mut acc = LossTerm::zeros(m, l);
    let (psc, csc) = if cfg.two_view {
        let p = parallel_semantic_loss(v1, v2, info1, info2, batch, cfg.diagonal)?;
        let c = cross_semantic_loss(v1, v2, info1, info2, batch, cfg.diagonal)?;
        acc.grad_v1 += &p.grad_v1;
        acc.grad_v1 += &c.grad_v1;
        acc.grad_v2 += &p.grad_v2;
        acc.grad_v2 += &c.grad_v2;
        (p.value, c.value)
    } else {
        let (p, g) = weighted_similarity_term(v1, info1, batch, cfg.diagonal)?;
        acc.grad_v1 += &g;
        (p, 0.0)
    };
    let cc = if cfg.eta > 0.0 {
        let c = contrastive_loss(v1, v2, cfg.tau)?;
        acc.grad_v1.scaled_add(cfg.eta, &c.grad_v1);
        acc.grad_v2.scaled_add(cfg.eta, &c.grad_v2);
        c.value
    } else {
        0.0
    };
    let total = psc + csc + cfg.eta * cc;
    acc.value = total;
    Ok((LossBreakdown { psc, csc, cc, total, eta: cfg.eta, tau: cfg.tau }, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgraph::{ClusterAssignment, ConfidenceMatrix, HalfGaussianFit, RefinedGraph};
    use ndarray::array;
    use rand::Rng;

    fn info(s_hat: Array2<i8>, w: Array2<f32>) -> SemanticInfo {
        let n = s_hat.nrows();
        SemanticInfo {
            refined: RefinedGraph { s_hat },
            weights: ConfidenceMatrix { w },
            fit: HalfGaussianFit { m1: 0.1, sigma1: 0.1, m2: 1.0, sigma2: 0.1 },
            clusters: ClusterAssignment { labels: vec![0; n], k: 2 },
            t: 0.1,
        }
    }

    fn random_info(n: usize, seed: u64) -> SemanticInfo {
        let mut rng = crate::rng::stream(seed, 0);
        let mut s = Array2::<i8>::ones((n, n));
        let mut w = Array2::<f32>::ones((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let sv = [-1i8, 0, 1][rng.random_range(0..3)];
                let wv = if sv == 0 { 0.0 } else { rng.random::<f32>() };
                s[[i, j]] = sv;
                s[[j, i]] = sv;
                w[[i, j]] = wv;
                w[[j, i]] = wv;
            }
        }
        info(s, w)
    }

    fn random_codes(m: usize, l: usize, seed: u64) -> Array2<f64> {
        let mut rng = crate::rng::stream(seed, 1);
        Array2::from_shape_fn((m, l), |_| rng.random_range(-0.95..0.95))
    }

    /// Central differences over every entry of `v1` and `v2`.
    fn check_fd<F>(v1: &Array2<f64>, v2: &Array2<f64>, grads: (&Array2<f64>, &Array2<f64>), f: F)
    where
        F: Fn(&Array2<f64>, &Array2<f64>) -> f64,
    {
        let h = 1e-5;
        for (which, analytic) in [(0, grads.0), (1, grads.1)] {
            for idx in 0..v1.len() {
                let (r, c) = (idx / v1.ncols(), idx % v1.ncols());
                let eval = |delta: f64| {
                    let (mut a, mut b) = (v1.clone(), v2.clone());
                    if which == 0 {
                        a[[r, c]] += delta;
                    } else {
                        b[[r, c]] += delta;
                    }
                    f(&a, &b)
                };
                let numeric = (eval(h) - eval(-h)) / (2.0 * h);
                let exact = analytic[[r, c]];
                let err = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-6);
                assert!(err < 1e-4, "view {which} ({r},{c}): analytic {exact} numeric {numeric}");
            }
        }
    }

    #[test]
    fn similarity_hand_cases() {
        let v = array![[1.0, 1.0, -1.0, -1.0], [1.0, -1.0, 1.0, -1.0], [-1.0, -1.0, 1.0, 1.0], [1.0, 1.0, -1.0, -1.0]];
        let h = code_similarity(v.view());
        assert_eq!(h[[0, 1]], 0.0);
        assert_eq!(h[[0, 2]], -1.0);
        assert_eq!(h[[0, 3]], 1.0);
        assert_eq!(h, h.t());
    }

    #[test]
    fn perfect_match_and_zero_weight() {
        let v = array![[1.0, 1.0], [1.0, 1.0], [-1.0, -1.0]];
        let s = array![[1i8, 1, -1], [1, 1, -1], [-1, -1, 1]];
        let g = info(s.clone(), Array2::ones((3, 3)));
        let p = parallel_semantic_loss(v.view(), v.view(), &g, &g, &[0, 1, 2], Diagonal::Include).unwrap();
        assert_eq!(p.value, 0.0);
        let z = info(s, Array2::zeros((3, 3)));
        let r = random_codes(3, 2, 0);
        let p = parallel_semantic_loss(r.view(), r.view(), &z, &z, &[0, 1, 2], Diagonal::Include).unwrap();
        assert_eq!(p.value, 0.0);
        assert!(p.grad_v1.iter().chain(p.grad_v2.iter()).all(|&x| x == 0.0));
        let c = cross_semantic_loss(r.view(), r.view(), &z, &z, &[0, 1, 2], Diagonal::Include).unwrap();
        assert_eq!(c.value, 0.0);
    }

    #[test]
    fn single_pair_counted_twice() {
        // M = 2, H_01 = +1, S_01 = -1, W_01 = 1, all else weightless:
        // (1/4) * (2 * (1 - (-1))^2) = 2.
        let v = array![[1.0, 1.0], [1.0, 1.0]];
        let g1 = info(array![[1i8, -1], [-1, 1]], array![[0.0f32, 1.0], [1.0, 0.0]]);
        let g2 = info(array![[1i8, -1], [-1, 1]], Array2::zeros((2, 2)));
        let p = parallel_semantic_loss(v.view(), v.view(), &g1, &g2, &[0, 1], Diagonal::Include).unwrap();
        assert!((p.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn cross_equals_parallel_for_identical_views() {
        let g = random_info(6, 3);
        let v = random_codes(4, 5, 4);
        let batch = [5, 0, 3, 2];
        let p = parallel_semantic_loss(v.view(), v.view(), &g, &g, &batch, Diagonal::Include).unwrap();
        let c = cross_semantic_loss(v.view(), v.view(), &g, &g, &batch, Diagonal::Include).unwrap();
        assert!((p.value - c.value).abs() < 1e-15);
    }

    #[test]
    fn cross_hand_expansion() {
        // Two items, one non-zero weight per view.
        let v1 = array![[0.5, -0.5], [0.25, 0.75]];
        let v2 = array![[-0.2, 0.4], [0.6, 0.1]];
        let g1 = info(array![[1i8, 1], [1, 1]], array![[0.0f32, 0.5], [0.5, 0.0]]);
        let g2 = info(array![[1i8, -1], [-1, 1]], array![[0.25f32, 0.0], [0.0, 0.0]]);
        let c = cross_semantic_loss(v1.view(), v2.view(), &g1, &g2, &[0, 1], Diagonal::Include).unwrap();
        let h2_01 = (-0.2 * 0.6 + 0.4 * 0.1) / 2.0;
        let h1_00 = (0.25 + 0.25) / 2.0;
        let expected = (2.0 * 0.5 * (h2_01 - 1.0f64).powi(2) + 0.25 * (h1_00 - 1.0f64).powi(2)) / 4.0;
        assert!((c.value - expected).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_batch() {
        let g = random_info(3, 0);
        let v = random_codes(2, 2, 0);
        assert!(matches!(
            parallel_semantic_loss(v.view(), v.view(), &g, &g, &[0, 3], Diagonal::Include),
            Err(LossError::IndexOutOfRange { index: 3, n: 3 })
        ));
    }

    #[test]
    fn semantic_swap_symmetry() {
        let (g1, g2) = (random_info(7, 8), random_info(7, 9));
        let (v1, v2) = (random_codes(5, 4, 1), random_codes(5, 4, 2));
        let batch = [6, 1, 2, 4, 0];
        for loss in [parallel_semantic_loss, cross_semantic_loss] {
            let a = loss(v1.view(), v2.view(), &g1, &g2, &batch, Diagonal::Include).unwrap();
            let b = loss(v2.view(), v1.view(), &g2, &g1, &batch, Diagonal::Include).unwrap();
            assert!((a.value - b.value).abs() < 1e-14);
        }
    }

    #[test]
    fn contrastive_identical_codes_is_log_two() {
        let v = array![[0.3, -0.4, 0.5], [0.3, -0.4, 0.5]];
        let c = contrastive_loss(v.view(), v.view(), 0.5).unwrap();
        assert!((c.value - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn contrastive_errors() {
        let one = array![[0.1, 0.2]];
        assert!(matches!(contrastive_loss(one.view(), one.view(), 0.5), Err(LossError::BatchTooSmall(1))));
        let z = array![[0.1, 0.2], [0.0, 0.0]];
        assert!(matches!(contrastive_loss(z.view(), z.view(), 0.5), Err(LossError::ZeroCodeRow(1))));
        assert!(contrastive_loss(z.view(), z.view(), 0.0).is_err());
    }

    #[test]
    fn contrastive_row_scale_invariance() {
        let (v1, v2) = (random_codes(5, 6, 10), random_codes(5, 6, 11));
        let base = contrastive_loss(v1.view(), v2.view(), 0.5).unwrap().value;
        let mut scaled = v1.clone();
        scaled.row_mut(2).mapv_inplace(|x| x * 2.0);
        let after = contrastive_loss(scaled.view(), v2.view(), 0.5).unwrap().value;
        assert!((base - after).abs() < 1e-12);
        assert!(base > 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let batch = [3, 0, 5, 1];
        let (g1, g2) = (random_info(6, 20), random_info(6, 21));
        let (v1, v2) = (random_codes(4, 8, 22), random_codes(4, 8, 23));
        for diag in [Diagonal::Include, Diagonal::Exclude] {
            let p = parallel_semantic_loss(v1.view(), v2.view(), &g1, &g2, &batch, diag).unwrap();
            check_fd(&v1, &v2, (&p.grad_v1, &p.grad_v2), |a, b| {
                parallel_semantic_loss(a.view(), b.view(), &g1, &g2, &batch, diag).unwrap().value
            });
            let c = cross_semantic_loss(v1.view(), v2.view(), &g1, &g2, &batch, diag).unwrap();
            check_fd(&v1, &v2, (&c.grad_v1, &c.grad_v2), |a, b| {
                cross_semantic_loss(a.view(), b.view(), &g1, &g2, &batch, diag).unwrap().value
            });
        }
        let c = contrastive_loss(v1.view(), v2.view(), 0.5).unwrap();
        check_fd(&v1, &v2, (&c.grad_v1, &c.grad_v2), |a, b| contrastive_loss(a.view(), b.view(), 0.5).unwrap().value);
        let cfg = LossConfig::default();
        let (_, t) = total_loss(v1.view(), v2.view(), &g1, &g2, &batch, &cfg).unwrap();
        check_fd(&v1, &v2, (&t.grad_v1, &t.grad_v2), |a, b| {
            total_loss(a.view(), b.view(), &g1, &g2, &batch, &cfg).unwrap().0.total
        });
    }

    #[test]
    fn total_is_sum_of_parts() {
        let batch = [0, 1, 2, 3, 4];
        let (g1, g2) = (random_info(5, 30), random_info(5, 31));
        let (v1, v2) = (random_codes(5, 4, 32), random_codes(5, 4, 33));
        let cfg = LossConfig { eta: 0.3, ..Default::default() };
        let (br, t) = total_loss(v1.view(), v2.view(), &g1, &g2, &batch, &cfg).unwrap();
        assert!((br.total - (br.psc + br.csc + 0.3 * br.cc)).abs() < 1e-12);
        let p = parallel_semantic_loss(v1.view(), v2.view(), &g1, &g2, &batch, Diagonal::Include).unwrap();
        let c = cross_semantic_loss(v1.view(), v2.view(), &g1, &g2, &batch, Diagonal::Include).unwrap();
        let k = contrastive_loss(v1.view(), v2.view(), 0.5).unwrap();
        let sum1 = &p.grad_v1 + &c.grad_v1 + &(&k.grad_v1 * 0.3);
        let sum2 = &p.grad_v2 + &c.grad_v2 + &(&k.grad_v2 * 0.3);
        assert!((&t.grad_v1 - &sum1).iter().all(|d| d.abs() < 1e-12));
        assert!((&t.grad_v2 - &sum2).iter().all(|d| d.abs() < 1e-12));

        let (no_cc, _) = total_loss(v1.view(), v2.view(), &g1, &g2, &batch, &LossConfig { eta: 0.0, ..cfg }).unwrap();
        assert_eq!(no_cc.total, no_cc.psc + no_cc.csc);
    }

    #[test]
    fn single_view_reduction() {
        let batch = [0, 1, 2];
        let (g1, g2) = (random_info(3, 40), random_info(3, 41));
        let (v1, v2) = (random_codes(3, 4, 42), random_codes(3, 4, 43));
        let cfg = LossConfig { eta: 0.0, two_view: false, ..Default::default() };
        let (br, t) = total_loss(v1.view(), v2.view(), &g1, &g2, &batch, &cfg).unwrap();
        let (direct, _) = weighted_similarity_term(v1.view(), &g1, &batch, Diagonal::Include).unwrap();
        assert_eq!(br.total, direct);
        assert_eq!(br.csc, 0.0);
        assert!(t.grad_v2.iter().all(|&x| x == 0.0));
    }
}
