use super::{DistanceMatrix, GraphError};

pub const BINS: usize = 64;
const SMOOTH_RADIUS: usize = 2;
const SIGMA_FLOOR: f64 = 1e-4;
/// Smoothed bins below this fraction of the tallest bin are not modes.
const MIN_MODE_FRACTION: f64 = 0.05;

/// Two half-Gaussian lobes of the pairwise distance distribution: the left
/// lobe (mean `m1`) models likely-similar pairs, the right lobe (`m2`)
/// likely-dissimilar ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfGaussianFit {
    pub m1: f64,
    pub sigma1: f64,
    pub m2: f64,
    pub sigma2: f64,
}

impl HalfGaussianFit {
    pub fn validate(&self) -> Result<(), GraphError> {
        let ok = 0.0 <= self.m1
            && self.m1 <= self.m2
            && self.m2 <= 2.0
            && self.sigma1 > 0.0
            && self.sigma2 > 0.0
            && self.sigma1.is_finite()
            && self.sigma2.is_finite();
        if ok {
            Ok(())
        } else {
            Err(GraphError::InvalidParameter(format!("invalid half-Gaussian fit {self:?}")))
        }
    }
}

pub fn fit_half_gaussians(dist: &DistanceMatrix) -> Result<HalfGaussianFit, GraphError> {
    let pairs: Vec<f64> = dist.pairs().collect();
    fit_samples(&pairs)
}

/// Mode-anchored fit over raw distance samples.
///
/// Modes are the leftmost and rightmost local maxima of a 64-bin histogram on
/// `[0, 2]` smoothed by a 5-bin moving average. Each mode is located at the
/// median of the samples inside the fullest raw bin under its smoothing
/// window. Spreads are mirrored half-sample
/// deviations: `sigma1` from samples at or below `m1`, `sigma2` from samples
/// at or above `m2`.
pub(crate) fn fit_samples(samples: &[f64]) -> Result<HalfGaussianFit, GraphError> {
    if samples.len() < 6 {
        return Err(GraphError::InsufficientPairs(samples.len()));
    }
    let width = 2.0 / BINS as f64;
    let bin_of = |d: f64| ((d / width) as usize).min(BINS - 1);
    let mut sorted: Vec<f64> = samples.iter().map(|d| d.clamp(0.0, 2.0)).collect();
    sorted.sort_by(f64::total_cmp);
    let mut counts = [0usize; BINS];
    for &d in &sorted {
        counts[bin_of(d)] += 1;
    }
    let smoothed: Vec<f64> = (0..BINS)
        .map(|b| {
            let lo = b.saturating_sub(SMOOTH_RADIUS);
            let hi = (b + SMOOTH_RADIUS).min(BINS - 1);
            counts[lo..=hi].iter().sum::<usize>() as f64 / (hi - lo + 1) as f64
        })
        .collect();
    let peak = smoothed.iter().copied().fold(0.0, f64::max);
    let floor = peak * MIN_MODE_FRACTION;
    let is_mode = |b: usize| {
        let left = if b == 0 { f64::NEG_INFINITY } else { smoothed[b - 1] };
        let right = if b + 1 == BINS { f64::NEG_INFINITY } else { smoothed[b + 1] };
        smoothed[b] >= floor && smoothed[b] > 0.0 && smoothed[b] >= left && smoothed[b] >= right
    };
    let first = (0..BINS).find(|&b| is_mode(b)).expect("the tallest bin is a mode");
    let last = (0..BINS).rev().find(|&b| is_mode(b)).expect("the tallest bin is a mode");
    let locate = |b: usize| {
        // Smoothing spreads a spike into a plateau; snap to the fullest raw
        // bin under the window.
        let lo = b.saturating_sub(SMOOTH_RADIUS);
        let hi = (b + SMOOTH_RADIUS).min(BINS - 1);
        let b = (lo..=hi).fold(b, |best, c| if counts[c] > counts[best] { c } else { best });
        let start: usize = counts[..b].iter().sum();
        let in_bin = &sorted[start..start + counts[b]];
        match in_bin.len() {
            0 => (b as f64 + 0.5) * width,
            len if len % 2 == 1 => in_bin[len / 2],
            len => 0.5 * (in_bin[len / 2 - 1] + in_bin[len / 2]),
        }
    };
    let m1 = locate(first);
    let m2 = locate(last).max(m1);

    let half_sd = |keep: &dyn Fn(f64) -> bool, m: f64| {
        let (mut acc, mut cnt) = (0.0, 0usize);
        for &d in &sorted {
            if keep(d) {
                acc += (d - m) * (d - m);
                cnt += 1;
            }
        }
        let sd = if cnt > 0 { (acc / cnt as f64).sqrt() } else { 0.0 };
        sd.max(SIGMA_FLOOR)
    };
    let sigma1 = half_sd(&|d| d <= m1, m1);
    let sigma2 = half_sd(&|d| d >= m2, m2);
    Ok(HalfGaussianFit { m1, sigma1, m2, sigma2 })
}
