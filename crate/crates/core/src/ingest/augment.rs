use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{validate_rows, FeatureViewPair, IngestError};
use crate::rng::{salt, stream};

const MAX_RETRIES: usize = 16;

/// Feature-space augmentation: additive Gaussian noise followed by
/// coordinate dropout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    pub noise_sigma: f64,
    pub dropout_rate: f64,
    pub seed: u64,
}

impl AugmentConfig {
    pub fn new(noise_sigma: f64, dropout_rate: f64, seed: u64) -> Self {
        Self { noise_sigma, dropout_rate, seed }
    }

    pub fn identity() -> Self {
        Self::new(0.0, 0.0, 0)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(IngestError::InvalidParameter(format!(
                "noise_sigma must be finite and >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(IngestError::InvalidParameter(format!(
                "dropout_rate must lie in [0,1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    fn is_identity(&self) -> bool {
        self.noise_sigma == 0.0 && self.dropout_rate == 0.0
    }
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self::new(0.3, 0.1, 0)
    }
}

/// Draws two independently augmented views of `base`. Deterministic in
/// `cfg.seed`; item ids are `0..n`.
pub fn augment_features(base: &Array2<f32>, cfg: &AugmentConfig) -> Result<FeatureViewPair, IngestError> {
    cfg.validate()?;
    validate_rows(base, 0)?;
    let view1 = perturb_with(base, cfg, &mut stream(cfg.seed, salt::AUGMENT_VIEW1))?;
    let view2 = perturb_with(base, cfg, &mut stream(cfg.seed, salt::AUGMENT_VIEW2))?;
    FeatureViewPair::new(view1, view2, (0..base.nrows() as u64).collect())
}

/// A single perturbed copy of `features`, used for query-noise robustness
/// checks. Uses a stream distinct from either training view.
pub fn perturb_features(features: &Array2<f32>, cfg: &AugmentConfig) -> Result<Array2<f32>, IngestError> {
    cfg.validate()?;
    validate_rows(features, 0)?;
    perturb_with(features, cfg, &mut stream(cfg.seed, salt::PERTURB))
}

fn perturb_with(base: &Array2<f32>, cfg: &AugmentConfig, rng: &mut ChaCha8Rng) -> Result<Array2<f32>, IngestError> {
    if cfg.is_identity() {
        return Ok(base.clone());
    }
    let mut out = base.clone();
    for (i, mut row) in out.outer_iter_mut().enumerate() {
        let src = base.row(i);
        let mut accepted = false;
        for _ in 0..=MAX_RETRIES {
            for (dst, &x) in row.iter_mut().zip(src.iter()) {
                let mut v = x as f64;
                if cfg.noise_sigma > 0.0 {
                    let z: f64 = StandardNormal.sample(rng);
                    v += cfg.noise_sigma * z;
                }
                if cfg.dropout_rate > 0.0 && rng.random::<f64>() < cfg.dropout_rate {
                    v = 0.0;
                }
                *dst = v as f32;
            }
            if row.iter().any(|&x| x != 0.0) {
                accepted = true;
                break;
            }
        }
        if !accepted {
            return Err(IngestError::DegenerateAugmentation(i));
        }
    }
    Ok(out)
}
