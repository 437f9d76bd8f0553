use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the anisotropic Matérn-5/2 kernel plus Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpHyperparams {
    /// One length scale per input dimension, in units of x.
    pub length_scales: Vec<f64>,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl GpHyperparams {
    pub fn isotropic(dim: usize, length_scale: f64, signal_variance: f64, noise_variance: f64) -> Self {
        GpHyperparams { length_scales: vec![length_scale; dim], signal_variance, noise_variance }
    }

    pub fn dim(&self) -> usize {
        self.length_scales.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.length_scales.is_empty() {
            return Err(Error::domain("at least one length scale is required"));
        }
        if let Some(ls) = self.length_scales.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::domain(format!("length scales must be positive and finite, got {ls}")));
        }
        if !(self.signal_variance.is_finite() && self.signal_variance > 0.0) {
            return Err(Error::domain(format!(
                "signal variance must be positive and finite, got {}",
                self.signal_variance
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::domain(format!(
                "noise variance must be nonnegative and finite, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    pub(crate) fn validate_for(&self, dim: usize) -> Result<()> {
        self.validate()?;
        if self.dim() != dim {
            return Err(Error::Shape { expected: dim, found: self.dim() });
        }
        Ok(())
    }
}

const SQRT_5: f64 = 2.236_067_977_499_79;

/// Matérn-5/2 covariance `s·(1 + √5 r + 5r²/3)·exp(−√5 r)`, where `r` is the
/// Euclidean distance after dividing each coordinate by its length scale.
pub fn matern52(a: &[f64], b: &[f64], hp: &GpHyperparams) -> Result<f64> {
    if a.len() != hp.dim() {
        return Err(Error::Shape { expected: hp.dim(), found: a.len() });
    }
    if b.len() != hp.dim() {
        return Err(Error::Shape { expected: hp.dim(), found: b.len() });
    }
    Ok(matern52_unchecked(a, b, hp))
}

#[inline]
pub(crate) fn matern52_unchecked(a: &[f64], b: &[f64], hp: &GpHyperparams) -> f64 {
    let r2: f64 = a
        .iter()
        .zip(b)
        .zip(&hp.length_scales)
        .map(|((x, y), l)| {
            let d = (x - y) / l;
            d * d
        })
        .sum();
    let sr = SQRT_5 * r2.sqrt();
    hp.signal_variance * (1.0 + sr + sr * sr / 3.0) * (-sr).exp()
}
