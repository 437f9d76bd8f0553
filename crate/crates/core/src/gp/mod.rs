//! Exact Gaussian-process regression.
//!
//! [`fit`] standardizes the targets (optionally after taking logs), factors
//! `K + σ_n²I` once, and the resulting [`GpModel`] answers [`GpModel::predict`]
//! queries in O(N²) each. Predictions are returned in the space the model was
//! trained in: plain objective units, or log units when `log_targets` is set.

mod dataset;
mod kernel;
mod tune;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

pub use dataset::{CsvError, Dataset, Observation};
pub use kernel::{matern52, GpHyperparams};
pub use tune::{tune_hyperparams, TuneOptions, MULTI_STARTS};

use kernel::matern52_unchecked;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// First jitter tried when the factorization fails, relative to the signal variance.
pub const JITTER_START: f64 = 1e-10;
/// Last jitter tried before giving up, relative to the signal variance.
pub const JITTER_MAX: f64 = 1e-4;

/// Round-off tolerance for negative posterior variances in standardized space.
pub const VARIANCE_CLAMP: f64 = 1e-10;

/// Predictive distribution `N(mu, sigma²)` at one query point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGaussian {
    pub mu: f64,
    pub sigma: f64,
}

impl PosteriorGaussian {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        ensure_finite("posterior mean", mu)?;
        ensure_finite("posterior standard deviation", sigma)?;
        if sigma < 0.0 {
            return Err(Error::domain(format!("posterior standard deviation must be ≥ 0, got {sigma}")));
        }
        Ok(PosteriorGaussian { mu, sigma })
    }
}

/// How raw objective values were mapped to the GP's standardized targets:
/// `standardized = (t − shift) / scale` with `t = ln y` when `log` is set and
/// `t = y` otherwise.
///
/// `scale` is 0 when all `t` are equal. The model then has zero amplitude and
/// predicts `shift` with zero spread everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetTransform {
    pub log: bool,
    pub shift: f64,
    pub scale: f64,
}

impl TargetTransform {
    fn from_targets(targets: &[f64], log: bool) -> Self {
        let n = targets.len() as f64;
        let shift = targets.iter().sum::<f64>() / n;
        let var = targets.iter().map(|t| (t - shift).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        let scale = if sd > f64::EPSILON * shift.abs() && sd > 0.0 { sd } else { 0.0 };
        TargetTransform { log, shift, scale }
    }

    fn standardize(&self, t: f64) -> f64 {
        if self.scale > 0.0 {
            (t - self.shift) / self.scale
        } else {
            0.0
        }
    }
}

/// A fitted GP. Immutable; safe to share across threads for prediction.
#[derive(Debug, Clone)]
pub struct GpModel {
    hyperparams: GpHyperparams,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    transform: TargetTransform,
    chol: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    standardized: DVector<f64>,
    jitter: f64,
}

/// Fits a GP with fixed hyperparameters.
///
/// With `log_targets` the model is trained on `ln y_n`; every `y_n` must then be positive.
/// Targets are standardized to zero mean and unit variance before fitting.
pub fn fit(data: &Dataset, hp: &GpHyperparams, log_targets: bool) -> Result<GpModel> {
    if log_targets {
        data.ensure_positive_targets()?;
    }
    let targets = transformed_targets(data, log_targets);
    fit_with_transform(data, hp, TargetTransform::from_targets(&targets, log_targets))
}

/// Fits a GP using a caller-chosen target transform instead of the data's own
/// mean and standard deviation. `TargetTransform { log: false, shift: 0.0, scale: 1.0 }`
/// fits the raw targets.
pub fn fit_with_transform(data: &Dataset, hp: &GpHyperparams, transform: TargetTransform) -> Result<GpModel> {
    hp.validate_for(data.dim())?;
    ensure_finite("target shift", transform.shift)?;
    if !(transform.scale.is_finite() && transform.scale >= 0.0) {
        return Err(Error::domain(format!("target scale must be finite and ≥ 0, got {}", transform.scale)));
    }
    if transform.log {
        data.ensure_positive_targets()?;
    }
    let inputs: Vec<Vec<f64>> = data.inputs().map(<[f64]>::to_vec).collect();
    if hp.noise_variance == 0.0 {
        check_distinct(&inputs)?;
    }
    let targets = transformed_targets(data, transform.log);
    let standardized = DVector::from_iterator(targets.len(), targets.iter().map(|&t| transform.standardize(t)));

    let (chol, jitter) = factorize(&inputs, hp)?;
    let weights = chol.solve(&standardized);

    Ok(GpModel { hyperparams: hp.clone(), inputs, targets, transform, chol, weights, standardized, jitter })
}

fn transformed_targets(data: &Dataset, log: bool) -> Vec<f64> {
    if log {
        data.targets().map(f64::ln).collect()
    } else {
        data.targets().collect()
    }
}

/// `log p(targets | inputs, hp)` for a zero-mean GP with the given hyperparameters.
/// The targets are used as given; no standardization is applied.
pub fn standardized_log_marginal_likelihood(inputs: &[Vec<f64>], targets: &[f64], hp: &GpHyperparams) -> Result<f64> {
    if inputs.len() != targets.len() {
        return Err(Error::Shape { expected: inputs.len(), found: targets.len() });
    }
    if inputs.is_empty() {
        return Err(Error::domain("log marginal likelihood needs at least one observation"));
    }
    hp.validate_for(inputs[0].len())?;
    let (chol, _) = factorize(inputs, hp)?;
    let y = DVector::from_column_slice(targets);
    let alpha = chol.solve(&y);
    Ok(gaussian_log_density(&chol, &y, &alpha))
}

/// Log marginal likelihood of the standardized (and possibly log-transformed) targets.
pub fn log_marginal_likelihood(data: &Dataset, hp: &GpHyperparams, log_targets: bool) -> Result<f64> {
    fit(data, hp, log_targets).map(|m| m.log_marginal_likelihood())
}

/// `K(inputs, inputs)` without noise or jitter.
pub fn kernel_matrix(inputs: &[Vec<f64>], hp: &GpHyperparams) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = hp.signal_variance;
        for j in 0..i {
            let v = matern52_unchecked(&inputs[i], &inputs[j], hp);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn gaussian_log_density(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>, alpha: &DVector<f64>) -> f64 {
    let n = y.len() as f64;
    let half_log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * y.dot(alpha) - half_log_det - 0.5 * n * LN_2PI
}

fn check_distinct(inputs: &[Vec<f64>]) -> Result<()> {
    for i in 0..inputs.len() {
        for j in 0..i {
            if inputs[i] == inputs[j] {
                return Err(Error::DuplicateInput { first: j + 1, second: i + 1 });
            }
        }
    }
    Ok(())
}

/// Cholesky of `K + σ_n²I`, retrying with jitter `1e-10·s, 1e-9·s, …, 1e-4·s` on failure.
fn factorize(inputs: &[Vec<f64>], hp: &GpHyperparams) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut k = kernel_matrix(inputs, hp);
    for i in 0..inputs.len() {
        k[(i, i)] += hp.noise_variance;
    }
    if let Some(chol) = Cholesky::new(k.clone()) {
        return Ok((chol, 0.0));
    }
    let mut rel = JITTER_START;
    while rel <= JITTER_MAX * (1.0 + 1e-9) {
        let jitter = rel * hp.signal_variance;
        let mut kj = k.clone();
        for i in 0..inputs.len() {
            kj[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(kj) {
            return Ok((chol, jitter));
        }
        rel *= 10.0;
    }
    Err(Error::numeric(format!(
        "kernel matrix of {} points is not positive definite even with jitter {:e} (= {:e}·signal variance)",
        inputs.len(),
        JITTER_MAX * hp.signal_variance,
        JITTER_MAX
    )))
}

impl GpModel {
    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.hyperparams
    }

    pub fn dim(&self) -> usize {
        self.hyperparams.dim()
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn log_targets(&self) -> bool {
        self.transform.log
    }

    pub fn transform(&self) -> TargetTransform {
        self.transform
    }

    /// Training targets after the optional log transform, before standardization.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    /// Diagonal jitter that had to be added for the factorization to succeed (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular `L` with `L Lᵀ = K + (σ_n² + jitter) I`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        gaussian_log_density(&self.chol, &self.standardized, &self.weights)
    }

    /// Posterior mean and variance in standardized target space.
    pub fn predict_standardized(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dim() {
            return Err(Error::Shape { expected: self.dim(), found: x.len() });
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "query coordinate", value: *v });
        }
        let k_star = DVector::from_iterator(
            self.len(),
            self.inputs.iter().map(|xi| matern52_unchecked(xi, x, &self.hyperparams)),
        );
        let mean = k_star.dot(&self.weights);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k_star)
            .ok_or_else(|| Error::numeric("triangular solve failed on a singular factor"))?;
        let mut var = self.hyperparams.signal_variance - v.norm_squared();
        if var < 0.0 {
            if var >= -VARIANCE_CLAMP {
                var = 0.0;
            } else {
                return Err(Error::numeric(format!(
                    "posterior variance {var:e} is below the round-off tolerance −{VARIANCE_CLAMP:e}"
                )));
            }
        }
        Ok((mean, var))
    }

    /// Posterior `(μ(x), σ(x))` in the trained target's units.
    pub fn predict(&self, x: &[f64]) -> Result<PosteriorGaussian> {
        let (mean, var) = self.predict_standardized(x)?;
        let t = self.transform;
        PosteriorGaussian::new(t.shift + t.scale * mean, t.scale * var.sqrt())
    }
}
