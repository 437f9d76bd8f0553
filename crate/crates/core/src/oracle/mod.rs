//! Brute-force numerical evaluation of the defining EI integrals.
//!
//! Everything here is ground truth for the closed forms in
//! [`crate::acquisition`] and deliberately shares no code with them: the
//! standard normal density is re-derived locally and `Φ` is never used.
//!
//! The deterministic integrals substitute `u = (y − μ)/σ` (or `(l − μ)/σ`)
//! and apply a composite Gauss–Legendre rule on panels of width
//! [`PANEL_WIDTH`] over `[min(z, 0) − 12, min(z, c + 12)]`, where `c` is where
//! the integrand's Gaussian factor is centred (0 for EI, σ for the
//! exponential term). The discarded lower tail carries mass below
//! `Φ(−12) ≈ 1.8e−33` of the integrand's scale, so the truncation error is
//! below `1e−12·(|y* − μ| + σ)` for EI.
//!
//! [`ei_integral_mc`] is a second, statistical route through the same
//! integrands.

mod gauss_legendre;

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use gauss_legendre::GaussLegendre;

use crate::acquisition::{AcquisitionKind, Incumbent};
use crate::error::{ensure_finite, Error, Result};
use crate::gp::PosteriorGaussian;

/// Standard deviations kept below the integration's upper end.
pub const TRUNCATION: f64 = 12.0;
/// Panel width in standardized units.
pub const PANEL_WIDTH: f64 = 0.25;
pub const MIN_NODES: usize = 16;
pub const MIN_MC_SAMPLES: usize = 10_000;

/// Name recorded in run metadata for the Monte Carlo sampler.
pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.9) + Ziggurat StandardNormal (rand_distr 0.5)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per panel.
    pub node_count: usize,
    pub mc_samples: usize,
    pub mc_seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig { node_count: 16, mc_samples: 100_000, mc_seed: 0 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count < MIN_NODES {
            return Err(Error::domain(format!("node_count must be ≥ {MIN_NODES}, got {}", self.node_count)));
        }
        if self.mc_samples < MIN_MC_SAMPLES {
            return Err(Error::domain(format!("mc_samples must be ≥ {MIN_MC_SAMPLES}, got {}", self.mc_samples)));
        }
        Ok(())
    }

    fn rule(&self) -> Result<GaussLegendre> {
        self.validate()?;
        Ok(GaussLegendre::new(self.node_count))
    }
}

#[inline]
fn density(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * PI).sqrt()
}

fn panels_for(lo: f64, hi: f64) -> usize {
    (((hi - lo) / PANEL_WIDTH).ceil() as usize).max(1)
}

fn check_positive_sigma(post: &PosteriorGaussian) -> Result<()> {
    PosteriorGaussian::new(post.mu, post.sigma)?;
    if post.sigma == 0.0 {
        return Err(Error::domain("quadrature needs σ > 0; use the closed form's degenerate branch"));
    }
    Ok(())
}

/// `∫_{−∞}^{y*} (y* − y) N(y; μ, σ²) dy`, integrated in `u = (y − μ)/σ` as
/// `∫_{−∞}^{z} (y* − μ − uσ) φ(u) du`.
pub fn ei_integral_quadrature(post: &PosteriorGaussian, inc: Incumbent, cfg: &QuadratureConfig) -> Result<f64> {
    check_positive_sigma(post)?;
    let rule = cfg.rule()?;
    let (mu, sigma, y_star) = (post.mu, post.sigma, inc.y_star());
    let gap = y_star - mu;
    let z = ensure_finite("standardized incumbent", gap / sigma)?;
    let lo = z.min(0.0) - TRUNCATION;
    let hi = z.min(TRUNCATION);
    if hi <= lo {
        return Ok(0.0);
    }
    Ok(rule.integrate_panels(lo, hi, panels_for(lo, hi), |u| (gap - u * sigma) * density(u)))
}

/// The same integral evaluated directly in `y` without the change of variables,
/// over the image of the `u`-interval used by [`ei_integral_quadrature`].
pub fn ei_integral_quadrature_y_space(post: &PosteriorGaussian, inc: Incumbent, cfg: &QuadratureConfig) -> Result<f64> {
    check_positive_sigma(post)?;
    let rule = cfg.rule()?;
    let (mu, sigma, y_star) = (post.mu, post.sigma, inc.y_star());
    let z = ensure_finite("standardized incumbent", (y_star - mu) / sigma)?;
    let lo_u = z.min(0.0) - TRUNCATION;
    let hi_u = z.min(TRUNCATION);
    if hi_u <= lo_u {
        return Ok(0.0);
    }
    let (lo, hi) = (mu + sigma * lo_u, mu + sigma * hi_u);
    let norm = 1.0 / ((2.0 * PI).sqrt() * sigma);
    Ok(rule.integrate_panels(lo, hi, panels_for(lo_u, hi_u), |y| {
        let d = (y - mu) / sigma;
        (y_star - y) * norm * (-0.5 * d * d).exp()
    }))
}

/// `∫_{−∞}^{ln y*} (y* − eˡ) N(l; μ, σ²) dl`, integrated in `u = (l − μ)/σ` as
/// `∫_{−∞}^{z} (y* − exp(μ + uσ)) φ(u) du`.
pub fn log_ei_integral_quadrature(post: &PosteriorGaussian, inc: Incumbent, cfg: &QuadratureConfig) -> Result<f64> {
    check_positive_sigma(post)?;
    let rule = cfg.rule()?;
    let (mu, sigma, y_star) = (post.mu, post.sigma, inc.y_star());
    if y_star <= 0.0 {
        return Err(Error::domain(format!("log-transformed EI needs y* > 0, got {y_star}")));
    }
    let z = ensure_finite("standardized incumbent", (y_star.ln() - mu) / sigma)?;
    let lo = z.min(0.0) - TRUNCATION;
    let hi = z.min(sigma + TRUNCATION);
    if hi <= lo {
        return Ok(0.0);
    }
    let top = mu + sigma * hi;
    if top > f64::MAX.ln() {
        return Err(Error::Overflow(format!(
            "exp(μ + uσ) at the upper panel edge u = {hi} has exponent {top} > {}",
            f64::MAX.ln()
        )));
    }
    Ok(rule.integrate_panels(lo, hi, panels_for(lo, hi), |u| (y_star - (mu + u * sigma).exp()) * density(u)))
}

/// `∫_{−∞}^{z} exp(uσ) φ(u) du`, the term that completing the square turns
/// into `exp(σ²/2)·Φ(z − σ)`.
pub fn exp_moment_integral(sigma: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    ensure_finite("σ", sigma)?;
    ensure_finite("z", z)?;
    if sigma <= 0.0 {
        return Err(Error::domain(format!("σ must be positive, got {sigma}")));
    }
    let rule = cfg.rule()?;
    let lo = z.min(0.0) - TRUNCATION;
    let hi = z.min(sigma + TRUNCATION);
    if hi * sigma > f64::MAX.ln() {
        return Err(Error::Overflow(format!("exp(uσ) overflows at u = {hi}")));
    }
    Ok(rule.integrate_panels(lo, hi, panels_for(lo, hi), |u| (u * sigma).exp() * density(u)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Monte Carlo estimate of the EI integrand (`Ei`) or the log-transformed one
/// (`LogTransformedEi`): the sample mean of `max(y* − y, 0)` with `y = μ + σε`,
/// or of `max(y* − exp(μ + σε), 0)`. Bit-reproducible for a given
/// `(mc_seed, mc_samples)`; see [`GENERATOR`].
pub fn ei_integral_mc(
    post: &PosteriorGaussian,
    inc: Incumbent,
    cfg: &QuadratureConfig,
    kind: AcquisitionKind,
) -> Result<McEstimate> {
    check_positive_sigma(post)?;
    cfg.validate()?;
    let (mu, sigma, y_star) = (post.mu, post.sigma, inc.y_star());
    let improvement: Box<dyn Fn(f64) -> f64> = match kind {
        AcquisitionKind::Ei => Box::new(move |e: f64| (y_star - (mu + sigma * e)).max(0.0)),
        AcquisitionKind::LogTransformedEi => {
            if y_star <= 0.0 {
                return Err(Error::domain(format!("log-transformed EI needs y* > 0, got {y_star}")));
            }
            Box::new(move |e: f64| (y_star - (mu + sigma * e).exp()).max(0.0))
        }
        AcquisitionKind::LogOfEi => {
            return Err(Error::domain("the Monte Carlo oracle covers the ei and logei integrals only"));
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.mc_seed);
    // Welford
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for i in 0..cfg.mc_samples {
        let e: f64 = StandardNormal.sample(&mut rng);
        let v = improvement(e);
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let n = cfg.mc_samples as f64;
    let variance = m2 / (n - 1.0);
    Ok(McEstimate { estimate: mean, std_error: (variance / n).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn post(mu: f64, sigma: f64) -> PosteriorGaussian {
        PosteriorGaussian::new(mu, sigma).unwrap()
    }

    fn inc(y: f64) -> Incumbent {
        Incumbent::new(y).unwrap()
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    // Expected values below come from 50-digit mpmath quadrature of the same integrals.

    #[test]
    fn ei_quadrature_examples() {
        assert_relative_eq!(
            ei_integral_quadrature(&post(0.0, 1.0), inc(0.0), &cfg()).unwrap(),
            0.398_942_280_401_432_7,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            ei_integral_quadrature(&post(0.0, 1.0), inc(1.0), &cfg()).unwrap(),
            1.083_315_470_587_686_3,
            max_relative = 1e-14
        );
        let far_below = ei_integral_quadrature(&post(2.0, 0.5), inc(2.0 - 12.0 * 0.5), &cfg()).unwrap();
        assert!((0.0..=1e-10).contains(&far_below));
    }

    #[test]
    fn log_ei_quadrature_examples() {
        let e = std::f64::consts::E;
        assert_relative_eq!(
            log_ei_integral_quadrature(&post(0.0, 1.0), inc(e), &cfg()).unwrap(),
            1.462_651_499_357_546,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            log_ei_integral_quadrature(&post(0.0, 1e-6), inc(2.0), &cfg()).unwrap(),
            1.0,
            max_relative = 1e-5
        );
        let above = log_ei_integral_quadrature(&post(4f64.ln(), 1e-6), inc(1.0), &cfg()).unwrap();
        assert!(above.abs() <= 1e-10);
    }

    #[test]
    fn large_positive_z_keeps_the_bulk() {
        // z = 53: the Gaussian mass sits ~53 standard deviations below the incumbent.
        let got = log_ei_integral_quadrature(&post(-3.0, 0.1), inc(10.0), &cfg()).unwrap();
        let expected = 10.0 - (-3.0f64 + 0.005).exp();
        assert_relative_eq!(got, expected, max_relative = 1e-13);
        let got = ei_integral_quadrature(&post(-3.0, 0.1), inc(2.0), &cfg()).unwrap();
        assert_relative_eq!(got, 5.0, max_relative = 1e-13);
    }

    #[test]
    fn change_of_variables_is_consistent() {
        for (mu, sigma, y) in [(0.0, 1.0, 1.0), (-2.0, 0.1, 1.0), (3.0, 5.0, -2.0), (1.0, 2.0, 0.5)] {
            let u = ei_integral_quadrature(&post(mu, sigma), inc(y), &cfg()).unwrap();
            let yv = ei_integral_quadrature_y_space(&post(mu, sigma), inc(y), &cfg()).unwrap();
            assert_relative_eq!(u, yv, max_relative = 1e-10);
        }
    }

    #[test]
    fn exp_moment_examples() {
        // ∫_{−∞}^{∞} e^{uσ}φ(u) du = e^{σ²/2}
        let whole = exp_moment_integral(1.0, 40.0, &cfg()).unwrap();
        assert_relative_eq!(whole, (0.5f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn mc_examples() {
        let big = QuadratureConfig { node_count: 16, mc_samples: 1_000_000, mc_seed: 7 };
        let r = ei_integral_mc(&post(0.0, 1.0), inc(1.0), &big, AcquisitionKind::Ei).unwrap();
        assert!((r.estimate - 1.083_315_470_587_686_3).abs() <= 3.0 * r.std_error, "{r:?}");

        let r = ei_integral_mc(&post(0.0, 1.0), inc(-12.5), &cfg(), AcquisitionKind::Ei).unwrap();
        assert!(r.estimate <= 1e-6);

        let a = ei_integral_mc(&post(0.3, 2.0), inc(1.0), &cfg(), AcquisitionKind::LogTransformedEi).unwrap();
        let b = ei_integral_mc(&post(0.3, 2.0), inc(1.0), &cfg(), AcquisitionKind::LogTransformedEi).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ei_integral_quadrature(&post(0.0, 0.0), inc(1.0), &cfg()).is_err());
        assert!(log_ei_integral_quadrature(&post(0.0, 1.0), inc(0.0), &cfg()).is_err());
        assert!(ei_integral_mc(&post(0.0, 1.0), inc(1.0), &cfg(), AcquisitionKind::LogOfEi).is_err());
        let small = QuadratureConfig { node_count: 8, ..cfg() };
        assert!(ei_integral_quadrature(&post(0.0, 1.0), inc(1.0), &small).is_err());
        let few = QuadratureConfig { mc_samples: 10, ..cfg() };
        assert!(ei_integral_mc(&post(0.0, 1.0), inc(1.0), &few, AcquisitionKind::Ei).is_err());
        assert!(matches!(exp_moment_integral(30.0, 40.0, &cfg()), Err(Error::Overflow(_))));
    }
}
