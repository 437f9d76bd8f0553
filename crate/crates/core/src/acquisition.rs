//! Closed-form acquisition functions over a Gaussian posterior.
//!
//! Three different quantities live here and are easy to confuse:
//!
//! * [`ei_closed`]: expected improvement `∫_{−∞}^{y*} (y* − y) N(y; μ, σ²) dy
//!   = (y* − μ)Φ(z) + σφ(z)` with `z = (y* − μ)/σ`.
//! * [`log_transformed_ei_closed`]: expected improvement when the GP models
//!   `l = ln y` but improvement is still measured on `y`:
//!   `∫_{−∞}^{ln y*} (y* − eˡ) N(l; μ, σ²) dl = y*Φ(z) − exp(μ + σ²/2)Φ(z − σ)`
//!   with `z = (ln y* − μ)/σ`.
//! * [`log_of_ei_stable`]: the logarithm of the first one, evaluated so that it
//!   stays finite where EI itself underflows.
//!
//! The integrals are taken over the mass *below* the incumbent, exactly as
//! written above, while the incumbent is conventionally the largest observed
//! value (see [`incumbent_from`]). No sign flip is applied anywhere.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::gp::{Dataset, PosteriorGaussian};
use crate::special::{self, StandardizedScore, LOG_CDF_TAIL_CROSSOVER};

/// Negative EI values down to this magnitude are round-off and clamp to 0.
pub const EI_CLAMP: f64 = 1e-15;
/// Same for the log-transformed variant, relative to `y*`.
pub const LOG_EI_CLAMP_REL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AcquisitionKind {
    #[serde(rename = "ei")]
    Ei,
    #[serde(rename = "logei")]
    LogTransformedEi,
    #[serde(rename = "logofei")]
    LogOfEi,
}

impl AcquisitionKind {
    pub const ALL: [AcquisitionKind; 3] =
        [AcquisitionKind::Ei, AcquisitionKind::LogTransformedEi, AcquisitionKind::LogOfEi];

    pub fn name(self) -> &'static str {
        match self {
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::LogTransformedEi => "logei",
            AcquisitionKind::LogOfEi => "logofei",
        }
    }

    /// Whether the surrogate for this acquisition is trained on `ln y`.
    pub fn uses_log_targets(self) -> bool {
        self == AcquisitionKind::LogTransformedEi
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AcquisitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AcquisitionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown acquisition variant `{s}` (expected ei, logei or logofei)")))
    }
}

/// The reference value `y*`, in original objective units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    y_star: f64,
}

impl Incumbent {
    pub fn new(y_star: f64) -> Result<Self> {
        ensure_finite("incumbent", y_star).map(|y_star| Incumbent { y_star })
    }

    pub fn y_star(self) -> f64 {
        self.y_star
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionValue {
    /// EI in objective units, or a natural log for [`AcquisitionKind::LogOfEi`].
    pub value: f64,
    /// The linear-scale value is positive in exact arithmetic but below the
    /// smallest normal double.
    pub underflowed: bool,
}

/// An acquisition variant bound to its incumbent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionSpec {
    kind: AcquisitionKind,
    incumbent: Incumbent,
}

impl AcquisitionSpec {
    pub fn new(kind: AcquisitionKind, incumbent: Incumbent) -> Result<Self> {
        if kind == AcquisitionKind::LogTransformedEi && incumbent.y_star <= 0.0 {
            return Err(Error::domain(format!(
                "log-transformed EI needs a positive incumbent, got {}",
                incumbent.y_star
            )));
        }
        Ok(AcquisitionSpec { kind, incumbent })
    }

    pub fn kind(&self) -> AcquisitionKind {
        self.kind
    }

    pub fn incumbent(&self) -> Incumbent {
        self.incumbent
    }

    /// Evaluates the variant. For `LogOfEi` at `σ = 0` this takes the
    /// degenerate branch `ln max(y* − μ, 0)`, which may be `−∞`.
    pub fn evaluate(&self, post: &PosteriorGaussian) -> Result<AcquisitionValue> {
        match self.kind {
            AcquisitionKind::Ei => ei_closed(post, self.incumbent),
            AcquisitionKind::LogTransformedEi => log_transformed_ei_closed(post, self.incumbent),
            AcquisitionKind::LogOfEi if post.sigma == 0.0 => {
                let ei = ei_closed(post, self.incumbent)?;
                Ok(AcquisitionValue { value: ei.value.ln(), underflowed: false })
            }
            AcquisitionKind::LogOfEi => log_of_ei_stable(post, self.incumbent),
        }
    }
}

fn check_posterior(post: &PosteriorGaussian) -> Result<()> {
    PosteriorGaussian::new(post.mu, post.sigma).map(|_| ())
}

/// `z = (reference − μ) / σ`. Requires `σ > 0`; callers take the degenerate branch first.
pub fn standardize(reference: f64, post: &PosteriorGaussian) -> Result<StandardizedScore> {
    check_posterior(post)?;
    ensure_finite("reference value", reference)?;
    if post.sigma == 0.0 {
        return Err(Error::domain("cannot standardize against a posterior with σ = 0"));
    }
    StandardizedScore::new((reference - post.mu) / post.sigma)
}

/// `zΦ(z) + φ(z)`, the EI of a standard normal against incumbent `z`.
///
/// Below the crossover the two terms nearly cancel, so the tail uses
/// `φ(z)·(1 − t·m(t))` with `t = −z` and the Mills-ratio continued fraction.
fn ei_factor(z: f64) -> f64 {
    if z >= LOG_CDF_TAIL_CROSSOVER {
        z * special::cdf(z) + special::pdf(z)
    } else {
        let (d0, d1) = special::mills_denominators(-z);
        special::pdf(z) / (d0 * d1)
    }
}

fn log_ei_factor(z: f64) -> f64 {
    if z >= LOG_CDF_TAIL_CROSSOVER {
        (z * special::cdf(z) + special::pdf(z)).ln()
    } else {
        let (d0, d1) = special::mills_denominators(-z);
        special::log_pdf(z) - d0.ln() - d1.ln()
    }
}

/// Expected improvement `(y* − μ)Φ(z) + σφ(z)`; `max(y* − μ, 0)` when `σ = 0`.
pub fn ei_closed(post: &PosteriorGaussian, inc: Incumbent) -> Result<AcquisitionValue> {
    check_posterior(post)?;
    let gap = inc.y_star - post.mu;
    let z = gap / post.sigma;
    if post.sigma == 0.0 || !z.is_finite() {
        return Ok(AcquisitionValue { value: gap.max(0.0), underflowed: false });
    }
    // For z > 0 use h(z) = z + h(−z): the gap is carried exactly and only the
    // small, σ-increasing remainder goes through Φ and φ.
    let mut value = if z > 0.0 { gap + post.sigma * ei_factor(-z) } else { post.sigma * ei_factor(z) };
    if value < 0.0 {
        if value >= -EI_CLAMP {
            value = 0.0;
        } else {
            return Err(Error::numeric(format!(
                "EI evaluated to {value:e} at μ={}, σ={}, y*={}",
                post.mu, post.sigma, inc.y_star
            )));
        }
    }
    Ok(AcquisitionValue { value, underflowed: value < f64::MIN_POSITIVE })
}

/// EI of a GP trained on `ln y`, with improvement `y* − exp(l)` measured on the
/// original scale: `y*Φ(z) − exp(μ + σ²/2)Φ(z − σ)`, `z = (ln y* − μ)/σ`.
///
/// `post` is the posterior of `ln y`. When `σ = 0` this is `max(y* − e^μ, 0)`.
pub fn log_transformed_ei_closed(post: &PosteriorGaussian, inc: Incumbent) -> Result<AcquisitionValue> {
    check_posterior(post)?;
    let y_star = inc.y_star;
    if y_star <= 0.0 {
        return Err(Error::domain(format!("log-transformed EI needs y* > 0, got {y_star}")));
    }
    let (mu, sigma) = (post.mu, post.sigma);
    let exponent = mu + 0.5 * sigma * sigma;
    if exponent > f64::MAX.ln() {
        return Err(Error::Overflow(format!(
            "exp(μ + σ²/2) with μ={mu}, σ={sigma} exceeds the largest double (exponent {exponent} > {})",
            f64::MAX.ln()
        )));
    }
    let z = (y_star.ln() - mu) / sigma;
    if sigma == 0.0 || !z.is_finite() {
        return Ok(AcquisitionValue { value: (y_star - mu.exp()).max(0.0), underflowed: false });
    }
    let mut value = y_star * special::cdf(z) - exponent.exp() * special::cdf(z - sigma);
    if value < 0.0 {
        if value >= -LOG_EI_CLAMP_REL * y_star {
            value = 0.0;
        } else {
            return Err(Error::numeric(format!(
                "log-transformed EI evaluated to {value:e} at μ={mu}, σ={sigma}, y*={y_star}"
            )));
        }
    }
    Ok(AcquisitionValue { value, underflowed: value < f64::MIN_POSITIVE })
}

/// `ln(σ·(zΦ(z) + φ(z)))`, the logarithm of [`ei_closed`], without
/// intermediate underflow. Finite for `z ≥ −1e4` and well beyond. Requires `σ > 0`.
pub fn log_of_ei_stable(post: &PosteriorGaussian, inc: Incumbent) -> Result<AcquisitionValue> {
    let z = standardize(inc.y_star, post)?.value();
    let value = post.sigma.ln() + log_ei_factor(z);
    Ok(AcquisitionValue { value, underflowed: value < f64::MIN_POSITIVE.ln() })
}

/// `y* = max_n y_n` on the original scale (also for the log-transformed variant).
pub fn incumbent_from(data: &Dataset, kind: AcquisitionKind) -> Result<Incumbent> {
    if kind == AcquisitionKind::LogTransformedEi {
        data.ensure_positive_targets()?;
    }
    Incumbent::new(data.max_target())
}
