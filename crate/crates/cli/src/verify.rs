//! Closed form vs. quadrature vs. Monte Carlo over a (μ, σ, y*) grid.

use std::fmt::Write as _;
use std::io::Write;

use clap::{Args, ValueEnum};
use logei_core::acquisition::{ei_closed, log_transformed_ei_closed, AcquisitionKind, Incumbent};
use logei_core::oracle::{ei_integral_mc, ei_integral_quadrature, log_ei_integral_quadrature, QuadratureConfig};
use logei_core::PosteriorGaussian;

use crate::config::resolve_seed;
use crate::error::CliError;
use crate::format::sig17;
use crate::GlobalArgs;

pub const VERIFY_HEADER: &str = "mu,sigma,y_star,variant,closed_form,quadrature,mc_estimate,mc_stderr,rel_err";

/// Relative errors are divided by `max(|quadrature|, REL_FLOOR)`.
pub const REL_FLOOR: f64 = 1e-12;
pub const EI_TOLERANCE: f64 = 1e-8;
pub const LOG_EI_TOLERANCE: f64 = 1e-7;

const DEFAULT_MU: [f64; 7] = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
const DEFAULT_SIGMA: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
const DEFAULT_EI_Y_STAR: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];
const DEFAULT_LOG_EI_Y_STAR: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantChoice {
    Ei,
    Logei,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Which closed forms to check
    #[arg(long, value_enum, default_value = "all")]
    pub variant: VariantChoice,
    /// Posterior means: comma-separated list or START:STOP:COUNT
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Posterior standard deviations, same syntax
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    /// Incumbents, same syntax; defaults differ per variant
    #[arg(long = "y-star", allow_hyphen_values = true)]
    pub y_star: Option<String>,
    /// Gauss–Legendre nodes per panel
    #[arg(long, default_value_t = 16)]
    pub nodes: usize,
    /// Monte Carlo samples per grid point
    #[arg(long, default_value_t = 100_000)]
    pub mc_samples: usize,
}

/// `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_grid(flag: &str, spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: String| CliError::Usage(format!("--{flag} {spec:?}: {why}"));
    let number = |s: &str| -> Result<f64, CliError> {
        let v: f64 = s.trim().parse().map_err(|_| bad(format!("{:?} is not a number", s.trim())))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad(format!("{v} is not finite")))
        }
    };
    let values = if let [start, stop, count] = spec.split(':').collect::<Vec<_>>()[..] {
        let (start, stop) = (number(start)?, number(stop)?);
        let count: usize = count.trim().parse().map_err(|_| bad(format!("{count:?} is not a point count")))?;
        match count {
            0 => return Err(bad("a range needs at least one point".into())),
            1 => vec![start],
            _ => (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect(),
        }
    } else {
        spec.split(',').map(number).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(bad("empty grid".into()));
    }
    Ok(values)
}

struct Row {
    mu: f64,
    sigma: f64,
    y_star: f64,
    kind: AcquisitionKind,
    closed: f64,
    /// `None` for σ = 0, where the oracles do not apply.
    oracle: Option<Oracle>,
}

struct Oracle {
    quadrature: f64,
    mc_estimate: f64,
    mc_stderr: f64,
    rel_err: f64,
}

impl Row {
    fn tolerance(&self) -> f64 {
        match self.kind {
            AcquisitionKind::LogTransformedEi => LOG_EI_TOLERANCE,
            _ => EI_TOLERANCE,
        }
    }

    fn fails(&self) -> bool {
        self.oracle.as_ref().is_some_and(|o| o.rel_err.is_nan() || o.rel_err > self.tolerance())
    }

    fn csv(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{},{},",
            sig17(self.mu),
            sig17(self.sigma),
            sig17(self.y_star),
            self.kind,
            sig17(self.closed)
        );
        let _ = match &self.oracle {
            Some(o) => writeln!(
                out,
                "{},{},{},{}",
                sig17(o.quadrature),
                sig17(o.mc_estimate),
                sig17(o.mc_stderr),
                sig17(o.rel_err)
            ),
            None => writeln!(out, "skipped,skipped,skipped,skipped"),
        };
    }
}

fn evaluate(mu: f64, sigma: f64, y_star: f64, kind: AcquisitionKind, cfg: &QuadratureConfig) -> Result<Row, CliError> {
    let post = PosteriorGaussian::new(mu, sigma).map_err(CliError::from_core_as_usage)?;
    let inc = Incumbent::new(y_star).map_err(CliError::from_core_as_usage)?;
    let closed = match kind {
        AcquisitionKind::Ei => ei_closed(&post, inc),
        _ => log_transformed_ei_closed(&post, inc),
    }
    .map_err(CliError::from_core)?
    .value;
    let oracle = if sigma > 0.0 {
        let quadrature = match kind {
            AcquisitionKind::Ei => ei_integral_quadrature(&post, inc, cfg),
            _ => log_ei_integral_quadrature(&post, inc, cfg),
        }
        .map_err(CliError::from_core)?;
        let mc = ei_integral_mc(&post, inc, cfg, kind).map_err(CliError::from_core)?;
        let rel_err = (closed - quadrature).abs() / quadrature.abs().max(REL_FLOOR);
        Some(Oracle { quadrature, mc_estimate: mc.estimate, mc_stderr: mc.std_error, rel_err })
    } else {
        None
    };
    Ok(Row { mu, sigma, y_star, kind, closed, oracle })
}

pub(crate) fn run(
    args: &VerifyArgs,
    global: &GlobalArgs,
    stdout: &mut dyn Write,
    log: &mut dyn FnMut(String),
) -> Result<(), CliError> {
    let grid = |flag: &str, given: &Option<String>, default: &[f64]| match given {
        Some(spec) => parse_grid(flag, spec),
        None => Ok(default.to_vec()),
    };
    let mus = grid("mu", &args.mu, &DEFAULT_MU)?;
    let sigmas = grid("sigma", &args.sigma, &DEFAULT_SIGMA)?;
    if let Some(s) = sigmas.iter().find(|s| **s < 0.0) {
        return Err(CliError::Usage(format!("--sigma contains {s}; standard deviations must be ≥ 0")));
    }
    let kinds: &[AcquisitionKind] = match args.variant {
        VariantChoice::Ei => &[AcquisitionKind::Ei],
        VariantChoice::Logei => &[AcquisitionKind::LogTransformedEi],
        VariantChoice::All => &[AcquisitionKind::Ei, AcquisitionKind::LogTransformedEi],
    };
    let cfg = QuadratureConfig {
        node_count: args.nodes,
        mc_samples: args.mc_samples,
        mc_seed: resolve_seed(global.seed, None)?,
    };
    cfg.validate().map_err(CliError::from_core_as_usage)?;

    let mut rows = Vec::new();
    for &kind in kinds {
        let default = if kind == AcquisitionKind::Ei { &DEFAULT_EI_Y_STAR } else { &DEFAULT_LOG_EI_Y_STAR };
        let y_stars = grid("y-star", &args.y_star, default)?;
        if kind == AcquisitionKind::LogTransformedEi {
            if let Some(y) = y_stars.iter().find(|y| **y <= 0.0) {
                return Err(CliError::Usage(format!("--y-star contains {y}; the logei variant needs y* > 0")));
            }
        }
        for &mu in &mus {
            for &sigma in &sigmas {
                for &y_star in &y_stars {
                    rows.push(evaluate(mu, sigma, y_star, kind, &cfg)?);
                }
            }
        }
    }

    let mut text = String::with_capacity(rows.len() * 160);
    text.push_str(VERIFY_HEADER);
    text.push('\n');
    rows.iter().for_each(|r| r.csv(&mut text));
    match &global.output {
        Some(path) => {
            crate::write_output(path, text.as_bytes())?;
            log(format!("wrote {} rows to {}", rows.len(), path.display()));
        }
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))?,
    }

    let failures: Vec<&Row> = rows.iter().filter(|r| r.fails()).collect();
    if let Some(worst) = failures.first() {
        return Err(CliError::Numeric(format!(
            "{} of {} rows exceed their tolerance (first: {} at μ={}, σ={}, y*={}, rel_err={:e})",
            failures.len(),
            rows.len(),
            worst.kind,
            worst.mu,
            worst.sigma,
            worst.y_star,
            worst.oracle.as_ref().map_or(f64::NAN, |o| o.rel_err)
        )));
    }
    let max_rel = rows.iter().filter_map(|r| r.oracle.as_ref()).map(|o| o.rel_err).fold(0.0, f64::max);
    log(format!("all {} rows within tolerance (max rel_err {max_rel:e})", rows.len()));
    Ok(())
}
