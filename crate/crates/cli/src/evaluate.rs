use std::io::Write;

use clap::Args;
use logei_core::acquisition::{AcquisitionKind, AcquisitionSpec, Incumbent};
use logei_core::PosteriorGaussian;

use crate::error::CliError;
use crate::format::sig17;

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct EvaluateArgs {
    /// Posterior mean (in log units for logei)
    pub mu: f64,
    /// Posterior standard deviation
    pub sigma: f64,
    /// Incumbent y*, in objective units
    pub y_star: f64,
    /// ei, logei or logofei
    #[arg(value_parser = parse_kind)]
    pub variant: AcquisitionKind,
}

pub(crate) fn parse_kind(s: &str) -> Result<AcquisitionKind, String> {
    s.parse().map_err(|e: logei_core::Error| e.to_string())
}

pub(crate) fn run(args: &EvaluateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let post = PosteriorGaussian::new(args.mu, args.sigma).map_err(CliError::from_core_as_usage)?;
    let inc = Incumbent::new(args.y_star).map_err(CliError::from_core_as_usage)?;
    let spec = AcquisitionSpec::new(args.variant, inc).map_err(CliError::from_core_as_usage)?;
    let value = spec.evaluate(&post).map_err(CliError::from_core_as_usage)?;
    let io = |e| CliError::io("<stdout>", e);
    writeln!(stdout, "{}", sig17(value.value)).map_err(io)?;
    if args.variant == AcquisitionKind::LogOfEi {
        writeln!(stdout, "underflowed: {}", value.underflowed).map_err(io)?;
    }
    Ok(())
}
