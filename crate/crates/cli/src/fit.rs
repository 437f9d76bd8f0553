use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use logei_core::gp::{CsvError, TargetTransform, TuneOptions};
use logei_core::{fit, tune_hyperparams, Dataset, GpHyperparams, PosteriorGaussian};
use serde::{Deserialize, Serialize};

use crate::config::resolve_seed;
use crate::error::CliError;
use crate::GlobalArgs;

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with header x1,...,xD,y
    pub csv: PathBuf,
    /// Train on ln y (every y must be positive)
    #[arg(long)]
    pub log_targets: bool,
    /// Also report the posterior at this point: x1,...,xD
    #[arg(long, allow_hyphen_values = true)]
    pub predict: Option<String>,
    /// Coordinate sweeps per tuning start
    #[arg(long, default_value_t = 5)]
    pub budget: usize,
    /// Fix the noise variance instead of tuning it
    #[arg(long)]
    pub noise: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitReport {
    pub observations: usize,
    pub dim: usize,
    pub log_targets: bool,
    pub seed: u64,
    pub hyperparams: GpHyperparams,
    pub log_marginal_likelihood: f64,
    /// Targets as the GP sees them before standardization (`ln y` with `--log-targets`).
    pub internal_targets: Vec<f64>,
    pub transform: TargetTransform,
    pub jitter: f64,
    /// Posterior at `--predict`, in the internal target's units.
    pub prediction: Option<Prediction>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Prediction {
    pub x: Vec<f64>,
    pub mu: f64,
    pub sigma: f64,
}

fn parse_point(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Usage(format!("--predict {spec:?}: {:?} is not a finite number", s.trim())))
        })
        .collect()
}

pub(crate) fn run(
    args: &FitArgs,
    global: &GlobalArgs,
    stdout: &mut dyn Write,
    log: &mut dyn FnMut(String),
) -> Result<(), CliError> {
    let query = args.predict.as_deref().map(parse_point).transpose()?;
    if args.budget == 0 {
        return Err(CliError::Usage("--budget must be at least 1".into()));
    }
    if let Some(noise) = args.noise {
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(CliError::Usage(format!("--noise {noise}: must be finite and ≥ 0")));
        }
    }
    let data = Dataset::from_csv_path(&args.csv).map_err(|e| match e {
        CsvError::Io(source) => CliError::io(&args.csv, source),
        other => CliError::Data(format!("{}: {other}", args.csv.display())),
    })?;
    if let Some(q) = &query {
        if q.len() != data.dim() {
            return Err(CliError::Usage(format!(
                "--predict has {} coordinates but the data has {} inputs",
                q.len(),
                data.dim()
            )));
        }
    }
    if args.log_targets {
        data.ensure_positive_targets().map_err(CliError::from_core)?;
    }

    let seed = resolve_seed(global.seed, None)?;
    let options = TuneOptions { budget: args.budget, seed, fixed_noise: args.noise };
    let hp = tune_hyperparams(&data, args.log_targets, &options).map_err(CliError::from_core)?;
    let model = fit(&data, &hp, args.log_targets).map_err(CliError::from_core)?;
    let prediction = match query {
        Some(x) => {
            let PosteriorGaussian { mu, sigma } = model.predict(&x).map_err(CliError::from_core)?;
            Some(Prediction { x, mu, sigma })
        }
        None => None,
    };
    let report = FitReport {
        observations: data.len(),
        dim: data.dim(),
        log_targets: args.log_targets,
        seed,
        hyperparams: hp,
        log_marginal_likelihood: model.log_marginal_likelihood(),
        internal_targets: model.targets().to_vec(),
        transform: model.transform(),
        jitter: model.jitter(),
        prediction,
    };
    let text = serde_json::to_string_pretty(&report).expect("fit report serializes") + "\n";
    match &global.output {
        Some(path) => {
            crate::write_output(path, text.as_bytes())?;
            log(format!("wrote fitted model to {}", path.display()));
        }
        None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e))?,
    }
    Ok(())
}
