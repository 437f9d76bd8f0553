use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use logei_core::bo::{self, TrialRecord};

use crate::config::{load_config, resolve_seed, unix_ms, LoadedConfig, RunConfig, RunManifest};
use crate::error::CliError;
use crate::format::sig17;
use crate::problems::{self, Problem};
use crate::GlobalArgs;

pub const DEFAULT_OUTPUT_DIR: &str = "bo-output";
pub const SUMMARY_HEADER: &str =
    "problem,acquisition,seed,evaluations,final_incumbent,best_x,known_optimum,optimum_gap,wall_ms";

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Built-in problem: quad1d, posbranin or hartmann3
    pub problem: Option<String>,
    /// JSON config file
    #[arg(long, conflicts_with = "manifest")]
    pub config: Option<PathBuf>,
    /// Replay the problem, config and seed recorded in a previous manifest.json
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

pub(crate) fn run(args: &OptimizeArgs, global: &GlobalArgs, log: &mut dyn FnMut(String)) -> Result<(), CliError> {
    let (problem_name, loaded) = match &args.manifest {
        Some(path) => {
            let m = RunManifest::load(path)?;
            if args.problem.as_ref().is_some_and(|p| *p != m.problem) {
                return Err(CliError::Usage(format!(
                    "problem {:?} conflicts with {:?} recorded in {}",
                    args.problem.as_deref().unwrap_or_default(),
                    m.problem,
                    path.display()
                )));
            }
            let mut config = m.config;
            config.bo.seed = m.seed;
            (m.problem, LoadedConfig { config, seed_given: true })
        }
        None => {
            let name = args.problem.clone().ok_or_else(|| {
                CliError::Usage(format!("missing problem name; available: {}", problems::names().join(", ")))
            })?;
            let loaded = match &args.config {
                Some(path) => load_config(path)?,
                None => LoadedConfig { config: RunConfig::default(), seed_given: false },
            };
            (name, loaded)
        }
    };
    let problem = problems::find(&problem_name).ok_or_else(|| {
        CliError::Usage(format!("unknown problem {problem_name:?}; available: {}", problems::names().join(", ")))
    })?;

    let mut config = loaded.config;
    config.bo.seed = resolve_seed(global.seed, loaded.seed_given.then_some(config.bo.seed))?;
    if let Some(hp) = &config.bo.hyperparams {
        if hp.dim() != problem.lower.len() {
            return Err(CliError::Usage(format!(
                "config field /bo/hyperparams/length_scales: {} length scales for the {}-dimensional problem {}",
                hp.dim(),
                problem.lower.len(),
                problem.name
            )));
        }
    }
    let out_dir = global.output.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    std::fs::create_dir_all(&out_dir).map_err(|e| CliError::io(&out_dir, e))?;

    let mut manifest = RunManifest::new(problem.name, config.clone());
    let started = Instant::now();
    let outcome = bo::run(|x| problem.evaluate(x), &problem.space(), &config.bo);
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    manifest.finished_unix_ms = unix_ms();

    let (records, failure) = match outcome {
        Ok(records) => (records, None),
        Err(e) => (e.records, Some(e.error)),
    };
    write_trials(&out_dir.join("trials.jsonl"), &records)?;
    let manifest_text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    crate::write_output(&out_dir.join("manifest.json"), manifest_text.as_bytes())?;
    if let Some(err) = failure {
        return Err(match CliError::from_core(err) {
            CliError::Data(m) => CliError::Data(format!("run aborted after {} trials: {m}", records.len())),
            CliError::Numeric(m) => CliError::Numeric(format!("run aborted after {} trials: {m}", records.len())),
            other => other,
        });
    }
    crate::write_output(&out_dir.join("summary.csv"), summary_csv(problem, &config, &records, wall_ms).as_bytes())?;

    if let Some(last) = records.last() {
        log(format!(
            "{}: {} evaluations, final incumbent {} (known optimum {}), {:.0} ms; results in {}",
            problem.name,
            records.len(),
            sig17(last.incumbent_so_far),
            sig17(problem.optimum),
            wall_ms,
            out_dir.display()
        ));
    }
    Ok(())
}

fn write_trials(path: &Path, records: &[TrialRecord]) -> Result<(), CliError> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).expect("trial records serialize"));
        text.push('\n');
    }
    crate::write_output(path, text.as_bytes())
}

fn summary_csv(problem: &Problem, config: &RunConfig, records: &[TrialRecord], wall_ms: f64) -> String {
    let best = records
        .iter()
        .fold(None::<&TrialRecord>, |best, r| match best {
            Some(b) if b.y >= r.y => Some(b),
            _ => Some(r),
        })
        .expect("a completed run has at least one record");
    let final_incumbent = records.last().map_or(f64::NAN, |r| r.incumbent_so_far);
    let best_x: Vec<String> = best.x.iter().map(|v| sig17(*v)).collect();
    format!(
        "{SUMMARY_HEADER}\n{},{},{},{},{},{},{},{},{}\n",
        problem.name,
        config.bo.acquisition,
        config.bo.seed,
        records.len(),
        sig17(final_incumbent),
        best_x.join(";"),
        sig17(problem.optimum),
        sig17(problem.optimum - final_incumbent),
        sig17(wall_ms)
    )
}
