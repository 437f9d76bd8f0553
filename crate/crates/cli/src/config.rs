//! JSON run configuration and the manifest written next to every optimize run.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use logei_core::bo::BoConfig;
use logei_core::oracle::{QuadratureConfig, GENERATOR};
use serde::{Deserialize, Serialize};
use serde_path_to_error::{Path as FieldPath, Segment};

use crate::error::CliError;

pub const SEED_ENV: &str = "LOGEI_BO_SEED";

/// Candidate pools, initial designs and tuning restarts all draw from this.
pub const DESIGN_GENERATOR: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.9), one stream per history length";

/// Config file schema. Every field is optional; unknown fields are rejected.
///
/// ```json
/// {
///   "bo": {
///     "acquisition": "logei",
///     "init_design_size": 10,
///     "max_evaluations": 30,
///     "candidate_pool": 1000,
///     "local_refinement_steps": 20,
///     "seed": 7,
///     "tune_budget": 5,
///     "hyperparams": { "length_scales": [0.2], "signal_variance": 1.0, "noise_variance": 1e-6 },
///     "record_timings": false
///   },
///   "quadrature": { "node_count": 16, "mc_samples": 100000, "mc_seed": 0 }
/// }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub bo: BoConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
}

/// A parsed config plus whether it set `bo.seed` explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub seed_given: bool,
}

pub fn parse_config(text: &str) -> Result<LoadedConfig, CliError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config is not valid JSON: {e}")))?;
    let seed_given = value.pointer("/bo/seed").is_some();
    let config: RunConfig = serde_path_to_error::deserialize(value)
        .map_err(|e| CliError::Usage(format!("config field {}: {}", json_pointer(e.path()), e.inner())))?;
    config.bo.validate().map_err(|e| CliError::Usage(format!("config field /bo: {e}")))?;
    config.quadrature.validate().map_err(|e| CliError::Usage(format!("config field /quadrature: {e}")))?;
    Ok(LoadedConfig { config, seed_given })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text)
}

/// RFC 6901 pointer for a serde path, e.g. `/bo/hyperparams/length_scales/0`.
pub fn json_pointer(path: &FieldPath) -> String {
    let mut out = String::new();
    for segment in path.iter() {
        out.push('/');
        match segment {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Command-line flag, then config file, then `LOGEI_BO_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, CliError> {
    if let Some(seed) = flag.or(config) {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(s) => {
            s.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={s:?} is not an unsigned 64-bit integer")))
        }
        Err(_) => Ok(0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub artifact_version: String,
    pub problem: String,
    pub seed: u64,
    /// Effective configuration; `config.bo.seed` equals `seed`.
    pub config: RunConfig,
    pub design_generator: String,
    pub mc_generator: String,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

impl RunManifest {
    pub fn new(problem: &str, config: RunConfig) -> Self {
        RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            problem: problem.to_string(),
            seed: config.bo.seed,
            config,
            design_generator: DESIGN_GENERATOR.to_string(),
            mc_generator: GENERATOR.to_string(),
            started_unix_ms: unix_ms(),
            finished_unix_ms: 0,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut de = serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(&mut de)
            .map_err(|e| CliError::Usage(format!("manifest field {}: {}", json_pointer(e.path()), e.inner())))
    }
}

pub fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}
