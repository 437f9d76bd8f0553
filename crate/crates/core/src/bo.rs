//! Ask–tell Bayesian optimization over a box.
//!
//! [`suggest`] is a pure function of the history and the config: the first
//! `init_design_size` points come from a seeded uniform design, after which a GP
//! is tuned and fitted on the history and the acquisition is maximized over a
//! random candidate pool followed by coordinate-wise hill climbing. [`run`]
//! drives `suggest` against an objective and records every trial.
//!
//! The incumbent is the largest observed value and each acquisition integrates
//! the posterior mass below it (see [`crate::acquisition`]).

use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::acquisition::{incumbent_from, AcquisitionKind, AcquisitionSpec};
use crate::error::{Error, Result};
use crate::gp::{fit, tune_hyperparams, Dataset, GpHyperparams, GpModel, Observation, TuneOptions};

/// How many of the best observed points seed extra candidates.
const ELITE_POINTS: usize = 5;
const PERTURBATIONS_PER_ELITE: usize = 20;
/// Standard deviation of those perturbations, as a fraction of the box width.
const PERTURBATION_SCALE: f64 = 0.05;
/// First hill-climbing step, as a fraction of the box width; halved whenever a sweep fails.
const REFINEMENT_STEP: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let space = SearchSpace { lower, upper };
        space.validate()?;
        Ok(space)
    }

    pub fn unit(dim: usize) -> Result<Self> {
        SearchSpace::new(vec![0.0; dim], vec![1.0; dim])
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_empty() {
            return Err(Error::domain("search space needs at least one dimension"));
        }
        if self.lower.len() != self.upper.len() {
            return Err(Error::Shape { expected: self.lower.len(), found: self.upper.len() });
        }
        for (d, (lo, hi)) in self.lower.iter().zip(&self.upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::domain(format!(
                    "bounds of dimension {} must be finite with lower < upper, got [{lo}, {hi}]",
                    d + 1
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.lower).zip(&self.upper).all(|((v, lo), hi)| lo <= v && v <= hi)
    }

    fn width(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    fn clamp(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[d], self.upper[d]);
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.dim()).map(|d| self.lower[d] + self.width(d) * rng.random::<f64>()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoConfig {
    pub acquisition: AcquisitionKind,
    pub init_design_size: usize,
    pub max_evaluations: usize,
    pub candidate_pool: usize,
    pub local_refinement_steps: usize,
    pub seed: u64,
    /// Coordinate sweeps for hyperparameter tuning; ignored when `hyperparams` is set.
    pub tune_budget: usize,
    /// Fixed hyperparameters instead of re-tuning at every step.
    pub hyperparams: Option<GpHyperparams>,
    /// Record per-trial wall time. Off by default so that records are reproducible.
    pub record_timings: bool,
}

impl Default for BoConfig {
    fn default() -> Self {
        BoConfig {
            acquisition: AcquisitionKind::Ei,
            init_design_size: 10,
            max_evaluations: 30,
            candidate_pool: 1000,
            local_refinement_steps: 20,
            seed: 0,
            tune_budget: 5,
            hyperparams: None,
            record_timings: false,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.init_design_size == 0 {
            return Err(Error::domain("init_design_size must be positive"));
        }
        if self.init_design_size >= self.max_evaluations {
            return Err(Error::domain(format!(
                "init_design_size ({}) must be smaller than max_evaluations ({})",
                self.init_design_size, self.max_evaluations
            )));
        }
        if self.candidate_pool == 0 {
            return Err(Error::domain("candidate_pool must be at least 1"));
        }
        if self.hyperparams.is_none() && self.tune_budget == 0 {
            return Err(Error::domain("tune_budget must be positive when no fixed hyperparams are given"));
        }
        if let Some(hp) = &self.hyperparams {
            hp.validate()?;
        }
        Ok(())
    }
}

/// One evaluated point. Serialized as a JSON object with keys
/// `iter, x, y, incumbent, acq, log_targets, wall_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    /// Zero-based.
    #[serde(rename = "iter")]
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y: f64,
    /// Largest `y` over this and all earlier trials.
    #[serde(rename = "incumbent")]
    pub incumbent_so_far: f64,
    /// Acquisition value at `x`; absent for initial-design points.
    #[serde(rename = "acq")]
    pub acquisition_value_at_x: Option<f64>,
    /// Whether the model behind this suggestion was trained on `ln y`; absent for initial-design points.
    pub log_targets: Option<bool>,
    #[serde(rename = "wall_ms")]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Suggestion {
    pub x: Vec<f64>,
    pub acquisition: Option<f64>,
    pub log_targets: Option<bool>,
}

/// Next point to evaluate given the history so far.
///
/// The history's order does not matter: it is sorted before fitting, and the
/// random streams depend only on `(seed, history length)`.
pub fn suggest(history: &[Observation], space: &SearchSpace, config: &BoConfig) -> Result<Suggestion> {
    space.validate()?;
    config.validate()?;
    let n = history.len();
    if n >= config.max_evaluations {
        return Err(Error::domain(format!("history already holds {n} of {} evaluations", config.max_evaluations)));
    }
    if let Some(o) = history.iter().find(|o| o.x.len() != space.dim()) {
        return Err(Error::Shape { expected: space.dim(), found: o.x.len() });
    }
    if n < config.init_design_size {
        return Ok(Suggestion { x: initial_design_point(space, config.seed, n), acquisition: None, log_targets: None });
    }

    let mut sorted = history.to_vec();
    sorted.sort_by(|a, b| lexicographic(&a.x, &b.x).then(a.y.total_cmp(&b.y)));
    let data = Dataset::new(sorted)?;

    let kind = config.acquisition;
    let log_targets = kind.uses_log_targets();
    let incumbent = incumbent_from(&data, kind)?;
    let spec = AcquisitionSpec::new(kind, incumbent)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(n as u64);
    let tune_seed = rng.next_u64();
    let hp = match &config.hyperparams {
        Some(hp) => hp.clone(),
        None => tune_hyperparams(&data, log_targets, &TuneOptions::new(config.tune_budget, tune_seed))?,
    };
    let model = fit(&data, &hp, log_targets)?;
    let score = |x: &[f64]| -> Result<f64> { Ok(spec.evaluate(&model.predict(x)?)?.value) };

    let mut best_x = space.sample(&mut rng);
    let mut best = score(&best_x)?;
    let consider = |x: Vec<f64>, best_x: &mut Vec<f64>, best: &mut f64| -> Result<()> {
        let v = score(&x)?;
        if v.total_cmp(best) == Ordering::Greater {
            *best = v;
            *best_x = x;
        }
        Ok(())
    };
    for _ in 1..config.candidate_pool {
        let x = space.sample(&mut rng);
        consider(x, &mut best_x, &mut best)?;
    }
    for x in elite_perturbations(&data, space, &mut rng) {
        consider(x, &mut best_x, &mut best)?;
    }

    let (x, value) = hill_climb(&model, &score, space, best_x, best, config.local_refinement_steps)?;
    Ok(Suggestion { x, acquisition: Some(value), log_targets: Some(log_targets) })
}

/// The `index`-th point of the seeded uniform initial design.
pub fn initial_design_point(space: &SearchSpace, seed: u64, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..index * space.dim() {
        rng.random::<f64>();
    }
    space.sample(&mut rng)
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn elite_perturbations(data: &Dataset, space: &SearchSpace, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut order: Vec<&Observation> = data.observations().iter().collect();
    order.sort_by(|a, b| b.y.total_cmp(&a.y));
    let mut out = Vec::with_capacity(ELITE_POINTS * PERTURBATIONS_PER_ELITE);
    for elite in order.into_iter().take(ELITE_POINTS) {
        for _ in 0..PERTURBATIONS_PER_ELITE {
            let mut x: Vec<f64> = elite
                .x
                .iter()
                .enumerate()
                .map(|(d, v)| v + PERTURBATION_SCALE * space.width(d) * rng.sample::<f64, _>(StandardNormal))
                .collect();
            space.clamp(&mut x);
            out.push(x);
        }
    }
    out
}

fn hill_climb(
    model: &GpModel,
    score: &impl Fn(&[f64]) -> Result<f64>,
    space: &SearchSpace,
    mut x: Vec<f64>,
    mut value: f64,
    steps: usize,
) -> Result<(Vec<f64>, f64)> {
    let mut step: Vec<f64> = (0..model.dim()).map(|d| REFINEMENT_STEP * space.width(d)).collect();
    for _ in 0..steps {
        let mut improved = false;
        for d in 0..x.len() {
            for sign in [1.0, -1.0] {
                let mut trial = x.clone();
                trial[d] += sign * step[d];
                space.clamp(&mut trial);
                if trial[d] == x[d] {
                    continue;
                }
                let v = score(&trial)?;
                if v > value {
                    x = trial;
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    Ok((x, value))
}

/// A run that stopped early, with every trial completed before the failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("run aborted after {} trials: {error}", records.len())]
pub struct RunError {
    pub records: Vec<TrialRecord>,
    pub error: Error,
}

/// Runs `max_evaluations` suggest/evaluate/record steps.
pub fn run(
    mut objective: impl FnMut(&[f64]) -> f64,
    space: &SearchSpace,
    config: &BoConfig,
) -> std::result::Result<Vec<TrialRecord>, RunError> {
    let mut records: Vec<TrialRecord> = Vec::with_capacity(config.max_evaluations);
    let mut history: Vec<Observation> = Vec::with_capacity(config.max_evaluations);
    let mut incumbent = f64::NEG_INFINITY;
    for iteration in 0..config.max_evaluations {
        let started = Instant::now();
        let suggestion = match suggest(&history, space, config) {
            Ok(s) => s,
            Err(error) => return Err(RunError { records, error }),
        };
        let y = objective(&suggestion.x);
        if !y.is_finite() {
            return Err(RunError { records, error: Error::NonFinite { what: "objective value", value: y } });
        }
        if config.acquisition.uses_log_targets() && y <= 0.0 {
            return Err(RunError { records, error: Error::NonPositiveTarget { position: iteration + 1, value: y } });
        }
        incumbent = incumbent.max(y);
        let wall_ms = config.record_timings.then(|| started.elapsed().as_secs_f64() * 1e3);
        history.push(Observation::new(suggestion.x.clone(), y));
        records.push(TrialRecord {
            iteration,
            x: suggestion.x,
            y,
            incumbent_so_far: incumbent,
            acquisition_value_at_x: suggestion.acquisition,
            log_targets: suggestion.log_targets,
            wall_ms,
        });
    }
    Ok(records)
}
