use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{standardized_log_marginal_likelihood, transformed_targets, Dataset, GpHyperparams, TargetTransform};
use crate::error::{Error, Result};

/// Number of starting points (the default plus perturbations) when the budget allows.
pub const MULTI_STARTS: usize = 8;

const SIGNAL_BOUNDS: (f64, f64) = (1e-2, 1e2);
const NOISE_BOUNDS: (f64, f64) = (1e-10, 1.0);
const LENGTH_SCALE_SPAN: f64 = 1e3;
const DEFAULT_NOISE: f64 = 1e-6;
const START_SPREAD: f64 = 2.0;
const INITIAL_STEP: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneOptions {
    /// Coordinate sweeps per start; also caps the number of starts.
    pub budget: usize,
    pub seed: u64,
    /// Keep the noise variance at this value instead of searching over it.
    #[serde(default)]
    pub fixed_noise: Option<f64>,
}

impl TuneOptions {
    pub fn new(budget: usize, seed: u64) -> Self {
        TuneOptions { budget, seed, fixed_noise: None }
    }
}

impl GpHyperparams {
    /// Starting point of the search: half the input range per dimension (1 for a
    /// degenerate range), unit signal variance, small noise.
    pub fn default_for(data: &Dataset) -> Self {
        let length_scales = (0..data.dim())
            .map(|d| {
                let range = input_range(data, d);
                if range > 0.0 {
                    0.5 * range
                } else {
                    1.0
                }
            })
            .collect();
        GpHyperparams { length_scales, signal_variance: 1.0, noise_variance: DEFAULT_NOISE }
    }
}

fn input_range(data: &Dataset, d: usize) -> f64 {
    let (lo, hi) =
        data.inputs().map(|x| x[d]).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    hi - lo
}

/// Log-space parameterization searched by the tuner.
struct Space {
    dim: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    fixed_noise: Option<f64>,
}

impl Space {
    fn new(data: &Dataset, fixed_noise: Option<f64>) -> Self {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for d in 0..data.dim() {
            let range = input_range(data, d);
            let reference = if range > 0.0 { range } else { 1.0 };
            lower.push((reference / LENGTH_SCALE_SPAN).ln());
            upper.push((reference * LENGTH_SCALE_SPAN).ln());
        }
        lower.push(SIGNAL_BOUNDS.0.ln());
        upper.push(SIGNAL_BOUNDS.1.ln());
        if fixed_noise.is_none() {
            lower.push(NOISE_BOUNDS.0.ln());
            upper.push(NOISE_BOUNDS.1.ln());
        }
        Space { dim: data.dim(), lower, upper, fixed_noise }
    }

    fn len(&self) -> usize {
        self.lower.len()
    }

    fn encode(&self, hp: &GpHyperparams) -> Vec<f64> {
        let mut theta: Vec<f64> = hp.length_scales.iter().map(|l| l.ln()).collect();
        theta.push(hp.signal_variance.ln());
        if self.fixed_noise.is_none() {
            theta.push(hp.noise_variance.ln());
        }
        self.clamp(&mut theta);
        theta
    }

    fn decode(&self, theta: &[f64]) -> GpHyperparams {
        GpHyperparams {
            length_scales: theta[..self.dim].iter().map(|t| t.exp()).collect(),
            signal_variance: theta[self.dim].exp(),
            noise_variance: self.fixed_noise.unwrap_or_else(|| theta[self.dim + 1].exp()),
        }
    }

    fn clamp(&self, theta: &mut [f64]) {
        for ((t, lo), hi) in theta.iter_mut().zip(&self.lower).zip(&self.upper) {
            *t = t.clamp(*lo, *hi);
        }
    }
}

/// Maximizes the log marginal likelihood by multi-start coordinate search in
/// log-parameter space.
///
/// Start 0 is [`GpHyperparams::default_for`]; the remaining
/// `min(budget, MULTI_STARTS) − 1` starts perturb it by up to ±2 in every log
/// coordinate. Each start runs `budget` sweeps; a sweep tries a step of ±δ on
/// every coordinate in turn and halves δ when nothing improves. The result is
/// never worse than the default.
pub fn tune_hyperparams(data: &Dataset, log_targets: bool, options: &TuneOptions) -> Result<GpHyperparams> {
    if options.budget == 0 {
        return Err(Error::domain("tuning budget must be at least 1"));
    }
    if let Some(noise) = options.fixed_noise {
        if !(noise.is_finite() && noise >= 0.0) {
            return Err(Error::domain(format!("fixed noise variance must be finite and ≥ 0, got {noise}")));
        }
    }
    if log_targets {
        data.ensure_positive_targets()?;
    }
    let targets = transformed_targets(data, log_targets);
    let transform = TargetTransform::from_targets(&targets, log_targets);
    let standardized: Vec<f64> = targets.iter().map(|&t| transform.standardize(t)).collect();
    let inputs: Vec<Vec<f64>> = data.inputs().map(<[f64]>::to_vec).collect();

    let space = Space::new(data, options.fixed_noise);
    let objective = |theta: &[f64]| -> f64 {
        standardized_log_marginal_likelihood(&inputs, &standardized, &space.decode(theta))
            .ok()
            .filter(|v| v.is_finite())
            .unwrap_or(f64::NEG_INFINITY)
    };

    let mut default = GpHyperparams::default_for(data);
    if let Some(noise) = options.fixed_noise {
        default.noise_variance = noise;
    }
    let origin = space.encode(&default);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let starts = options.budget.min(MULTI_STARTS);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in 0..starts {
        let mut theta = origin.clone();
        if s > 0 {
            for t in theta.iter_mut() {
                *t += rng.random_range(-START_SPREAD..=START_SPREAD);
            }
            space.clamp(&mut theta);
        }
        let (theta, value) = coordinate_search(&space, theta, options.budget, &objective);
        if value.is_finite() && best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((theta, value));
        }
    }

    best.map(|(theta, _)| space.decode(&theta))
        .ok_or_else(|| Error::numeric("log marginal likelihood could not be evaluated at any start"))
}

fn coordinate_search(space: &Space, mut theta: Vec<f64>, sweeps: usize, f: &impl Fn(&[f64]) -> f64) -> (Vec<f64>, f64) {
    let mut value = f(&theta);
    let mut step = INITIAL_STEP;
    for _ in 0..sweeps {
        let mut improved = false;
        for i in 0..space.len() {
            for dir in [1.0, -1.0] {
                let mut candidate = theta.clone();
                candidate[i] = (candidate[i] + dir * step).clamp(space.lower[i], space.upper[i]);
                if candidate[i] == theta[i] {
                    continue;
                }
                let v = f(&candidate);
                if v > value {
                    theta = candidate;
                    value = v;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (theta, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{kernel_matrix, log_marginal_likelihood};
    use nalgebra::{Cholesky, DVector};
    use rand_distr::StandardNormal;

    fn gp_draw(n: usize, hp: &GpHyperparams, seed: u64) -> Dataset {
        let xs: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64 / (n - 1) as f64]).collect();
        let mut k = kernel_matrix(&xs, hp);
        for i in 0..n {
            k[(i, i)] += 1e-9;
        }
        let l = Cholesky::new(k).unwrap().l();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let y = l * e;
        Dataset::from_xy(xs, y.iter().copied().collect()).unwrap()
    }

    #[test]
    fn never_worse_than_default() {
        let truth = GpHyperparams::isotropic(1, 0.15, 1.0, 0.0);
        for seed in 0..5 {
            let data = gp_draw(15, &truth, seed);
            let tuned = tune_hyperparams(&data, false, &TuneOptions::new(6, seed)).unwrap();
            let baseline = log_marginal_likelihood(&data, &GpHyperparams::default_for(&data), false).unwrap();
            let got = log_marginal_likelihood(&data, &tuned, false).unwrap();
            assert!(got >= baseline, "seed {seed}: {got} < {baseline}");
        }
    }

    #[test]
    fn budget_one_refines_the_default_once() {
        let data = gp_draw(10, &GpHyperparams::isotropic(1, 0.3, 1.0, 0.0), 3);
        let opts = TuneOptions::new(1, 99);
        let tuned = tune_hyperparams(&data, false, &opts).unwrap();

        // Independently: one sweep from the default with step 1 in log space.
        let space = Space::new(&data, None);
        let inputs: Vec<Vec<f64>> = data.inputs().map(<[f64]>::to_vec).collect();
        let targets: Vec<f64> = data.targets().collect();
        let t = TargetTransform::from_targets(&targets, false);
        let z: Vec<f64> = targets.iter().map(|&v| t.standardize(v)).collect();
        let f = |theta: &[f64]| standardized_log_marginal_likelihood(&inputs, &z, &space.decode(theta)).unwrap();
        let (theta, _) = coordinate_search(&space, space.encode(&GpHyperparams::default_for(&data)), 1, &f);
        assert_eq!(tuned, space.decode(&theta));
        // different seeds do not matter with a single start
        assert_eq!(tuned, tune_hyperparams(&data, false, &TuneOptions::new(1, 7)).unwrap());
    }

    #[test]
    fn deterministic_given_seed() {
        let data = gp_draw(12, &GpHyperparams::isotropic(1, 0.2, 1.0, 0.0), 8);
        let a = tune_hyperparams(&data, false, &TuneOptions::new(5, 42)).unwrap();
        let b = tune_hyperparams(&data, false, &TuneOptions::new(5, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sine_length_scale_matches_grid_scan() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 10.0 / 19.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let data = Dataset::from_xy(xs.iter().map(|&x| vec![x]).collect(), ys).unwrap();

        // Oracle: dense log grid over the length scale with the other parameters at their defaults.
        let grid_best = (0..=400)
            .map(|i| 10f64.powf(-2.0 + 4.0 * i as f64 / 400.0))
            .map(|ls| {
                let hp = GpHyperparams::isotropic(1, ls, 1.0, DEFAULT_NOISE);
                (ls, log_marginal_likelihood(&data, &hp, false).unwrap_or(f64::NEG_INFINITY))
            })
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap()
            .0;

        let tuned = tune_hyperparams(&data, false, &TuneOptions::new(10, 0)).unwrap();
        let ratio = tuned.length_scales[0] / grid_best;
        assert!((1.0 / 3.0..=3.0).contains(&ratio), "tuned {} vs grid {}", tuned.length_scales[0], grid_best);
    }

    #[test]
    fn fixed_noise_is_kept() {
        let data = gp_draw(8, &GpHyperparams::isotropic(1, 0.3, 1.0, 0.0), 1);
        let opts = TuneOptions { budget: 3, seed: 0, fixed_noise: Some(0.0) };
        assert_eq!(tune_hyperparams(&data, false, &opts).unwrap().noise_variance, 0.0);
    }

    #[test]
    fn rejects_zero_budget_and_bad_logs() {
        let data = Dataset::from_xy(vec![vec![0.0], vec![1.0]], vec![1.0, -2.0]).unwrap();
        assert!(tune_hyperparams(&data, false, &TuneOptions::new(0, 0)).is_err());
        assert_eq!(
            tune_hyperparams(&data, true, &TuneOptions::new(2, 0)),
            Err(Error::NonPositiveTarget { position: 2, value: -2.0 })
        );
    }
}
