//! Closed forms against the quadrature and Monte Carlo oracles.

use logei_core::acquisition::{ei_closed, log_of_ei_stable, log_transformed_ei_closed, AcquisitionKind, Incumbent};
use logei_core::oracle::{
    ei_integral_mc, ei_integral_quadrature, ei_integral_quadrature_y_space, exp_moment_integral,
    log_ei_integral_quadrature, QuadratureConfig,
};
use logei_core::special::{log_normal_pdf, normal_cdf, normal_pdf};
use logei_core::PosteriorGaussian;
use proptest::prelude::*;

const MUS: [f64; 7] = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
const SIGMAS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

fn post(mu: f64, sigma: f64) -> PosteriorGaussian {
    PosteriorGaussian::new(mu, sigma).unwrap()
}

fn inc(y: f64) -> Incumbent {
    Incumbent::new(y).unwrap()
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

#[test]
fn ei_closed_form_matches_quadrature_on_grid() {
    let cfg = QuadratureConfig::default();
    for mu in MUS {
        for sigma in SIGMAS {
            for y in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                let closed = ei_closed(&post(mu, sigma), inc(y)).unwrap().value;
                let quad = ei_integral_quadrature(&post(mu, sigma), inc(y), &cfg).unwrap();
                assert!(rel_err(closed, quad, 1e-12) <= 1e-8, "μ={mu} σ={sigma} y*={y}: {closed} vs {quad}");
                let y_space = ei_integral_quadrature_y_space(&post(mu, sigma), inc(y), &cfg).unwrap();
                assert!(rel_err(quad, y_space, 1e-12) <= 1e-10);
            }
        }
    }
}

#[test]
fn log_transformed_ei_matches_quadrature_on_grid() {
    let cfg = QuadratureConfig::default();
    for mu in MUS {
        for sigma in SIGMAS {
            for y in [0.1, 0.5, 1.0, 2.0, 10.0] {
                let closed = log_transformed_ei_closed(&post(mu, sigma), inc(y)).unwrap().value;
                let quad = log_ei_integral_quadrature(&post(mu, sigma), inc(y), &cfg).unwrap();
                assert!(rel_err(closed, quad, 1e-12) <= 1e-7, "μ={mu} σ={sigma} y*={y}: {closed} vs {quad}");
            }
        }
    }
}

#[test]
fn completing_the_square() {
    let cfg = QuadratureConfig::default();
    for sigma in [0.25, 1.0, 2.0, 4.0] {
        for z in [-5.0, -1.0, 0.0, 1.0, 5.0] {
            let quad = exp_moment_integral(sigma, z, &cfg).unwrap();
            let closed = (0.5 * sigma * sigma).exp() * normal_cdf(z - sigma).unwrap();
            assert!(rel_err(closed, quad, f64::MIN_POSITIVE) <= 1e-9, "σ={sigma} z={z}: {closed} vs {quad}");
        }
    }
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let cfg = QuadratureConfig { mc_samples: 200_000, mc_seed: 3, ..QuadratureConfig::default() };
    for (mu, sigma, y) in [(0.0, 1.0, 1.0), (1.0, 0.5, 2.0), (-1.0, 2.0, 0.5)] {
        let quad = ei_integral_quadrature(&post(mu, sigma), inc(y), &cfg).unwrap();
        let mc = ei_integral_mc(&post(mu, sigma), inc(y), &cfg, AcquisitionKind::Ei).unwrap();
        assert!((quad - mc.estimate).abs() <= 4.0 * mc.std_error);

        let quad = log_ei_integral_quadrature(&post(mu, sigma), inc(y), &cfg).unwrap();
        let mc = ei_integral_mc(&post(mu, sigma), inc(y), &cfg, AcquisitionKind::LogTransformedEi).unwrap();
        assert!((quad - mc.estimate).abs() <= 4.0 * mc.std_error);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cancellation_identity(mu in -5.0f64..5.0, sigma in 1e-3f64..5.0, y in 1e-3f64..20.0) {
        let z = (y.ln() - mu) / sigma;
        let lhs = y * normal_pdf(z).unwrap();
        let rhs = (mu + 0.5 * sigma * sigma + log_normal_pdf(z - sigma).unwrap()).exp();
        prop_assert!(rel_err(lhs, rhs, f64::MIN_POSITIVE) <= 1e-12);
    }

    #[test]
    fn stable_log_matches_linear_scale(mu in -50.0f64..50.0, sigma in 0.01f64..10.0, y in -50.0f64..50.0) {
        let ei = ei_closed(&post(mu, sigma), inc(y)).unwrap().value;
        prop_assume!(ei >= 1e-280);
        let log = log_of_ei_stable(&post(mu, sigma), inc(y)).unwrap().value;
        prop_assert!(rel_err(log.exp(), ei, f64::MIN_POSITIVE) <= 1e-10);
    }
}
