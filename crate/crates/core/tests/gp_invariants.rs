use logei_core::gp::{self, kernel_matrix, standardized_log_marginal_likelihood};
use logei_core::{fit, Dataset, GpHyperparams};
use proptest::prelude::*;

/// Matérn-5/2 written out from its definition, independent of the library's kernel.
fn matern(a: &[f64], b: &[f64], hp: &GpHyperparams) -> f64 {
    let r2: f64 = a.iter().zip(b).zip(&hp.length_scales).map(|((u, v), l)| ((u - v) / l).powi(2)).sum();
    let r = r2.sqrt();
    let s5r = 5f64.sqrt() * r;
    hp.signal_variance * (1.0 + s5r + 5.0 * r2 / 3.0) * (-s5r).exp()
}

/// `log N(y; 0, K + σ_n² I)` via Gauss–Jordan elimination with partial pivoting:
/// explicit inverse and determinant, no Cholesky. The matrix is positive
/// definite, so `ln det` is the sum of `ln |pivot|` regardless of row swaps.
fn dense_log_likelihood(xs: &[Vec<f64>], y: &[f64], hp: &GpHyperparams) -> f64 {
    let n = xs.len();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..n).map(|j| matern(&xs[i], &xs[j], hp)).collect();
            row[i] += hp.noise_variance;
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    let mut log_det = 0.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, pivot);
        let p = a[col][col];
        log_det += p.abs().ln();
        for v in a[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    let quad: f64 = (0..n).map(|i| (0..n).map(|j| y[i] * a[i][n + j] * y[j]).sum::<f64>()).sum();
    -0.5 * quad - 0.5 * log_det - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln()
}

fn dataset(xs: &[Vec<f64>], ys: &[f64]) -> Dataset {
    Dataset::from_xy(xs.to_vec(), ys.to_vec()).unwrap()
}

fn points(max_n: usize, dim: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2..=max_n).prop_flat_map(move |n| {
        (
            proptest::collection::vec(proptest::collection::vec(0.0f64..1.0, dim), n),
            proptest::collection::vec(-3.0f64..3.0, n),
        )
    })
}

fn hyperparams(dim: usize) -> impl Strategy<Value = GpHyperparams> {
    (proptest::collection::vec(0.1f64..2.0, dim), 0.2f64..5.0, 1e-6f64..0.1).prop_map(|(length_scales, s, noise)| {
        GpHyperparams { length_scales, signal_variance: s, noise_variance: noise }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cholesky_reconstructs_the_noisy_kernel((xs, ys) in points(64, 3), hp in hyperparams(3)) {
        let model = fit(&dataset(&xs, &ys), &hp, false).unwrap();
        let l = model.cholesky_factor();
        let mut k = kernel_matrix(&xs, &hp);
        for i in 0..xs.len() {
            k[(i, i)] += hp.noise_variance + model.jitter();
        }
        let rel = (&l * l.transpose() - &k).norm() / k.norm();
        prop_assert!(rel <= 1e-8, "relative Frobenius error {}", rel);
    }

    #[test]
    fn log_likelihood_matches_dense_elimination((xs, ys) in points(8, 2), hp in hyperparams(2)) {
        let got = standardized_log_marginal_likelihood(&xs, &ys, &hp).unwrap();
        let want = dense_log_likelihood(&xs, &ys, &hp);
        prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "got {} want {}", got, want);

        let model = fit(&dataset(&xs, &ys), &hp, false).unwrap();
        prop_assume!(model.transform().scale > 0.0);
        let t = model.transform();
        let standardized: Vec<f64> = ys.iter().map(|y| (y - t.shift) / t.scale).collect();
        let want = dense_log_likelihood(&xs, &standardized, &hp);
        prop_assert!((model.log_marginal_likelihood() - want).abs() <= 1e-8 * want.abs().max(1.0));
    }

    #[test]
    fn log_target_fit_equals_fit_on_logged_data(
        (xs, ls) in points(12, 2),
        hp in hyperparams(2),
        query in proptest::collection::vec(-0.5f64..1.5, 2),
    ) {
        let ys: Vec<f64> = ls.iter().map(|l| l.exp()).collect();
        let logged: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
        let a = fit(&dataset(&xs, &ys), &hp, true).unwrap();
        let b = fit(&dataset(&xs, &logged), &hp, false).unwrap();
        let (pa, pb) = (a.predict(&query).unwrap(), b.predict(&query).unwrap());
        prop_assert!((pa.mu - pb.mu).abs() <= 1e-12 * pb.mu.abs().max(1.0));
        prop_assert!((pa.sigma - pb.sigma).abs() <= 1e-12 * pb.sigma.max(1.0));
        prop_assert!((a.log_marginal_likelihood() - b.log_marginal_likelihood()).abs() <= 1e-12 * b.log_marginal_likelihood().abs().max(1.0));
    }

    #[test]
    fn noiseless_fit_interpolates_in_two_dimensions((xs, ys) in points(20, 2), ls in 0.05f64..0.4) {
        let hp = GpHyperparams::isotropic(2, ls, 1.0, 0.0);
        let data = dataset(&xs, &ys);
        let model = match fit(&data, &hp, false) {
            Ok(m) => m,
            Err(logei_core::Error::DuplicateInput { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        prop_assume!(model.jitter() == 0.0);
        for (x, y) in xs.iter().zip(&ys) {
            let mu = model.predict(x).unwrap().mu;
            prop_assert!((mu - y).abs() <= 1e-6, "x={:?} mu={} y={}", x, mu, y);
        }
    }
}

#[test]
fn library_kernel_matches_the_written_out_formula() {
    let hp = GpHyperparams { length_scales: vec![0.3, 1.7], signal_variance: 2.5, noise_variance: 0.0 };
    for (a, b) in [([0.0, 0.0], [0.1, 0.2]), ([0.5, -1.0], [0.5, -1.0]), ([2.0, 3.0], [-1.0, 0.5])] {
        let lib = gp::matern52(&a, &b, &hp).unwrap();
        assert!((lib - matern(&a, &b, &hp)).abs() <= 1e-15 * hp.signal_variance);
    }
}
