// SPDX-License-Identifier: MIT OR Apache-2.0

use lsar_core::linalg::{norm, spectral_norm, HouseholderQr, Matrix};
use lsar_core::rng::stream_rng;
use lsar_core::*;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

fn gaussian(n: usize, seed: u64) -> TimeSeries {
    let mut rng = stream_rng(seed, 7);
    TimeSeries::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect()).unwrap()
}

/// Lagged design built straight from the series: entry `(i, j)` is `y[i + p - 1 - j]`.
fn lagged(y: &[f64], p: usize) -> (DMatrix<f64>, DVector<f64>) {
    let rows = y.len() - p;
    let x = DMatrix::from_fn(rows, p, |i, j| y[i + p - 1 - j]);
    let r = DVector::from_fn(rows, |i, _| y[i + p]);
    (x, r)
}

/// `diag(X (X^T X)^{-1} X^T)` by explicit inverse.
fn hat_diagonal(x: &DMatrix<f64>) -> Vec<f64> {
    let gram_inv = (x.transpose() * x).try_inverse().expect("invertible Gram matrix");
    (0..x.nrows())
        .map(|i| {
            let row = x.row(i);
            (row * &gram_inv * row.transpose())[(0, 0)]
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn exact_leverage_matches_hat_matrix() {
    let y = gaussian(30, 1);
    let (x, _) = lagged(y.values(), 3);
    let scores = exact_leverage(&y.design(3).unwrap()).unwrap();
    assert!(max_abs_diff(scores.scores(), &hat_diagonal(&x)) <= 1e-8);
}

#[test]
fn recursion_on_four_points() {
    let y = TimeSeries::new(vec![1.0, 2.0, 1.0, 3.0]).unwrap();
    let (x, _) = lagged(y.values(), 2);
    let rec = exact_recursive_scores(&y, 2).unwrap();
    assert!(max_abs_diff(rec.scores(), &hat_diagonal(&x)) <= 1e-10);
}

#[test]
fn recursion_sweep_matches_factorization() {
    let y = gaussian(400, 11);
    for p in 1..=10 {
        let rec = exact_recursive_scores(&y, p).unwrap();
        let direct = exact_leverage(&y.design(p).unwrap()).unwrap();
        let (x, _) = lagged(y.values(), p);
        assert!(max_abs_diff(rec.scores(), direct.scores()) <= 1e-8, "p={p}");
        assert!(max_abs_diff(rec.scores(), &hat_diagonal(&x)) <= 1e-8, "p={p}");
    }
}

#[test]
fn ols_matches_normal_equations_oracle() {
    let y = gaussian(200, 5);
    for p in [1, 4, 9] {
        let fit = fit_ols(&y.design(p).unwrap()).unwrap();
        let (x, r) = lagged(y.values(), p);
        let phi = (x.transpose() * &x).try_inverse().unwrap() * x.transpose() * &r;
        assert!(max_abs_diff(&fit.coefficients, phi.as_slice()) <= 1e-9);
        let rss = fit.residual_norm_sq();
        assert!((fit.noise_variance - rss / (200 - p) as f64).abs() <= 1e-14 * rss);
    }
}

#[test]
fn residuals_are_orthogonal_to_columns() {
    let y = gaussian(500, 8);
    for p in 1..=8 {
        let design = y.design(p).unwrap();
        let fit = fit_ols(&design).unwrap();
        let x = design.materialize();
        let xt_r = x.transpose_mul_vec(&fit.residuals);
        let scale = x.frobenius_norm() * norm(design.response());
        assert!(norm(&xt_r) <= 1e-8 * scale);
        for i in (0..design.rows()).step_by(37) {
            let pred: f64 = design.row(i).iter().zip(&fit.coefficients).map(|(a, b)| a * b).sum();
            assert!((fit.residuals[i] - (design.response_at(i) - pred)).abs() < 1e-12);
        }
    }
}

#[test]
fn row_norm_bounded_by_leverage() {
    for seed in 0..10 {
        let y = gaussian(150, seed);
        let design = y.design(6).unwrap();
        let scores = exact_leverage(&design).unwrap();
        let x = design.materialize();
        let spectral = spectral_norm(&x, 1e-12, 10_000);
        for (i, l) in scores.scores().iter().enumerate() {
            assert!(norm(&design.row(i)) <= spectral * l.sqrt() + 1e-8);
        }
    }
}

/// Leverage of an explicit matrix through the library factorization.
fn matrix_leverage(m: &Matrix) -> Vec<f64> {
    let qr = HouseholderQr::new(m.clone()).unwrap();
    let mut z = vec![0.0; m.cols()];
    (0..m.rows())
        .map(|i| {
            qr.solve_rt_into(&m.row(i), &mut z);
            z.iter().map(|v| v * v).sum()
        })
        .collect()
}

#[test]
fn scores_are_permutation_equivariant() {
    let y = gaussian(80, 3);
    let design = y.design(4).unwrap();
    let rows = design.rows();
    let base = design.materialize();
    let scores = matrix_leverage(&base);
    let perm: Vec<usize> = (0..rows).map(|i| (i * 31 + 7) % rows).collect();
    let mut flat = Vec::with_capacity(rows * 4);
    for &k in &perm {
        flat.extend(base.row(k));
    }
    let permuted = matrix_leverage(&Matrix::from_rows(rows, 4, &flat));
    for (i, &k) in perm.iter().enumerate() {
        assert!((permuted[i] - scores[k]).abs() < 1e-12);
    }
}

/// Partial correlation at lag `h` from its definition: correlation between
/// `y_t` and `y_{t-h}` after regressing both on the intermediate lags.
fn partial_correlation(y: &[f64], h: usize) -> f64 {
    let rows = y.len() - h;
    let lead = DVector::from_fn(rows, |i, _| y[i + h]);
    let tail = DVector::from_fn(rows, |i, _| y[i]);
    let (e1, e2) = if h == 1 {
        (lead, tail)
    } else {
        let z = DMatrix::from_fn(rows, h - 1, |i, j| y[i + h - 1 - j]);
        let svd = z.clone().svd(true, true);
        let project = |v: &DVector<f64>| v - &z * svd.solve(v, 1e-12).unwrap();
        (project(&lead), project(&tail))
    };
    e1.dot(&e2) / (e1.norm() * e2.norm())
}

#[test]
fn pacf_matches_partial_correlation_definition() {
    for (phi, seed) in [(vec![0.5], 1), (vec![0.6, -0.3], 2), (fixtures::AR5.to_vec(), 3)] {
        let y = generate_ar(&ArGeneratorSpec::new(phi, 1.0, 200, seed)).unwrap();
        let trace = exact_pacf(&y, 8).unwrap();
        for lag in &trace.lags {
            let tau = lag.estimate.unwrap();
            assert!((tau - partial_correlation(y.values(), lag.lag)).abs() < 0.05, "lag {}", lag.lag);
        }
    }
}

#[test]
fn white_noise_pacf_within_three_bands() {
    let y = generate_ar(&ArGeneratorSpec::new(vec![], 1.0, 100_000, 2024)).unwrap();
    let trace = exact_pacf(&y, 20).unwrap();
    for lag in &trace.lags {
        assert!(lag.estimate.unwrap().abs() < 3.0 * lag.bandwidth, "lag {}", lag.lag);
        assert_eq!(lag.effective_sample, 100_000 - 20);
    }
}

#[test]
fn pacf_single_lag_hand_value() {
    let y = TimeSeries::new(vec![1.0, 2.0, 3.0]).unwrap();
    let trace = exact_pacf(&y, 1).unwrap();
    assert!((trace.lags[0].estimate.unwrap() - 1.6).abs() < 1e-14);
}
