#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use simplexslice::rng::stream_rng;
use simplexslice::sampling::{sample_unit_simplex, SamplerConfig};

/// Two-sided Kolmogorov-Smirnov statistic of `sample` against `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic p-value of a KS statistic `d` from `n` points, with the
/// Stephens small-sample correction.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// `lambda^T C lambda` for Cartesian `x` with `lambda = (1 - sum x, x)`.
pub fn bary_form(c: &DMatrix<f64>, x: &[f64]) -> f64 {
    let mut lam = vec![1.0 - x.iter().sum::<f64>()];
    lam.extend_from_slice(x);
    let n = lam.len();
    (0..n)
        .map(|i| (0..n).map(|j| c[(i, j)] * lam[i] * lam[j]).sum::<f64>())
        .sum()
}

/// Factor-model covariance of `d + 1` assets: three factors plus a small
/// diagonal, seeded.
pub fn factor_covariance(d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream_rng(seed, 0);
    let n = d + 1;
    let b = DMatrix::from_fn(n, 3, |_, _| rng.gen_range(-0.1..0.1));
    let diag = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.002 + 0.002 * rng.gen::<f64>()
        } else {
            0.0
        }
    });
    &b * b.transpose() + diag
}

/// Empirical `p`-quantile of `lambda^T C lambda` over uniform simplex points.
pub fn form_quantiles(c: &DMatrix<f64>, d: usize, ps: &[f64], seed: u64) -> Vec<f64> {
    let pts = sample_unit_simplex(100_000, &SamplerConfig::new(d, seed)).unwrap();
    let mut vals: Vec<f64> = pts.iter().map(|x| bary_form(c, x)).collect();
    vals.sort_by(f64::total_cmp);
    ps.iter()
        .map(|p| vals[(p * vals.len() as f64) as usize])
        .collect()
}

pub fn uniform_vec(d: usize, lo: f64, hi: f64, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    (0..d).map(|_| rng.gen_range(lo..hi)).collect()
}
