//! Independent oracles and helpers shared by the integration tests.
//! Nothing here calls into the fast paths it is used to check.
#![allow(dead_code)]

pub mod gradcheck;

use std::path::PathBuf;

use lexdm::densecore::{DensityMatrix, IntermediaryMatrix};
use nalgebra::DMatrix;
use rand::Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn random_intermediary<R: Rng>(rng: &mut R, n: usize, m: usize) -> IntermediaryMatrix {
    IntermediaryMatrix::from_row_major(n, m, random_vec(rng, n * m)).unwrap()
}

/// A random PSD matrix `G Gᵀ` with `G` of shape `d × rank`.
pub fn random_psd<R: Rng>(rng: &mut R, d: usize, rank: usize) -> DensityMatrix {
    let g = DMatrix::from_fn(d, rank, |_, _| rng.gen_range(-1.0..1.0));
    DensityMatrix::from_matrix(&g * g.transpose()).unwrap()
}

/// Naive row-by-row `B Bᵀ` as nested vectors.
pub fn naive_gram(b: &IntermediaryMatrix) -> Vec<Vec<f64>> {
    let (n, m) = (b.rows(), b.cols());
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                out[i][j] += b.get(i, k) * b.get(j, k);
            }
        }
    }
    out
}

/// `tr(XY)` by explicit matrix product and diagonal sum.
pub fn naive_trace_product(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let n = x.len();
    let mut tr = 0.0;
    for i in 0..n {
        for k in 0..n {
            tr += x[i][k] * y[k][i];
        }
    }
    tr
}

/// `Σ_{jl} X_ij X_kl Y_jl`: the order-4 tensor `X ⊗ X` contracted with `Y`.
pub fn tensor_contraction(x: &DensityMatrix, y: &DensityMatrix) -> Vec<Vec<f64>> {
    let d = x.dim();
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                for l in 0..d {
                    out[i][k] += x.get(i, j) * x.get(k, l) * y.get(j, l);
                }
            }
        }
    }
    out
}

/// Pearson by the textbook formula.
fn direct_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(a, b)| a * b).sum();
    let sxx: f64 = xs.iter().map(|a| a * a).sum();
    let syy: f64 = ys.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

/// Rank of each value by counting: `1 + #smaller + (#equal − 1)/2`.
fn enumerated_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|v| {
            let smaller = values.iter().filter(|w| *w < v).count() as f64;
            let equal = values.iter().filter(|w| *w == v).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

/// `(spearman, pearson)` by brute force.
pub fn brute_force_correlation(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    (
        direct_pearson(&enumerated_ranks(xs), &enumerated_ranks(ys)),
        direct_pearson(xs, ys),
    )
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, floor)`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-8)
}

pub fn max_abs_diff(a: &DensityMatrix, b: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, row) in b.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            worst = worst.max((a.get(i, j) - v).abs());
        }
    }
    worst
}
