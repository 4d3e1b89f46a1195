//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use progquant::network::{self, Graph, WeightMatrix};
use progquant::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Connected RGG at the connectivity radius.
pub fn rgg(m: usize, seed: u64) -> Graph {
    network::connected_rgg(m, network::connectivity_radius(m), seed)
        .expect("valid parameters")
        .0
}

pub fn uniform_states(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..m).map(|_| rng.random::<f64>()).collect()
}

pub fn to_dmatrix(a: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice())
}

/// Ascending eigenvalues from nalgebra's symmetric solver.
pub fn reference_eigenvalues(a: &Matrix) -> Vec<f64> {
    let mut ev: Vec<f64> = to_dmatrix(a).symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// `‖Wˢ(W−I)‖₂` from an explicit matrix product and nalgebra's SVD.
pub fn reference_norm(w: &WeightMatrix, s: u32) -> f64 {
    let d = to_dmatrix(w.matrix());
    let m = d.nrows();
    let prod = d.pow(s) * (&d - DMatrix::<f64>::identity(m, m));
    prod.singular_values().max()
}

/// Explicit `Wˢ(W−I)` with the crate's own matrix type.
pub fn power_times_wi(w: &Matrix, s: u32) -> Matrix {
    let mut p = Matrix::identity(w.rows());
    for _ in 0..s {
        p = p.matmul(w);
    }
    p.matmul(&w.minus_identity())
}

/// Two-pass mean and sample standard deviation.
pub fn two_pass(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn inf_norm(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}
