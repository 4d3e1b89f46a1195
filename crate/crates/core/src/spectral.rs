//! Eigenvalues and operator norms of symmetric consensus matrices.
//!
//! Everything the range schedule needs reduces to the spectrum of `W`:
//! `λ₂ = ρ(W − 11ᵀ/m)`, the smallest eigenvalue `λ_min`, and the norms
//! `‖Wˢ(W−I)‖₂ = max_λ |λˢ(λ−1)|`, which hold because a symmetric `W`
//! diagonalizes `Wˢ` and `W − I` simultaneously.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// Maximum asymmetry accepted by the symmetric eigensolver.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Accuracy contract for individual eigenvalues.
pub const EIGEN_TOL: f64 = 1e-9;
/// Agreement required between the eigen-based norm and power iteration.
pub const ORACLE_TOL: f64 = 1e-6;

const MAX_SWEEPS: usize = 100;

/// Eigenvalues of a symmetric matrix in ascending order.
///
/// Cyclic Jacobi rotations: every off-diagonal entry is annihilated in turn,
/// sweep after sweep, until the off-diagonal mass is negligible against the
/// Frobenius norm. Quadratic convergence makes ten or so sweeps typical.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            actual: a.cols(),
        });
    }
    let (gap, row, col) = a.max_asymmetry();
    if gap > SYMMETRY_TOL || gap.is_nan() {
        return Err(Error::NotSymmetric { row, col, gap });
    }

    let n = a.rows();
    let mut m = a.clone();
    // work on the exactly symmetric part
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }

    let frob2: f64 = m.as_slice().iter().map(|x| x * x).sum();
    let threshold = frob2 * f64::EPSILON * f64::EPSILON;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, p, q);
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// One Jacobi rotation zeroing `m[p][q]`.
fn rotate(m: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let n = m.rows();
    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
    let t = if theta.is_infinite() {
        0.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let tau = s / (1.0 + c);

    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let arp = m[(r, p)];
        let arq = m[(r, q)];
        let new_rp = arp - s * (arq + tau * arp);
        let new_rq = arq + s * (arp - tau * arq);
        m[(r, p)] = new_rp;
        m[(p, r)] = new_rp;
        m[(r, q)] = new_rq;
        m[(q, r)] = new_rq;
    }
}

/// Spectral quantities of a consensus weight matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// All eigenvalues of `W`, ascending.
    pub eigenvalues: Vec<f64>,
    /// `ρ(W − 11ᵀ/m)`.
    pub lambda2: f64,
    /// Algebraically smallest eigenvalue of `W`.
    pub lambda_min: f64,
}

impl SpectralSummary {
    /// `‖Wˢ(W−I)‖₂`, evaluated on the eigenvalues.
    ///
    /// `Wˢ(W−I)` vanishes on the all-ones vector, so a top eigenvalue equal
    /// to 1 is skipped: its rounded `λ − 1` would otherwise leave a floor of
    /// about 1e-16 that never decays with `s`.
    pub fn norm_ws_wi(&self, s: u32) -> f64 {
        let spectrum = match self.eigenvalues.split_last() {
            Some((&top, rest)) if (top - 1.0).abs() <= EIGEN_TOL => rest,
            _ => &self.eigenvalues[..],
        };
        spectrum
            .iter()
            .map(|&l| (l.powi(s as i32) * (l - 1.0)).abs())
            .fold(0.0, f64::max)
    }

    /// `‖Wˢ(W−I)‖₂` for `s = 0..count`.
    pub fn norms_ws_wi(&self, count: usize) -> Vec<f64> {
        (0..count as u32).map(|s| self.norm_ws_wi(s)).collect()
    }
}

/// Summary of a symmetric matrix `w`.
///
/// `lambda2` is the spectral radius of the deflated matrix `W − 11ᵀ/m`,
/// which removes the unit eigenvalue carried by the all-ones vector.
pub fn spectral_summary(w: &Matrix) -> Result<SpectralSummary> {
    let eigenvalues = symmetric_eigenvalues(w)?;
    let deflated = symmetric_eigenvalues(&w.sub(&Matrix::averaging(w.rows())))?;
    let lambda2 = deflated.iter().map(|l| l.abs()).fold(0.0, f64::max);
    let lambda_min = eigenvalues.first().copied().unwrap_or(f64::NAN);
    Ok(SpectralSummary {
        eigenvalues,
        lambda2,
        lambda_min,
    })
}

/// `‖Wˢ(W−I)‖₂` for a symmetric `w`.
pub fn norm_ws_wi(w: &crate::network::WeightMatrix, s: u32) -> f64 {
    w.summary().norm_ws_wi(s)
}

/// Power-iteration estimate of the spectral norm `‖a‖₂`.
///
/// Iterates `aᵀa` on a seeded random unit vector and returns `‖a v‖` for
/// the final normalized iterate. Shares no code with the eigen-based norm,
/// which makes it usable as a cross-check.
pub fn power_iteration_norm(a: &Matrix, iters: usize, seed: u64) -> f64 {
    let n = a.cols();
    if n == 0 {
        return 0.0;
    }
    let at = a.transpose();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    if !normalize(&mut v) {
        v[0] = 1.0;
    }
    for _ in 0..iters.max(1) {
        let mut next = at.mul_vec(&a.mul_vec(&v));
        if !normalize(&mut next) {
            return 0.0;
        }
        v = next;
    }
    l2(&a.mul_vec(&v))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = l2(v);
    if norm == 0.0 || !norm.is_finite() {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    true
}

/// Spectral radius of an arbitrary square matrix via Gelfand's formula
/// `ρ(A) = lim ‖Aᵏ‖^(1/k)`, evaluated by repeated squaring in log scale.
pub(crate) fn spectral_radius_general(a: &Matrix) -> f64 {
    const SQUARINGS: u32 = 40;
    let mut b = a.clone();
    let mut log_scale = 0.0;
    let mut k = 1.0_f64;
    for _ in 0..SQUARINGS {
        let s = l2(b.as_slice());
        if s == 0.0 {
            return 0.0;
        }
        if !s.is_finite() {
            return f64::NAN;
        }
        b = b.scale(1.0 / s);
        log_scale += s.ln();
        b = b.matmul(&b);
        log_scale *= 2.0;
        k *= 2.0;
    }
    let s = l2(b.as_slice());
    if s == 0.0 {
        return 0.0;
    }
    ((log_scale + s.ln()) / k).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path3_metropolis() -> Matrix {
        Matrix::from_rows(&[
            [2.0 / 3.0, 1.0 / 3.0, 0.0],
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            [0.0, 1.0 / 3.0, 2.0 / 3.0],
        ])
        .unwrap()
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = symmetric_eigenvalues(&Matrix::identity(3)).unwrap();
        assert_eq!(eig, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn path3_eigenvalues() {
        let eig = symmetric_eigenvalues(&path3_metropolis()).unwrap();
        for (got, want) in eig.iter().zip([0.0, 2.0 / 3.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = EIGEN_TOL);
        }
    }

    #[test]
    fn rank_one_projector() {
        let eig = symmetric_eigenvalues(&Matrix::averaging(4)).unwrap();
        for (got, want) in eig.iter().zip([0.0, 0.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = EIGEN_TOL);
        }
    }

    #[test]
    fn asymmetric_input_rejected() {
        let a = Matrix::from_rows(&[[1.0, 0.5], [0.4, 1.0]]).unwrap();
        assert!(matches!(
            symmetric_eigenvalues(&a),
            Err(Error::NotSymmetric { row: 0, col: 1, .. })
        ));
    }

    #[test]
    fn summaries() {
        let s = spectral_summary(&path3_metropolis()).unwrap();
        assert_abs_diff_eq!(s.lambda2, 2.0 / 3.0, epsilon = EIGEN_TOL);
        assert_abs_diff_eq!(s.lambda_min, 0.0, epsilon = EIGEN_TOL);

        let s = spectral_summary(&Matrix::averaging(5)).unwrap();
        assert_abs_diff_eq!(s.lambda2, 0.0, epsilon = EIGEN_TOL);

        let two = Matrix::from_rows(&[[0.5, 0.5], [0.5, 0.5]]).unwrap();
        let s = spectral_summary(&two).unwrap();
        assert_abs_diff_eq!(s.lambda2, 0.0, epsilon = EIGEN_TOL);
        assert_abs_diff_eq!(s.lambda_min, 0.0, epsilon = EIGEN_TOL);
    }

    #[test]
    fn norm_examples() {
        let s = spectral_summary(&path3_metropolis()).unwrap();
        assert_abs_diff_eq!(s.norm_ws_wi(0), 1.0 - s.lambda_min, epsilon = 1e-12);
        assert_abs_diff_eq!(s.norm_ws_wi(1), 2.0 / 9.0, epsilon = EIGEN_TOL);

        let s = spectral_summary(&Matrix::averaging(6)).unwrap();
        for k in 1..5 {
            assert_abs_diff_eq!(s.norm_ws_wi(k), 0.0, epsilon = EIGEN_TOL);
        }
    }

    #[test]
    fn norms_keep_decaying_past_rounding_level() {
        let s = spectral_summary(&path3_metropolis()).unwrap();
        for k in 1..80 {
            assert!(s.norm_ws_wi(k) <= s.lambda2.powi(k as i32) * (1.0 - s.lambda_min) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn power_iteration_examples() {
        assert_abs_diff_eq!(
            power_iteration_norm(&Matrix::identity(4), 10, 1),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            power_iteration_norm(&Matrix::diagonal(&[3.0, 1.0]), 200, 2),
            3.0,
            epsilon = 1e-9
        );
        let wi = path3_metropolis().minus_identity();
        assert_abs_diff_eq!(power_iteration_norm(&wi, 500, 3), 1.0, epsilon = ORACLE_TOL);
        assert_eq!(power_iteration_norm(&Matrix::zeros(3, 3), 5, 0), 0.0);
    }

    #[test]
    fn gelfand_radius() {
        let a = Matrix::from_rows(&[[0.5, 10.0], [0.0, 0.25]]).unwrap();
        assert_abs_diff_eq!(spectral_radius_general(&a), 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(
            spectral_radius_general(&Matrix::identity(3)),
            1.0,
            epsilon = 1e-12
        );
    }
}
