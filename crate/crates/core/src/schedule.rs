//! Range schedules for the progressive quantizer.
//!
//! Every node quantizes `z_t(i)` on an interval of length `S_t` centred at
//! its previous reconstruction. The sizes are identical for all nodes and
//! computed offline from the spectrum of `W` and the bit budget `n`.
//!
//! Two constructions are provided. [`recursive_ranges`] matches the mean
//! square step `E‖z_{t+1} − ẑ_t‖²/m` to `(S_{t+1}/2)²` under a uniform,
//! independent quantization-noise model:
//!
//! ```text
//! (S_{t+1}/2)² = ‖z₀‖∞² λ₂^{2t} (1−λ_min)²
//!              + (1−λ_min)² Σ_{s<t} ‖Wˢ(W−I)‖² S_{t−s−1}² / (12·4ⁿ)
//!              + (2−λ_min)² S_t² / (12·4ⁿ)
//! ```
//!
//! [`exponential_ranges`] uses the closed form `S_t = 2·exp(−(α t + γ))`
//! with `α = −ln λ₂` and `γ` from [`exponential_params`].
//!
//! All logarithms are natural except in the bit-count threshold.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::network::WeightMatrix;
use crate::spectral::SpectralSummary;
use crate::{Error, Result};

/// Default lower bound on a range size. A smaller computed size keeps the
/// previous one.
pub const DEFAULT_CLAMP_DELTA: f64 = 1e-16;

fn four_pow(n: u32) -> f64 {
    4f64.powi(n as i32)
}

/// `(2 − λ_min)² / (3·4ⁿ)`.
fn noise_gain(lambda_min: f64, bits: u32) -> f64 {
    (2.0 - lambda_min).powi(2) / (3.0 * four_pow(bits))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleInputs {
    pub lambda2: f64,
    pub lambda_min: f64,
    /// Bits per transmitted value.
    pub bits: u32,
    /// `‖z₀‖∞`.
    pub z0_inf: f64,
    /// Initial range size `z₀^max − z₀^min`.
    pub s0: f64,
    /// `‖Wˢ(W−I)‖₂` for `s = 0, 1, …`.
    pub norms: Vec<f64>,
    /// Minimal admissible range size; `0` disables the clamp.
    pub clamp_delta: f64,
}

impl ScheduleInputs {
    /// Collects inputs for a schedule of `horizon` steps from a spectral summary.
    pub fn from_summary(summary: &SpectralSummary, bits: u32, z0_inf: f64, s0: f64, horizon: usize) -> Self {
        Self {
            lambda2: summary.lambda2,
            lambda_min: summary.lambda_min,
            bits,
            z0_inf,
            s0,
            norms: summary.norms_ws_wi(horizon.max(1)),
            clamp_delta: DEFAULT_CLAMP_DELTA,
        }
    }

    pub fn with_clamp(mut self, clamp_delta: f64) -> Self {
        self.clamp_delta = clamp_delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s0.is_finite()) {
            return Err(Error::out_of_range("s0", format!("{} must be positive", self.s0)));
        }
        if self.bits == 0 {
            return Err(Error::out_of_range("bits", "at least one bit per value"));
        }
        if !(self.clamp_delta >= 0.0) {
            return Err(Error::out_of_range(
                "clamp_delta",
                format!("{} must be non-negative", self.clamp_delta),
            ));
        }
        if !(0.0..1.0).contains(&self.lambda2) {
            return Err(Error::out_of_range("lambda2", format!("{} is outside [0, 1)", self.lambda2)));
        }
        if !(self.z0_inf >= 0.0 && self.z0_inf.is_finite()) {
            return Err(Error::out_of_range("z0_inf", format!("{}", self.z0_inf)));
        }
        match self.norms.first() {
            Some(n0) if (n0 - (1.0 - self.lambda_min)).abs() <= 1e-9 => Ok(()),
            Some(n0) => Err(Error::out_of_range(
                "norms",
                format!("norms[0] = {n0} but 1 − λ_min = {}", 1.0 - self.lambda_min),
            )),
            None => Err(Error::out_of_range("norms", "empty")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleSource {
    Recursive,
    Exponential,
}

/// Range sizes `S_0..=S_T` shared by every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSchedule {
    sizes: Vec<f64>,
    betas: Vec<f64>,
    source: ScheduleSource,
}

impl RangeSchedule {
    fn from_sizes(sizes: Vec<f64>, source: ScheduleSource) -> Self {
        let betas = sizes.iter().map(|s| -(s / 2.0).ln()).collect();
        Self { sizes, betas, source }
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// `β_t = −ln(S_t / 2)`.
    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn source(&self) -> ScheduleSource {
        self.source
    }

    /// Last index `T`.
    pub fn horizon(&self) -> usize {
        self.sizes.len() - 1
    }

    /// `S_t`; past the horizon the last size is held.
    pub fn size(&self, t: usize) -> f64 {
        self.sizes[t.min(self.sizes.len() - 1)]
    }

    /// CSV with header `t,S_t,beta_t`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,S_t,beta_t")?;
        for (t, (s, b)) in self.sizes.iter().zip(&self.betas).enumerate() {
            writeln!(out, "{t},{s:.12e},{b:.12e}")?;
        }
        Ok(())
    }
}

/// Keeps `previous` when `raw` falls below `delta`.
fn clamped(raw: f64, previous: f64, delta: f64) -> f64 {
    if raw < delta {
        previous
    } else {
        raw
    }
}

/// Range sizes from the mean-square recursion, `S_0..=S_horizon`.
///
/// `S_1` drops the accumulated-noise term (it is empty at `t = 0`), and
/// every later size keeps the positive root of the recursion.
pub fn recursive_ranges(inp: &ScheduleInputs, horizon: usize) -> Result<RangeSchedule> {
    inp.validate()?;
    if horizon == 0 {
        return Err(Error::out_of_range("horizon", "must be at least 1"));
    }
    if inp.norms.len() + 1 < horizon {
        return Err(Error::out_of_range(
            "norms",
            format!("{} norms cannot cover a horizon of {horizon}", inp.norms.len()),
        ));
    }
    let q = 12.0 * four_pow(inp.bits);
    let spread2 = (1.0 - inp.lambda_min).powi(2);
    let gain2 = (2.0 - inp.lambda_min).powi(2);
    let z2 = inp.z0_inf * inp.z0_inf;
    let lambda2_sq = inp.lambda2 * inp.lambda2;

    let mut sizes = Vec::with_capacity(horizon + 1);
    sizes.push(inp.s0);

    let first = 2.0 * (z2 * spread2 + gain2 * inp.s0 * inp.s0 / q).sqrt();
    sizes.push(clamped(first, inp.s0, inp.clamp_delta));

    let mut decay = 1.0; // λ₂^{2t}
    for t in 1..horizon {
        decay *= lambda2_sq;
        let accumulated: f64 = (0..t)
            .map(|s| inp.norms[s] * inp.norms[s] * sizes[t - s - 1] * sizes[t - s - 1])
            .sum();
        let rhs = z2 * decay * spread2 + spread2 * accumulated / q + gain2 * sizes[t] * sizes[t] / q;
        let raw = 2.0 * rhs.sqrt();
        sizes.push(clamped(raw, sizes[t], inp.clamp_delta));
    }
    Ok(RangeSchedule::from_sizes(sizes, ScheduleSource::Recursive))
}

/// Smallest `n` for which `λ₂² − (2−λ_min)²/(3·4ⁿ) > 0`.
fn min_exponential_bits(lambda2: f64, lambda_min: f64) -> u32 {
    (0..64)
        .find(|&n| lambda2 * lambda2 - noise_gain(lambda_min, n) > 0.0)
        .unwrap_or(u32::MAX)
}

/// Closed-form `(α, γ)` of the exponential range model.
///
/// `α = −ln λ₂` and `γ = ½ ln(λ₂² − (2−λ_min)²/(3·4ⁿ)) − ln(‖z₀‖∞ (1−λ_min))`.
/// Fails with [`Error::NonPositiveLogArgument`] when the bit budget is too
/// small for the topology; the error carries the smallest workable `n`.
pub fn exponential_params(lambda2: f64, lambda_min: f64, bits: u32, z0_inf: f64) -> Result<(f64, f64)> {
    if !(lambda2 > 0.0 && lambda2 < 1.0) {
        return Err(Error::out_of_range("lambda2", format!("{lambda2} is outside (0, 1)")));
    }
    let scale = z0_inf * (1.0 - lambda_min);
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::out_of_range(
            "z0_inf",
            format!("‖z₀‖∞ (1 − λ_min) = {scale} must be positive"),
        ));
    }
    let arg = lambda2 * lambda2 - noise_gain(lambda_min, bits);
    if arg <= 0.0 {
        return Err(Error::NonPositiveLogArgument {
            value: arg,
            bits,
            min_bits: min_exponential_bits(lambda2, lambda_min),
        });
    }
    Ok((-lambda2.ln(), 0.5 * arg.ln() - scale.ln()))
}

/// `S_0 = s0`, then `S_t = 2·exp(−(α t + γ))` for `1 ≤ t ≤ horizon`, clamped at `clamp_delta`.
pub fn exponential_ranges(alpha: f64, gamma: f64, horizon: usize, clamp_delta: f64, s0: f64) -> Result<RangeSchedule> {
    if !(alpha > 0.0) {
        return Err(Error::out_of_range("alpha", format!("{alpha} must be positive")));
    }
    if !(s0 > 0.0) {
        return Err(Error::out_of_range("s0", format!("{s0} must be positive")));
    }
    let mut sizes = Vec::with_capacity(horizon + 1);
    sizes.push(s0);
    for t in 1..=horizon {
        let raw = 2.0 * (-(alpha * t as f64 + gamma)).exp();
        let prev = sizes[t - 1];
        sizes.push(clamped(raw, prev, clamp_delta));
    }
    Ok(RangeSchedule::from_sizes(sizes, ScheduleSource::Exponential))
}

/// `(1−λ_min)⁴/(1−λ₂²) + (2−λ_min)²`, the quantity compared against `3·4ⁿ`.
pub fn stability_lhs(lambda2: f64, lambda_min: f64) -> f64 {
    if !(0.0..1.0).contains(&lambda2) {
        return f64::INFINITY;
    }
    (1.0 - lambda_min).powi(4) / (1.0 - lambda2 * lambda2) + (2.0 - lambda_min).powi(2)
}

/// Whether the range recursion is guaranteed to decay to zero with `n` bits.
pub fn stability_condition(lambda2: f64, lambda_min: f64, bits: u32) -> bool {
    stability_lhs(lambda2, lambda_min) < 3.0 * four_pow(bits)
}

/// `log₂(LHS/3) / 2`; [`min_bits`] is the smallest integer strictly above it.
pub fn bits_threshold(lambda2: f64, lambda_min: f64) -> f64 {
    (stability_lhs(lambda2, lambda_min) / 3.0).log2() / 2.0
}

/// Smallest number of bits satisfying [`stability_condition`].
///
/// `None` when `λ₂ ∉ [0, 1)`. May return 0 for extremely well mixing
/// matrices; a codec still needs at least one bit.
pub fn min_bits(lambda2: f64, lambda_min: f64) -> Option<u32> {
    if !(0.0..1.0).contains(&lambda2) {
        return None;
    }
    let threshold = bits_threshold(lambda2, lambda_min);
    let mut n = if threshold < 0.0 { 0 } else { threshold.floor() as u32 };
    // settle rounding at integer thresholds against the exact comparison
    while n > 0 && stability_condition(lambda2, lambda_min, n - 1) {
        n -= 1;
    }
    while !stability_condition(lambda2, lambda_min, n) {
        n += 1;
    }
    Some(n)
}

/// Constants `(c, b, γ_seq)` of the two-term bounding recursion.
fn bounding_constants(lambda2: f64, lambda_min: f64, bits: u32) -> (f64, f64, f64) {
    let c = noise_gain(lambda_min, bits);
    let b = (1.0 - lambda_min).powi(4) / (3.0 * four_pow(bits));
    (c, b, lambda2 * lambda2)
}

/// The companion matrix `[[c + γ, b − cγ], [1, 0]]` of the bounding sequence.
pub fn companion_matrix(lambda2: f64, lambda_min: f64, bits: u32) -> [[f64; 2]; 2] {
    let (c, b, g) = bounding_constants(lambda2, lambda_min, bits);
    [[c + g, b - c * g], [1.0, 0.0]]
}

/// Largest eigenvalue `(c + γ + √((c−γ)² + 4b)) / 2` of the companion matrix.
pub fn companion_matrix_radius(lambda2: f64, lambda_min: f64, bits: u32) -> f64 {
    let (c, b, g) = bounding_constants(lambda2, lambda_min, bits);
    (c + g + ((c - g).powi(2) + 4.0 * b).sqrt()) / 2.0
}

/// Upper-bounding sequence `P(0..=horizon)` of `e^{−2β_t} = (S_t/2)²`.
pub fn p_sequence(lambda2: f64, lambda_min: f64, bits: u32, z0_inf: f64, s0: f64, horizon: usize) -> Vec<f64> {
    let (c, b, g) = bounding_constants(lambda2, lambda_min, bits);
    let head = z0_inf * z0_inf * (1.0 - lambda_min).powi(2);
    let mut p = Vec::with_capacity(horizon + 1);
    p.push(s0 * s0 / 4.0);
    if horizon == 0 {
        return p;
    }
    p.push(head + c * p[0]);
    let mut decay = 1.0; // λ₂^{2(t−1)}
    for t in 2..=horizon {
        decay *= g;
        let mut tail = 0.0;
        let mut weight = 1.0; // λ₂^{2s}
        for s in 0..=(t - 2) {
            tail += weight * p[t - 2 - s];
            weight *= g;
        }
        p.push(head * decay + b * tail + c * p[t - 1]);
    }
    p
}

/// `α' = −ln λ₂` and `γ' = −ln(‖z₀‖∞ (1 − λ_min))` of unquantized consensus.
pub fn unquantized_decay_params(w: &WeightMatrix, z0_inf: f64) -> (f64, f64) {
    (-w.lambda2().ln(), -(z0_inf * (1.0 - w.lambda_min())).ln())
}

/// `Σ_{s<t} ‖Wˢ(W−I)‖² e^{−2β_{t−s−1}}` for `t = 0..sizes.len()`.
///
/// `e^{−2β} = (S/2)²`. Terms beyond the supplied norms are dropped.
pub fn accumulated_noise_series(sizes: &[f64], norms: &[f64]) -> Vec<f64> {
    (0..sizes.len())
        .map(|t| {
            (0..t.min(norms.len()))
                .map(|s| {
                    let half = sizes[t - s - 1] / 2.0;
                    norms[s] * norms[s] * half * half
                })
                .sum()
        })
        .collect()
}

/// Ordinary least squares line with its coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path3_inputs(bits: u32, horizon: usize) -> ScheduleInputs {
        // eigenvalues {0, 2/3, 1} of the path-3 Metropolis matrix
        let summary = SpectralSummary {
            eigenvalues: vec![0.0, 2.0 / 3.0, 1.0],
            lambda2: 2.0 / 3.0,
            lambda_min: 0.0,
        };
        ScheduleInputs::from_summary(&summary, bits, 1.0, 1.0, horizon)
    }

    #[test]
    fn recursive_first_step() {
        let s = recursive_ranges(&path3_inputs(2, 5), 5).unwrap();
        assert_eq!(s.sizes()[0], 1.0);
        assert_abs_diff_eq!(s.sizes()[1], 2.0 * (1.0_f64 + 4.0 / 192.0).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.sizes()[1], 2.020726, epsilon = 1e-6);
        assert_eq!(s.sizes().len(), 6);
        assert_eq!(s.source(), ScheduleSource::Recursive);
    }

    #[test]
    fn recursive_second_step_by_hand() {
        // t = 1: z² λ₂² (1−λ)² + (1−λ)² ‖W−I‖² S₀²/q + (2−λ)² S₁²/q, q = 12·16
        let s = recursive_ranges(&path3_inputs(2, 3), 3).unwrap();
        let s1 = s.sizes()[1];
        let q = 192.0;
        let want = 2.0 * (4.0 / 9.0 + 1.0 / q + 4.0 * s1 * s1 / q).sqrt();
        assert_abs_diff_eq!(s.sizes()[2], want, epsilon = 1e-15);
    }

    #[test]
    fn recursive_high_bit_limit_is_pure_decay() {
        let s = recursive_ranges(&path3_inputs(26, 40), 40).unwrap();
        for t in 1..40 {
            let want = 2.0 * (2.0_f64 / 3.0).powi(t as i32 - 1);
            assert!((s.sizes()[t] - want).abs() / want < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn clamp_holds_previous_size() {
        let inp = path3_inputs(8, 200).with_clamp(1e-6);
        let s = recursive_ranges(&inp, 200).unwrap();
        assert!(s.sizes().iter().all(|&x| x >= 1e-6));
        let last = *s.sizes().last().unwrap();
        assert_eq!(s.sizes()[150], last);

        let e = exponential_ranges(0.5, 0.0, 100, 1e-6, 1.0).unwrap();
        assert!(e.sizes().iter().all(|&x| x >= 1e-6));
        assert_eq!(e.sizes()[99], e.sizes()[100]);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let mut inp = path3_inputs(2, 5);
        inp.s0 = 0.0;
        assert!(recursive_ranges(&inp, 5).is_err());
        let mut inp = path3_inputs(2, 5);
        inp.norms[0] = 0.5;
        assert!(recursive_ranges(&inp, 5).is_err());
        assert!(recursive_ranges(&path3_inputs(2, 5), 0).is_err());
        assert!(recursive_ranges(&path3_inputs(0, 5), 5).is_err());
    }

    #[test]
    fn exponential_parameters() {
        let (alpha, gamma) = exponential_params(2.0 / 3.0, 0.0, 2, 1.0).unwrap();
        assert_abs_diff_eq!(alpha, 0.405465, epsilon = 1e-6);
        assert_abs_diff_eq!(gamma, 0.5 * (13.0_f64 / 36.0).ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(gamma, -0.509285, epsilon = 1e-6);

        let (alpha, gamma) = exponential_params(2.0 / 3.0, 0.0, 30, 1.0).unwrap();
        assert_abs_diff_eq!(gamma, -alpha, epsilon = 1e-12);
    }

    #[test]
    fn exponential_infeasible_bits() {
        match exponential_params(0.1, 0.0, 1, 1.0) {
            Err(Error::NonPositiveLogArgument { bits, min_bits, value }) => {
                assert_eq!(bits, 1);
                assert!(value < 0.0);
                // 0.01 > 4/(3·4ⁿ) first holds at n = 4
                assert_eq!(min_bits, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(exponential_params(1.0, 0.0, 4, 1.0).is_err());
        assert!(exponential_params(0.5, 0.0, 4, 0.0).is_err());
    }

    #[test]
    fn exponential_sizes() {
        let s = exponential_ranges((1.5_f64).ln(), -0.509250, 3, DEFAULT_CLAMP_DELTA, 1.0).unwrap();
        assert_eq!(s.sizes()[0], 1.0);
        assert_abs_diff_eq!(s.sizes()[1], 2.0 * (0.509250 - 1.5_f64.ln()).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(s.sizes()[1], 2.2187, epsilon = 1e-4);
        assert_abs_diff_eq!(s.betas()[2] - s.betas()[1], 1.5_f64.ln(), epsilon = 1e-12);
        assert!(exponential_ranges(0.0, 0.0, 3, 0.0, 1.0).is_err());
    }

    #[test]
    fn exponential_bits_shift_intercept_only() {
        let (a2, g2) = exponential_params(0.9, -0.3, 2, 1.0).unwrap();
        let (a6, g6) = exponential_params(0.9, -0.3, 6, 1.0).unwrap();
        assert_eq!(a2, a6);
        assert!(g6 > g2);
        let s2 = exponential_ranges(a2, g2, 5, DEFAULT_CLAMP_DELTA, 1.0).unwrap();
        let s6 = exponential_ranges(a6, g6, 5, DEFAULT_CLAMP_DELTA, 1.0).unwrap();
        assert!(s6.sizes()[1] < s2.sizes()[1]);
    }

    #[test]
    fn stability_examples() {
        assert_abs_diff_eq!(stability_lhs(2.0 / 3.0, 0.0), 5.8, epsilon = 1e-12);
        assert!(stability_condition(2.0 / 3.0, 0.0, 2));
        assert!(!stability_condition(2.0 / 3.0, 0.0, 0));
        // 1/(1−λ₂²) ≈ 5·10¹¹ sits between 3·4¹⁸ and 3·4²⁰
        assert!(!stability_condition(1.0 - 1e-12, 0.0, 18));
        assert!(stability_condition(1.0 - 1e-12, 0.0, 20));
        assert!(!stability_condition(1.0, 0.0, 60));
    }

    #[test]
    fn min_bits_examples() {
        assert_eq!(min_bits(2.0 / 3.0, 0.0), Some(1));
        assert_abs_diff_eq!(stability_lhs(0.9, -1.0), 16.0 / 0.19 + 9.0, epsilon = 1e-9);
        assert_eq!(min_bits(0.9, -1.0), Some(3));
        assert_eq!(min_bits(0.0, 0.0), Some(1));
        assert_eq!(min_bits(1.0, 0.0), None);
    }

    #[test]
    fn companion_radius_examples() {
        let r = companion_matrix_radius(2.0 / 3.0, 0.0, 2);
        let (c, b, g): (f64, f64, f64) = (1.0 / 12.0, 1.0 / 48.0, 4.0 / 9.0);
        assert_abs_diff_eq!(r, (c + g + ((c - g) * (c - g) + 4.0 * b).sqrt()) / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.495046, epsilon = 1e-6);

        // 2×2 eigenvalues from trace and determinant
        let a = companion_matrix(2.0 / 3.0, 0.0, 2);
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let top = (tr + (tr * tr - 4.0 * det).sqrt()) / 2.0;
        assert_abs_diff_eq!(r, top, epsilon = 1e-14);

        // b = c = 0 in the limit of many bits
        assert_abs_diff_eq!(companion_matrix_radius(0.7, 0.0, 40), 0.49, epsilon = 1e-12);
    }

    #[test]
    fn p_sequence_limits() {
        let p = p_sequence(0.0, 0.0, 40, 1.0, 1.0, 6);
        assert_eq!(p[0], 0.25);
        for v in &p[2..] {
            assert!(v.abs() < 1e-20);
        }
        let p = p_sequence(2.0 / 3.0, 0.0, 2, 1.0, 1.0, 200);
        assert!(p[200] < p[2] && p[200] < 1e-30);
    }

    #[test]
    fn p_sequence_matches_recurrence() {
        // P(t+1) = (c + γ) P(t) + (b − cγ) P(t−1) for t ≥ 2
        let p = p_sequence(0.8, -0.2, 3, 0.9, 1.0, 30);
        let a = companion_matrix(0.8, -0.2, 3);
        for t in 2..30 {
            let want = a[0][0] * p[t] + a[0][1] * p[t - 1];
            assert!((p[t + 1] - want).abs() <= 1e-12 * p[t + 1].abs().max(1e-300), "t = {t}");
        }
    }

    #[test]
    fn unquantized_params() {
        let w = crate::network::metropolis_weights(&crate::network::Graph::path(3)).unwrap();
        let (a, g) = unquantized_decay_params(&w, 1.0);
        assert_abs_diff_eq!(a, 0.405465, epsilon = 1e-6);
        assert_abs_diff_eq!(g, 0.0, epsilon = 1e-9);
        let (alpha, _) = exponential_params(w.lambda2(), w.lambda_min(), 3, 1.0).unwrap();
        assert_eq!(a, alpha);
        let (_, g) = unquantized_decay_params(&w, (-1.0_f64).exp());
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn csv_export() {
        let s = exponential_ranges(1.0, 0.0, 2, 0.0, 2.0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "t,S_t,beta_t");
        assert_eq!(lines[1], "0,2.000000000000e0,-0.000000000000e0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn line_fit() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert_abs_diff_eq!(f.slope, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }
}
