//! The n-bit uniform quantizer every codec is built from.

use serde::{Deserialize, Serialize};

/// One transmitted symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codeword {
    /// Cell index in `0..2ⁿ`.
    pub index: u64,
    /// Encoder-side diagnostic: the input fell outside the interval.
    /// Never transmitted.
    pub clipped: bool,
}

/// Largest index representable in `bits` bits.
pub fn max_index(bits: u32) -> u64 {
    debug_assert!((1..=64).contains(&bits));
    u64::MAX >> (64 - bits)
}

fn levels(bits: u32) -> f64 {
    2f64.powi(bits as i32)
}

/// Step size `Δ = size / 2ⁿ`.
pub fn step_size(size: f64, bits: u32) -> f64 {
    size / levels(bits)
}

/// Index of the cell of `[lo, lo + size]` containing `x`.
///
/// `index = ⌊(x − lo)/Δ⌋`, clamped to the nearest boundary cell.
pub fn uniform_encode(x: f64, lo: f64, size: f64, bits: u32) -> Codeword {
    let top = max_index(bits);
    let raw = ((x - lo) / step_size(size, bits)).floor();
    let outside = !(x >= lo && x <= lo + size);
    let (index, clamped) = if raw.is_nan() || raw < 0.0 {
        (0, true)
    } else if raw > top as f64 {
        (top, true)
    } else {
        let idx = raw as u64;
        if idx > top {
            (top, true)
        } else {
            (idx, false)
        }
    };
    Codeword {
        index,
        clipped: clamped || outside,
    }
}

/// Midpoint of cell `index`: `lo + index·Δ + Δ/2`.
pub fn uniform_decode(index: u64, lo: f64, size: f64, bits: u32) -> f64 {
    let delta = step_size(size, bits);
    index as f64 * delta + delta / 2.0 + lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn encode_examples() {
        assert_eq!(
            uniform_encode(0.3, 0.0, 1.0, 2),
            Codeword { index: 1, clipped: false }
        );
        assert_eq!(
            uniform_encode(-2.0, -2.0, 1.0, 3),
            Codeword { index: 0, clipped: false }
        );
        assert_eq!(
            uniform_encode(1.7, 0.0, 1.0, 2),
            Codeword { index: 3, clipped: true }
        );
        assert_eq!(
            uniform_encode(-0.1, 0.0, 1.0, 2),
            Codeword { index: 0, clipped: true }
        );
        // upper endpoint lands one past the top cell
        assert_eq!(
            uniform_encode(1.0, 0.0, 1.0, 2),
            Codeword { index: 3, clipped: true }
        );
        assert!(uniform_encode(f64::NAN, 0.0, 1.0, 2).clipped);
        assert_eq!(uniform_encode(f64::INFINITY, 0.0, 1.0, 4).index, 15);
    }

    #[test]
    fn decode_examples() {
        assert_abs_diff_eq!(uniform_decode(1, 0.0, 1.0, 2), 0.375);
        assert_abs_diff_eq!(uniform_decode(0, 0.0, 1.0, 1), 0.25);
    }

    #[test]
    fn round_trip_error_within_half_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1_000_000 {
            let bits = rng.random_range(1..=8);
            let lo = rng.random_range(-5.0..5.0);
            let size = rng.random_range(1e-6..10.0);
            let x = lo + size * rng.random::<f64>();
            let cw = uniform_encode(x, lo, size, bits);
            let err = (uniform_decode(cw.index, lo, size, bits) - x).abs();
            let half = step_size(size, bits) / 2.0;
            assert!(err <= half * (1.0 + 1e-12), "x={x} lo={lo} size={size} n={bits}");
            assert!(cw.index <= max_index(bits));
        }
    }

    #[test]
    fn max_index_widths() {
        assert_eq!(max_index(1), 1);
        assert_eq!(max_index(6), 63);
        assert_eq!(max_index(64), u64::MAX);
    }
}
