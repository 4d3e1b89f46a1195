//! Per-node quantization codecs.
//!
//! A codec holds the state a node shares with every neighbor: the previous
//! reconstruction `ẑ_{t−1}(i)` and whatever scale it adapts. Encoding
//! produces an n-bit index; both the encoder and any decoder then advance
//! their state from that index alone, so a decoder that starts from the same
//! state and sees the same index stream stays in lockstep bit for bit.
//!
//! Codecs:
//!
//! - [`UniformCodec`]: fixed interval, the constant-range baseline.
//! - [`ProgressiveCodec`]: interval of length `S_t` centred at `ẑ_{t−1}(i)`.
//! - [`ZoomCodec`]: scaled difference on `[−1, 1]`; the scale zooms out on
//!   saturation and in otherwise.
//! - [`AdaptCodec`]: n-bit delta modulation with a sign-agreement step rule.
//! - [`LosslessCodec`]: sends the raw 64-bit float, the noiseless reference.

pub mod packing;
mod uniform;

use serde::{Deserialize, Serialize};

pub use uniform::{max_index, step_size, uniform_decode, uniform_encode, Codeword};

/// Zoom-in factor applied when the difference quantizer is not saturated.
pub const DEFAULT_K_IN: f64 = 0.5;
/// Zoom-out factor applied on saturation.
pub const DEFAULT_K_OUT: f64 = 2.0;
/// Initial zoom scale.
pub const DEFAULT_F0: f64 = 0.5;
/// Step multiplier of the delta-modulation codec.
pub const DEFAULT_K: f64 = 1.2;

/// Memoryless quantizer on a fixed interval `[lo, lo + size]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformCodec {
    pub bits: u32,
    pub lo: f64,
    pub size: f64,
    pub prev_hat: f64,
}

impl UniformCodec {
    pub fn new(bits: u32, lo: f64, size: f64) -> Self {
        Self {
            bits,
            lo,
            size,
            prev_hat: lo + size / 2.0,
        }
    }

    pub fn step(&mut self, x: f64) -> (Codeword, f64) {
        let cw = uniform_encode(x, self.lo, self.size, self.bits);
        (cw, self.apply(cw.index))
    }

    pub fn apply(&mut self, index: u64) -> f64 {
        self.prev_hat = uniform_decode(index, self.lo, self.size, self.bits);
        self.prev_hat
    }
}

/// The progressive quantizer: at each step the interval is
/// `[ẑ_{t−1} − S_t/2, ẑ_{t−1} + S_t/2]` with `S_t` from a shared schedule.
///
/// Starting `prev_hat` at the centre of the known initial interval and
/// using `S_0` for the first step covers every initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressiveCodec {
    pub bits: u32,
    pub prev_hat: f64,
}

impl ProgressiveCodec {
    pub fn new(bits: u32, center: f64) -> Self {
        Self {
            bits,
            prev_hat: center,
        }
    }

    /// Encodes `x` on the interval of length `size` around the previous
    /// reconstruction and returns the codeword with the new reconstruction.
    pub fn step(&mut self, x: f64, size: f64) -> (Codeword, f64) {
        let cw = uniform_encode(x, self.prev_hat - size / 2.0, size, self.bits);
        (cw, self.apply(cw.index, size))
    }

    pub fn apply(&mut self, index: u64, size: f64) -> f64 {
        self.prev_hat = uniform_decode(index, self.prev_hat - size / 2.0, size, self.bits);
        self.prev_hat
    }
}

/// Zoom-in/zoom-out differential codec.
///
/// Quantizes `(x − ẑ_{t−1})/f` on `[−1, 1]` and reconstructs
/// `ẑ_t = ẑ_{t−1} + f·q`. Saturation is read off the index so the decoder
/// sees it too: an outermost cell means saturated. With a single bit every
/// cell is outermost, so there saturation means hitting the same outermost
/// cell twice in a row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomCodec {
    pub bits: u32,
    pub prev_hat: f64,
    pub scale: f64,
    pub k_in: f64,
    pub k_out: f64,
    last_index: Option<u64>,
}

impl ZoomCodec {
    pub fn new(bits: u32, center: f64, f0: f64, k_in: f64, k_out: f64) -> Self {
        Self {
            bits,
            prev_hat: center,
            scale: f0,
            k_in,
            k_out,
            last_index: None,
        }
    }

    pub fn with_defaults(bits: u32, center: f64) -> Self {
        Self::new(bits, center, DEFAULT_F0, DEFAULT_K_IN, DEFAULT_K_OUT)
    }

    pub fn step(&mut self, x: f64) -> (Codeword, f64) {
        let cw = uniform_encode((x - self.prev_hat) / self.scale, -1.0, 2.0, self.bits);
        (cw, self.apply(cw.index))
    }

    pub fn apply(&mut self, index: u64) -> f64 {
        let q = uniform_decode(index, -1.0, 2.0, self.bits);
        self.prev_hat += self.scale * q;
        if self.saturated(index) {
            self.scale *= self.k_out;
        } else {
            self.scale *= self.k_in;
        }
        self.last_index = Some(index);
        self.prev_hat
    }

    fn saturated(&self, index: u64) -> bool {
        let outermost = index == 0 || index == max_index(self.bits);
        if self.bits == 1 {
            outermost && self.last_index == Some(index)
        } else {
            outermost
        }
    }
}

/// Delta modulation with a multiplicatively adapted step.
///
/// The increment `x − ẑ_{t−1}` is quantized on `2ⁿ` cells of width `step`
/// centred at zero. The upper half of the indices are positive increments.
/// After each codeword the step is multiplied by `K` when its sign matches
/// the previous codeword's sign and divided by `K` otherwise; the very first
/// codeword leaves it unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptCodec {
    pub bits: u32,
    pub prev_hat: f64,
    pub step: f64,
    pub k: f64,
    last_positive: Option<bool>,
}

impl AdaptCodec {
    pub fn new(bits: u32, center: f64, step: f64, k: f64) -> Self {
        Self {
            bits,
            prev_hat: center,
            step,
            k,
            last_positive: None,
        }
    }

    fn span(&self) -> f64 {
        self.step * 2f64.powi(self.bits as i32)
    }

    pub fn step(&mut self, x: f64) -> (Codeword, f64) {
        let span = self.span();
        let cw = uniform_encode(x - self.prev_hat, -span / 2.0, span, self.bits);
        (cw, self.apply(cw.index))
    }

    pub fn apply(&mut self, index: u64) -> f64 {
        let span = self.span();
        self.prev_hat += uniform_decode(index, -span / 2.0, span, self.bits);
        let positive = index > max_index(self.bits) / 2;
        match self.last_positive {
            Some(prev) if prev == positive => self.step *= self.k,
            Some(_) => self.step /= self.k,
            None => {}
        }
        self.last_positive = Some(positive);
        self.prev_hat
    }
}

/// Transmits the IEEE-754 bit pattern of the value itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosslessCodec {
    pub prev_hat: f64,
}

impl LosslessCodec {
    pub fn step(&mut self, x: f64) -> (Codeword, f64) {
        let cw = Codeword {
            index: x.to_bits(),
            clipped: false,
        };
        (cw, self.apply(cw.index))
    }

    pub fn apply(&mut self, index: u64) -> f64 {
        self.prev_hat = f64::from_bits(index);
        self.prev_hat
    }
}

/// Any codec, as held by one node (or by a neighbor's decoder replica).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CodecState {
    Uniform(UniformCodec),
    Progressive(ProgressiveCodec),
    Zoom(ZoomCodec),
    Adapt(AdaptCodec),
    Lossless(LosslessCodec),
}

impl CodecState {
    /// Bits sent per value.
    pub fn bits(&self) -> u32 {
        match self {
            CodecState::Uniform(c) => c.bits,
            CodecState::Progressive(c) => c.bits,
            CodecState::Zoom(c) => c.bits,
            CodecState::Adapt(c) => c.bits,
            CodecState::Lossless(_) => 64,
        }
    }

    /// The last reconstruction `ẑ`.
    pub fn reconstruction(&self) -> f64 {
        match self {
            CodecState::Uniform(c) => c.prev_hat,
            CodecState::Progressive(c) => c.prev_hat,
            CodecState::Zoom(c) => c.prev_hat,
            CodecState::Adapt(c) => c.prev_hat,
            CodecState::Lossless(c) => c.prev_hat,
        }
    }

    /// Encodes `x`, advances the state, and returns the codeword with the
    /// reconstruction. `range` is the current `S_t`; only the progressive
    /// codec reads it.
    pub fn encode(&mut self, x: f64, range: f64) -> (Codeword, f64) {
        match self {
            CodecState::Uniform(c) => c.step(x),
            CodecState::Progressive(c) => c.step(x, range),
            CodecState::Zoom(c) => c.step(x),
            CodecState::Adapt(c) => c.step(x),
            CodecState::Lossless(c) => c.step(x),
        }
    }

    /// Advances the state from a received index and returns the reconstruction.
    pub fn decode(&mut self, index: u64, range: f64) -> f64 {
        match self {
            CodecState::Uniform(c) => c.apply(index),
            CodecState::Progressive(c) => c.apply(index, range),
            CodecState::Zoom(c) => c.apply(index),
            CodecState::Adapt(c) => c.apply(index),
            CodecState::Lossless(c) => c.apply(index),
        }
    }
}
