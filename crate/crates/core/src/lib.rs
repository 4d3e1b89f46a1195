//! Distributed average consensus with quantized neighbor communication.
//!
//! The crate builds random geometric sensor networks and their consensus
//! weight matrices, designs the range schedule of the progressive quantizer
//! from the spectrum of the weight matrix, runs the average-preserving
//! quantized iteration `z_{t+1} = z_t + (W - I) ẑ_t` with several codecs,
//! and aggregates Monte Carlo experiments.
//!
//! Module map:
//!
//! - [`network`]: random geometric graphs, Metropolis and Laplacian weights.
//! - [`spectral`]: symmetric eigenvalues, `λ₂`, `λ_min`, `‖Wˢ(W−I)‖`.
//! - [`schedule`]: recursive and exponential range schedules, stability tests.
//! - [`codec`]: uniform, progressive, zoom-in/zoom-out and delta-modulation codecs.
//! - [`engine`]: the consensus iteration, traces, and metrics.
//! - [`bench`]: experiment harness, result tables, and the command line.

pub mod bench;
pub mod codec;
pub mod engine;
mod error;
pub mod matrix;
pub mod network;
pub mod schedule;
pub mod spectral;

pub use error::{Error, Result};
pub use matrix::Matrix;
