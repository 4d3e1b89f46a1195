//! The quantized consensus iteration `z_{t+1} = z_t + (W − I) ẑ_t`.
//!
//! Rounds are synchronous. In round `t` every node encodes `z_t(i)`, every
//! neighbor decodes the index with its own replica of the sender's codec,
//! and then all nodes update at once. A node never reads a neighbor's true
//! state, only what its replica reconstructs. Because `1ᵀ(W − I) = 0` the
//! update preserves the network average whatever the quantization noise.
//!
//! Sums run in node-index order so traces are reproducible.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codec::{packing, CodecState};
use crate::network::WeightMatrix;
use crate::schedule::RangeSchedule;
use crate::{Error, Matrix, Result};

/// Full history of one run. Vectors are indexed by iteration, then node.
#[derive(Debug, Clone)]
pub struct RunTrace {
    /// `z_0..=z_T`.
    pub z: Vec<Vec<f64>>,
    /// `ẑ_0..=ẑ_T`.
    pub z_hat: Vec<Vec<f64>>,
    /// `ε_t = ẑ_t − z_t`.
    pub eps: Vec<Vec<f64>>,
    pub clip_counts: Vec<usize>,
    /// Mean of `z_0`.
    pub mu: f64,
    /// Bits per value; 0 for unquantized runs.
    pub bits: u32,
    /// Transmitted indices, node-major.
    pub indices: Vec<Vec<u64>>,
    /// Range size passed to the codecs at each iteration.
    pub ranges: Vec<f64>,
    /// Codec states before the first round, one per node.
    pub initial_codecs: Vec<CodecState>,
}

// Ranges are NaN for codecs that ignore the schedule, so compare them bitwise.
impl PartialEq for RunTrace {
    fn eq(&self, other: &Self) -> bool {
        self.z == other.z
            && self.z_hat == other.z_hat
            && self.eps == other.eps
            && self.clip_counts == other.clip_counts
            && self.mu.to_bits() == other.mu.to_bits()
            && self.bits == other.bits
            && self.indices == other.indices
            && self.ranges.len() == other.ranges.len()
            && self.ranges.iter().zip(&other.ranges).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.initial_codecs == other.initial_codecs
    }
}

impl RunTrace {
    pub fn node_count(&self) -> usize {
        self.z.first().map_or(0, Vec::len)
    }

    /// Number of updates `T`.
    pub fn steps(&self) -> usize {
        self.z.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    /// `‖z_t − μ1‖₂`.
    pub err: Vec<f64>,
    /// Sample variance of `ε_t` (normalized by `m`).
    pub noise_var: Vec<f64>,
    pub clip: Vec<usize>,
}

impl MetricSeries {
    /// CSV with header `t,err,noise_var,clip_count`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,err,noise_var,clip_count")?;
        for t in 0..self.err.len() {
            writeln!(
                out,
                "{t},{:.12e},{:.12e},{}",
                self.err[t], self.noise_var[t], self.clip[t]
            )?;
        }
        Ok(())
    }
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `coupling[i] = [(j, W_ij − δ_ij)]` over the nonzero entries of row `i`,
/// diagonal always included.
fn coupling_rows(w: &Matrix) -> Vec<Vec<(usize, f64)>> {
    let m = w.rows();
    (0..m)
        .map(|i| {
            (0..m)
                .filter_map(|j| {
                    let v = w[(i, j)] - if i == j { 1.0 } else { 0.0 };
                    (v != 0.0 || i == j).then_some((j, v))
                })
                .collect()
        })
        .collect()
}

/// `z + (W − I) hats`, summed in coupling order.
fn update(z: &[f64], hats: &[f64], coupling: &[Vec<(usize, f64)>]) -> Vec<f64> {
    coupling
        .iter()
        .zip(z)
        .map(|(row, &zi)| row.iter().fold(zi, |acc, &(j, coef)| acc + coef * hats[j]))
        .collect()
}

fn check_dims(w: &WeightMatrix, z0: &[f64], horizon: usize) -> Result<()> {
    if z0.len() != w.node_count() {
        return Err(Error::DimensionMismatch {
            expected: w.node_count(),
            actual: z0.len(),
        });
    }
    if horizon == 0 {
        return Err(Error::out_of_range("horizon", "must be at least 1"));
    }
    Ok(())
}

/// Runs `horizon` quantized rounds.
///
/// `codec_factory(i)` gives node `i`'s initial codec state; it is called
/// once for the node's encoder and once per neighbor replica, and must
/// return identical states each time. The progressive codec reads its
/// range sizes from `schedule`, which must reach at least `horizon`.
pub fn run_consensus<F>(
    w: &WeightMatrix,
    z0: &[f64],
    codec_factory: F,
    schedule: Option<&RangeSchedule>,
    horizon: usize,
) -> Result<RunTrace>
where
    F: Fn(usize) -> CodecState,
{
    check_dims(w, z0, horizon)?;
    let m = z0.len();
    let wm = w.matrix();

    let initial_codecs: Vec<CodecState> = (0..m).map(&codec_factory).collect();
    let needs_schedule = initial_codecs
        .iter()
        .any(|c| matches!(c, CodecState::Progressive(_)));
    let ranges: Vec<f64> = match schedule {
        Some(s) if s.horizon() >= horizon => (0..=horizon).map(|t| s.size(t)).collect(),
        Some(s) => {
            return Err(Error::out_of_range(
                "schedule",
                format!("covers {} steps, run needs {horizon}", s.horizon()),
            ))
        }
        None if needs_schedule => {
            return Err(Error::out_of_range("schedule", "the progressive codec needs a range schedule"))
        }
        None => vec![f64::NAN; horizon + 1],
    };

    let coupling = coupling_rows(wm);

    let mut encoders = initial_codecs.clone();
    // replicas[i] holds node i's decoders for each neighbor j, in coupling order
    let mut replicas: Vec<Vec<Option<CodecState>>> = coupling
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .map(|&(j, _)| (j != i).then(|| codec_factory(j)))
                .collect()
        })
        .collect();

    let bits = initial_codecs.first().map_or(0, CodecState::bits);
    let mut trace = RunTrace {
        z: Vec::with_capacity(horizon + 1),
        z_hat: Vec::with_capacity(horizon + 1),
        eps: Vec::with_capacity(horizon + 1),
        clip_counts: Vec::with_capacity(horizon + 1),
        mu: mean(z0),
        bits,
        indices: vec![Vec::with_capacity(horizon + 1); m],
        ranges: ranges.clone(),
        initial_codecs,
    };

    let mut z = z0.to_vec();
    let mut sent = vec![0u64; m];
    let mut own_hat = vec![0.0; m];
    for (t, &range) in ranges.iter().enumerate() {
        let mut clips = 0;
        for j in 0..m {
            let (cw, hat) = encoders[j].encode(z[j], range);
            sent[j] = cw.index;
            own_hat[j] = hat;
            clips += usize::from(cw.clipped);
            trace.indices[j].push(cw.index);
        }

        let mut next = Vec::with_capacity(m);
        for i in 0..m {
            let mut acc = z[i];
            for (&(j, coef), replica) in coupling[i].iter().zip(replicas[i].iter_mut()) {
                let hat = match replica {
                    Some(dec) => {
                        let hat = dec.decode(sent[j], range);
                        assert_eq!(
                            hat.to_bits(),
                            own_hat[j].to_bits(),
                            "decoder replica of node {j} at node {i} diverged at t = {t}"
                        );
                        hat
                    }
                    None => own_hat[i],
                };
                acc += coef * hat;
            }
            next.push(acc);
        }

        trace.eps.push(own_hat.iter().zip(&z).map(|(h, x)| h - x).collect());
        trace.z_hat.push(own_hat.clone());
        trace.clip_counts.push(clips);
        if t < horizon {
            trace.z.push(std::mem::replace(&mut z, next));
        } else {
            trace.z.push(z.clone());
        }
    }
    Ok(trace)
}

/// Unquantized consensus `z_{t+1} = z_t + (W − I) z_t`.
///
/// Uses the same update arithmetic as [`run_consensus`], so a lossless
/// codec reproduces this trace bit for bit.
pub fn ideal_run(w: &WeightMatrix, z0: &[f64], horizon: usize) -> Result<RunTrace> {
    check_dims(w, z0, horizon)?;
    let m = z0.len();
    let coupling = coupling_rows(w.matrix());
    let mut z = vec![z0.to_vec()];
    for t in 0..horizon {
        let next = update(&z[t], &z[t], &coupling);
        z.push(next);
    }
    Ok(RunTrace {
        z_hat: z.clone(),
        eps: vec![vec![0.0; m]; horizon + 1],
        clip_counts: vec![0; horizon + 1],
        mu: mean(z0),
        bits: 0,
        indices: Vec::new(),
        ranges: Vec::new(),
        initial_codecs: Vec::new(),
        z,
    })
}

/// Rebuilds `ẑ_t` and `z_{t+1}` from `z_0` and the recorded noise through
///
/// ```text
/// ẑ_t     = Wᵗ z₀     + Σ_{s<t}  Wˢ(W−I) ε_{t−s−1} + ε_t
/// z_{t+1} = W^{t+1} z₀ + Σ_{s≤t} Wˢ(W−I) ε_{t−s}
/// ```
///
/// and returns the largest ∞-norm deviation from the simulated trace.
pub fn expansion_check(trace: &RunTrace, w: &Matrix) -> f64 {
    let steps = trace.steps();
    if trace.z.is_empty() {
        return 0.0;
    }
    let wi = w.minus_identity();
    let mut powers = vec![Matrix::identity(w.rows())];
    for s in 1..=steps + 1 {
        let next = powers[s - 1].matmul(w);
        powers.push(next);
    }
    let driven: Vec<Vec<f64>> = trace.eps.iter().map(|e| wi.mul_vec(e)).collect();
    let z0 = &trace.z[0];

    let deviation = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let add = |acc: &mut [f64], v: Vec<f64>| acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);

    let mut worst: f64 = 0.0;
    for t in 0..trace.z_hat.len().min(trace.eps.len()) {
        // ẑ_t
        let mut hat = powers[t].mul_vec(z0);
        for s in 0..t {
            add(&mut hat, powers[s].mul_vec(&driven[t - s - 1]));
        }
        add(&mut hat, trace.eps[t].clone());
        worst = worst.max(deviation(&hat, &trace.z_hat[t]));

        // z_{t+1}
        if t < steps {
            let mut next = powers[t + 1].mul_vec(z0);
            for s in 0..=t {
                add(&mut next, powers[s].mul_vec(&driven[t - s]));
            }
            worst = worst.max(deviation(&next, &trace.z[t + 1]));
        }
    }
    worst
}

/// Error norm, noise variance and clip counts per iteration.
pub fn metrics(trace: &RunTrace) -> MetricSeries {
    let mu = trace.mu;
    let err = trace
        .z
        .iter()
        .map(|z| z.iter().map(|x| (x - mu).powi(2)).sum::<f64>().sqrt())
        .collect();
    let noise_var = trace
        .eps
        .iter()
        .map(|e| {
            let m = mean(e);
            e.iter().map(|x| (x - m).powi(2)).sum::<f64>() / e.len() as f64
        })
        .collect();
    MetricSeries {
        err,
        noise_var,
        clip: trace.clip_counts.clone(),
    }
}

/// Re-decodes every node's index stream with fresh copies of the initial
/// codec states and reports whether the reconstructions match the trace
/// bit for bit.
pub fn verify_lockstep(trace: &RunTrace) -> bool {
    if trace.initial_codecs.is_empty() {
        return trace.indices.is_empty();
    }
    trace.initial_codecs.iter().enumerate().all(|(j, init)| {
        let mut dec = init.clone();
        trace.indices[j].iter().enumerate().all(|(t, &idx)| {
            dec.decode(idx, trace.ranges[t]).to_bits() == trace.z_hat[t][j].to_bits()
        })
    })
}

/// Recomputes the states of an archived run from `z_0`, `W` and the
/// transmitted indices alone, and returns the largest deviation from the
/// recorded states. Fails when the indices do not decode to the recorded
/// `ẑ`.
pub fn replay(trace: &RunTrace, w: &Matrix) -> Result<f64> {
    let m = trace.node_count();
    if w.rows() != m || w.cols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: w.rows(),
        });
    }
    if !trace.initial_codecs.is_empty() && !verify_lockstep(trace) {
        return Err(Error::Format {
            what: "trace archive",
            detail: "indices do not decode to the recorded reconstructions".into(),
        });
    }
    let hats = &trace.z_hat;
    let coupling = coupling_rows(w);
    let mut z = trace.z[0].clone();
    let mut worst: f64 = 0.0;
    for t in 0..trace.steps() {
        let next = update(&z, &hats[t], &coupling);
        worst = next
            .iter()
            .zip(&trace.z[t + 1])
            .fold(worst, |a, (x, y)| a.max((x - y).abs()));
        z = next;
    }
    Ok(worst)
}

const ARCHIVE_MAGIC: &[u8; 8] = b"PQTRACE1";

#[derive(Serialize, Deserialize)]
struct ArchiveHeader {
    m: usize,
    steps: usize,
    bits: u32,
    mu: f64,
    clip_counts: Vec<usize>,
    // NaN (no schedule) is stored as null
    ranges: Vec<Option<f64>>,
    initial_codecs: Vec<CodecState>,
}

/// Writes a replayable archive of `trace` and its weight matrix.
///
/// Layout, little-endian: the 8-byte magic `PQTRACE1`; a `u32` header length
/// and a JSON header (node count, steps, bits, mean, clip counts, ranges,
/// initial codec states); then `W` (`m²` f64, row-major), `z`, `ẑ` and `ε`
/// (each `(steps+1)·m` f64, iteration-major); finally the transmitted
/// indices packed as described in [`packing`].
pub fn write_archive<W: Write>(trace: &RunTrace, w: &Matrix, mut out: W) -> Result<()> {
    let m = trace.node_count();
    let header = ArchiveHeader {
        m,
        steps: trace.steps(),
        bits: trace.bits,
        mu: trace.mu,
        clip_counts: trace.clip_counts.clone(),
        ranges: trace.ranges.iter().map(|&r| (!r.is_nan()).then_some(r)).collect(),
        initial_codecs: trace.initial_codecs.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut buf = Vec::new();
    buf.extend_from_slice(ARCHIVE_MAGIC);
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    let mut put = |values: &[f64]| values.iter().for_each(|v| buf.extend_from_slice(&v.to_le_bytes()));
    put(w.as_slice());
    for block in [&trace.z, &trace.z_hat, &trace.eps] {
        block.iter().for_each(|row| put(row));
    }
    if trace.bits > 0 && !trace.indices.is_empty() {
        buf.extend_from_slice(&packing::pack_indices(&trace.indices, trace.bits)?);
    }
    out.write_all(&buf).map_err(|e| Error::io("<archive>", e))
}

/// Reads an archive written by [`write_archive`].
pub fn read_archive<R: Read>(mut input: R) -> Result<(Matrix, RunTrace)> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<archive>", e))?;
    let bad = |detail: &str| Error::Format {
        what: "trace archive",
        detail: detail.to_string(),
    };
    if bytes.len() < 12 || &bytes[..8] != ARCHIVE_MAGIC {
        return Err(bad("missing PQTRACE1 magic"));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let body_start = 12 + header_len;
    if bytes.len() < body_start {
        return Err(bad("truncated header"));
    }
    let header: ArchiveHeader = serde_json::from_slice(&bytes[12..body_start])?;
    let (m, rows) = (header.m, header.steps + 1);

    let float_count = m * m + 3 * rows * m;
    let floats_end = body_start + 8 * float_count;
    if bytes.len() < floats_end {
        return Err(bad("truncated state arrays"));
    }
    let floats: Vec<f64> = bytes[body_start..floats_end]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let w = Matrix::from_rows(&floats[..m * m].chunks(m.max(1)).collect::<Vec<_>>())?;
    let block = |k: usize| -> Vec<Vec<f64>> {
        let start = m * m + k * rows * m;
        floats[start..start + rows * m]
            .chunks(m.max(1))
            .map(<[f64]>::to_vec)
            .collect()
    };
    let indices = if header.bits > 0 && !header.initial_codecs.is_empty() {
        packing::unpack_indices(&bytes[floats_end..], header.bits, m, rows)?
    } else if floats_end == bytes.len() {
        Vec::new()
    } else {
        return Err(bad("trailing bytes after state arrays"));
    };
    let trace = RunTrace {
        z: block(0),
        z_hat: block(1),
        eps: block(2),
        clip_counts: header.clip_counts,
        mu: header.mu,
        bits: header.bits,
        indices,
        ranges: header.ranges.into_iter().map(|r| r.unwrap_or(f64::NAN)).collect(),
        initial_codecs: header.initial_codecs,
    };
    Ok((w, trace))
}

pub fn save_archive(trace: &RunTrace, w: &Matrix, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_archive(trace, w, std::io::BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn load_archive(path: &Path) -> Result<(Matrix, RunTrace)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_archive(std::io::BufReader::new(file))
}
