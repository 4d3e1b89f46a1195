//! Packed n-bit index streams.
//!
//! Layout: node-major, iteration-minor. All of node 0's indices come first,
//! in iteration order, then node 1's, and so on. Each index occupies exactly
//! `bits` bits, least significant bit first; bit `k` of the stream is bit
//! `k % 8` of byte `k / 8`. The final byte is zero-padded.

use crate::{Error, Result};

/// Bytes needed for `count` indices of `bits` bits.
pub fn packed_len(count: usize, bits: u32) -> usize {
    (count * bits as usize).div_ceil(8)
}

/// Packs per-node index streams. All streams must have the same length and
/// every index must fit in `bits`.
pub fn pack_indices(streams: &[Vec<u64>], bits: u32) -> Result<Vec<u8>> {
    if !(1..=64).contains(&bits) {
        return Err(Error::out_of_range("bits", format!("{bits} is outside 1..=64")));
    }
    let len = streams.first().map_or(0, Vec::len);
    let count = streams.len() * len;
    let mut out = vec![0u8; packed_len(count, bits)];
    let mut pos = 0usize;
    for stream in streams {
        if stream.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                actual: stream.len(),
            });
        }
        for &value in stream {
            if bits < 64 && value >> bits != 0 {
                return Err(Error::out_of_range(
                    "index",
                    format!("{value} does not fit in {bits} bits"),
                ));
            }
            for k in 0..bits {
                if (value >> k) & 1 == 1 {
                    out[pos / 8] |= 1 << (pos % 8);
                }
                pos += 1;
            }
        }
    }
    Ok(out)
}

/// Inverse of [`pack_indices`] for `nodes` streams of `iterations` indices.
pub fn unpack_indices(bytes: &[u8], bits: u32, nodes: usize, iterations: usize) -> Result<Vec<Vec<u64>>> {
    if !(1..=64).contains(&bits) {
        return Err(Error::out_of_range("bits", format!("{bits} is outside 1..=64")));
    }
    let need = packed_len(nodes * iterations, bits);
    if bytes.len() != need {
        return Err(Error::Format {
            what: "packed index stream",
            detail: format!("expected {need} bytes, found {}", bytes.len()),
        });
    }
    let mut pos = 0usize;
    let mut streams = Vec::with_capacity(nodes);
    for _ in 0..nodes {
        let mut stream = Vec::with_capacity(iterations);
        for _ in 0..iterations {
            let mut value = 0u64;
            for k in 0..bits {
                if (bytes[pos / 8] >> (pos % 8)) & 1 == 1 {
                    value |= 1 << k;
                }
                pos += 1;
            }
            stream.push(value);
        }
        streams.push(stream);
    }
    Ok(streams)
}
