mod common;

use progquant::bench::{self, CodecKind, ExperimentConfig};
use progquant::codec::{
    self, packing, AdaptCodec, CodecState, LosslessCodec, ProgressiveCodec, UniformCodec, ZoomCodec,
};
use proptest::prelude::*;

fn codec_state(kind: u8, bits: u32, center: f64) -> CodecState {
    match kind % 5 {
        0 => CodecState::Uniform(UniformCodec::new(bits, center - 0.5, 1.0)),
        1 => CodecState::Progressive(ProgressiveCodec::new(bits, center)),
        2 => CodecState::Zoom(ZoomCodec::with_defaults(bits, center)),
        3 => CodecState::Adapt(AdaptCodec::new(bits, center, codec::step_size(1.0, bits), codec::DEFAULT_K)),
        _ => CodecState::Lossless(LosslessCodec { prev_hat: center }),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn decoder_tracks_encoder_from_indices_alone(
        kind in 0u8..5,
        bits in 1u32..=12,
        center in -2.0f64..2.0,
        xs in prop::collection::vec(-5.0f64..5.0, 1..200),
        ranges in prop::collection::vec(1e-9f64..10.0, 200),
    ) {
        let init = codec_state(kind, bits, center);
        let mut enc = init.clone();
        let mut dec = init;
        for (t, &x) in xs.iter().enumerate() {
            let (cw, hat) = enc.encode(x, ranges[t]);
            let top = if enc.bits() == 64 { u64::MAX } else { codec::max_index(enc.bits()) };
            prop_assert!(cw.index <= top);
            prop_assert_eq!(dec.decode(cw.index, ranges[t]).to_bits(), hat.to_bits());
            prop_assert_eq!(&enc, &dec);
        }
    }

    #[test]
    fn progressive_error_within_half_step_when_unclipped(
        bits in 1u32..=16,
        center in -1.0f64..1.0,
        steps in prop::collection::vec((-1.0f64..1.0, 1e-6f64..2.0), 1..100),
    ) {
        let mut c = ProgressiveCodec::new(bits, center);
        for (offset, size) in steps {
            let x = c.prev_hat + offset * size;
            let (cw, hat) = c.step(x, size);
            if !cw.clipped {
                prop_assert!((hat - x).abs() <= size / 2f64.powi(bits as i32 + 1) * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn payload_is_n_bits_per_value(bits in 1u32..=16, nodes in 1usize..8, iters in 1usize..64, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let streams: Vec<Vec<u64>> = (0..nodes)
            .map(|_| (0..iters).map(|_| rand::Rng::random_range(&mut rng, 0..=codec::max_index(bits))).collect())
            .collect();
        let packed = packing::pack_indices(&streams, bits).unwrap();
        prop_assert_eq!(packed.len() * 8 - (nodes * iters * bits as usize), (8 - (nodes * iters * bits as usize) % 8) % 8);
        prop_assert_eq!(packing::unpack_indices(&packed, bits, nodes, iters).unwrap(), streams);
    }
}

#[test]
fn clip_counts_die_out() {
    let cfg = ExperimentConfig {
        trials: 50,
        horizon: 100,
        bits: vec![2, 4, 6],
        codecs: vec![CodecKind::ProgQ],
        seed: 11,
        ..ExperimentConfig::default()
    };
    let table = bench::run_experiment(&cfg).unwrap();
    for n in [2, 4, 6] {
        let clips: Vec<f64> = table.series("progq", n, "metropolis").map(|r| r.clip_mean).collect();
        assert_eq!(clips[100], 0.0, "n={n}: mean clip count at t=100 is {}", clips[100]);
        let late: f64 = clips[80..].iter().sum();
        assert!(late < 0.05, "n={n}: clips still present late: {late}");
    }
}
