use keed_core::io::{decode_212, encode_212, encode_annotations, read_wfdb_annotations, WfdbAnnotation};
use keed_core::net::{load_weights, save_weights, ModelConfig, Parameters};
use proptest::prelude::*;

/// Bit-level format-212 packer written independently of the library.
fn pack_212_oracle(samples: &[i16]) -> Vec<u8> {
    let mut bits: Vec<u8> = Vec::new();
    for pair in samples.chunks(2) {
        let a = (pair[0] as u16) & 0xFFF;
        bits.push((a & 0xFF) as u8);
        let b = pair.get(1).map(|&b| (b as u16) & 0xFFF);
        let hi_a = (a >> 8) as u8;
        let hi_b = b.map_or(0, |b| (b >> 8) as u8);
        bits.push(hi_a | (hi_b << 4));
        if let Some(b) = b {
            bits.push((b & 0xFF) as u8);
        }
    }
    bits
}

fn annotation() -> impl Strategy<Value = (u64, WfdbAnnotation)> {
    (
        0u64..5000,
        1u8..=49,
        -128i8..=127,
        0u8..=255,
        -128i8..=127,
        proptest::option::of("[A-Za-z0-9()+ ]{1,40}"),
    )
        .prop_map(|(gap, type_code, subtype, chan, num, aux)| {
            (
                gap,
                WfdbAnnotation {
                    sample_index: 0,
                    type_code,
                    subtype,
                    chan,
                    num,
                    aux,
                },
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn format_212_round_trip(samples in prop::collection::vec(-2048i16..=2047, 0..64)) {
        let bytes = encode_212(&samples).unwrap();
        prop_assert_eq!(&bytes, &pack_212_oracle(&samples));
        prop_assert_eq!(decode_212(&bytes, samples.len()).unwrap(), samples);
    }

    #[test]
    fn annotation_round_trip(items in prop::collection::vec(annotation(), 0..12)) {
        let mut t = 0;
        let anns: Vec<WfdbAnnotation> = items
            .into_iter()
            .map(|(gap, mut a)| {
                t += gap;
                a.sample_index = t;
                a
            })
            .collect();
        let bytes = encode_annotations(&anns).unwrap();
        prop_assert_eq!(read_wfdb_annotations(&bytes).unwrap(), anns);
    }
}

#[test]
fn format_212_rejects_wide_values() {
    assert!(encode_212(&[2048]).is_err());
    assert!(encode_212(&[-2049]).is_err());
}

#[test]
fn decode_212_truncated() {
    assert!(decode_212(&[0, 0], 2).is_err());
}

#[test]
fn weights_round_trip_bitwise() {
    let cfg = ModelConfig {
        width: 8,
        depth: 2,
        n_blocks: 2,
        length: 64,
        keypoints: 6,
        kernel_size: 3,
    };
    let params = Parameters::init(&cfg, 99).unwrap();
    let bytes = save_weights(&params, &cfg).unwrap();
    let (loaded, cfg2) = load_weights(&bytes).unwrap();
    assert_eq!(cfg, cfg2);
    for ((n1, a), (n2, b)) in params.iter().zip(loaded.iter()) {
        assert_eq!(n1, n2);
        assert_eq!(a.shape, b.shape);
        assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(save_weights(&loaded, &cfg2).unwrap(), bytes);
}
