use flytts_core::runtime::format::MAGIC;
use flytts_core::runtime::macs::{estimate_macs, reference_decoder_macs};
use flytts_core::runtime::synth::sample_prior;
use flytts_core::runtime::wav::{encode_wav, to_pcm16};
use flytts_core::runtime::{
    config_from_store, count_parameters, init_weights, load_weights, save_weights, SynthesisOptions, Synthesizer,
};
use flytts_core::{Error, FrameTensor, ModelConfig, TokenSeq, Waveform, WeightStore};
use proptest::prelude::*;

fn small() -> ModelConfig {
    ModelConfig {
        name: "small".into(),
        hidden: 16,
        latent: 8,
        heads: 2,
        ffn_dim: 32,
        flow_hidden: 16,
        flow_wavenet_layers: 2,
        dec_channels: 16,
        dec_mid: 32,
        num_decoder_blocks: 2,
        n_fft: 64,
        hop: 16,
        vocab_size: 64,
        ..ModelConfig::fly_tts()
    }
}

fn tokens(cfg: &ModelConfig) -> TokenSeq {
    TokenSeq::new(vec![4, 9, 33, 1, 60, 12, 7], cfg.vocab_size).unwrap()
}

#[test]
fn zero_noise_ignores_the_seed() {
    let cfg = small();
    let store = init_weights(&cfg, 1).unwrap();
    let synth = Synthesizer::new(&store, &cfg).unwrap();
    let run = |seed| synth.synthesize(&tokens(&cfg), &SynthesisOptions { noise_scale: 0.0, length_scale: 1.0, seed }).unwrap();
    assert_eq!(run(1).waveform.samples, run(99).waveform.samples);
}

#[test]
fn fixed_seed_is_deterministic_and_seeds_matter() {
    let cfg = small();
    let store = init_weights(&cfg, 1).unwrap();
    let synth = Synthesizer::new(&store, &cfg).unwrap();
    let run = |seed| synth.synthesize(&tokens(&cfg), &SynthesisOptions { noise_scale: 0.667, length_scale: 1.0, seed }).unwrap();
    let a = run(5);
    assert_eq!(a.waveform.samples, run(5).waveform.samples);
    assert_ne!(a.waveform.samples, run(6).waveform.samples);
}

#[test]
fn output_length_follows_durations() {
    let cfg = small();
    let store = init_weights(&cfg, 2).unwrap();
    let synth = Synthesizer::new(&store, &cfg).unwrap();
    for length_scale in [0.5, 1.0, 1.7] {
        let out = synth.synthesize(&tokens(&cfg), &SynthesisOptions { length_scale, ..Default::default() }).unwrap();
        let total = out.durations.total_frames();
        assert_eq!(out.waveform.len(), (total - 1) * cfg.hop);
        assert_eq!(out.waveform.sample_rate, 22050);
    }
}

#[test]
fn concurrent_read_only_synthesis() {
    let cfg = small();
    let store = init_weights(&cfg, 3).unwrap();
    let synth = Synthesizer::new(&store, &cfg).unwrap();
    let opts = SynthesisOptions { seed: 8, ..Default::default() };
    let want = synth.synthesize(&tokens(&cfg), &opts).unwrap().waveform.samples;
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..4).map(|_| s.spawn(|| synth.synthesize(&tokens(&cfg), &opts).unwrap())).collect();
        for h in handles {
            assert_eq!(h.join().unwrap().waveform.samples, want);
        }
    });
}

#[test]
fn synthesizer_rejects_foreign_weights() {
    let cfg = small();
    let other = ModelConfig { g1: 6, m1: 1, ..small() };
    let store = init_weights(&other, 1).unwrap();
    assert!(Synthesizer::new(&store, &cfg).is_err());
}

#[test]
fn prior_sampling() {
    let mean = FrameTensor::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]).unwrap();
    let logstd = FrameTensor::zeros(&[2, 2]);
    assert_eq!(sample_prior(&mean, &logstd, 0.0, 3).unwrap().data(), mean.data());
    let a = sample_prior(&mean, &logstd, 1.0, 3).unwrap();
    assert_eq!(a.data(), sample_prior(&mean, &logstd, 1.0, 3).unwrap().data());
    assert_ne!(a.data(), mean.data());
}

#[test]
fn weight_file_round_trip_is_byte_identical() {
    let store = init_weights(&small(), 4).unwrap();
    let bytes = save_weights(&store).unwrap();
    assert_eq!(&bytes[..4], MAGIC);
    let loaded = load_weights(&bytes).unwrap();
    assert_eq!(save_weights(&loaded).unwrap(), bytes);
    assert_eq!(config_from_store(&loaded).unwrap(), Some(small()));
    assert_eq!(count_parameters(&loaded).unwrap(), count_parameters(&store).unwrap());
    let aliased: Vec<_> = loaded.slots().filter(|(a, b)| a != b).collect();
    assert!(!aliased.is_empty());
}

#[test]
fn corrupted_weight_files_are_rejected() {
    let bytes = save_weights(&init_weights(&small(), 4).unwrap()).unwrap();
    let mut flipped = bytes.clone();
    let mid = bytes.len() / 2;
    flipped[mid] ^= 0x40;
    let err = load_weights(&flipped).unwrap_err();
    assert!(matches!(err, Error::Checksum { .. }), "{err}");
    assert!(err.is_data_error());
    let mut tail = bytes.clone();
    let n = tail.len();
    tail[n - 1] ^= 1;
    assert!(matches!(load_weights(&tail), Err(Error::Checksum { .. })));
    assert!(load_weights(&bytes[..bytes.len() - 9]).unwrap_err().is_data_error());
    assert!(load_weights(b"nope").unwrap_err().is_data_error());
}

#[test]
fn empty_store_round_trips() {
    let bytes = save_weights(&WeightStore::new()).unwrap();
    assert_eq!(save_weights(&load_weights(&bytes).unwrap()).unwrap(), bytes);
}

#[test]
fn parameter_totals_are_ordered() {
    let count = |name: &str| count_parameters(&init_weights(&ModelConfig::preset(name).unwrap(), 1).unwrap()).unwrap();
    let (mini, fly, base) = (count("mini-fly-tts"), count("fly-tts"), count("vits-base-shaped"));
    assert!(mini < fly && fly < base, "{mini} {fly} {base}");
}

#[test]
fn decoder_macs_per_sample_favor_istft() {
    for name in ["fly-tts", "mini-fly-tts"] {
        let cfg = ModelConfig::preset(name).unwrap();
        for frames in [2, 50, 400, 2000] {
            let m = estimate_macs(&cfg, frames);
            assert!(m.istft_decoder_per_sample() < m.reference_per_sample(), "{name} {frames}");
        }
    }
    let base = ModelConfig::vits_base_shaped();
    let per_sample = reference_decoder_macs(base.latent, &base.reference, 400) as f64 / (400.0 * 256.0);
    assert!(per_sample > 1e5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pcm_conversion_clamps_and_rounds(x in -4.0f32..4.0) {
        let v = to_pcm16(x);
        let want = (x.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        prop_assert_eq!(v, want);
    }

    #[test]
    fn wav_length_matches_samples(n in 0usize..2000) {
        let bytes = encode_wav(&Waveform::new(vec![0.25; n], 22050)).unwrap();
        prop_assert_eq!(bytes.len(), 44 + 2 * n);
    }
}

#[test]
fn nan_samples_become_silence() {
    assert_eq!(to_pcm16(f32::NAN), 0);
}
