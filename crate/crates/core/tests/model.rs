use flytts_core::decoder::{self, ConvNextParams};
use flytts_core::duration::{self, durations_to_frames, predict_log_durations};
use flytts_core::losses::{self, gaussian_kl, GaussianParams, ScoreSeq};
use flytts_core::nnkit::{LAYER_NORM_EPS, LEAKY_SLOPE};
use flytts_core::prior_flow::{self, coupling_step, flow_apply, CouplingParams, Direction, FlowPlan};
use flytts_core::runtime::reference::{self, reference_decode};
use flytts_core::runtime::{DecoderKind, ParamInit, ReferenceDecoderConfig};
use flytts_core::text_encoder::{self, encode_text, encoder_layer, encoder_plan, SharingPlan};
use flytts_core::{oracle, FrameTensor, ModelConfig, TokenSeq, WeightStore};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(g1: usize, m1: usize, g2: usize, m2: usize) -> ModelConfig {
    ModelConfig {
        name: "small".into(),
        g1,
        m1,
        g2,
        m2,
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
        vocab_size: 32,
        ..ModelConfig::fly_tts()
    }
}

fn random(shape: &[usize], rng: &mut ChaCha8Rng) -> FrameTensor {
    let n = shape.iter().product();
    FrameTensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn encoder_store(cfg: &ModelConfig, seed: u64) -> WeightStore {
    let mut init = ParamInit::new(seed);
    text_encoder::init_params(&mut init, cfg).unwrap();
    init.finish()
}

fn flow_store(cfg: &ModelConfig, seed: u64) -> WeightStore {
    let mut init = ParamInit::new(seed);
    prior_flow::init_params(&mut init, cfg).unwrap();
    init.finish()
}

fn decoder_store(cfg: &ModelConfig, seed: u64) -> WeightStore {
    let mut init = ParamInit::new(seed);
    decoder::init_params(&mut init, cfg);
    init.finish()
}

fn zero_all(store: &mut WeightStore) {
    let names: Vec<String> = store.storages().map(|(n, _)| n.to_string()).collect();
    for n in names {
        store.storage_mut(&n).unwrap().data_mut().fill(0.0);
    }
}

/// Copies every slot into its own storage, dropping all aliasing.
fn unaliased(store: &WeightStore) -> WeightStore {
    let mut out = WeightStore::new();
    for (slot, _) in store.slots() {
        out.insert(slot.to_string(), store.get(slot).unwrap().clone());
    }
    out
}

// ---- text encoder ----

#[test]
fn encoder_output_shape_on_full_preset() {
    let cfg = ModelConfig::fly_tts();
    let store = encoder_store(&cfg, 1);
    let tokens = TokenSeq::new(vec![3, 17, 42, 9, 0, 255, 8], cfg.vocab_size).unwrap();
    let out = encode_text(&tokens, &store, &encoder_plan(&cfg).unwrap(), &cfg).unwrap();
    assert_eq!(out.hidden.shape(), &[192, 7]);
    assert_eq!(out.prior_mean.shape(), &[192, 7]);
    assert_eq!(out.prior_logstd.shape(), &[192, 7]);
    assert!(out.hidden.is_finite());
}

#[test]
fn shared_storage_perturbation_reaches_every_layer() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = random(&[16, 6], &mut rng);
    let changed = |cfg: &ModelConfig| -> Vec<bool> {
        let base = encoder_store(cfg, 2);
        let mut bumped = base.clone();
        bumped.storage_mut("enc.groups.0.ffn.conv2.bias").unwrap().data_mut()[0] += 0.5;
        (0..cfg.encoder_layers())
            .map(|l| {
                let a = encoder_layer(&base, cfg, l, &h).unwrap();
                let b = encoder_layer(&bumped, cfg, l, &h).unwrap();
                a.data() != b.data()
            })
            .collect()
    };
    assert_eq!(changed(&small(1, 6, 1, 1)), vec![true; 6]);
    let mut control = vec![false; 6];
    control[0] = true;
    assert_eq!(changed(&small(6, 1, 1, 1)), control);
}

#[test]
fn one_layer_per_group_equals_unshared_encoder() {
    let cfg = small(6, 1, 1, 1);
    let shared = encoder_store(&cfg, 3);
    let plain = unaliased(&shared);
    assert!(plain.slots().all(|(slot, storage)| slot == storage));
    let tokens = TokenSeq::new(vec![1, 5, 9, 30, 2], cfg.vocab_size).unwrap();
    let plan = encoder_plan(&cfg).unwrap();
    let a = encode_text(&tokens, &shared, &plan, &cfg).unwrap();
    let b = encode_text(&tokens, &plain, &plan, &cfg).unwrap();
    assert_eq!(a.hidden.data(), b.hidden.data());
    assert_eq!(a.prior_mean.data(), b.prior_mean.data());
}

#[test]
fn grouped_layers_hold_a_third_of_the_unshared_parameters() {
    let fly = ModelConfig::fly_tts();
    let unshared = ModelConfig { g1: 6, m1: 1, ..fly.clone() };
    let a = encoder_store(&fly, 1).count_parameters_under("enc.groups.");
    let b = encoder_store(&unshared, 1).count_parameters_under("enc.groups.");
    assert_eq!(a * 3, b);
    assert_eq!(text_encoder::distinct_layer_storages(&encoder_store(&fly, 1), &fly), 2);
}

#[test]
fn sharing_plan_maps_layers_to_groups() {
    let p = SharingPlan::new(2, 3).unwrap();
    let groups: Vec<usize> = (0..6).map(|l| p.group_index(l).unwrap()).collect();
    assert_eq!(groups, vec![0, 0, 0, 1, 1, 1]);
    assert!(p.group_index(6).is_err());
    assert!(SharingPlan::new(0, 3).is_err());
}

#[test]
fn encoder_rejects_mismatched_layout() {
    let cfg = small(2, 3, 1, 1);
    let store = encoder_store(&small(3, 2, 1, 1), 1);
    let tokens = TokenSeq::new(vec![1, 2], cfg.vocab_size).unwrap();
    assert!(encode_text(&tokens, &store, &encoder_plan(&cfg).unwrap(), &cfg).is_err());
    assert!(TokenSeq::new(vec![1, 32], 32).is_err());
}

// ---- flow ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn flow_round_trips(g in 1usize..3, m in 1usize..3, t in 1usize..40, seed in any::<u64>()) {
        let cfg = small(1, 1, g, m);
        let store = flow_store(&cfg, seed);
        let plan = FlowPlan::from_config(&cfg).unwrap();
        let z = random(&[cfg.latent, t], &mut ChaCha8Rng::seed_from_u64(seed ^ 1));
        let y = flow_apply(&z, &plan, &store, &cfg, Direction::Forward).unwrap();
        let back = flow_apply(&y, &plan, &store, &cfg, Direction::Inverse).unwrap();
        prop_assert!(back.max_abs_diff(&z) < 1e-5);
    }

    #[test]
    fn coupling_keeps_the_conditioning_half(t in 1usize..30, seed in any::<u64>()) {
        let cfg = small(1, 1, 2, 2);
        let store = flow_store(&cfg, seed);
        let z = random(&[cfg.latent, t], &mut ChaCha8Rng::seed_from_u64(seed ^ 2));
        let p = CouplingParams::from_store(&store, &cfg, 1).unwrap();
        let y = coupling_step(&z, &p, Direction::Forward).unwrap();
        let half = cfg.latent / 2;
        let (kept, orig) = (y.slice_rows(0, half), z.slice_rows(0, half));
        prop_assert_eq!(kept.data(), orig.data());
    }
}

#[test]
fn zero_weight_coupling_is_identity() {
    let cfg = small(1, 1, 2, 2);
    let mut store = flow_store(&cfg, 7);
    zero_all(&mut store);
    let z = random(&[cfg.latent, 12], &mut ChaCha8Rng::seed_from_u64(8));
    let p = CouplingParams::from_store(&store, &cfg, 0).unwrap();
    assert_eq!(coupling_step(&z, &p, Direction::Forward).unwrap().data(), z.data());
    assert_eq!(coupling_step(&z, &p, Direction::Inverse).unwrap().data(), z.data());
    // an even number of flips cancels out
    let plan = FlowPlan::from_config(&cfg).unwrap();
    let y = flow_apply(&z, &plan, &store, &cfg, Direction::Forward).unwrap();
    assert_eq!(y.data(), z.data());
}

#[test]
fn flow_storage_counts_follow_the_plan() {
    for (name, wn, steps) in [("fly-tts", 2, 4), ("mini-fly-tts", 1, 4), ("vits-base-shaped", 4, 4)] {
        let cfg = ModelConfig::preset(name).unwrap();
        let store = flow_store(&cfg, 1);
        assert_eq!(prior_flow::distinct_wavenet_storages(&store, &cfg), wn, "{name}");
        assert_eq!(prior_flow::distinct_pre_post_storages(&store, &cfg), 2 * steps, "{name}");
    }
}

#[test]
fn flow_steps_in_a_group_share_wavenet_but_not_projections() {
    let cfg = small(1, 1, 2, 2);
    let store = flow_store(&cfg, 1);
    let s0 = CouplingParams::from_store(&store, &cfg, 0).unwrap();
    let s1 = CouplingParams::from_store(&store, &cfg, 1).unwrap();
    let s2 = CouplingParams::from_store(&store, &cfg, 2).unwrap();
    assert!(std::ptr::eq(s0.wavenet.in_weights[0], s1.wavenet.in_weights[0]));
    assert!(!std::ptr::eq(s0.wavenet.in_weights[0], s2.wavenet.in_weights[0]));
    assert!(!std::ptr::eq(s0.pre_weight, s1.pre_weight));
}

// ---- duration ----

fn duration_store(cfg: &ModelConfig, seed: u64) -> WeightStore {
    let mut init = ParamInit::new(seed);
    duration::init_params(&mut init, cfg);
    init.finish()
}

#[test]
fn duration_predictor_matches_oracle() {
    let cfg = small(1, 1, 1, 1);
    let store = duration_store(&cfg, 4);
    let h = random(&[cfg.hidden, 9], &mut ChaCha8Rng::seed_from_u64(4));
    let mut x = h.clone();
    for i in 1..=2 {
        let g = |s: &str| store.get(&format!("dp.{s}")).unwrap();
        x = oracle::conv1d(&x, g(&format!("conv{i}.weight")), Some(g(&format!("conv{i}.bias")).data()), 1, 1);
        x = x.map(|v| v.max(0.0));
        x = oracle::layer_norm_channels(&x, g(&format!("norm{i}.gamma")).data(), g(&format!("norm{i}.beta")).data(), LAYER_NORM_EPS);
    }
    let want = oracle::pointwise(&x, store.get("dp.proj.weight").unwrap(), Some(store.get("dp.proj.bias").unwrap().data()));
    let got = predict_log_durations(&h, &store).unwrap();
    for (a, b) in got.iter().zip(want.data()) {
        assert!((a - b).abs() <= 1e-5);
    }
}

#[test]
fn zero_weight_predictor_gives_single_frames() {
    let cfg = small(1, 1, 1, 1);
    let mut store = duration_store(&cfg, 4);
    zero_all(&mut store);
    let h = random(&[cfg.hidden, 5], &mut ChaCha8Rng::seed_from_u64(4));
    let logd = predict_log_durations(&h, &store).unwrap();
    assert_eq!(logd, vec![0.0; 5]);
    assert_eq!(durations_to_frames(&logd, 1.0).unwrap().frames_per_token(), &[1; 5]);
}

#[test]
fn initial_duration_bias_is_five_frames() {
    assert!((duration::INITIAL_LOG_DURATION.exp() - 5.0).abs() < 1e-5);
    let store = duration_store(&small(1, 1, 1, 1), 1);
    assert_eq!(store.get("dp.proj.bias").unwrap().data(), &[duration::INITIAL_LOG_DURATION]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn durations_grow_with_length_scale(
        logd in prop::collection::vec(-3.0f32..4.0, 1..20), a in 0.1f32..3.0, b in 0.1f32..3.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let dl = durations_to_frames(&logd, lo).unwrap();
        let dh = durations_to_frames(&logd, hi).unwrap();
        for ((&x, &y), &l) in dl.frames_per_token().iter().zip(dh.frames_per_token()).zip(&logd) {
            prop_assert!(x >= 1 && x <= y);
            prop_assert_eq!(x, ((l.exp() * lo).ceil() as usize).max(1));
        }
    }

    #[test]
    fn regulation_repeats_columns(d in prop::collection::vec(1usize..6, 1..10), seed in any::<u64>()) {
        let x = random(&[3, d.len()], &mut ChaCha8Rng::seed_from_u64(seed));
        let ds = duration::DurationSeq::new(d.clone()).unwrap();
        let y = duration::expand(&x, &ds).unwrap();
        prop_assert_eq!(y.frames(), d.iter().sum::<usize>());
        let mut col = 0;
        for (i, &n) in d.iter().enumerate() {
            for _ in 0..n {
                for c in 0..3 {
                    prop_assert_eq!(y.at(c, col), x.at(c, i));
                }
                col += 1;
            }
        }
    }
}

// ---- decoder ----

#[test]
fn embed_preserves_frame_count() {
    let cfg = small(1, 1, 1, 1);
    let store = decoder_store(&cfg, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for t in 1..64 {
        let z = random(&[cfg.latent, t], &mut rng);
        assert_eq!(decoder::embed_frames(&z, &store).unwrap().shape(), &[cfg.dec_channels, t]);
    }
}

#[test]
fn zero_embed_weights_give_normalized_bias() {
    let cfg = small(1, 1, 1, 1);
    let mut store = decoder_store(&cfg, 1);
    store.storage_mut("dec.embed.weight").unwrap().data_mut().fill(0.0);
    let z = random(&[cfg.latent, 7], &mut ChaCha8Rng::seed_from_u64(2));
    let h = decoder::embed_frames(&z, &store).unwrap();
    let bias = store.get("dec.embed.bias").unwrap().data();
    let c = bias.len();
    let want = oracle::layer_norm(bias, &vec![1.0; c], &vec![0.0; c], LAYER_NORM_EPS);
    for t in 0..7 {
        for (ch, w) in want.iter().enumerate() {
            assert!((h.at(ch, t) - w).abs() <= 1e-5);
        }
    }
}

#[test]
fn convnext_identity_cases() {
    let cfg = small(1, 1, 1, 1);
    let h = random(&[cfg.dec_channels, 10], &mut ChaCha8Rng::seed_from_u64(3));
    let mut store = decoder_store(&cfg, 2);
    store.storage_mut("dec.blocks.0.scale").unwrap().data_mut().fill(0.0);
    let y = decoder::convnext_block(&h, &ConvNextParams::from_store(&store, 0).unwrap()).unwrap();
    assert_eq!(y.data(), h.data());

    let mut store = decoder_store(&cfg, 2);
    store.storage_mut("dec.blocks.1.pw2.weight").unwrap().data_mut().fill(0.0);
    store.storage_mut("dec.blocks.1.pw2.bias").unwrap().data_mut().fill(0.0);
    let y = decoder::convnext_block(&h, &ConvNextParams::from_store(&store, 1).unwrap()).unwrap();
    assert_eq!(y.data(), h.data());
}

#[test]
fn convnext_block_matches_oracle() {
    let cfg = small(1, 1, 1, 1);
    let store = decoder_store(&cfg, 6);
    let h = random(&[cfg.dec_channels, 13], &mut ChaCha8Rng::seed_from_u64(6));
    let g = |s: &str| store.get(&format!("dec.blocks.0.{s}")).unwrap();
    let r = oracle::depthwise_conv1d(&h, g("dw.weight"), Some(g("dw.bias").data()), 3);
    let r = oracle::layer_norm_channels(&r, g("norm.gamma").data(), g("norm.beta").data(), LAYER_NORM_EPS);
    let r = oracle::pointwise(&r, g("pw1.weight"), Some(g("pw1.bias").data())).map(oracle::gelu);
    let r = oracle::pointwise(&r, g("pw2.weight"), Some(g("pw2.bias").data()));
    let scale = g("scale").data();
    let mut want = h.clone();
    for c in 0..cfg.dec_channels {
        for t in 0..13 {
            want.data_mut()[c * 13 + t] += scale[c] * r.at(c, t);
        }
    }
    let got = decoder::convnext_block(&h, &ConvNextParams::from_store(&store, 0).unwrap()).unwrap();
    assert!(got.max_abs_diff(&want) <= 1e-5);
}

#[test]
fn full_decoder_shapes() {
    let cfg = ModelConfig::fly_tts();
    let store = decoder_store(&cfg, 1);
    let z = random(&[cfg.latent, 9], &mut ChaCha8Rng::seed_from_u64(9));
    let spec = decoder::decode_spectrum(&z, &store, &cfg).unwrap();
    assert_eq!((spec.bins(), spec.frames()), (513, 9));
    assert!(spec.magnitude.data().iter().all(|&m| m > 0.0 && m <= 100.0 + 1e-3));
    let w = decoder::decode(&z, &store, &cfg).unwrap();
    assert_eq!(w.len(), 2048);
    assert!(w.samples.iter().all(|s| s.is_finite()));
    assert!(decoder::decode(&FrameTensor::zeros(&[cfg.latent, 0]), &store, &cfg).is_err());
}

#[test]
fn block_counts_follow_presets() {
    for (name, blocks) in [("fly-tts", 6), ("mini-fly-tts", 4)] {
        let cfg = ModelConfig::preset(name).unwrap();
        assert_eq!(cfg.num_decoder_blocks, blocks);
        let store = decoder_store(&cfg, 1);
        assert!(store.contains(&format!("dec.blocks.{}.scale", blocks - 1)));
        assert!(!store.contains(&format!("dec.blocks.{blocks}.scale")));
        let scale = store.get("dec.blocks.0.scale").unwrap().data()[0];
        assert_eq!(scale, 1.0 / blocks as f32);
    }
}

// ---- losses ----

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn kl_is_nonnegative_and_permutation_invariant(
        stats in prop::collection::vec((-3.0f32..3.0, -2.0f32..2.0, -3.0f32..3.0, -2.0f32..2.0), 1..24),
        rot in 0usize..24,
    ) {
        let n = stats.len();
        let build = |order: &[usize]| {
            let col = |f: &dyn Fn(&(f32, f32, f32, f32)) -> f32| {
                FrameTensor::new(vec![1, n], order.iter().map(|&i| f(&stats[i])).collect()).unwrap()
            };
            (
                GaussianParams::new(col(&|s| s.0), col(&|s| s.1)).unwrap(),
                GaussianParams::new(col(&|s| s.2), col(&|s| s.3)).unwrap(),
            )
        };
        let ident: Vec<usize> = (0..n).collect();
        let rotated: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let (q, p) = build(&ident);
        let (qr, pr) = build(&rotated);
        let a = gaussian_kl(&q, &p).unwrap();
        let b = gaussian_kl(&qr, &pr).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
    }

    #[test]
    fn lsgan_losses_are_nonnegative(r in prop::collection::vec(-3.0f32..3.0, 1..16), f in -3.0f32..3.0) {
        let real = ScoreSeq(r.clone());
        let fake = ScoreSeq::filled(r.len(), f);
        prop_assert!(losses::lsgan_discriminator_loss(&real, &fake).unwrap() >= 0.0);
        prop_assert!(losses::lsgan_generator_loss(&fake).unwrap() >= 0.0);
    }
}

#[test]
fn loss_goldens() {
    let q = GaussianParams::scalar(1.0, 0.0);
    let p = GaussianParams::scalar(0.0, 0.0);
    assert!((gaussian_kl(&q, &p).unwrap() - 0.5).abs() < 1e-6);
    assert_eq!(losses::lsgan_discriminator_loss(&ScoreSeq::filled(4, 1.0), &ScoreSeq::filled(4, 0.0)).unwrap(), 0.0);
    assert_eq!(losses::lsgan_generator_loss(&ScoreSeq::filled(4, 1.0)).unwrap(), 0.0);
    assert!(losses::elbo_lower_bound(-3.0, -0.1).is_err());
    assert_eq!(losses::elbo_lower_bound(-3.0, 0.5).unwrap(), -3.5);
}

#[test]
fn prediction_head_matches_oracle() {
    let store = losses::init_prediction_head(6, 16, 3);
    let x = random(&[6, 11], &mut ChaCha8Rng::seed_from_u64(3));
    let mut h = x.clone();
    for l in 0..losses::HEAD_LAYERS {
        let w = store.get(&format!("head.convs.{l}.weight")).unwrap();
        let b = store.get(&format!("head.convs.{l}.bias")).unwrap();
        h = oracle::conv1d(&h, w, Some(b.data()), 1, 1).map(|v| oracle::leaky_relu(v, LEAKY_SLOPE));
    }
    let want = oracle::pointwise(&h, store.get("head.proj.weight").unwrap(), Some(store.get("head.proj.bias").unwrap().data()));
    let got = losses::prediction_head(&x, &store).unwrap();
    assert_eq!(got.0.len(), 11);
    for (a, b) in got.0.iter().zip(want.data()) {
        assert!((a - b).abs() <= 1e-5);
    }
}

// ---- reference decoder ----

#[test]
fn reference_decoder_matches_oracle() {
    let cfg = ModelConfig {
        latent: 4,
        decoder: DecoderKind::TransposedConv,
        reference: ReferenceDecoderConfig {
            initial_channels: 8,
            upsample_rates: vec![4, 2],
            upsample_kernels: vec![8, 4],
            resblock_kernels: vec![3, 5],
            resblock_dilations: vec![vec![1, 3], vec![1, 2]],
        },
        ..ModelConfig::vits_base_shaped()
    };
    let mut init = ParamInit::new(11);
    reference::init_params(&mut init, &cfg);
    let store = init.finish();
    let z = random(&[4, 6], &mut ChaCha8Rng::seed_from_u64(11));
    let g = |s: &str| store.get(s).unwrap();
    let leaky = |x: &FrameTensor, s: f32| x.map(|v| oracle::leaky_relu(v, s));
    let r = &cfg.reference;
    let mut x = oracle::conv1d(&z, g("ref.conv_pre.weight"), Some(g("ref.conv_pre.bias").data()), 3, 1);
    for i in 0..2 {
        let (rate, k) = (r.upsample_rates[i], r.upsample_kernels[i]);
        let wt = g(&format!("ref.ups.{i}.weight"));
        x = oracle::conv_transpose1d(&leaky(&x, 0.1), wt, Some(g(&format!("ref.ups.{i}.bias")).data()), rate, (k - rate) / 2);
        let mut acc = FrameTensor::zeros(x.shape());
        for (j, dils) in r.resblock_dilations.iter().enumerate() {
            let mut y = x.clone();
            for (l, &d) in dils.iter().enumerate() {
                let p = format!("ref.resblocks.{i}.{j}");
                let kk = r.resblock_kernels[j];
                let a = oracle::conv1d(&leaky(&y, 0.1), g(&format!("{p}.convs1.{l}.weight")), Some(g(&format!("{p}.convs1.{l}.bias")).data()), d * (kk - 1) / 2, d);
                let b = oracle::conv1d(&leaky(&a, 0.1), g(&format!("{p}.convs2.{l}.weight")), Some(g(&format!("{p}.convs2.{l}.bias")).data()), (kk - 1) / 2, 1);
                y = y.add(&b).unwrap();
            }
            acc = acc.add(&y).unwrap();
        }
        x = acc.scale(0.5);
    }
    let want = oracle::conv1d(&leaky(&x, 0.01), g("ref.conv_post.weight"), None, 3, 1).map(f32::tanh);
    let got = reference_decode(&z, &store, &cfg).unwrap();
    assert_eq!(got.len(), 6 * 8);
    for (a, b) in got.samples.iter().zip(want.data()) {
        assert!((a - b).abs() <= 1e-5, "{a} vs {b}");
    }
}
