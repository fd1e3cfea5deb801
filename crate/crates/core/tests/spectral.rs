use flytts_core::spectral::fft::{irfft, rfft, ComplexFft};
use flytts_core::spectral::{istft, stft, DEFAULT_SAMPLE_RATE};
use flytts_core::{oracle, FrameTensor, SpectralFrames, StftConfig, Waveform};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn signal(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn interior_relative_error(x: &[f32], y: &[f32], margin: usize) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, &v| m.max(v.abs() as f64));
    let err = x[margin..x.len() - margin]
        .iter()
        .zip(&y[margin..y.len() - margin])
        .fold(0.0f64, |m, (&a, &b)| m.max((a as f64 - b as f64).abs()));
    err / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn rfft_matches_dft(log_n in 1u32..10, seed in any::<u64>()) {
        let x = signal(1 << log_n, seed);
        let got = rfft(&x).unwrap();
        let want = oracle::dft(&x);
        prop_assert_eq!(got.len(), want.len());
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).norm() <= 1e-6 * (1.0 + b.norm()), "{a} vs {b}");
        }
    }

    #[test]
    fn irfft_inverts_rfft(log_n in 1u32..12, seed in any::<u64>()) {
        let x = signal(1 << log_n, seed);
        let back = irfft(&rfft(&x).unwrap(), x.len()).unwrap();
        for (a, b) in x.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn complex_fft_round_trip(log_n in 0u32..10, seed in any::<u64>()) {
        let n = 1usize << log_n;
        let re = signal(n, seed);
        let im = signal(n, seed ^ 0x55);
        let orig: Vec<Complex64> = re.iter().zip(&im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let plan = ComplexFft::new(n).unwrap();
        let mut buf = orig.clone();
        plan.process(&mut buf, false);
        plan.process(&mut buf, true);
        for (a, b) in orig.iter().zip(&buf) {
            prop_assert!((a - b / n as f64).norm() <= 1e-9);
        }
    }

    #[test]
    fn istft_inverts_stft(hop_i in 0usize..3, nfft_i in 0usize..2, len_hops in 4usize..40, seed in any::<u64>()) {
        let hop = [64, 128, 256][hop_i];
        let n_fft = [512, 1024][nfft_i];
        let cfg = StftConfig::hann(n_fft, hop).unwrap();
        let len = len_hops * hop;
        prop_assume!(len > n_fft);
        let x: Vec<f32> = signal(len, seed).into_iter().map(|v| v as f32).collect();
        let spec = stft(&Waveform::new(x.clone(), DEFAULT_SAMPLE_RATE), &cfg).unwrap();
        let y = istft(&spec, &cfg, DEFAULT_SAMPLE_RATE).unwrap();
        prop_assert_eq!(y.len(), len);
        prop_assert!(interior_relative_error(&x, &y.samples, n_fft / 2) < 1e-4);
    }

    #[test]
    fn istft_is_linear_in_magnitude(a in 0.1f32..4.0, seed in any::<u64>()) {
        let cfg = StftConfig::hann(512, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bins = cfg.bins();
        let m: Vec<f32> = (0..bins * 6).map(|_| rng.random_range(0.0..1.0)).collect();
        let p: Vec<f32> = (0..bins * 6).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mag = FrameTensor::new(vec![bins, 6], m).unwrap();
        let phase = FrameTensor::new(vec![bins, 6], p).unwrap();
        let y1 = istft(&SpectralFrames::new(mag.clone(), phase.clone()).unwrap(), &cfg, 22050).unwrap();
        let y2 = istft(&SpectralFrames::new(mag.scale(a), phase).unwrap(), &cfg, 22050).unwrap();
        for (u, v) in y1.samples.iter().zip(&y2.samples) {
            prop_assert!((u * a - v).abs() <= 1e-5 * v.abs().max(1.0));
        }
    }
}

#[test]
fn parseval_holds() {
    let x = signal(1024, 7);
    let spec = rfft(&x).unwrap();
    let n = x.len();
    let time: f64 = x.iter().map(|v| v * v).sum();
    let freq: f64 = spec
        .iter()
        .enumerate()
        .map(|(k, c)| if k == 0 || k == n / 2 { c.norm_sqr() } else { 2.0 * c.norm_sqr() })
        .sum::<f64>()
        / n as f64;
    assert!((time - freq).abs() <= 1e-9 * time);
}

#[test]
fn stft_frames_match_windowed_dft() {
    let cfg = StftConfig::hann(256, 64).unwrap();
    let x: Vec<f32> = signal(2048, 11).into_iter().map(|v| v as f32).collect();
    let spec = stft(&Waveform::new(x.clone(), 22050), &cfg).unwrap();
    assert_eq!(spec.frames(), 2048 / 64 + 1);
    // interior frames need no reflection
    for f in [2, 10, 29] {
        let start = f * 64 - 128;
        let frame: Vec<f64> = (0..256).map(|i| x[start + i] as f64 * cfg.window()[i]).collect();
        let want = oracle::dft(&frame);
        let peak = want.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        for (k, c) in want.iter().enumerate() {
            let m = spec.magnitude.at(k, f) as f64;
            assert!((m - c.norm()).abs() <= 1e-5 * peak, "frame {f} bin {k}");
            if c.norm() > 1e-3 * peak {
                let p = spec.phase.at(k, f) as f64;
                let d = (p - c.arg()).rem_euclid(std::f64::consts::TAU);
                assert!(d.min(std::f64::consts::TAU - d) <= 1e-3, "phase frame {f} bin {k}");
            }
        }
    }
}

#[test]
fn single_bin_synthesizes_a_sinusoid() {
    let (n_fft, hop, bin, frames) = (1024usize, 256usize, 40usize, 40usize);
    let cfg = StftConfig::hann(n_fft, hop).unwrap();
    let mut mag = FrameTensor::zeros(&[cfg.bins(), frames]);
    let mut phase = FrameTensor::zeros(&[cfg.bins(), frames]);
    let omega = 2.0 * std::f64::consts::PI * bin as f64 / n_fft as f64;
    for f in 0..frames {
        mag.row_mut(bin)[f] = 1.0;
        // phase advance keeps consecutive frames coherent
        phase.row_mut(bin)[f] = ((omega * (f * hop) as f64).rem_euclid(std::f64::consts::TAU)) as f32;
    }
    let y = istft(&SpectralFrames::new(mag, phase).unwrap(), &cfg, 22050).unwrap();
    assert_eq!(y.len(), (frames - 1) * hop);
    let probe: Vec<f64> = (0..y.len()).map(|i| (omega * i as f64).cos()).collect();
    let m = n_fft;
    let (a, b) = (&y.samples[m..y.len() - m], &probe[m..y.len() - m]);
    let dot: f64 = a.iter().zip(b).map(|(&u, &v)| u as f64 * v).sum();
    let na: f64 = a.iter().map(|&u| (u as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(dot / (na * nb) > 0.999, "correlation {}", dot / (na * nb));
}

#[test]
fn stft_rejects_bad_configs() {
    assert!(StftConfig::hann(1000, 250).is_err());
    assert!(StftConfig::hann(1024, 1024).is_err());
    let cfg = StftConfig::hann(512, 128).unwrap();
    let z = FrameTensor::zeros(&[cfg.bins(), 1]);
    assert!(istft(&SpectralFrames::new(z.clone(), z).unwrap(), &cfg, 22050).is_err());
    assert!(stft(&Waveform::new(vec![], 22050), &cfg).is_err());
}
