//! STFT analysis and FFT-based iSTFT synthesis.
//!
//! Framing is centered: the signal is reflect-padded by `n_fft/2` on both
//! sides, frames are Hann-windowed, and synthesis divides the overlap-added
//! output by the summed squared window before trimming the padding again.

pub mod fft;

pub use fft::{irfft, rfft, ComplexFft, RealFft};

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::FrameTensor;

pub const DEFAULT_SAMPLE_RATE: u32 = 22_050;

const ENVELOPE_FLOOR: f64 = 1e-11;

/// Mono audio at a declared sample rate.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        Self { samples, sample_rate }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Per-frame Fourier coefficients as magnitude and phase, each `[bins, frames]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralFrames {
    pub magnitude: FrameTensor,
    pub phase: FrameTensor,
}

impl SpectralFrames {
    pub fn new(magnitude: FrameTensor, phase: FrameTensor) -> Result<Self> {
        if magnitude.rank() != 2 || magnitude.shape() != phase.shape() {
            return Err(Error::shape(
                "SpectralFrames::new",
                format!("magnitude {:?} vs phase {:?}", magnitude.shape(), phase.shape()),
            ));
        }
        Ok(Self { magnitude, phase })
    }

    pub fn bins(&self) -> usize {
        self.magnitude.channels()
    }

    pub fn frames(&self) -> usize {
        self.magnitude.frames()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StftConfig {
    n_fft: usize,
    hop: usize,
    window: Vec<f64>,
}

impl StftConfig {
    /// Periodic Hann window of length `n_fft`.
    pub fn hann(n_fft: usize, hop: usize) -> Result<Self> {
        if n_fft < 2 || !n_fft.is_power_of_two() {
            return Err(Error::invalid("StftConfig", format!("n_fft {n_fft} must be a power of two ≥ 2")));
        }
        if hop == 0 || hop > n_fft / 2 {
            return Err(Error::invalid(
                "StftConfig",
                format!("hop {hop} must lie in 1..={}", n_fft / 2),
            ));
        }
        let window = (0..n_fft)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n_fft as f64).cos())
            .collect();
        Ok(Self { n_fft, hop, window })
    }

    pub fn n_fft(&self) -> usize {
        self.n_fft
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Frames produced by [`stft`] for a signal of `len` samples.
    pub fn frames_for(&self, len: usize) -> usize {
        len / self.hop + 1
    }

    /// Samples produced by [`istft`] for `frames` frames.
    pub fn samples_for(&self, frames: usize) -> usize {
        frames.saturating_sub(1) * self.hop
    }
}

// Mirror index `i` (possibly negative or past the end) back into 0..len.
fn reflect(i: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = i.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Centered Hann-window STFT; yields `len/hop + 1` frames of `n_fft/2+1` bins.
pub fn stft(x: &Waveform, cfg: &StftConfig) -> Result<SpectralFrames> {
    let len = x.samples.len();
    if len == 0 {
        return Err(Error::Empty("stft"));
    }
    let n = cfg.n_fft;
    let pad = (n / 2) as isize;
    let frames = cfg.frames_for(len);
    let bins = cfg.bins();
    let plan = RealFft::new(n)?;
    let mut mag = FrameTensor::zeros(&[bins, frames]);
    let mut phase = FrameTensor::zeros(&[bins, frames]);
    let mut buf = vec![0.0f64; n];
    for f in 0..frames {
        let start = (f * cfg.hop) as isize - pad;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = x.samples[reflect(start + i as isize, len)] as f64 * cfg.window[i];
        }
        for (k, c) in plan.forward(&buf).into_iter().enumerate() {
            mag.data_mut()[k * frames + f] = c.norm() as f32;
            phase.data_mut()[k * frames + f] = c.arg() as f32;
        }
    }
    SpectralFrames::new(mag, phase)
}

/// Inverse STFT by windowed overlap-add; output has `(frames−1)·hop` samples.
pub fn istft(spec: &SpectralFrames, cfg: &StftConfig, sample_rate: u32) -> Result<Waveform> {
    let (bins, frames) = spec.magnitude.dims2("istft")?;
    if bins != cfg.bins() {
        return Err(Error::shape(
            "istft",
            format!("{bins} bins but n_fft {} needs {}", cfg.n_fft, cfg.bins()),
        ));
    }
    if frames < 2 {
        return Err(Error::invalid("istft", format!("need at least 2 frames, got {frames}")));
    }
    let n = cfg.n_fft;
    let plan = RealFft::new(n)?;
    let full = n + (frames - 1) * cfg.hop;
    let mut out = vec![0.0f64; full];
    let mut envelope = vec![0.0f64; full];
    let mut coeffs = vec![Complex64::default(); bins];
    for f in 0..frames {
        for (k, c) in coeffs.iter_mut().enumerate() {
            let m = spec.magnitude.data()[k * frames + f] as f64;
            let p = spec.phase.data()[k * frames + f] as f64;
            *c = Complex64::from_polar(m, p);
        }
        let frame = plan.inverse(&coeffs);
        let start = f * cfg.hop;
        for (i, (&s, &w)) in frame.iter().zip(&cfg.window).enumerate() {
            out[start + i] += s * w;
            envelope[start + i] += w * w;
        }
    }
    let pad = n / 2;
    let samples = out[pad..full - pad]
        .iter()
        .zip(&envelope[pad..full - pad])
        .map(|(&y, &e)| (y / e.max(ENVELOPE_FLOOR)) as f32)
        .collect();
    Ok(Waveform::new(samples, sample_rate))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_count_follows_hop() {
        let cfg = StftConfig::hann(1024, 256).unwrap();
        let x = Waveform::new(vec![0.1; 2560], DEFAULT_SAMPLE_RATE);
        assert_eq!(stft(&x, &cfg).unwrap().frames(), 11);
    }

    #[test]
    fn silence_has_zero_magnitude() {
        let cfg = StftConfig::hann(512, 128).unwrap();
        let x = Waveform::new(vec![0.0; 1000], DEFAULT_SAMPLE_RATE);
        let s = stft(&x, &cfg).unwrap();
        assert!(s.magnitude.data().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn zero_spectrum_gives_silence_of_expected_length() {
        let cfg = StftConfig::hann(1024, 256).unwrap();
        let z = FrameTensor::zeros(&[513, 9]);
        let w = istft(&SpectralFrames::new(z.clone(), z).unwrap(), &cfg, DEFAULT_SAMPLE_RATE).unwrap();
        assert_eq!(w.len(), 8 * 256);
        assert!(w.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn config_validation() {
        assert!(StftConfig::hann(1000, 250).is_err());
        assert!(StftConfig::hann(1024, 513).is_err());
        assert!(StftConfig::hann(1024, 0).is_err());
        assert!(StftConfig::hann(1024, 512).is_ok());
    }

    #[test]
    fn istft_rejects_bad_shapes() {
        let cfg = StftConfig::hann(64, 16).unwrap();
        let z = FrameTensor::zeros(&[32, 4]);
        assert!(istft(&SpectralFrames::new(z.clone(), z).unwrap(), &cfg, 16_000).is_err());
        let one = FrameTensor::zeros(&[33, 1]);
        assert!(istft(&SpectralFrames::new(one.clone(), one).unwrap(), &cfg, 16_000).is_err());
        assert!(stft(&Waveform::new(vec![], 16_000), &cfg).is_err());
    }

    #[test]
    fn reflect_indexing() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-4, 5), 4);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(9, 5), 1);
        assert_eq!(reflect(-3, 1), 0);
    }

    #[test]
    fn short_signal_is_accepted() {
        let cfg = StftConfig::hann(1024, 256).unwrap();
        let s = stft(&Waveform::new(vec![0.5, -0.25, 0.1], 22_050), &cfg).unwrap();
        assert_eq!(s.frames(), 1);
        assert!(s.magnitude.is_finite());
    }
}
