//! Radix-2 iterative FFT and the real-input transforms built on it.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// In-place complex FFT plan for a fixed power-of-two size.
#[derive(Clone, Debug)]
pub struct ComplexFft {
    n: usize,
    bitrev: Vec<usize>,
    // e^{-2πik/n} for k < n/2
    twiddles: Vec<Complex64>,
}

impl ComplexFft {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_power_of_two() {
            return Err(Error::invalid("fft", format!("size {n} is not a power of two")));
        }
        let bits = n.trailing_zeros();
        let bitrev = (0..n)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(Self { n, bitrev, twiddles })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized transform; `inverse` flips the twiddle sign.
    pub fn process(&self, buf: &mut [Complex64], inverse: bool) {
        assert_eq!(buf.len(), self.n, "buffer length must match plan size");
        for i in 0..self.n {
            let j = self.bitrev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut size = 2;
        while size <= self.n {
            let half = size / 2;
            let stride = self.n / size;
            for start in (0..self.n).step_by(size) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            size *= 2;
        }
    }
}

/// Real-input FFT of size `n` computed through a half-size complex FFT.
#[derive(Clone, Debug)]
pub struct RealFft {
    n: usize,
    half: Option<ComplexFft>,
    // e^{-2πik/n} for k <= n/2
    twiddles: Vec<Complex64>,
}

impl RealFft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::invalid("rfft", format!("size {n} is not a power of two")));
        }
        let half = if n >= 2 { Some(ComplexFft::new(n / 2)?) } else { None };
        let twiddles = (0..=n / 2)
            .map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / n as f64))
            .collect();
        Ok(Self { n, half, twiddles })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bins(&self) -> usize {
        self.n / 2 + 1
    }

    /// Forward transform, returning bins `0..=n/2`.
    pub fn forward(&self, frame: &[f64]) -> Vec<Complex64> {
        assert_eq!(frame.len(), self.n, "frame length must match plan size");
        let Some(plan) = &self.half else {
            return vec![Complex64::new(frame[0], 0.0)];
        };
        let h = self.n / 2;
        let mut z: Vec<Complex64> = frame.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
        plan.process(&mut z, false);
        (0..=h)
            .map(|k| {
                let zk = z[k % h];
                let zr = z[(h - k) % h].conj();
                let even = (zk + zr) * 0.5;
                let odd = (zk - zr) * Complex64::new(0.0, -0.5);
                even + self.twiddles[k] * odd
            })
            .collect()
    }

    /// Inverse transform normalized by `1/n`. The imaginary parts of the DC
    /// and Nyquist bins are ignored.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<f64> {
        assert_eq!(spectrum.len(), self.bins(), "spectrum must have n/2+1 bins");
        let Some(plan) = &self.half else {
            return vec![spectrum[0].re];
        };
        let h = self.n / 2;
        let bin = |k: usize| {
            let c = spectrum[k];
            if k == 0 || k == h {
                Complex64::new(c.re, 0.0)
            } else {
                c
            }
        };
        let mut z: Vec<Complex64> = (0..h)
            .map(|k| {
                let xk = bin(k);
                let xr = bin(h - k).conj();
                let even = (xk + xr) * 0.5;
                let odd = (xk - xr) * 0.5 * self.twiddles[k].conj();
                even + Complex64::new(0.0, 1.0) * odd
            })
            .collect();
        plan.process(&mut z, true);
        let scale = 1.0 / h as f64;
        z.iter().flat_map(|c| [c.re * scale, c.im * scale]).collect()
    }
}

/// One-shot real FFT; `frame.len()` must be a power of two.
pub fn rfft(frame: &[f64]) -> Result<Vec<Complex64>> {
    Ok(RealFft::new(frame.len())?.forward(frame))
}

/// One-shot inverse of [`rfft`] for a frame of `n` samples.
pub fn irfft(spectrum: &[Complex64], n: usize) -> Result<Vec<f64>> {
    let plan = RealFft::new(n)?;
    if spectrum.len() != plan.bins() {
        return Err(Error::shape(
            "irfft",
            format!("{} bins given, size {n} needs {}", spectrum.len(), plan.bins()),
        ));
    }
    Ok(plan.inverse(spectrum))
}
