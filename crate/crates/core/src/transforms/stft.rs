use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::TransformError;
use crate::signal_io::{windows, Signal, WindowPlan};

pub const DEFAULT_FFT_SIZE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Taper {
    /// Periodic Hann window scaled to unit mean.
    #[default]
    Hann,
    Rectangular,
}

/// One-sided magnitude spectrum of one window (DC kept, Nyquist dropped).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub magnitudes: Vec<f64>,
    pub bin_hz: f64,
    pub window_index: usize,
}

impl Spectrum {
    pub fn zeros(bins: usize, bin_hz: f64, window_index: usize) -> Self {
        Self {
            magnitudes: vec![0.0; bins],
            bin_hz,
            window_index,
        }
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_hz
    }
}

fn check_fft_size(fft_size: usize) -> Result<(), TransformError> {
    if fft_size < 2 || !fft_size.is_power_of_two() {
        return Err(TransformError::InvalidFftSize(fft_size));
    }
    Ok(())
}

fn taper_weights(len: usize, taper: Taper) -> Vec<f64> {
    match taper {
        Taper::Rectangular => vec![1.0; len],
        Taper::Hann => (0..len)
            .map(|i| 1.0 - (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
            .collect(),
    }
}

/// Reusable STFT engine for a fixed transform size and taper.
pub struct Stft {
    fft_size: usize,
    taper: Taper,
    fft: Arc<dyn Fft<f64>>,
}

impl Stft {
    pub fn new(fft_size: usize, taper: Taper) -> Result<Self, TransformError> {
        check_fft_size(fft_size)?;
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Ok(Self { fft_size, taper, fft })
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    /// Full two-sided transform of one window. The window is cut to
    /// `fft_size` samples if longer, tapered, then zero-padded.
    pub fn transform_window(&self, window: &[f64]) -> Vec<Complex64> {
        let used = window.len().min(self.fft_size);
        let weights = taper_weights(used, self.taper);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_size];
        for (i, (&x, &w)) in window[..used].iter().zip(&weights).enumerate() {
            buf[i] = Complex64::new(x * w, 0.0);
        }
        self.fft.process(&mut buf);
        buf
    }

    pub fn spectrum(&self, window: &[f64], fs: f64, window_index: usize) -> Spectrum {
        let full = self.transform_window(window);
        Spectrum {
            magnitudes: full[..self.fft_size / 2].iter().map(|c| c.norm()).collect(),
            bin_hz: fs / self.fft_size as f64,
            window_index,
        }
    }

    pub fn run(&self, samples: &[f64], fs: f64, plan: &WindowPlan) -> Result<Vec<Spectrum>, TransformError> {
        Ok(windows(samples, plan)?
            .into_iter()
            .enumerate()
            .map(|(i, w)| self.spectrum(w, fs, i))
            .collect())
    }
}

/// Hann-tapered STFT of `signal`.
pub fn stft(signal: &Signal, plan: &WindowPlan, fft_size: usize) -> Result<Vec<Spectrum>, TransformError> {
    Stft::new(fft_size, Taper::Hann)?.run(signal.samples(), signal.fs(), plan)
}

pub fn stft_with_taper(
    samples: &[f64],
    fs: f64,
    plan: &WindowPlan,
    fft_size: usize,
    taper: Taper,
) -> Result<Vec<Spectrum>, TransformError> {
    Stft::new(fft_size, taper)?.run(samples, fs, plan)
}
