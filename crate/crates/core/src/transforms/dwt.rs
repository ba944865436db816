//! Multilevel orthogonal DWT (Mallat cascade).
//!
//! Each level maps `len` samples to `ceil(len / 2)` approximation and
//! `ceil(len / 2)` detail coefficients. An odd-length level is first extended
//! by mirroring its last sample; the even-length result is filtered with
//! periodic wrap-around, which keeps the transform orthogonal so the inverse
//! is exact up to rounding.

use serde::{Deserialize, Serialize};

use super::wavelets::Wavelet;
use super::TransformError;

pub const DWT_LEVELS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletDecomposition {
    /// Approximation coefficients at the deepest level.
    pub approx: Vec<f64>,
    /// Detail coefficients; `details[0]` is level 1 (finest).
    pub details: Vec<Vec<f64>>,
    pub wavelet: Wavelet,
    pub levels: usize,
}

impl WaveletDecomposition {
    /// All coefficients, approximation band first, then details from the
    /// deepest level to level 1.
    pub fn coefficients(&self) -> impl Iterator<Item = f64> + Clone + '_ {
        self.approx
            .iter()
            .chain(self.details.iter().rev().flatten())
            .copied()
    }

    pub fn coefficient_count(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    /// Band labels in the same order as [`coefficients`](Self::coefficients),
    /// paired with their lengths.
    pub fn bands(&self) -> Vec<(String, usize)> {
        let mut out = vec![(format!("a{}", self.levels), self.approx.len())];
        for (i, d) in self.details.iter().enumerate().rev() {
            out.push((format!("d{}", i + 1), d.len()));
        }
        out
    }
}

/// Length of each level's input, starting with `n` and ending with the
/// deepest approximation length.
pub fn level_lengths(n: usize, levels: usize) -> Vec<usize> {
    let mut lens = Vec::with_capacity(levels + 1);
    lens.push(n);
    for i in 0..levels {
        lens.push(lens[i].div_ceil(2));
    }
    lens
}

/// Total coefficient count of a `levels`-deep decomposition of `n` samples.
pub fn coefficient_total(n: usize, levels: usize) -> usize {
    if n == 0 {
        return 0;
    }
    let lens = level_lengths(n, levels);
    lens[1..].iter().sum::<usize>() + lens[levels]
}

pub fn dwt4(samples: &[f64], wavelet: Wavelet) -> Result<WaveletDecomposition, TransformError> {
    dwt(samples, wavelet, DWT_LEVELS)
}

pub fn dwt(samples: &[f64], wavelet: Wavelet, levels: usize) -> Result<WaveletDecomposition, TransformError> {
    if samples.len() < wavelet.filter_len() {
        return Err(TransformError::SignalTooShort {
            len: samples.len(),
            required: wavelet.filter_len(),
        });
    }
    let h = wavelet.lowpass();
    let g = wavelet.highpass();
    let mut approx = samples.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, h, &g);
        details.push(d);
        approx = a;
    }
    Ok(WaveletDecomposition {
        approx,
        details,
        wavelet,
        levels,
    })
}

pub fn idwt4(dec: &WaveletDecomposition, original_len: usize) -> Result<Vec<f64>, TransformError> {
    idwt(dec, original_len)
}

pub fn idwt(dec: &WaveletDecomposition, original_len: usize) -> Result<Vec<f64>, TransformError> {
    let lens = level_lengths(original_len, dec.levels);
    if dec.details.len() != dec.levels || original_len == 0 {
        return Err(TransformError::LengthMismatch(format!(
            "expected {} detail bands for a signal of {original_len} samples",
            dec.levels
        )));
    }
    if dec.approx.len() != lens[dec.levels] {
        return Err(TransformError::LengthMismatch(format!(
            "approximation band has {} coefficients, expected {}",
            dec.approx.len(),
            lens[dec.levels]
        )));
    }
    for (level, d) in dec.details.iter().enumerate() {
        if d.len() != lens[level + 1] {
            return Err(TransformError::LengthMismatch(format!(
                "detail band {} has {} coefficients, expected {}",
                level + 1,
                d.len(),
                lens[level + 1]
            )));
        }
    }
    let h = dec.wavelet.lowpass();
    let g = dec.wavelet.highpass();
    let mut current = dec.approx.clone();
    for level in (0..dec.levels).rev() {
        current = synthesis_step(&current, &dec.details[level], lens[level], h, &g);
    }
    Ok(current)
}

fn analysis_step(x: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut y = x.to_vec();
    if y.len() % 2 == 1 {
        y.push(*y.last().expect("non-empty level"));
    }
    let n = y.len();
    let half = n / 2;
    let mut a = vec![0.0; half];
    let mut d = vec![0.0; half];
    for i in 0..half {
        let mut sa = 0.0;
        let mut sd = 0.0;
        for (k, (&hk, &gk)) in h.iter().zip(g).enumerate() {
            let v = y[(2 * i + k) % n];
            sa += hk * v;
            sd += gk * v;
        }
        a[i] = sa;
        d[i] = sd;
    }
    (a, d)
}

fn synthesis_step(a: &[f64], d: &[f64], out_len: usize, h: &[f64], g: &[f64]) -> Vec<f64> {
    let n = 2 * a.len();
    let mut y = vec![0.0; n];
    for i in 0..a.len() {
        for (k, (&hk, &gk)) in h.iter().zip(g).enumerate() {
            y[(2 * i + k) % n] += hk * a[i] + gk * d[i];
        }
    }
    y.truncate(out_len);
    y
}
