//! Frequency-domain (STFT) and time-frequency (DWT) analysis, including
//! mother-wavelet selection by maximum energy-to-entropy ratio.

pub mod dwt;
pub mod stft;
pub mod wavelets;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dwt::{coefficient_total, dwt4, idwt4, WaveletDecomposition, DWT_LEVELS};
pub use stft::{stft, stft_with_taper, Spectrum, Stft, Taper, DEFAULT_FFT_SIZE};
pub use wavelets::Wavelet;

use crate::signal_io::SignalError;

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error("signal of {len} samples is shorter than the {required}-tap filter")]
    SignalTooShort { len: usize, required: usize },

    #[error("unknown wavelet {0:?}")]
    UnknownWavelet(String),

    #[error("coefficient layout mismatch: {0}")]
    LengthMismatch(String),

    #[error("decomposition has zero energy")]
    ZeroEnergy,

    #[error("no candidate wavelets given")]
    NoCandidates,

    #[error("every candidate wavelet failed on this signal")]
    AllCandidatesFailed,

    #[error("FFT size must be a power of two >= 2, got {0}")]
    InvalidFftSize(usize),

    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveletScore {
    pub wavelet: Wavelet,
    pub energy: f64,
    /// Shannon entropy in nats of the normalized coefficient energies.
    pub entropy: f64,
    /// `energy / entropy`; `+inf` when the entropy is zero.
    pub ratio: f64,
}

impl WaveletScore {
    pub fn from_coefficients<I>(wavelet: Wavelet, coefficients: I) -> Result<Self, TransformError>
    where
        I: IntoIterator<Item = f64> + Clone,
    {
        let energy: f64 = coefficients.clone().into_iter().map(|c| c * c).sum();
        if energy <= 0.0 {
            return Err(TransformError::ZeroEnergy);
        }
        let entropy = coefficients
            .into_iter()
            .map(|c| c * c / energy)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum::<f64>()
            .max(0.0);
        let ratio = if entropy > 0.0 { energy / entropy } else { f64::INFINITY };
        Ok(Self {
            wavelet,
            energy,
            entropy,
            ratio,
        })
    }
}

/// Scores a decomposition over all bands pooled together.
pub fn energy_entropy_ratio(dec: &WaveletDecomposition) -> Result<WaveletScore, TransformError> {
    WaveletScore::from_coefficients(dec.wavelet, dec.coefficients())
}

/// Picks the candidate with the largest energy-to-entropy ratio. Candidates
/// that fail on this signal are skipped; ties go to the earlier candidate.
pub fn select_mother_wavelet(samples: &[f64], candidates: &[Wavelet]) -> Result<Wavelet, TransformError> {
    if candidates.is_empty() {
        return Err(TransformError::NoCandidates);
    }
    let mut best: Option<WaveletScore> = None;
    for &w in candidates {
        let Ok(score) = dwt4(samples, w).and_then(|d| energy_entropy_ratio(&d)) else {
            continue;
        };
        if best.is_none_or(|b| score.ratio > b.ratio) {
            best = Some(score);
        }
    }
    best.map(|s| s.wavelet).ok_or(TransformError::AllCandidatesFailed)
}

/// Runs [`select_mother_wavelet`] on each signal and returns the most voted
/// candidate (ties by candidate order). Signals on which every candidate
/// fails cast no vote.
pub fn select_mother_wavelet_by_vote(signals: &[&[f64]], candidates: &[Wavelet]) -> Result<Wavelet, TransformError> {
    if candidates.is_empty() {
        return Err(TransformError::NoCandidates);
    }
    let picks: Vec<Option<Wavelet>> = signals
        .par_iter()
        .map(|s| select_mother_wavelet(s, candidates).ok())
        .collect();
    let mut votes = vec![0usize; candidates.len()];
    for w in picks.into_iter().flatten() {
        let idx = candidates.iter().position(|&c| c == w).expect("pick is a candidate");
        votes[idx] += 1;
    }
    let (best_idx, &best_votes) = votes
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|(_, v)| **v)
        .expect("non-empty candidates");
    if best_votes == 0 {
        return Err(TransformError::AllCandidatesFailed);
    }
    Ok(candidates[best_idx])
}
