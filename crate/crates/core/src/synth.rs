//! Seeded synthetic datasets.
//!
//! Every instance draws from its own ChaCha8 stream (`seed`, stream = instance
//! index), so output does not depend on generation order. Gaussian noise uses
//! the Box-Muller transform.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::feature_bank::{Family, FeatureDescriptor, FeatureMatrix};
use crate::signal_io::{save_manifest, save_signal, DatasetManifest, SignalError};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Signal(#[from] SignalError),

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recipe {
    /// Broadband noise vs noise plus decaying resonance bursts.
    BearingLike,
    /// Pulse trains whose systolic peak shape depends on the class.
    PpgLike,
    /// Noise with or without one bin-centred tone.
    SpectralBand,
    /// Pulse trains with regular vs jittered spacing.
    PeakRhythm,
    /// Tabular: two parity bits whose XOR is the label, plus noise columns.
    XorFeatures,
}

impl Recipe {
    pub const ALL: [Recipe; 5] = [
        Recipe::BearingLike,
        Recipe::PpgLike,
        Recipe::SpectralBand,
        Recipe::PeakRhythm,
        Recipe::XorFeatures,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Recipe::BearingLike => "bearing-like",
            Recipe::PpgLike => "ppg-like",
            Recipe::SpectralBand => "spectral-band",
            Recipe::PeakRhythm => "peak-rhythm",
            Recipe::XorFeatures => "xor-features",
        }
    }

    pub fn class_names(self) -> [&'static str; 2] {
        match self {
            Recipe::BearingLike => ["healthy", "faulty"],
            Recipe::PpgLike => ["low", "high"],
            Recipe::SpectralBand => ["absent", "present"],
            Recipe::PeakRhythm => ["regular", "jittered"],
            Recipe::XorFeatures => ["even", "odd"],
        }
    }
}

impl fmt::Display for Recipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Recipe {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Recipe::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| SynthError::InvalidSpec(format!("unknown recipe {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub recipe: Recipe,
    pub per_class: usize,
    /// Samples per signal; column count for `xor-features`.
    pub n: usize,
    pub fs: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

pub const SPECTRAL_BAND_TONE_HZ: f64 = 40.0;
pub const XOR_NOISE_COLUMNS: usize = 6;

impl SynthSpec {
    pub fn defaults(recipe: Recipe) -> SynthSpec {
        let (n, fs, noise_sigma) = match recipe {
            Recipe::BearingLike => (20480, 20000.0, 1.0),
            Recipe::PpgLike => (1800, 60.0, 0.05),
            Recipe::SpectralBand => (1024, 256.0, 1.0),
            Recipe::PeakRhythm => (1024, 256.0, 0.05),
            Recipe::XorFeatures => (2 + XOR_NOISE_COLUMNS, 1.0, 1.0),
        };
        SynthSpec {
            recipe,
            per_class: 100,
            n,
            fs,
            noise_sigma,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.per_class < 2 {
            return bad(format!("need at least 2 instances per class, got {}", self.per_class));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return bad(format!("sampling rate must be positive, got {}", self.fs));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return bad(format!("noise sigma must be non-negative, got {}", self.noise_sigma));
        }
        match self.recipe {
            Recipe::XorFeatures if self.n < 2 => bad("xor-features needs at least the two parity columns".into()),
            Recipe::SpectralBand if SPECTRAL_BAND_TONE_HZ >= self.fs / 2.0 => {
                bad(format!("tone at {SPECTRAL_BAND_TONE_HZ} Hz needs fs above {}", 2.0 * SPECTRAL_BAND_TONE_HZ))
            }
            r if r != Recipe::XorFeatures && self.n < 16 => bad(format!("signals need at least 16 samples, got {}", self.n)),
            _ => Ok(()),
        }
    }

    pub fn instances(&self) -> usize {
        2 * self.per_class
    }

    /// Label of instance `i`: the first `per_class` are class 0.
    pub fn label(&self, i: usize) -> usize {
        usize::from(i >= self.per_class)
    }

    fn rng(&self, instance: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(instance as u64);
        rng
    }
}

/// Standard normal variate by Box-Muller (one of the pair).
pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn noise(rng: &mut ChaCha8Rng, n: usize, sigma: f64) -> Vec<f64> {
    (0..n).map(|_| sigma * gaussian(rng)).collect()
}

fn bearing_like(spec: &SynthSpec, i: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = noise(rng, spec.n, spec.noise_sigma);
    if spec.label(i) == 0 {
        return x;
    }
    // defect bursts: decaying resonance repeated at a jittered defect rate,
    // stronger for later instances
    let severity = 1.0 + (i - spec.per_class) as f64 / spec.per_class as f64;
    let amplitude = 1.5 * spec.noise_sigma.max(0.1) * severity;
    let resonance = 0.15 * spec.fs;
    let rate = 100.0;
    let decay = 0.002 * spec.fs;
    let mut t = rng.gen_range(0.0..spec.fs / rate);
    while (t as usize) < spec.n {
        let start = t as usize;
        for (k, v) in x.iter_mut().enumerate().skip(start).take((6.0 * decay) as usize) {
            let dt = (k - start) as f64;
            *v += amplitude * (-dt / decay).exp() * (2.0 * PI * resonance * dt / spec.fs).sin();
        }
        t += spec.fs / rate * (1.0 + rng.gen_range(-0.05..0.05));
    }
    x
}

fn ppg_like(spec: &SynthSpec, i: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let high = spec.label(i) == 1;
    let bpm = rng.gen_range(60.0..90.0);
    let period = 60.0 / bpm * spec.fs;
    // high pressure: sharper, taller systolic peak and weaker diastolic wave
    let (sys_width, sys_amp, dia_amp) = if high { (0.06, 1.3, 0.25) } else { (0.10, 1.0, 0.5) };
    let sys_w = sys_width * spec.fs;
    let dia_w = 0.12 * spec.fs;
    let dia_delay = 0.3 * spec.fs;
    let mut x = noise(rng, spec.n, spec.noise_sigma);
    let mut beat = rng.gen_range(0.0..period);
    let bump = |t: f64, w: f64| (-0.5 * (t / w).powi(2)).exp();
    while beat < spec.n as f64 + period {
        let a = 1.0 + 0.05 * gaussian(rng);
        let lo = (beat - 4.0 * dia_w).max(0.0) as usize;
        let hi = ((beat + dia_delay + 4.0 * dia_w) as usize).min(spec.n);
        for (k, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
            let t = k as f64 - beat;
            *v += a * (sys_amp * bump(t, sys_w) + dia_amp * bump(t - dia_delay, dia_w));
        }
        beat += period * (1.0 + 0.02 * gaussian(rng));
    }
    x
}

fn spectral_band(spec: &SynthSpec, i: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = noise(rng, spec.n, spec.noise_sigma);
    let phase = rng.gen_range(0.0..2.0 * PI);
    if spec.label(i) == 1 {
        let amplitude = spec.noise_sigma.max(0.1);
        for (k, v) in x.iter_mut().enumerate() {
            *v += amplitude * (2.0 * PI * SPECTRAL_BAND_TONE_HZ * k as f64 / spec.fs + phase).sin();
        }
    }
    x
}

fn peak_rhythm(spec: &SynthSpec, i: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // Zero-mean pulse amplitudes make the expected power spectrum depend on
    // the pulse rate only, so both classes share it; they differ in spacing.
    let jittered = spec.label(i) == 1;
    let period = 0.03125 * spec.fs;
    let width = 0.00625 * spec.fs;
    let mut x = noise(rng, spec.n, spec.noise_sigma);
    let mut t = rng.gen_range(0.0..period) - 4.0 * width;
    while t < spec.n as f64 + 4.0 * width {
        let a = gaussian(rng);
        let lo = (t - 4.0 * width).max(0.0) as usize;
        let hi = ((t + 4.0 * width).max(0.0) as usize + 1).min(spec.n);
        for (k, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
            *v += a * (-0.5 * ((k as f64 - t) / width).powi(2)).exp();
        }
        t += if jittered { -period * (1.0 - rng.gen::<f64>()).ln() } else { period };
    }
    x
}

/// Samples of instance `i`.
pub fn generate_instance(spec: &SynthSpec, i: usize) -> Vec<f64> {
    let mut rng = spec.rng(i);
    match spec.recipe {
        Recipe::BearingLike => bearing_like(spec, i, &mut rng),
        Recipe::PpgLike => ppg_like(spec, i, &mut rng),
        Recipe::SpectralBand => spectral_band(spec, i, &mut rng),
        Recipe::PeakRhythm => peak_rhythm(spec, i, &mut rng),
        Recipe::XorFeatures => xor_row(spec, i, &mut rng),
    }
}

/// All instances in memory as `(samples, label)`.
pub fn generate_signals(spec: &SynthSpec) -> Result<Vec<(Vec<f64>, usize)>, SynthError> {
    spec.validate()?;
    if spec.recipe == Recipe::XorFeatures {
        return Err(SynthError::InvalidSpec("xor-features produces a feature matrix, not signals".into()));
    }
    Ok((0..spec.instances())
        .into_par_iter()
        .map(|i| (generate_instance(spec, i), spec.label(i)))
        .collect())
}

/// Writes one signal file per instance plus `manifest.csv` into `dir`.
/// For `xor-features` writes `features.csv` and `features.json` instead.
pub fn generate(spec: &SynthSpec, dir: &Path) -> Result<Option<DatasetManifest>, SynthError> {
    spec.validate()?;
    fs::create_dir_all(dir).map_err(|e| SynthError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    })?;
    if spec.recipe == Recipe::XorFeatures {
        let m = generate_xor(spec)?;
        let io = |e: crate::feature_bank::FeatureError| SynthError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        };
        m.write_csv(&dir.join("features.csv")).map_err(io)?;
        m.write_descriptors(&dir.join("features.json")).map_err(io)?;
        return Ok(None);
    }
    let names = spec.recipe.class_names();
    let paths: Vec<_> = (0..spec.instances())
        .map(|i| dir.join(format!("{}_{i:05}.txt", spec.recipe)))
        .collect();
    (0..spec.instances())
        .into_par_iter()
        .try_for_each(|i| save_signal(&generate_instance(spec, i), &paths[i]))?;
    let manifest = DatasetManifest::from_entries(
        spec.recipe.as_str(),
        Some(spec.fs),
        paths.iter().enumerate().map(|(i, p)| (p.clone(), names[spec.label(i)])),
    )?;
    save_manifest(&manifest, &dir.join("manifest.csv"))?;
    Ok(Some(manifest))
}

fn xor_row(spec: &SynthSpec, i: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let label = spec.label(i);
    let a = usize::from(rng.gen_bool(0.5));
    let b = a ^ label;
    let mut row = vec![a as f64, b as f64];
    row.extend((2..spec.n).map(|_| spec.noise_sigma * gaussian(rng)));
    row
}

/// Columns 0 and 1 are parity bits whose XOR is the label; each is
/// independent of the label on its own. The rest are Gaussian noise.
pub fn generate_xor(spec: &SynthSpec) -> Result<FeatureMatrix, SynthError> {
    spec.validate()?;
    let rows: Vec<Vec<f64>> = (0..spec.instances()).map(|i| xor_row(spec, i, &mut spec.rng(i))).collect();
    let labels = (0..spec.instances()).map(|i| spec.label(i)).collect();
    let mut names = vec!["xor/parity_a".to_string(), "xor/parity_b".to_string()];
    names.extend((2..spec.n).map(|j| format!("xor/noise{}", j - 2)));
    FeatureMatrix::from_rows(&rows, tabular_descriptors(names), labels)
        .map_err(|e| SynthError::InvalidSpec(e.to_string()))
}

/// Inserts a copy of the label as a new column at a seed-chosen position.
/// Returns the matrix and the position.
pub fn with_label_copy(matrix: &FeatureMatrix, seed: u64) -> (FeatureMatrix, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let pos = rng.gen_range(0..=matrix.n_cols());
    let mut names: Vec<String> = matrix.names().into_iter().map(String::from).collect();
    names.insert(pos, "xor/label_copy".into());
    let rows: Vec<Vec<f64>> = (0..matrix.n_rows())
        .map(|i| {
            let mut r = matrix.row(i);
            r.insert(pos, matrix.labels()[i] as f64);
            r
        })
        .collect();
    let m = FeatureMatrix::from_rows(&rows, tabular_descriptors(names), matrix.labels().to_vec())
        .expect("inserting one named column keeps the matrix valid");
    (m, pos)
}

fn tabular_descriptors(names: Vec<String>) -> Vec<FeatureDescriptor> {
    names
        .into_iter()
        .map(|name| FeatureDescriptor {
            layer: 1,
            family: Family::Td,
            name,
            lineage: Vec::new(),
        })
        .collect()
}
