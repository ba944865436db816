use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::peaks::{peaktrough_features, PEAKTROUGH_KINDS};
use super::spectral::{spectral_features, SPECTRAL_KINDS};
use super::statistical::{statistical_features, STATISTICAL_KINDS};
use super::{Family, FeatureDescriptor, FeatureError, FeatureMatrix, LineageStep};
use crate::signal_io::{mean_subtracted, windows, Signal, WindowPlan};
use crate::transforms::dwt::level_lengths;
use crate::transforms::{dwt4, Stft, Taper, Wavelet, DWT_LEVELS};

/// Per-window layer-2 kinds, in column order within a window.
pub const FL2_KINDS: [&str; 20] = [
    SPECTRAL_KINDS[0],
    SPECTRAL_KINDS[1],
    SPECTRAL_KINDS[2],
    SPECTRAL_KINDS[3],
    SPECTRAL_KINDS[4],
    SPECTRAL_KINDS[5],
    SPECTRAL_KINDS[6],
    SPECTRAL_KINDS[7],
    SPECTRAL_KINDS[8],
    SPECTRAL_KINDS[9],
    STATISTICAL_KINDS[0],
    STATISTICAL_KINDS[1],
    STATISTICAL_KINDS[2],
    STATISTICAL_KINDS[3],
    STATISTICAL_KINDS[4],
    STATISTICAL_KINDS[5],
    PEAKTROUGH_KINDS[0],
    PEAKTROUGH_KINDS[1],
    PEAKTROUGH_KINDS[2],
    PEAKTROUGH_KINDS[3],
];

const FL2_PER_WINDOW: usize = FL2_KINDS.len();

/// Denominators smaller than this make the ratio term 0.
const RATIO_GUARD: f64 = 1e-12;

fn kind_index(kind: &str) -> usize {
    FL2_KINDS.iter().position(|&k| k == kind).expect("known layer-2 kind")
}

fn kind_family(kind: &str) -> Family {
    let i = kind_index(kind);
    if i < 10 {
        Family::Spectral
    } else if i < 16 {
        Family::Statistical
    } else {
        Family::PeakTrough
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Layer {
    L1,
    L2,
    L3,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::L1, Layer::L2, Layer::L3];

    pub fn number(self) -> u8 {
        match self {
            Layer::L1 => 1,
            Layer::L2 => 2,
            Layer::L3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Option<Layer> {
        match n {
            1 => Some(Layer::L1),
            2 => Some(Layer::L2),
            3 => Some(Layer::L3),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtractionConfig {
    pub plan: WindowPlan,
    pub fft_size: usize,
    pub wavelet: Wavelet,
    pub taper: Taper,
}

/// Feature values of one signal for one layer, with their descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct RowFragment {
    pub values: Vec<f64>,
    pub descriptors: Vec<FeatureDescriptor>,
}

fn sanitize(values: &mut [f64]) {
    for v in values {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
}

pub fn fl1_descriptors(n: usize, fs: f64, plan: &WindowPlan, fft_size: usize, wavelet: Wavelet) -> Vec<FeatureDescriptor> {
    let mut out = Vec::new();
    for i in 0..n {
        out.push(FeatureDescriptor {
            layer: 1,
            family: Family::Td,
            name: format!("L1/td/x[{i}]"),
            lineage: vec![LineageStep::MeanSubtract, LineageStep::Sample { index: i }],
        });
    }
    let bin_hz = fs / fft_size as f64;
    for (w, start) in plan.starts(n).into_iter().enumerate() {
        for bin in 0..fft_size / 2 {
            out.push(FeatureDescriptor {
                layer: 1,
                family: Family::Fd,
                name: format!("L1/fd/win={w}/bin={bin}"),
                lineage: vec![
                    LineageStep::MeanSubtract,
                    LineageStep::Window {
                        index: w,
                        start,
                        len: plan.window_len,
                    },
                    LineageStep::Stft {
                        fft_size,
                        bin,
                        hz: bin as f64 * bin_hz,
                    },
                ],
            });
        }
    }
    if n > 0 {
        let lens = level_lengths(n, DWT_LEVELS);
        let mut bands = vec![(format!("a{DWT_LEVELS}"), lens[DWT_LEVELS])];
        for level in (1..=DWT_LEVELS).rev() {
            bands.push((format!("d{level}"), lens[level]));
        }
        for (band, len) in bands {
            for index in 0..len {
                out.push(FeatureDescriptor {
                    layer: 1,
                    family: Family::Dwt,
                    name: format!("L1/dwt/{wavelet}/{band}[{index}]"),
                    lineage: vec![
                        LineageStep::MeanSubtract,
                        LineageStep::Dwt {
                            wavelet: wavelet.to_string(),
                            band: band.clone(),
                            index,
                        },
                    ],
                });
            }
        }
    }
    out
}

pub fn fl2_descriptors(n: usize, plan: &WindowPlan, fft_size: usize) -> Vec<FeatureDescriptor> {
    let mut out = Vec::new();
    for (w, start) in plan.starts(n).into_iter().enumerate() {
        for kind in FL2_KINDS {
            let family = kind_family(kind);
            let mut lineage = vec![
                LineageStep::MeanSubtract,
                LineageStep::Window {
                    index: w,
                    start,
                    len: plan.window_len,
                },
            ];
            if family == Family::Spectral {
                lineage.push(LineageStep::Spectrum { fft_size });
            }
            lineage.push(LineageStep::Statistic { kind: kind.into() });
            out.push(FeatureDescriptor {
                layer: 2,
                family,
                name: format!("L2/{kind}/win={w}"),
                lineage,
            });
        }
    }
    out
}

pub fn fl3_descriptors() -> Vec<FeatureDescriptor> {
    let mut out = Vec::new();
    for kind in FL2_KINDS {
        for aggregate in ["mean", "std"] {
            out.push(FeatureDescriptor {
                layer: 3,
                family: Family::Derivative,
                name: format!("L3/diff_{aggregate}/{kind}"),
                lineage: vec![
                    LineageStep::MeanSubtract,
                    LineageStep::Statistic { kind: kind.into() },
                    LineageStep::FirstDifference,
                    LineageStep::AcrossWindows {
                        aggregate: aggregate.into(),
                    },
                ],
            });
        }
    }
    for (a, b) in FL3_RATIO_PAIRS {
        out.push(FeatureDescriptor {
            layer: 3,
            family: Family::Ratio,
            name: format!("L3/ratio/{a}:{b}"),
            lineage: vec![
                LineageStep::MeanSubtract,
                LineageStep::Ratio {
                    numerator: a.into(),
                    denominator: b.into(),
                },
                LineageStep::AcrossWindows {
                    aggregate: "mean".into(),
                },
            ],
        });
    }
    out
}

/// Layer-3 ratio operands, as (numerator, denominator) layer-2 kinds.
pub const FL3_RATIO_PAIRS: [(&str, &str); 10] = [
    ("spectral_centroid", "spectral_spread"),
    ("spectral_crest", "spectral_flatness"),
    ("rms", "std"),
    ("peak_amplitude", "trough_amplitude"),
    ("peak_distance", "trough_distance"),
    ("spectral_rolloff", "spectral_centroid"),
    ("spectral_flux", "spectral_spread"),
    ("skewness", "kurtosis"),
    ("variance", "rms"),
    ("spectral_slope", "spectral_decrease"),
];

fn fl1_values(centered: &[f64], fs: f64, config: &ExtractionConfig, stft: &Stft) -> Result<Vec<f64>, FeatureError> {
    let mut values = centered.to_vec();
    for spec in stft.run(centered, fs, &config.plan)? {
        values.extend_from_slice(&spec.magnitudes);
    }
    values.extend(dwt4(centered, config.wavelet)?.coefficients());
    sanitize(&mut values);
    Ok(values)
}

fn fl2_values(centered: &[f64], fs: f64, config: &ExtractionConfig, stft: &Stft) -> Result<Vec<f64>, FeatureError> {
    let wins = windows(centered, &config.plan)?;
    let spectra: Vec<_> = wins.iter().enumerate().map(|(i, w)| stft.spectrum(w, fs, i)).collect();
    let mut values = Vec::with_capacity(wins.len() * FL2_PER_WINDOW);
    for (i, w) in wins.iter().enumerate() {
        let prev = if i == 0 { None } else { Some(&spectra[i - 1]) };
        values.extend_from_slice(&spectral_features(&spectra[i], prev).to_array());
        values.extend_from_slice(&statistical_features(w));
        values.extend_from_slice(&peaktrough_features(w));
    }
    sanitize(&mut values);
    Ok(values)
}

fn fl3_values(fl2: &[f64]) -> Vec<f64> {
    let windows = fl2.len() / FL2_PER_WINDOW;
    let sequence = |kind: usize| -> Vec<f64> { (0..windows).map(|w| fl2[w * FL2_PER_WINDOW + kind]).collect() };
    let mut values = Vec::with_capacity(2 * FL2_PER_WINDOW + FL3_RATIO_PAIRS.len());
    for kind in 0..FL2_PER_WINDOW {
        let seq = sequence(kind);
        let diffs: Vec<f64> = seq.windows(2).map(|p| p[1] - p[0]).collect();
        if diffs.is_empty() {
            values.extend([0.0, 0.0]);
            continue;
        }
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        values.extend([mean, var.sqrt()]);
    }
    for (a, b) in FL3_RATIO_PAIRS {
        let (num, den) = (sequence(kind_index(a)), sequence(kind_index(b)));
        let terms: f64 = num
            .iter()
            .zip(&den)
            .map(|(&x, &y)| if y.abs() < RATIO_GUARD { 0.0 } else { x / y })
            .sum();
        values.push(if windows == 0 { 0.0 } else { terms / windows as f64 });
    }
    sanitize(&mut values);
    values
}

/// Layer-1 features: TD samples, STFT magnitudes and DWT coefficients of the
/// mean-subtracted signal.
pub fn extract_fl1(signal: &Signal, plan: &WindowPlan, fft_size: usize, wavelet: Wavelet) -> Result<RowFragment, FeatureError> {
    let config = ExtractionConfig {
        plan: *plan,
        fft_size,
        wavelet,
        taper: Taper::Hann,
    };
    let stft = Stft::new(fft_size, config.taper)?;
    let centered = mean_subtracted(signal.samples());
    Ok(RowFragment {
        values: fl1_values(&centered, signal.fs(), &config, &stft)?,
        descriptors: fl1_descriptors(signal.len(), signal.fs(), plan, fft_size, wavelet),
    })
}

/// Layer-2 features: 20 descriptors per window of the mean-subtracted signal.
pub fn extract_fl2(signal: &Signal, plan: &WindowPlan, fft_size: usize) -> Result<RowFragment, FeatureError> {
    let config = ExtractionConfig {
        plan: *plan,
        fft_size,
        wavelet: Wavelet::Haar,
        taper: Taper::Hann,
    };
    let stft = Stft::new(fft_size, config.taper)?;
    let centered = mean_subtracted(signal.samples());
    Ok(RowFragment {
        values: fl2_values(&centered, signal.fs(), &config, &stft)?,
        descriptors: fl2_descriptors(signal.len(), plan, fft_size),
    })
}

/// Layer-3 features derived from a layer-2 fragment.
pub fn extract_fl3(fl2: &RowFragment) -> Result<RowFragment, FeatureError> {
    if fl2.values.len() % FL2_PER_WINDOW != 0 || fl2.values.len() != fl2.descriptors.len() {
        return Err(FeatureError::Shape(format!(
            "layer-2 fragment of {} values is not a whole number of windows",
            fl2.values.len()
        )));
    }
    Ok(RowFragment {
        values: fl3_values(&fl2.values),
        descriptors: fl3_descriptors(),
    })
}

/// Extracts selected layers for many signals of one shared length.
pub struct FeatureExtractor {
    config: ExtractionConfig,
    stft: Stft,
    n: usize,
    fs: f64,
}

impl FeatureExtractor {
    pub fn new(config: ExtractionConfig, n: usize, fs: f64) -> Result<Self, FeatureError> {
        let stft = Stft::new(config.fft_size, config.taper)?;
        Ok(Self { config, stft, n, fs })
    }

    pub fn config(&self) -> &ExtractionConfig {
        &self.config
    }

    pub fn descriptors(&self, layer: Layer) -> Vec<FeatureDescriptor> {
        match layer {
            Layer::L1 => fl1_descriptors(self.n, self.fs, &self.config.plan, self.config.fft_size, self.config.wavelet),
            Layer::L2 => fl2_descriptors(self.n, &self.config.plan, self.config.fft_size),
            Layer::L3 => fl3_descriptors(),
        }
    }

    /// Values for `layers` in the given order, concatenated.
    pub fn extract(&self, samples: &[f64], layers: &[Layer]) -> Result<Vec<f64>, FeatureError> {
        if samples.len() != self.n {
            return Err(FeatureError::RaggedDataset(samples.len(), self.n));
        }
        let centered = mean_subtracted(samples);
        let mut fl2_cache: Option<Vec<f64>> = None;
        let mut out = Vec::new();
        for &layer in layers {
            match layer {
                Layer::L1 => out.extend(fl1_values(&centered, self.fs, &self.config, &self.stft)?),
                Layer::L2 | Layer::L3 => {
                    if fl2_cache.is_none() {
                        fl2_cache = Some(fl2_values(&centered, self.fs, &self.config, &self.stft)?);
                    }
                    let fl2 = fl2_cache.as_ref().expect("filled above");
                    if layer == Layer::L2 {
                        out.extend_from_slice(fl2);
                    } else {
                        out.extend(fl3_values(fl2));
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Feature matrix over `signals` (all of one length) for `layers`, rows in
/// input order.
pub fn build_feature_matrix(signals: &[Signal], config: &ExtractionConfig, layers: &[Layer]) -> Result<FeatureMatrix, FeatureError> {
    let first = signals.first().ok_or(FeatureError::EmptyDataset)?;
    let n = first.len();
    if let Some(s) = signals.iter().find(|s| s.len() != n) {
        return Err(FeatureError::RaggedDataset(s.len(), n));
    }
    let extractor = FeatureExtractor::new(*config, n, first.fs())?;
    let rows: Vec<Vec<f64>> = signals
        .par_iter()
        .map(|s| extractor.extract(s.samples(), layers))
        .collect::<Result<_, _>>()?;
    let descriptors: Vec<FeatureDescriptor> = layers.iter().flat_map(|&l| extractor.descriptors(l)).collect();
    let labels = signals.iter().map(Signal::label).collect();
    FeatureMatrix::from_rows(&rows, descriptors, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::coefficient_total;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sig(x: Vec<f64>, fs: f64) -> Signal {
        Signal::new(x, fs, 0, "t").unwrap()
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn fl1_counts() {
        let s = sig(random(512, 1), 256.0);
        let plan = WindowPlan::new(256, 128).unwrap();
        let f = extract_fl1(&s, &plan, 256, Wavelet::Haar).unwrap();
        // enumeration: 512 TD + windows at 0,128,256 x 128 bins + DWT bands
        let windows = (0..).take_while(|w| w * 128 + 256 <= 512).count();
        assert_eq!(windows, 3);
        let dwt = dwt4(s.samples(), Wavelet::Haar).unwrap().coefficient_count();
        assert_eq!(dwt, coefficient_total(512, 4));
        assert_eq!(f.values.len(), 512 + 3 * 128 + dwt);
        assert_eq!(f.descriptors.len(), f.values.len());
    }

    #[test]
    fn fl1_zero_and_constant() {
        let plan = WindowPlan::new(64, 32).unwrap();
        let zero = extract_fl1(&sig(vec![0.0; 128], 64.0), &plan, 64, Wavelet::Db4).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let constant = extract_fl1(&sig(vec![3.5; 128], 64.0), &plan, 64, Wavelet::Db4).unwrap();
        assert!(constant.values[..128].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fl2_counts() {
        let plan = WindowPlan::new(64, 32).unwrap();
        let s = sig(random(256, 2), 64.0);
        let f = extract_fl2(&s, &plan, 64).unwrap();
        assert_eq!(f.values.len(), 20 * plan.count(256));
        let one = extract_fl2(&sig(random(64, 3), 64.0), &plan, 64).unwrap();
        assert_eq!(one.values.len(), 20);
        let zero = extract_fl2(&sig(vec![0.0; 256], 64.0), &plan, 64).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
    }

    fn fragment_with_sequence(kind: &str, seq: &[f64]) -> RowFragment {
        let windows = seq.len();
        let mut values = vec![1.0; windows * 20];
        let k = kind_index(kind);
        for (w, v) in seq.iter().enumerate() {
            values[w * 20 + k] = *v;
        }
        let plan = WindowPlan::new(4, 4).unwrap();
        RowFragment {
            values,
            descriptors: fl2_descriptors(4 * windows, &plan, 4),
        }
    }

    #[test]
    fn fl3_first_difference() {
        let f = extract_fl3(&fragment_with_sequence("spectral_centroid", &[100.0, 200.0, 300.0])).unwrap();
        let i = f.descriptors.iter().position(|d| d.name == "L3/diff_mean/spectral_centroid").unwrap();
        assert!((f.values[i] - 100.0).abs() < 1e-12);
        assert_eq!(f.values[i + 1], 0.0);
        assert_eq!(f.values.len(), 50);
        // constant sequences elsewhere
        let j = f.descriptors.iter().position(|d| d.name == "L3/diff_std/rms").unwrap();
        assert_eq!(f.values[j], 0.0);
    }

    #[test]
    fn fl3_single_window_and_ratios() {
        let f = extract_fl3(&fragment_with_sequence("spectral_centroid", &[42.0])).unwrap();
        assert!(f.values[..40].iter().all(|&v| v == 0.0));
        let i = f
            .descriptors
            .iter()
            .position(|d| d.name == "L3/ratio/spectral_centroid:spectral_spread")
            .unwrap();
        assert_eq!(f.values[i], 42.0);
        // guarded division
        let mut frag = fragment_with_sequence("spectral_spread", &[0.0, 2.0]);
        frag.values[kind_index("spectral_centroid")] = 5.0;
        frag.values[20 + kind_index("spectral_centroid")] = 4.0;
        let f = extract_fl3(&frag).unwrap();
        assert_eq!(f.values[i], (0.0 + 2.0) / 2.0);
    }

    #[test]
    fn descriptor_names_unique_and_deterministic() {
        let plan = WindowPlan::new(64, 32).unwrap();
        let config = ExtractionConfig {
            plan,
            fft_size: 64,
            wavelet: Wavelet::Sym4,
            taper: Taper::Hann,
        };
        let signals: Vec<Signal> = (0..4)
            .map(|i| Signal::new(random(200, i), 64.0, (i % 2) as usize, format!("s{i}")).unwrap())
            .collect();
        let a = build_feature_matrix(&signals, &config, &Layer::ALL).unwrap();
        let b = build_feature_matrix(&signals, &config, &Layer::ALL).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.labels(), &[0, 1, 0, 1]);
        let w = plan.count(200);
        assert_eq!(a.n_cols(), 200 + w * 32 + coefficient_total(200, 4) + 20 * w + 50);
        for d in a.descriptors() {
            assert!(!d.lineage.is_empty());
        }
    }

    #[test]
    fn adversarial_inputs_stay_finite() {
        let plan = WindowPlan::new(32, 16).unwrap();
        let config = ExtractionConfig {
            plan,
            fft_size: 32,
            wavelet: Wavelet::Db2,
            taper: Taper::Hann,
        };
        let mut impulse = vec![0.0; 128];
        impulse[50] = 1e6;
        let inputs = [vec![0.0; 128], vec![7.0; 128], impulse, random(128, 4)];
        let signals: Vec<Signal> = inputs
            .into_iter()
            .enumerate()
            .map(|(i, x)| Signal::new(x, 32.0, i % 2, format!("a{i}")).unwrap())
            .collect();
        let m = build_feature_matrix(&signals, &config, &Layer::ALL).unwrap();
        assert!(m.values().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn ragged_dataset_rejected() {
        let plan = WindowPlan::new(32, 16).unwrap();
        let config = ExtractionConfig {
            plan,
            fft_size: 32,
            wavelet: Wavelet::Haar,
            taper: Taper::Hann,
        };
        let signals = vec![sig(random(64, 1), 32.0), sig(random(65, 2), 32.0)];
        assert!(matches!(
            build_feature_matrix(&signals, &config, &[Layer::L1]),
            Err(FeatureError::RaggedDataset(65, 64))
        ));
    }
}
