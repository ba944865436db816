//! Magnitude-spectrum descriptors.

use crate::transforms::Spectrum;

pub const SPECTRAL_KINDS: [&str; 10] = [
    "spectral_centroid",
    "spectral_crest",
    "spectral_decrease",
    "spectral_flatness",
    "spectral_flux",
    "spectral_kurtosis",
    "spectral_rolloff",
    "spectral_skewness",
    "spectral_slope",
    "spectral_spread",
];

pub const ROLLOFF_FRACTION: f64 = 0.85;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SpectralFeatures {
    pub centroid: f64,
    pub crest: f64,
    pub decrease: f64,
    pub flatness: f64,
    pub flux: f64,
    pub kurtosis: f64,
    pub rolloff: f64,
    pub skewness: f64,
    pub slope: f64,
    pub spread: f64,
}

impl SpectralFeatures {
    /// Values in [`SPECTRAL_KINDS`] order.
    pub fn to_array(&self) -> [f64; 10] {
        [
            self.centroid,
            self.crest,
            self.decrease,
            self.flatness,
            self.flux,
            self.kurtosis,
            self.rolloff,
            self.skewness,
            self.slope,
            self.spread,
        ]
    }
}

/// Computes the ten spectral descriptors of `spectrum`. `previous` is the
/// preceding window's spectrum for flux; `None` stands for a zero spectrum.
/// A zero-energy spectrum yields all zeros.
pub fn spectral_features(spectrum: &Spectrum, previous: Option<&Spectrum>) -> SpectralFeatures {
    let m = &spectrum.magnitudes;
    let k = m.len();
    let total: f64 = m.iter().sum();
    if k == 0 || total <= 0.0 {
        return SpectralFeatures::default();
    }
    let freq = |i: usize| i as f64 * spectrum.bin_hz;

    let centroid = m.iter().enumerate().map(|(i, &v)| freq(i) * v).sum::<f64>() / total;
    let moment = |p: i32| {
        m.iter()
            .enumerate()
            .map(|(i, &v)| (freq(i) - centroid).powi(p) * v)
            .sum::<f64>()
            / total
    };
    let mut spread = moment(2).max(0.0).sqrt();
    // one-hot spectra leave only rounding noise in the second moment
    if spread <= 1e-12 * spectrum.bin_hz * k as f64 {
        spread = 0.0;
    }
    let (skewness, kurtosis) = if spread > 0.0 {
        (moment(3) / spread.powi(3), moment(4) / spread.powi(4))
    } else {
        (0.0, 0.0)
    };

    let mean = total / k as f64;
    let max = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let crest = max / mean;
    let flatness = if m.iter().any(|&v| v <= 0.0) {
        0.0
    } else {
        let log_mean = m.iter().map(|v| v.ln()).sum::<f64>() / k as f64;
        log_mean.exp() / mean
    };

    let tail: f64 = m[1..].iter().sum();
    let decrease = if tail > 0.0 {
        m[1..]
            .iter()
            .enumerate()
            .map(|(i, &v)| (v - m[0]) / (i + 1) as f64)
            .sum::<f64>()
            / tail
    } else {
        0.0
    };

    let slope = if k >= 2 {
        let f_mean = freq(k - 1) / 2.0;
        let (num, den) = m.iter().enumerate().fold((0.0, 0.0), |(n, d), (i, &v)| {
            let df = freq(i) - f_mean;
            (n + df * (v - mean), d + df * df)
        });
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    } else {
        0.0
    };

    let energy: f64 = m.iter().map(|v| v * v).sum();
    let threshold = ROLLOFF_FRACTION * energy;
    let mut cumulative = 0.0;
    let mut rolloff = freq(k - 1);
    for (i, &v) in m.iter().enumerate() {
        cumulative += v * v;
        if cumulative >= threshold {
            rolloff = freq(i);
            break;
        }
    }

    let norm = energy.sqrt();
    let prev_norm = previous
        .map(|p| p.magnitudes.iter().map(|v| v * v).sum::<f64>().sqrt())
        .unwrap_or(0.0);
    let flux = m
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let prev = match previous {
                Some(p) if prev_norm > 0.0 => p.magnitudes.get(i).copied().unwrap_or(0.0) / prev_norm,
                _ => 0.0,
            };
            (v / norm - prev).powi(2)
        })
        .sum::<f64>()
        .sqrt();

    SpectralFeatures {
        centroid,
        crest,
        decrease,
        flatness,
        flux,
        kurtosis,
        rolloff,
        skewness,
        slope,
        spread,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spectrum(m: Vec<f64>, bin_hz: f64) -> Spectrum {
        Spectrum {
            magnitudes: m,
            bin_hz,
            window_index: 0,
        }
    }

    #[test]
    fn one_hot_closed_forms() {
        let bins = 128;
        let k = 9;
        let bin_hz = 2.5;
        let mut m = vec![0.0; bins];
        m[k] = 3.0;
        let f = spectral_features(&spectrum(m, bin_hz), None);
        assert_eq!(f.centroid, k as f64 * bin_hz);
        assert_eq!(f.spread, 0.0);
        assert_eq!(f.skewness, 0.0);
        assert_eq!(f.kurtosis, 0.0);
        assert_eq!(f.flatness, 0.0);
        assert!((f.crest - bins as f64).abs() < 1e-12);
        assert_eq!(f.rolloff, k as f64 * bin_hz);
        // decrease: only bin k contributes, (m_k - 0)/k over sum m_k
        assert!((f.decrease - 1.0 / k as f64).abs() < 1e-12);
        // slope: sum (f_i - f_mean) m_i' / sum (f_i - f_mean)^2 with m' = m - mean
        let f_mean = (bins - 1) as f64 * bin_hz / 2.0;
        let den: f64 = (0..bins).map(|i| (i as f64 * bin_hz - f_mean).powi(2)).sum();
        let expected_slope = (k as f64 * bin_hz - f_mean) * 3.0 / den;
        assert!((f.slope - expected_slope).abs() < 1e-12);
        // no previous window: flux is the norm of the unit vector
        assert!((f.flux - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_spectrum() {
        let f = spectral_features(&spectrum(vec![0.7; 64], 1.0), None);
        assert!((f.flatness - 1.0).abs() < 1e-12);
        assert!((f.crest - 1.0).abs() < 1e-12);
        assert!(f.slope.abs() < 1e-12);
        assert_eq!(f.decrease, 0.0);
    }

    #[test]
    fn zero_spectrum_all_zero() {
        let prev = spectrum(vec![1.0; 16], 1.0);
        let f = spectral_features(&spectrum(vec![0.0; 16], 1.0), Some(&prev));
        assert_eq!(f.to_array(), [0.0; 10]);
    }

    #[test]
    fn flux_between_identical_spectra_is_zero() {
        let s = spectrum((0..32).map(|i| (i as f64).sin().abs() + 0.1).collect(), 1.0);
        let f = spectral_features(&s, Some(&s));
        assert!(f.flux.abs() < 1e-12);
    }

    #[test]
    fn two_bin_moments() {
        // equal mass at bins 1 and 3: centroid 2, spread 1, skew 0, kurtosis 1
        let mut m = vec![0.0; 8];
        m[1] = 1.0;
        m[3] = 1.0;
        let f = spectral_features(&spectrum(m, 1.0), None);
        assert!((f.centroid - 2.0).abs() < 1e-12);
        assert!((f.spread - 1.0).abs() < 1e-12);
        assert!(f.skewness.abs() < 1e-12);
        assert!((f.kurtosis - 1.0).abs() < 1e-12);
        // cumulative energy reaches 50% at bin 1, 100% at bin 3
        assert_eq!(f.rolloff, 3.0);
    }

    proptest! {
        #[test]
        fn scale_invariant_shape_features(
            m in proptest::collection::vec(0.01f64..10.0, 4..64),
            s in 0.01f64..1000.0,
        ) {
            let a = spectral_features(&spectrum(m.clone(), 1.5), None);
            let b = spectral_features(&spectrum(m.iter().map(|v| v * s).collect(), 1.5), None);
            for (x, y) in [
                (a.centroid, b.centroid),
                (a.spread, b.spread),
                (a.rolloff, b.rolloff),
                (a.flatness, b.flatness),
                (a.crest, b.crest),
                (a.skewness, b.skewness),
                (a.kurtosis, b.kurtosis),
                (a.decrease, b.decrease),
                (a.flux, b.flux),
            ] {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
            prop_assert!((b.slope - s * a.slope).abs() <= 1e-9 * (s * a.slope).abs().max(1e-9));
        }
    }
}
