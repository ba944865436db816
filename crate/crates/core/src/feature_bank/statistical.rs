//! Population moments of a window.

pub const STATISTICAL_KINDS: [&str; 6] = ["mean", "variance", "std", "rms", "skewness", "kurtosis"];

/// `[mean, variance, std, rms, skewness, kurtosis]` with 1/N normalization.
/// Kurtosis is non-excess. A zero-variance window reports skewness and
/// kurtosis as 0.
pub fn statistical_features(window: &[f64]) -> [f64; 6] {
    if window.is_empty() {
        return [0.0; 6];
    }
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let (m2, m3, m4) = window.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &x| {
        let d = x - mean;
        let d2 = d * d;
        (a + d2, b + d2 * d, c + d2 * d2)
    });
    let variance = m2 / n;
    let std = variance.sqrt();
    let rms = (window.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    // relative floor: constant windows leave only rounding residue
    let degenerate = variance == 0.0 || variance <= (f64::EPSILON * mean).powi(2);
    let (skewness, kurtosis) = if degenerate {
        (0.0, 0.0)
    } else {
        ((m3 / n) / variance.powf(1.5), (m4 / n) / (variance * variance))
    };
    [mean, variance, std, rms, skewness, kurtosis]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_window() {
        assert_eq!(statistical_features(&[1.0; 4]), [1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let c = statistical_features(&[0.1; 7]);
        assert_eq!((c[4], c[5]), (0.0, 0.0));
    }

    #[test]
    fn alternating_window() {
        assert_eq!(statistical_features(&[1.0, -1.0, 1.0, -1.0]), [0.0, 1.0, 1.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn rms_of_single_spike() {
        assert_eq!(statistical_features(&[0.0, 0.0, 0.0, 4.0])[3], 2.0);
    }

    /// Moments recomputed from their textbook definitions.
    fn moments_oracle(x: &[f64]) -> (f64, f64, f64, f64) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let central = |p: i32| x.iter().map(|v| (v - mean).powi(p)).sum::<f64>() / n;
        let var = central(2);
        (mean, var, central(3) / var.powf(1.5), central(4) / var.powi(2))
    }

    proptest! {
        #[test]
        fn matches_moment_oracle(x in proptest::collection::vec(-100.0f64..100.0, 3..100)) {
            let f = statistical_features(&x);
            let (mean, var, skew, kurt) = moments_oracle(&x);
            prop_assume!(var > 1e-6);
            prop_assert!((f[0] - mean).abs() < 1e-9);
            prop_assert!((f[1] - var).abs() < 1e-8 * var.max(1.0));
            prop_assert!((f[4] - skew).abs() < 1e-8);
            prop_assert!((f[5] - kurt).abs() < 1e-8 * kurt.max(1.0));
        }

        #[test]
        fn amplitude_scaling(x in proptest::collection::vec(-10.0f64..10.0, 3..64), s in 0.001f64..1000.0) {
            let a = statistical_features(&x);
            prop_assume!(a[1] > 1e-6);
            let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
            let b = statistical_features(&scaled);
            prop_assert!((b[0] - s * a[0]).abs() <= 1e-9 * (s * a[0]).abs().max(s));
            prop_assert!((b[2] - s * a[2]).abs() <= 1e-9 * s * a[2]);
            prop_assert!((b[3] - s * a[3]).abs() <= 1e-9 * s * a[3]);
            prop_assert!((b[4] - a[4]).abs() <= 1e-8 * a[4].abs().max(1.0));
            prop_assert!((b[5] - a[5]).abs() <= 1e-8 * a[5].max(1.0));
        }
    }
}
