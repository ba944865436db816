//! Peak and trough descriptors.
//!
//! A peak is a strict local maximum whose topographic prominence is at least
//! [`PROMINENCE_FRACTION`] of the window's range. Troughs are peaks of the
//! negated window.

pub const PEAKTROUGH_KINDS: [&str; 4] = [
    "peak_amplitude",
    "trough_amplitude",
    "peak_distance",
    "trough_distance",
];

pub const PROMINENCE_FRACTION: f64 = 0.1;

/// Indices of qualifying peaks, ascending.
pub fn find_peaks(x: &[f64]) -> Vec<usize> {
    if x.len() < 3 {
        return Vec::new();
    }
    let (min, max) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let range = max - min;
    if range <= 0.0 {
        return Vec::new();
    }
    let threshold = PROMINENCE_FRACTION * range;
    (1..x.len() - 1)
        .filter(|&i| x[i] > x[i - 1] && x[i] > x[i + 1])
        .filter(|&i| prominence(x, i) >= threshold)
        .collect()
}

/// Height of `x[i]` above the higher of the two lowest points reached before
/// meeting a strictly higher sample (or the window edge) on each side.
pub fn prominence(x: &[f64], i: usize) -> f64 {
    let peak = x[i];
    let mut left_min = peak;
    for &v in x[..i].iter().rev() {
        if v > peak {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = peak;
    for &v in &x[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// `[avg peak amplitude, avg trough amplitude, avg peak-to-peak distance,
/// avg trough-to-trough distance]`; distances in samples. No peaks gives an
/// amplitude of 0; fewer than two gives a distance of 0.
pub fn peaktrough_features(window: &[f64]) -> [f64; 4] {
    let peaks = find_peaks(window);
    let negated: Vec<f64> = window.iter().map(|v| -v).collect();
    let troughs = find_peaks(&negated);
    let amplitude = |idx: &[usize]| {
        if idx.is_empty() {
            0.0
        } else {
            idx.iter().map(|&i| window[i]).sum::<f64>() / idx.len() as f64
        }
    };
    let spacing = |idx: &[usize]| {
        if idx.len() < 2 {
            0.0
        } else {
            (idx[idx.len() - 1] - idx[0]) as f64 / (idx.len() - 1) as f64
        }
    };
    [amplitude(&peaks), amplitude(&troughs), spacing(&peaks), spacing(&troughs)]
}
