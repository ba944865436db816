//! Feature-count arithmetic: exact counts of the implemented extractors next
//! to the coarse per-layer estimates (3n, 120n, 480n).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::signal_io::WindowPlan;
use crate::transforms::{coefficient_total, DEFAULT_FFT_SIZE, DWT_LEVELS};

use super::layers::FL2_KINDS;
use super::FL3_RATIO_PAIRS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerCounts {
    pub l1_count: u64,
    pub l2_count: u64,
    pub l3_count: u64,
    pub total: u64,
}

impl LayerCounts {
    fn new(l1_count: u64, l2_count: u64, l3_count: u64) -> Self {
        Self {
            l1_count,
            l2_count,
            l3_count,
            total: l1_count + l2_count + l3_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBudget {
    pub n: u64,
    pub fs: f64,
    pub window_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub windows: u64,
    /// Layer-1 parts of the exact count.
    pub td_count: u64,
    pub fd_count: u64,
    pub dwt_count: u64,
    /// FD estimate `512 n / fs` used by the coarse layer-1 figure.
    pub fd_estimate: f64,
    pub exact: LayerCounts,
    /// 3n, 120n and 480n; `total` is their sum (603n).
    pub approximate: LayerCounts,
    /// 3n + 120n.
    pub approximate_after_layer2: u64,
    /// The rounded headline figure 600n.
    pub approximate_total: u64,
    /// 30n, a second and inconsistent figure for the same total.
    pub alternate_total: u64,
    pub note: String,
}

/// Counts for a signal of `n` samples at `fs` Hz with one-second windows,
/// 50% overlap and a 256-point FFT.
pub fn feature_budget(n: u64, fs: f64) -> FeatureBudget {
    let plan = WindowPlan::one_second(fs).unwrap_or(WindowPlan { window_len: 1, hop: 1 });
    feature_budget_with(n, fs, &plan, DEFAULT_FFT_SIZE)
}

pub fn feature_budget_with(n: u64, fs: f64, plan: &WindowPlan, fft_size: usize) -> FeatureBudget {
    let windows = plan.count(n as usize) as u64;
    let td_count = n;
    let fd_count = windows * (fft_size / 2) as u64;
    let dwt_count = coefficient_total(n as usize, DWT_LEVELS) as u64;
    let l2 = windows * FL2_KINDS.len() as u64;
    let l3 = if windows == 0 {
        0
    } else {
        (2 * FL2_KINDS.len() + FL3_RATIO_PAIRS.len()) as u64
    };
    let fd_estimate = if fs > 0.0 { 512.0 * n as f64 / fs } else { 0.0 };
    let note = format!(
        "approximate figures follow the per-layer derivation 3n + 120n = 123n after layer 2 and \
         123n + 480n ~ 600n after layer 3, i.e. {} for n = {n}; a second quoted total for the same \
         derivation is ~30n ({}), which is inconsistent with it. The exact counts come from the \
         implemented extractors.",
        600 * n,
        30 * n
    );
    FeatureBudget {
        n,
        fs,
        window_len: plan.window_len,
        hop: plan.hop,
        fft_size,
        windows,
        td_count,
        fd_count,
        dwt_count,
        fd_estimate,
        exact: LayerCounts::new(td_count + fd_count + dwt_count, l2, l3),
        approximate: LayerCounts::new(3 * n, 120 * n, 480 * n),
        approximate_after_layer2: 123 * n,
        approximate_total: 600 * n,
        alternate_total: 30 * n,
        note,
    }
}

/// `12000000` as `12,000,000`.
pub fn grouped(v: u64) -> String {
    let digits = v.to_string();
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    out
}

impl fmt::Display for FeatureBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        writeln!(f, "signal length n = {n}, fs = {} Hz", self.fs)?;
        writeln!(
            f,
            "windows: {} (length {}, hop {}), fft {}",
            self.windows, self.window_len, self.hop, self.fft_size
        )?;
        writeln!(f, "exact counts")?;
        writeln!(
            f,
            "  layer 1: {} (td {}, fd {}, dwt {})",
            self.exact.l1_count, self.td_count, self.fd_count, self.dwt_count
        )?;
        writeln!(f, "  layer 2: {}", self.exact.l2_count)?;
        writeln!(f, "  layer 3: {}", self.exact.l3_count)?;
        writeln!(f, "  total:   {}", self.exact.total)?;
        writeln!(f, "approximate counts")?;
        writeln!(f, "  layer 1: 3n = {} (fd estimate 512n/fs = {:.0})", self.approximate.l1_count, self.fd_estimate)?;
        writeln!(f, "  layer 2: 120n = {}", self.approximate.l2_count)?;
        writeln!(f, "  after layer 2: 123n = {}", self.approximate_after_layer2)?;
        writeln!(f, "  layer 3: 480n = {}", self.approximate.l3_count)?;
        writeln!(f, "  after layer 3: 600n = {}", self.approximate_total)?;
        writeln!(f, "approximate total: {}", grouped(self.approximate_total))?;
        write!(f, "note: {}", self.note)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_bank::{build_feature_matrix, ExtractionConfig, Layer};
    use crate::signal_io::Signal;
    use crate::transforms::{Taper, Wavelet};

    #[test]
    fn digit_grouping() {
        assert_eq!(grouped(0), "0");
        assert_eq!(grouped(999), "999");
        assert_eq!(grouped(1000), "1,000");
        assert_eq!(grouped(12_000_000), "12,000,000");
    }

    #[test]
    fn headline_total() {
        let b = feature_budget(20_000, 20_000.0);
        assert_eq!(b.approximate_total, 12_000_000);
        assert_eq!(b.approximate_after_layer2, 2_460_000);
        assert_eq!(b.alternate_total, 600_000);
        let text = b.to_string();
        assert!(text.contains("123n") && text.contains("600n") && text.contains("12000000"));
        assert!(text.contains("30n"));
    }

    #[test]
    fn exact_matches_enumeration() {
        let fs = 256.0;
        let n = 256usize;
        let b = feature_budget(n as u64, fs);
        let signal = Signal::new((0..n).map(|i| (i as f64 * 0.1).sin()).collect(), fs, 0, "s").unwrap();
        let config = ExtractionConfig {
            plan: WindowPlan::one_second(fs).unwrap(),
            fft_size: DEFAULT_FFT_SIZE,
            wavelet: Wavelet::Db4,
            taper: Taper::Hann,
        };
        let counts: Vec<u64> = [Layer::L1, Layer::L2, Layer::L3]
            .iter()
            .map(|&l| build_feature_matrix(std::slice::from_ref(&signal), &config, &[l]).unwrap().n_cols() as u64)
            .collect();
        assert_eq!(counts, vec![b.exact.l1_count, b.exact.l2_count, b.exact.l3_count]);
        assert_eq!(b.exact.total, counts.iter().sum::<u64>());
    }

    #[test]
    fn zero_length() {
        let b = feature_budget(0, 100.0);
        assert_eq!(b.exact, LayerCounts::new(0, 0, 0));
        assert_eq!(b.approximate.total, 0);
        assert_eq!(b.approximate_total, 0);
    }
}
