use serde::{Deserialize, Serialize};

use crate::feature_bank::FeatureMatrix;

pub const DEFAULT_BINS: usize = 10;

/// Column-major bin indices of a feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizedMatrix {
    /// `bins[j][i]` is the bin of instance `i` in feature `j`.
    pub bins: Vec<Vec<u16>>,
    /// Requested bins per feature.
    pub bin_count: usize,
    /// Interior edges per feature, strictly increasing; value `v` falls in
    /// bin `#{c : c <= v}`.
    pub cut_points: Vec<Vec<f64>>,
}

impl DiscretizedMatrix {
    pub fn n_rows(&self) -> usize {
        self.bins.first().map_or(0, Vec::len)
    }

    pub fn n_cols(&self) -> usize {
        self.bins.len()
    }

    pub fn column(&self, j: usize) -> &[u16] {
        &self.bins[j]
    }

    /// Number of distinct levels feature `j` can take.
    pub fn levels(&self, j: usize) -> usize {
        self.cut_points[j].len() + 1
    }

    pub fn select_columns(&self, cols: &[usize]) -> DiscretizedMatrix {
        DiscretizedMatrix {
            bins: cols.iter().map(|&c| self.bins[c].clone()).collect(),
            bin_count: self.bin_count,
            cut_points: cols.iter().map(|&c| self.cut_points[c].clone()).collect(),
        }
    }
}

/// Equal-frequency cut points for one column.
pub fn cut_points(values: &[f64], bins: usize) -> Vec<f64> {
    let n = values.len();
    if n == 0 || bins < 2 {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let min = sorted[0];
    let mut cuts: Vec<f64> = Vec::with_capacity(bins - 1);
    for b in 1..bins {
        let idx = (b * n).div_ceil(bins).min(n - 1);
        let c = sorted[idx];
        if c > min && cuts.last().is_none_or(|&last| c > last) {
            cuts.push(c);
        }
    }
    cuts
}

pub fn bin_of(cuts: &[f64], v: f64) -> u16 {
    cuts.partition_point(|&c| c <= v) as u16
}

pub fn discretize_column(values: &[f64], bins: usize) -> (Vec<u16>, Vec<f64>) {
    let cuts = cut_points(values, bins);
    (values.iter().map(|&v| bin_of(&cuts, v)).collect(), cuts)
}

/// Equal-frequency binning of every column. Constant columns map to bin 0.
///
/// # Panics
/// If `bins < 2` or `bins > 65536`.
pub fn discretize(matrix: &FeatureMatrix, bins: usize) -> DiscretizedMatrix {
    discretize_columns((0..matrix.n_cols()).map(|j| matrix.column(j)), bins)
}

pub fn discretize_columns<'a>(columns: impl Iterator<Item = &'a [f64]>, bins: usize) -> DiscretizedMatrix {
    assert!((2..=1 << 16).contains(&bins), "bin count must be in 2..=65536");
    let (bins_out, cuts) = columns.map(|c| discretize_column(c, bins)).unzip();
    DiscretizedMatrix {
        bins: bins_out,
        bin_count: bins,
        cut_points: cuts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn one_to_ten_into_five() {
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let (b, _) = discretize_column(&x, 5);
        assert_eq!(b, vec![0, 0, 1, 1, 2, 2, 3, 3, 4, 4]);
    }

    #[test]
    fn constant_column() {
        let (b, cuts) = discretize_column(&[2.0; 9], 4);
        assert!(b.iter().all(|&v| v == 0));
        assert!(cuts.is_empty());
    }

    #[test]
    fn occupancy_is_balanced() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let x: Vec<f64> = (0..200).map(|_| rng.gen::<f64>()).collect();
            let (b, _) = discretize_column(&x, 10);
            let mut counts = [0usize; 10];
            for v in b {
                counts[v as usize] += 1;
            }
            // quantile oracle: bin b holds ranks [ceil(b N / B), ceil((b+1) N / B))
            for c in counts {
                assert!(c.abs_diff(20) <= 1, "{counts:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn bins_in_range_and_monotone(
            x in proptest::collection::vec(-100.0f64..100.0, 1..80),
            bins in 2usize..16,
        ) {
            let (b, cuts) = discretize_column(&x, bins);
            prop_assert!(cuts.windows(2).all(|w| w[0] < w[1]));
            for (i, &v) in x.iter().enumerate() {
                prop_assert!((b[i] as usize) < bins);
                for (j, &w) in x.iter().enumerate() {
                    if v < w {
                        prop_assert!(b[i] <= b[j]);
                    }
                }
            }
        }
    }
}
