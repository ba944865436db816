//! The three-layer feature hierarchy.
//!
//! * Layer 1: raw coefficients. Mean-subtracted samples (TD), STFT magnitudes
//!   window-major (FD) and DWT coefficients level-major (DWT).
//! * Layer 2: per-window descriptors. Ten spectral, six statistical and four
//!   peak/trough values per window, window-major.
//! * Layer 3: first-difference statistics and fixed ratios of the layer-2
//!   per-window sequences.
//!
//! Every column carries a [`FeatureDescriptor`] whose lineage spells out how
//! the value was computed.

pub mod budget;
mod layers;
pub mod peaks;
pub mod spectral;
pub mod statistical;

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use budget::{feature_budget, feature_budget_with, grouped, FeatureBudget, LayerCounts};
pub use layers::{
    build_feature_matrix, extract_fl1, extract_fl2, extract_fl3, fl1_descriptors, fl2_descriptors,
    fl3_descriptors, ExtractionConfig, FeatureExtractor, Layer, RowFragment, FL2_KINDS, FL3_RATIO_PAIRS,
};
pub use peaks::peaktrough_features;
pub use spectral::{spectral_features, SpectralFeatures};
pub use statistical::statistical_features;

use crate::signal_io::SignalError;
use crate::transforms::TransformError;

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error(transparent)]
    Transform(#[from] TransformError),

    #[error(transparent)]
    Signal(#[from] SignalError),

    #[error("matrix shape mismatch: {0}")]
    Shape(String),

    #[error("duplicate feature name {0:?}")]
    DuplicateName(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("signals have different lengths ({0} vs {1}); columns would not align")]
    RaggedDataset(usize, usize),

    #[error("no signals to extract from")]
    EmptyDataset,

    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Td,
    Fd,
    Dwt,
    Spectral,
    Statistical,
    PeakTrough,
    Ratio,
    Derivative,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Td => "td",
            Family::Fd => "fd",
            Family::Dwt => "dwt",
            Family::Spectral => "spectral",
            Family::Statistical => "statistical",
            Family::PeakTrough => "peaktrough",
            Family::Ratio => "ratio",
            Family::Derivative => "derivative",
        }
    }
}

/// One construction step in a feature's lineage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum LineageStep {
    MeanSubtract,
    Sample {
        index: usize,
    },
    Window {
        index: usize,
        start: usize,
        len: usize,
    },
    Stft {
        fft_size: usize,
        bin: usize,
        hz: f64,
    },
    Spectrum {
        fft_size: usize,
    },
    Dwt {
        wavelet: String,
        band: String,
        index: usize,
    },
    Statistic {
        kind: String,
    },
    FirstDifference,
    AcrossWindows {
        aggregate: String,
    },
    Ratio {
        numerator: String,
        denominator: String,
    },
}

impl fmt::Display for LineageStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LineageStep::MeanSubtract => write!(f, "transform=mean-subtract"),
            LineageStep::Sample { index } => write!(f, "sample={index}"),
            LineageStep::Window { index, start, len } => {
                write!(f, "window={index} (samples {start}..{})", start + len)
            }
            LineageStep::Stft { fft_size, bin, hz } => {
                write!(f, "transform=stft(fft={fft_size}) bin={bin} ({hz} Hz)")
            }
            LineageStep::Spectrum { fft_size } => write!(f, "transform=stft(fft={fft_size}) magnitude spectrum"),
            LineageStep::Dwt { wavelet, band, index } => {
                write!(f, "transform=dwt({wavelet}, 4 levels) band={band} coefficient={index}")
            }
            LineageStep::Statistic { kind } => write!(f, "statistic={kind}"),
            LineageStep::FirstDifference => write!(f, "first-difference across windows"),
            LineageStep::AcrossWindows { aggregate } => write!(f, "aggregate={aggregate} over windows"),
            LineageStep::Ratio { numerator, denominator } => {
                write!(f, "ratio={numerator}/{denominator} per window")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub layer: u8,
    pub family: Family,
    pub name: String,
    pub lineage: Vec<LineageStep>,
}

impl FeatureDescriptor {
    /// Human-readable provenance, e.g.
    /// `layer=2 family=spectral | transform=mean-subtract | window=7 (...) | ...`.
    pub fn explain(&self) -> String {
        let mut s = format!("layer={} family={}", self.layer, self.family.as_str());
        for step in &self.lineage {
            s.push_str(" | ");
            s.push_str(&step.to_string());
        }
        s
    }
}

/// Instances x features, with one descriptor per column and one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: DMatrix<f64>,
    descriptors: Vec<FeatureDescriptor>,
    labels: Vec<usize>,
}

impl FeatureMatrix {
    pub fn new(values: DMatrix<f64>, descriptors: Vec<FeatureDescriptor>, labels: Vec<usize>) -> Result<Self, FeatureError> {
        if values.ncols() != descriptors.len() {
            return Err(FeatureError::Shape(format!(
                "{} columns but {} descriptors",
                values.ncols(),
                descriptors.len()
            )));
        }
        if values.nrows() != labels.len() {
            return Err(FeatureError::Shape(format!(
                "{} rows but {} labels",
                values.nrows(),
                labels.len()
            )));
        }
        let mut names = HashSet::with_capacity(descriptors.len());
        for d in &descriptors {
            if !names.insert(d.name.as_str()) {
                return Err(FeatureError::DuplicateName(d.name.clone()));
            }
        }
        for col in 0..values.ncols() {
            if let Some(row) = values.column(col).iter().position(|v| !v.is_finite()) {
                return Err(FeatureError::NonFinite { row, col });
            }
        }
        Ok(Self {
            values,
            descriptors,
            labels,
        })
    }

    /// Builds a matrix from row-major data.
    pub fn from_rows(rows: &[Vec<f64>], descriptors: Vec<FeatureDescriptor>, labels: Vec<usize>) -> Result<Self, FeatureError> {
        let ncols = descriptors.len();
        if let Some(r) = rows.iter().position(|r| r.len() != ncols) {
            return Err(FeatureError::Shape(format!(
                "row {r} has {} values, expected {ncols}",
                rows[r].len()
            )));
        }
        let values = DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]);
        Self::new(values, descriptors, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let nrows = self.values.nrows();
        &self.values.as_slice()[j * nrows..(j + 1) * nrows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn names(&self) -> Vec<&str> {
        self.descriptors.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.descriptors.iter().position(|d| d.name == name)
    }

    pub fn select_columns(&self, cols: &[usize]) -> FeatureMatrix {
        let values = self.values.select_columns(cols.iter());
        let descriptors = cols.iter().map(|&c| self.descriptors[c].clone()).collect();
        FeatureMatrix {
            values,
            descriptors,
            labels: self.labels.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            values: self.values.select_rows(rows.iter()),
            descriptors: self.descriptors.clone(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Appends the columns of `other` (same rows, same labels).
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<FeatureMatrix, FeatureError> {
        if self.labels != other.labels {
            return Err(FeatureError::Shape("row labels differ".into()));
        }
        let rows = self.n_rows();
        let mut values = DMatrix::zeros(rows, self.n_cols() + other.n_cols());
        values.columns_mut(0, self.n_cols()).copy_from(&self.values);
        values
            .columns_mut(self.n_cols(), other.n_cols())
            .copy_from(&other.values);
        let mut descriptors = self.descriptors.clone();
        descriptors.extend(other.descriptors.iter().cloned());
        FeatureMatrix::new(values, descriptors, self.labels.clone())
    }

    /// Population variance of each column.
    pub fn column_variances(&self) -> Vec<f64> {
        (0..self.n_cols())
            .map(|j| {
                let c = self.column(j);
                let n = c.len() as f64;
                let mean = c.iter().sum::<f64>() / n;
                c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
            })
            .collect()
    }

    /// CSV with a header of descriptor names and a trailing `label` column.
    pub fn write_csv(&self, path: &Path) -> Result<(), FeatureError> {
        let io = |e: csv::Error| FeatureError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let mut header: Vec<&str> = self.names();
        header.push("label");
        w.write_record(&header).map_err(io)?;
        for i in 0..self.n_rows() {
            let mut rec: Vec<String> = self.values.row(i).iter().map(|v| format!("{v}")).collect();
            rec.push(self.labels[i].to_string());
            w.write_record(&rec).map_err(io)?;
        }
        w.flush().map_err(|e| FeatureError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Writes the descriptor sidecar: a JSON array with one record per column.
    pub fn write_descriptors(&self, path: &Path) -> Result<(), FeatureError> {
        let json = serde_json::to_string_pretty(&self.descriptors).expect("descriptors serialize");
        fs::write(path, json).map_err(|e| FeatureError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Reads a CSV written by [`write_csv`](Self::write_csv) together with its
    /// descriptor sidecar.
    pub fn read(csv_path: &Path, descriptor_path: &Path) -> Result<FeatureMatrix, FeatureError> {
        let io = |p: &Path, m: String| FeatureError::Io {
            path: p.display().to_string(),
            message: m,
        };
        let text = fs::read_to_string(descriptor_path).map_err(|e| io(descriptor_path, e.to_string()))?;
        let descriptors: Vec<FeatureDescriptor> =
            serde_json::from_str(&text).map_err(|e| io(descriptor_path, e.to_string()))?;
        let mut r = csv::Reader::from_path(csv_path).map_err(|e| io(csv_path, e.to_string()))?;
        let header = r.headers().map_err(|e| io(csv_path, e.to_string()))?.clone();
        if header.len() != descriptors.len() + 1
            || header.iter().zip(&descriptors).any(|(h, d)| h != d.name)
        {
            return Err(FeatureError::Shape("CSV header does not match descriptors".into()));
        }
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| io(csv_path, e.to_string()))?;
            let mut row = Vec::with_capacity(descriptors.len());
            for field in rec.iter().take(descriptors.len()) {
                row.push(field.parse::<f64>().map_err(|e| io(csv_path, e.to_string()))?);
            }
            let label = rec
                .get(descriptors.len())
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| io(csv_path, "bad label".into()))?;
            rows.push(row);
            labels.push(label);
        }
        FeatureMatrix::from_rows(&rows, descriptors, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desc(name: &str) -> FeatureDescriptor {
        FeatureDescriptor {
            layer: 1,
            family: Family::Td,
            name: name.into(),
            lineage: vec![LineageStep::MeanSubtract],
        }
    }

    #[test]
    fn matrix_invariants() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let m = FeatureMatrix::from_rows(&rows, vec![desc("a"), desc("b")], vec![0, 1]).unwrap();
        assert_eq!(m.column(1), &[2.0, 4.0]);
        assert_eq!(m.row(1), vec![3.0, 4.0]);
        assert!(matches!(
            FeatureMatrix::from_rows(&rows, vec![desc("a"), desc("a")], vec![0, 1]),
            Err(FeatureError::DuplicateName(_))
        ));
        assert!(matches!(
            FeatureMatrix::from_rows(&rows, vec![desc("a"), desc("b")], vec![0]),
            Err(FeatureError::Shape(_))
        ));
        let bad = vec![vec![1.0, f64::NAN], vec![3.0, 4.0]];
        assert!(matches!(
            FeatureMatrix::from_rows(&bad, vec![desc("a"), desc("b")], vec![0, 1]),
            Err(FeatureError::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn select_and_stack() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let m = FeatureMatrix::from_rows(&rows, vec![desc("a"), desc("b"), desc("c")], vec![0, 1]).unwrap();
        let s = m.select_columns(&[2, 0]);
        assert_eq!(s.names(), vec!["c", "a"]);
        assert_eq!(s.row(0), vec![3.0, 1.0]);
        let r = m.select_rows(&[1]);
        assert_eq!(r.labels(), &[1]);
        assert_eq!(r.row(0), vec![4.0, 5.0, 6.0]);
        let other = FeatureMatrix::from_rows(&[vec![7.0], vec![8.0]], vec![desc("d")], vec![0, 1]).unwrap();
        let h = m.hstack(&other).unwrap();
        assert_eq!(h.row(1), vec![4.0, 5.0, 6.0, 8.0]);
        assert!(m.hstack(&s).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![vec![0.1, -2.5e-17], vec![3.0, 1e300]];
        let m = FeatureMatrix::from_rows(&rows, vec![desc("L1/td/x[0]"), desc("L1/td/x[1]")], vec![1, 0]).unwrap();
        let csv = dir.path().join("f.csv");
        let side = dir.path().join("f.json");
        m.write_csv(&csv).unwrap();
        m.write_descriptors(&side).unwrap();
        let header = fs::read_to_string(&csv).unwrap();
        assert!(header.starts_with("L1/td/x[0],L1/td/x[1],label\n"));
        assert_eq!(FeatureMatrix::read(&csv, &side).unwrap(), m);
    }
}
