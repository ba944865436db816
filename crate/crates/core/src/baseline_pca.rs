//! Principal component baseline: PCA by SVD or by covariance
//! eigendecomposition, then an RBF SVM on the projected rows.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::classifier::{evaluate_cv_with, rbf_grid, ClassifierError, FoldAssignment, KernelSpec, Metrics};
use crate::feature_bank::{Family, FeatureDescriptor, FeatureError, FeatureMatrix, LineageStep};

#[derive(Debug, thiserror::Error)]
pub enum PcaError {
    #[error("{p} components requested but at most {max} are available")]
    InvalidComponents { p: usize, max: usize },

    #[error("row has {got} features, model expects {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("unsupported method {0:?} (expected svd or eig)")]
    UnsupportedMethod(String),

    #[error(transparent)]
    Classifier(#[from] ClassifierError),

    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcaMethod {
    Svd,
    Eig,
}

impl fmt::Display for PcaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PcaMethod::Svd => "svd",
            PcaMethod::Eig => "eig",
        })
    }
}

impl FromStr for PcaMethod {
    type Err = PcaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "svd" => Ok(PcaMethod::Svd),
            "eig" => Ok(PcaMethod::Eig),
            other => Err(PcaError::UnsupportedMethod(other.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `p x d`, orthonormal rows, first clearly nonzero entry positive.
    pub components: Vec<Vec<f64>>,
    /// Sample variance (1/(N-1)) along each component, non-increasing.
    pub explained_variance: Vec<f64>,
    pub method: PcaMethod,
    /// Set when fewer components than requested had nonzero variance; the
    /// model then holds only those.
    pub rank_deficient: bool,
}

/// Entries smaller than this (components have unit norm) are skipped when
/// fixing the sign.
const SIGN_EPS: f64 = 1e-6;

fn align_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| x.abs() > SIGN_EPS) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn centered(rows: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    (mean, x)
}

/// Fits `p` components on `rows`.
pub fn fit_pca_rows(rows: &[Vec<f64>], p: usize, method: PcaMethod) -> Result<PcaModel, PcaError> {
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let max = n.saturating_sub(1).min(d);
    if p == 0 || p > max {
        return Err(PcaError::InvalidComponents { p, max });
    }
    let (mean, x) = centered(rows);
    let denom = (n - 1) as f64;
    // (variance, direction) pairs, unsorted
    let mut pairs: Vec<(f64, DVector<f64>)> = match method {
        PcaMethod::Svd => {
            let svd = x.clone().svd(false, true);
            let v_t = svd.v_t.expect("requested V^T");
            svd.singular_values
                .iter()
                .enumerate()
                .map(|(i, s)| (s * s / denom, v_t.row(i).transpose()))
                .collect()
        }
        PcaMethod::Eig if d <= n => {
            let cov = x.transpose() * &x / denom;
            let eig = cov.symmetric_eigen();
            (0..d).map(|i| (eig.eigenvalues[i], eig.eigenvectors.column(i).into_owned())).collect()
        }
        PcaMethod::Eig => {
            // wide data: eigenvectors of the Gram matrix mapped back through X^T
            let gram = &x * x.transpose() / denom;
            let eig = gram.symmetric_eigen();
            (0..n)
                .map(|i| {
                    let lambda = eig.eigenvalues[i];
                    let mut v = x.transpose() * eig.eigenvectors.column(i);
                    let norm = v.norm();
                    if norm > 0.0 {
                        v /= norm;
                    }
                    (lambda, v)
                })
                .collect()
        }
    };
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let top = pairs.first().map_or(0.0, |p| p.0.max(0.0));
    let tol = top * 1e-12 * (n.max(d) as f64) + f64::MIN_POSITIVE;
    let rank = pairs.iter().take_while(|p| p.0 > tol).count();
    let keep = p.min(rank);
    let mut components = Vec::with_capacity(keep);
    let mut explained_variance = Vec::with_capacity(keep);
    for (var, v) in pairs.into_iter().take(keep) {
        let mut c: Vec<f64> = v.iter().copied().collect();
        align_sign(&mut c);
        components.push(c);
        explained_variance.push(var.max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        method,
        rank_deficient: keep < p,
    })
}

pub fn fit_pca(matrix: &FeatureMatrix, p: usize, method: PcaMethod) -> Result<PcaModel, PcaError> {
    let rows: Vec<Vec<f64>> = (0..matrix.n_rows()).map(|i| matrix.row(i)).collect();
    fit_pca_rows(&rows, p, method)
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn project_row(&self, row: &[f64]) -> Result<Vec<f64>, PcaError> {
        if row.len() != self.mean.len() {
            return Err(PcaError::WidthMismatch {
                expected: self.mean.len(),
                got: row.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| c.iter().zip(row.iter().zip(&self.mean)).map(|(w, (v, m))| w * (v - m)).sum())
            .collect())
    }

    pub fn reconstruct_row(&self, reduced: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (z, c) in reduced.iter().zip(&self.components) {
            for (o, w) in out.iter_mut().zip(c) {
                *o += z * w;
            }
        }
        out
    }
}

pub fn project(model: &PcaModel, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, PcaError> {
    rows.iter().map(|r| model.project_row(r)).collect()
}

fn component_matrix(model: &PcaModel, matrix: &FeatureMatrix) -> Result<FeatureMatrix, PcaError> {
    let rows: Vec<Vec<f64>> = (0..matrix.n_rows())
        .map(|i| model.project_row(&matrix.row(i)))
        .collect::<Result<_, _>>()?;
    let descriptors = (0..model.n_components())
        .map(|k| FeatureDescriptor {
            layer: 1,
            family: Family::Td,
            name: format!("pca/{}/pc{k}", model.method),
            lineage: vec![LineageStep::Statistic {
                kind: format!("principal component {k} ({})", model.method),
            }],
        })
        .collect();
    Ok(FeatureMatrix::from_rows(&rows, descriptors, matrix.labels().to_vec())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaOutcome {
    pub method: PcaMethod,
    pub components: usize,
    pub best: KernelSpec,
    pub mean_accuracy: f64,
    pub metrics: Metrics,
    /// Some split had fewer usable components than requested.
    pub rank_deficient: bool,
}

/// Per split: fit PCA on the training rows, project every row, then run the
/// RBF grid search. Metrics come from the pooled test confusion.
pub fn pca_pipeline(matrix: &FeatureMatrix, p: usize, method: PcaMethod, folds: &FoldAssignment) -> Result<PcaOutcome, PcaError> {
    pca_pipeline_with_grid(matrix, p, method, folds, &rbf_grid())
}

pub fn pca_pipeline_with_grid(
    matrix: &FeatureMatrix,
    p: usize,
    method: PcaMethod,
    folds: &FoldAssignment,
    grid: &[KernelSpec],
) -> Result<PcaOutcome, PcaError> {
    let mut rank_deficient = false;
    let mut projected = Vec::with_capacity(folds.splits.len());
    for split in &folds.splits {
        let train: Vec<Vec<f64>> = split.train.iter().map(|&i| matrix.row(i)).collect();
        let model = fit_pca_rows(&train, p, method)?;
        rank_deficient |= model.rank_deficient;
        projected.push(component_matrix(&model, matrix)?);
    }
    // a split whose PCA came out narrower still works: its SVM sees fewer columns
    let cv = evaluate_cv_with(|s| &projected[s], grid, folds)?;
    Ok(PcaOutcome {
        method,
        components: p,
        best: cv.best,
        mean_accuracy: cv.mean_accuracy,
        metrics: cv.metrics,
        rank_deficient,
    })
}
