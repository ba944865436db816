//! Support vector machines: kernels, the dual solver, cross-validated grid
//! search and classification metrics.

pub mod folds;
pub mod kernel;
pub mod metrics;
pub mod smo;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::feature_bank::FeatureMatrix;

pub use folds::{make_folds, FoldAssignment, FoldProtocol, Split};
pub use kernel::{default_grid, rbf_grid, KernelKind, KernelSpec};
pub use metrics::{MetricKind, Metrics};
pub use smo::{solve_dual, DualSolution, KKT_TOLERANCE};

pub const MODEL_FORMAT: &str = "featforge-svm/1";

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("training data has a single class")]
    SingleClass,

    #[error("degenerate training matrix: {0}")]
    DegenerateMatrix(String),

    #[error("row has {got} features, model expects {expected}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("invalid kernel {0}")]
    InvalidKernel(String),

    #[error("unknown fold protocol {0:?}")]
    UnknownProtocol(String),

    #[error("fold protocol cannot be built: {0}")]
    ProtocolCompositionImpossible(String),

    #[error("empty kernel grid")]
    EmptyGrid,

    #[error("model text: {0}")]
    Format(String),
}

/// Per-feature standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population standard deviation; 0 means the feature is only centered.
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Scaler {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt())
            .collect();
        Scaler { mean, std }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (&m, &s))| if s > 0.0 { (v - m) / s } else { v - m })
            .collect()
    }
}

/// One two-class machine: `positive` against everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub positive: usize,
    /// Standardized support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// Training-row indices of the support vectors.
    pub support_indices: Vec<usize>,
    pub alpha: Vec<f64>,
    /// +1 or -1 per support vector.
    pub y: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl BinaryMachine {
    pub fn decision(&self, kernel: &KernelSpec, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(self.alpha.iter().zip(&self.y))
            .map(|(sv, (a, y))| a * y * kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    /// `|sum a_i y_i|` over all training rows (non-support rows have a = 0).
    pub fn balance(&self) -> f64 {
        self.alpha.iter().zip(&self.y).map(|(a, y)| a * y).sum::<f64>().abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub kernel: KernelSpec,
    pub feature_names: Vec<String>,
    pub scaler: Scaler,
    /// Sorted class ids.
    pub classes: Vec<usize>,
    /// One machine for two classes (positive = `classes[1]`), else one per class.
    pub machines: Vec<BinaryMachine>,
}

impl TrainedModel {
    pub fn n_features(&self) -> usize {
        self.scaler.mean.len()
    }

    /// Checks `0 <= a <= C` and `|sum a y| <= 1e-6` on every machine.
    pub fn dual_feasible(&self) -> bool {
        self.machines.iter().all(|m| {
            m.alpha.iter().all(|&a| (0.0..=self.kernel.c).contains(&a)) && m.balance() <= 1e-6
        })
    }

    pub fn support_indices(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = self.machines.iter().flat_map(|m| m.support_indices.iter().copied()).collect();
        idx.sort_unstable();
        idx.dedup();
        idx
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_text(text: &str) -> Result<TrainedModel, ClassifierError> {
        let m: TrainedModel = serde_json::from_str(text).map_err(|e| ClassifierError::Format(e.to_string()))?;
        if m.format != MODEL_FORMAT {
            return Err(ClassifierError::Format(format!("unsupported format {:?}", m.format)));
        }
        Ok(m)
    }
}

fn sorted_classes(labels: &[usize]) -> Vec<usize> {
    let mut c = labels.to_vec();
    c.sort_unstable();
    c.dedup();
    c
}

fn fit_machine(gram: &[f64], rows: &[Vec<f64>], labels: &[usize], positive: usize, c: f64) -> BinaryMachine {
    let y: Vec<f64> = labels.iter().map(|&l| if l == positive { 1.0 } else { -1.0 }).collect();
    let sol = solve_dual(gram, &y, c, KKT_TOLERANCE);
    let support: Vec<usize> = (0..y.len()).filter(|&i| sol.alpha[i] > 0.0).collect();
    BinaryMachine {
        positive,
        support_vectors: support.iter().map(|&i| rows[i].clone()).collect(),
        alpha: support.iter().map(|&i| sol.alpha[i]).collect(),
        y: support.iter().map(|&i| y[i]).collect(),
        support_indices: support,
        bias: -sol.rho,
        iterations: sol.iterations,
        converged: sol.converged,
    }
}

/// Trains on all rows of `matrix`.
pub fn train_svm(matrix: &FeatureMatrix, kernel: KernelSpec) -> Result<TrainedModel, ClassifierError> {
    let rows: Vec<usize> = (0..matrix.n_rows()).collect();
    train_on_rows(matrix, &rows, kernel)
}

/// Trains on the given rows of `matrix`; support indices refer to rows of
/// `matrix`.
pub fn train_on_rows(matrix: &FeatureMatrix, rows: &[usize], kernel: KernelSpec) -> Result<TrainedModel, ClassifierError> {
    kernel.validate()?;
    if rows.is_empty() || matrix.n_cols() == 0 {
        return Err(ClassifierError::DegenerateMatrix(format!(
            "{} rows x {} columns",
            rows.len(),
            matrix.n_cols()
        )));
    }
    let labels: Vec<usize> = rows.iter().map(|&r| matrix.labels()[r]).collect();
    let classes = sorted_classes(&labels);
    if classes.len() < 2 {
        return Err(ClassifierError::SingleClass);
    }
    let raw: Vec<Vec<f64>> = rows.iter().map(|&r| matrix.row(r)).collect();
    let scaler = Scaler::fit(&raw);
    let scaled: Vec<Vec<f64>> = raw.iter().map(|r| scaler.transform(r)).collect();
    let gram = kernel.gram(&scaled);
    let positives: Vec<usize> = if classes.len() == 2 { vec![classes[1]] } else { classes.clone() };
    let machines = positives
        .into_iter()
        .map(|p| {
            let mut m = fit_machine(&gram, &scaled, &labels, p, kernel.c);
            for i in &mut m.support_indices {
                *i = rows[*i];
            }
            m
        })
        .collect();
    Ok(TrainedModel {
        format: MODEL_FORMAT.into(),
        kernel,
        feature_names: matrix.names().into_iter().map(String::from).collect(),
        scaler,
        classes,
        machines,
    })
}

pub fn predict_row(model: &TrainedModel, row: &[f64]) -> Result<usize, ClassifierError> {
    if row.len() != model.n_features() {
        return Err(ClassifierError::WidthMismatch {
            expected: model.n_features(),
            got: row.len(),
        });
    }
    let x = model.scaler.transform(row);
    if model.classes.len() == 2 {
        let d = model.machines[0].decision(&model.kernel, &x);
        return Ok(if d > 0.0 { model.classes[1] } else { model.classes[0] });
    }
    let mut best = (model.classes[0], f64::NEG_INFINITY);
    for m in &model.machines {
        let d = m.decision(&model.kernel, &x);
        if d > best.1 {
            best = (m.positive, d);
        }
    }
    Ok(best.0)
}

pub fn predict(model: &TrainedModel, rows: &[Vec<f64>]) -> Result<Vec<usize>, ClassifierError> {
    rows.iter().map(|r| predict_row(model, r)).collect()
}

/// Outcome of one grid point over every split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecScore {
    pub kernel: KernelSpec,
    pub mean_accuracy: f64,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub best: KernelSpec,
    pub mean_accuracy: f64,
    /// Metrics of the pooled confusion over every test split.
    pub metrics: Metrics,
    pub grid: Vec<SpecScore>,
    /// Every trained model's support vectors came from its training rows.
    pub leakage_free: bool,
    /// Every trained model satisfied the dual constraints.
    pub dual_feasible: bool,
    pub models_trained: usize,
}

struct SplitResult {
    accuracy: f64,
    confusion: Vec<Vec<u64>>,
    leak_free: bool,
    feasible: bool,
}

fn run_split(matrix: &FeatureMatrix, classes: &[usize], split: &Split, kernel: KernelSpec) -> Result<SplitResult, ClassifierError> {
    let model = train_on_rows(matrix, &split.train, kernel)?;
    let truth: Vec<usize> = split.test.iter().map(|&i| matrix.labels()[i]).collect();
    let predicted: Vec<usize> = split
        .test
        .iter()
        .map(|&i| predict_row(&model, &matrix.row(i)))
        .collect::<Result<_, _>>()?;
    let mut confusion = vec![vec![0u64; classes.len()]; classes.len()];
    metrics::accumulate(&mut confusion, classes, &truth, &predicted);
    let correct = truth.iter().zip(&predicted).filter(|(a, b)| a == b).count();
    let leak_free = model.support_indices().iter().all(|i| split.train.binary_search(i).is_ok());
    Ok(SplitResult {
        accuracy: if truth.is_empty() { 0.0 } else { correct as f64 / truth.len() as f64 },
        confusion,
        leak_free,
        feasible: model.dual_feasible(),
    })
}

/// Orders grid points: higher mean accuracy first, then kernel order
/// (linear, rbf, sigmoid, polynomial), then smaller C, then grid position.
fn better(a: &(usize, &SpecScore), b: &(usize, &SpecScore)) -> Ordering {
    let (ia, sa) = a;
    let (ib, sb) = b;
    if (sa.mean_accuracy - sb.mean_accuracy).abs() > 1e-12 {
        return sb.mean_accuracy.total_cmp(&sa.mean_accuracy);
    }
    sa.kernel
        .kind
        .cmp(&sb.kernel.kind)
        .then(sa.kernel.c.total_cmp(&sb.kernel.c))
        .then(ia.cmp(ib))
}

/// Grid search: every spec is scored on every split; the best spec has the
/// highest mean split accuracy.
pub fn evaluate_cv(matrix: &FeatureMatrix, grid: &[KernelSpec], folds: &FoldAssignment) -> Result<CvOutcome, ClassifierError> {
    evaluate_cv_with(|_| matrix, grid, folds)
}

/// Like [`evaluate_cv`], but split `s` reads its rows from `matrix_for(s)`.
/// Lets split-specific transforms (fitted on that split's training rows)
/// feed the same grid search. All matrices share labels and row order.
pub fn evaluate_cv_with<'a, M>(matrix_for: M, grid: &[KernelSpec], folds: &FoldAssignment) -> Result<CvOutcome, ClassifierError>
where
    M: Fn(usize) -> &'a FeatureMatrix + Sync,
{
    if grid.is_empty() {
        return Err(ClassifierError::EmptyGrid);
    }
    if folds.splits.len() < 2 {
        return Err(ClassifierError::ProtocolCompositionImpossible("fewer than two splits".into()));
    }
    let classes = sorted_classes(matrix_for(0).labels());
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..folds.splits.len()).map(move |s| (g, s)))
        .collect();
    let results: Vec<SplitResult> = jobs
        .par_iter()
        .map(|&(g, s)| run_split(matrix_for(s), &classes, &folds.splits[s], grid[g]))
        .collect::<Result<_, _>>()?;
    let per_spec = folds.splits.len();
    let mut leakage_free = true;
    let mut dual_feasible = true;
    let scores: Vec<SpecScore> = grid
        .iter()
        .enumerate()
        .map(|(g, &kernel)| {
            let chunk = &results[g * per_spec..(g + 1) * per_spec];
            let mut confusion = vec![vec![0u64; classes.len()]; classes.len()];
            for r in chunk {
                leakage_free &= r.leak_free;
                dual_feasible &= r.feasible;
                for (row, add) in confusion.iter_mut().zip(&r.confusion) {
                    for (v, a) in row.iter_mut().zip(add) {
                        *v += a;
                    }
                }
            }
            SpecScore {
                kernel,
                mean_accuracy: chunk.iter().map(|r| r.accuracy).sum::<f64>() / per_spec as f64,
                metrics: Metrics::from_confusion(classes.clone(), confusion),
            }
        })
        .collect();
    let best = scores.iter().enumerate().min_by(better).map(|(_, s)| s.clone()).expect("non-empty grid");
    Ok(CvOutcome {
        best: best.kernel,
        mean_accuracy: best.mean_accuracy,
        metrics: best.metrics,
        grid: scores,
        leakage_free,
        dual_feasible,
        models_trained: results.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_bank::{Family, FeatureDescriptor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn matrix(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> FeatureMatrix {
        let d = rows[0].len();
        let descriptors = (0..d)
            .map(|j| FeatureDescriptor {
                layer: 1,
                family: Family::Td,
                name: format!("f{j}"),
                lineage: Vec::new(),
            })
            .collect();
        FeatureMatrix::from_rows(&rows, descriptors, labels).unwrap()
    }

    fn blobs(n: usize, sep: f64, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let rows = labels
            .iter()
            .map(|&l| {
                let c = if l == 1 { sep } else { -sep };
                vec![c + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0) * 3.0]
            })
            .collect();
        matrix(rows, labels)
    }

    #[test]
    fn separable_pair() {
        let m = matrix(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1, 0]);
        let model = train_svm(&m, KernelSpec::linear(1.0)).unwrap();
        assert_eq!(predict(&model, &[m.row(0), m.row(1)]).unwrap(), vec![1, 0]);
        let x0 = model.scaler.transform(&m.row(0));
        let x1 = model.scaler.transform(&m.row(1));
        assert!(model.machines[0].decision(&model.kernel, &x0) >= 0.0);
        assert!(model.machines[0].decision(&model.kernel, &x1) <= 0.0);
        assert!(model.dual_feasible());
    }

    #[test]
    fn xor_needs_nonlinear_kernel() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let m = matrix(rows.clone(), vec![0, 0, 1, 1]);
        let rbf = train_svm(&m, KernelSpec::rbf(10.0, 1.0)).unwrap();
        assert_eq!(predict(&rbf, &rows).unwrap(), vec![0, 0, 1, 1]);
        let lin = train_svm(&m, KernelSpec::linear(10.0)).unwrap();
        let correct = predict(&lin, &rows).unwrap().iter().zip([0, 0, 1, 1]).filter(|(a, b)| **a == *b).count();
        assert!(correct <= 3);
        assert!(rbf.dual_feasible() && lin.dual_feasible());
    }

    #[test]
    fn support_vectors_predict_their_label() {
        let m = blobs(40, 4.0, 2);
        let model = train_svm(&m, KernelSpec::linear(100.0)).unwrap();
        for &i in &model.machines[0].support_indices {
            assert_eq!(predict_row(&model, &m.row(i)).unwrap(), m.labels()[i]);
        }
        let rows: Vec<Vec<f64>> = (0..m.n_rows()).map(|i| m.row(i)).collect();
        assert_eq!(predict(&model, &rows).unwrap(), m.labels());
    }

    #[test]
    fn affine_rescaling_keeps_predictions() {
        let m = blobs(30, 1.0, 5);
        let scaled_rows: Vec<Vec<f64>> = (0..m.n_rows())
            .map(|i| m.row(i).iter().enumerate().map(|(j, v)| v * (10.0 + j as f64 * 90.0) + 7.0).collect())
            .collect();
        let m2 = matrix(scaled_rows.clone(), m.labels().to_vec());
        for spec in [KernelSpec::rbf(1.0, 0.1), KernelSpec::linear(1.0)] {
            let a = train_svm(&m, spec).unwrap();
            let b = train_svm(&m2, spec).unwrap();
            let rows: Vec<Vec<f64>> = (0..m.n_rows()).map(|i| m.row(i)).collect();
            assert_eq!(predict(&a, &rows).unwrap(), predict(&b, &scaled_rows).unwrap());
        }
    }

    #[test]
    fn multiclass_one_vs_rest() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let centers = [(0.0, 0.0), (5.0, 0.0), (0.0, 5.0)];
        let labels: Vec<usize> = (0..45).map(|i| i % 3).collect();
        let rows: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| vec![centers[l].0 + rng.gen_range(-1.0..1.0), centers[l].1 + rng.gen_range(-1.0..1.0)])
            .collect();
        let m = matrix(rows.clone(), labels.clone());
        let model = train_svm(&m, KernelSpec::rbf(10.0, 0.5)).unwrap();
        assert_eq!(model.machines.len(), 3);
        assert_eq!(predict(&model, &rows).unwrap(), labels);
    }

    #[test]
    fn errors() {
        let m = matrix(vec![vec![1.0], vec![2.0]], vec![0, 0]);
        assert!(matches!(train_svm(&m, KernelSpec::linear(1.0)), Err(ClassifierError::SingleClass)));
        let m = matrix(vec![vec![1.0], vec![2.0]], vec![0, 1]);
        let model = train_svm(&m, KernelSpec::linear(1.0)).unwrap();
        assert!(matches!(
            predict_row(&model, &[1.0, 2.0]),
            Err(ClassifierError::WidthMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn model_text_round_trip() {
        let m = blobs(20, 2.0, 1);
        let model = train_svm(&m, KernelSpec::polynomial(1.0, 0.1, 1.0, 3)).unwrap();
        let back = TrainedModel::from_text(&model.to_text()).unwrap();
        assert_eq!(back, model);
        assert!(TrainedModel::from_text("{}").is_err());
    }

    #[test]
    fn cv_single_spec_and_separable() {
        let m = blobs(40, 5.0, 4);
        let folds = make_folds(m.labels(), FoldProtocol::StratifiedK(5), 0).unwrap();
        let spec = KernelSpec::rbf(1.0, 0.1);
        let out = evaluate_cv(&m, &[spec], &folds).unwrap();
        assert_eq!(out.best, spec);
        assert_eq!(out.mean_accuracy, 1.0);
        assert_eq!(out.metrics.accuracy, 1.0);
        assert!(out.leakage_free && out.dual_feasible);
    }

    #[test]
    fn cv_tie_prefers_linear_then_small_c() {
        let m = blobs(40, 5.0, 6);
        let folds = make_folds(m.labels(), FoldProtocol::StratifiedK(4), 1).unwrap();
        let out = evaluate_cv(&m, &default_grid(), &folds).unwrap();
        assert_eq!(out.best, KernelSpec::linear(0.1));
        assert_eq!(out.models_trained, 88 * 4);
        assert!(out.leakage_free && out.dual_feasible);
    }

    #[test]
    fn cv_deterministic() {
        let m = blobs(30, 0.5, 7);
        let folds = make_folds(m.labels(), FoldProtocol::StratifiedK(3), 2).unwrap();
        let a = evaluate_cv(&m, &rbf_grid(), &folds).unwrap();
        let b = evaluate_cv(&m, &rbf_grid(), &folds).unwrap();
        assert_eq!(a, b);
    }
}
