//! Filter-based feature selection: mRMR and MRMS on discretized features,
//! their union, and the iterative search over the selection size `k`.

pub mod discretize;
pub mod greedy;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::feature_bank::FeatureMatrix;

pub use discretize::{discretize, DiscretizedMatrix, DEFAULT_BINS};
pub use greedy::{dependency, label_column, mrmr_select, mrms_select, mutual_information};

/// Criterion values closer than this are treated as equal.
pub const TIE_EPS: f64 = 1e-12;
pub const DEFAULT_BETA: f64 = 0.5;
pub const DEFAULT_PRESCREEN: usize = 2000;
pub const DEFAULT_K_SCHEDULE: [usize; 5] = [5, 10, 15, 20, 25];

#[derive(Debug, thiserror::Error)]
pub enum SelectionError {
    #[error("k = {k} is outside 1..={available}")]
    KTooLarge { k: usize, available: usize },

    #[error("cannot union a union of size k = {0} with a selection of size k = {1}")]
    MethodMismatch(usize, usize),

    #[error("beta must be in [0, 1], got {0}")]
    InvalidBeta(f64),

    #[error("invalid k schedule: {0}")]
    InvalidSchedule(String),

    #[error("threshold must be in [0, 1], got {0}")]
    InvalidThreshold(f64),

    #[error("no informative (non-constant) features")]
    NoCandidates,

    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mrmr,
    Mrms,
    Union,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mrmr => "mRMR",
            Method::Mrms => "MRMS",
            Method::Union => "union",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub method: Method,
    /// Column indices in pick order.
    pub selected: Vec<usize>,
    /// Criterion value at each pick; empty for unions.
    pub step_scores: Vec<f64>,
    pub k: usize,
}

impl SelectionResult {
    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    /// First `k` picks of a greedy result. Greedy selection is prefix-stable,
    /// so this equals running the selector with `k`.
    pub fn prefix(&self, k: usize) -> SelectionResult {
        let k = k.min(self.selected.len());
        SelectionResult {
            method: self.method,
            selected: self.selected[..k].to_vec(),
            step_scores: self.step_scores[..k.min(self.step_scores.len())].to_vec(),
            k,
        }
    }

    /// Same selection with indices rewritten through `map`.
    pub fn remap(&self, map: &[usize]) -> SelectionResult {
        SelectionResult {
            selected: self.selected.iter().map(|&i| map[i]).collect(),
            ..self.clone()
        }
    }
}

/// `x` followed by the picks of `y` not already in `x`.
pub fn union_select(x: &SelectionResult, y: &SelectionResult) -> Result<SelectionResult, SelectionError> {
    if x.k != y.k && (x.method == Method::Union || y.method == Method::Union) {
        return Err(SelectionError::MethodMismatch(x.k, y.k));
    }
    let mut selected = x.selected.clone();
    for &j in &y.selected {
        if !selected.contains(&j) {
            selected.push(j);
        }
    }
    Ok(SelectionResult {
        method: Method::Union,
        selected,
        step_scores: Vec::new(),
        k: x.k.max(y.k),
    })
}

/// Indices of columns with nonzero variance.
pub fn nonconstant_columns(matrix: &FeatureMatrix) -> Vec<usize> {
    (0..matrix.n_cols())
        .filter(|&j| {
            let c = matrix.column(j);
            c.iter().any(|&v| v != c[0])
        })
        .collect()
}

/// The `keep` columns of `disc` with the highest label relevance, returned
/// in ascending index order. Relevance ties go to the lower index.
pub fn prescreen(disc: &DiscretizedMatrix, labels: &[usize], keep: usize) -> Vec<usize> {
    if disc.n_cols() <= keep {
        return (0..disc.n_cols()).collect();
    }
    let y = label_column(labels);
    let relevance: Vec<f64> = (0..disc.n_cols())
        .into_par_iter()
        .map(|j| mutual_information(disc.column(j), &y))
        .collect();
    let mut order: Vec<usize> = (0..disc.n_cols()).collect();
    order.sort_by(|&a, &b| relevance[b].total_cmp(&relevance[a]).then(a.cmp(&b)));
    order.truncate(keep);
    order.sort_unstable();
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k_schedule: Vec<usize>,
    /// Target score; evaluation stops at the first `k` reaching it.
    pub tau: f64,
    pub bins: usize,
    pub beta: f64,
    /// Maximum candidates kept by the relevance pre-screen.
    pub prescreen: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k_schedule: DEFAULT_K_SCHEDULE.to_vec(),
            tau: 0.95,
            bins: DEFAULT_BINS,
            beta: DEFAULT_BETA,
            prescreen: DEFAULT_PRESCREEN,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if self.k_schedule.is_empty() {
            return Err(SelectionError::InvalidSchedule("schedule is empty".into()));
        }
        if self.k_schedule[0] == 0 || self.k_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SelectionError::InvalidSchedule(format!(
                "{:?} is not strictly increasing positive",
                self.k_schedule
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(SelectionError::InvalidThreshold(self.tau));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(SelectionError::InvalidBeta(self.beta));
        }
        if self.bins < 2 || self.prescreen == 0 {
            return Err(SelectionError::InvalidSchedule("bins must be >= 2 and prescreen >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KStep {
    pub k: usize,
    pub z_size: usize,
    pub score: f64,
}

/// Result of [`iterative_k`]. All indices refer to columns of the input
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IterativeOutcome<E> {
    pub x: SelectionResult,
    pub y: SelectionResult,
    pub z: SelectionResult,
    pub k: usize,
    pub score: f64,
    pub converged: bool,
    pub evaluation: E,
    pub history: Vec<KStep>,
    /// Columns that survived the constant filter and the pre-screen.
    pub candidates: Vec<usize>,
}

/// For each `k` of the schedule: select with mRMR and MRMS, take the union
/// `z` and score the `z`-projected matrix with `evaluator`. Stops at the
/// first `k` whose score reaches `tau`; otherwise returns the best `k` seen
/// (earliest on ties) with `converged = false`.
pub fn iterative_k<E, Er, F>(matrix: &FeatureMatrix, config: &SelectionConfig, mut evaluator: F) -> Result<IterativeOutcome<E>, Er>
where
    Er: From<SelectionError>,
    F: FnMut(&FeatureMatrix, &SelectionResult) -> Result<(f64, E), Er>,
{
    config.validate()?;
    let labels = matrix.labels();
    let nonconstant = nonconstant_columns(matrix);
    if nonconstant.is_empty() {
        return Err(SelectionError::NoCandidates.into());
    }
    let disc_all = discretize::discretize_columns(nonconstant.iter().map(|&j| matrix.column(j)), config.bins);
    let keep = prescreen(&disc_all, labels, config.prescreen);
    let candidates: Vec<usize> = keep.iter().map(|&i| nonconstant[i]).collect();
    let disc = disc_all.select_columns(&keep);

    let k_max = (*config.k_schedule.last().expect("validated")).min(candidates.len());
    let x_full = mrmr_select(&disc, labels, k_max)?.remap(&candidates);
    let y_full = mrms_select(&disc, labels, k_max, config.beta)?.remap(&candidates);

    let mut history = Vec::new();
    let mut best: Option<IterativeOutcome<E>> = None;
    let mut last_k = 0;
    for &k in &config.k_schedule {
        let k = k.min(candidates.len());
        if k == last_k {
            break;
        }
        last_k = k;
        let x = x_full.prefix(k);
        let y = y_full.prefix(k);
        let z = union_select(&x, &y)?;
        let (score, evaluation) = evaluator(&matrix.select_columns(&z.selected), &z)?;
        history.push(KStep {
            k,
            z_size: z.len(),
            score,
        });
        let converged = score >= config.tau;
        if best.as_ref().is_none_or(|b| score > b.score) || converged {
            best = Some(IterativeOutcome {
                x,
                y,
                z,
                k,
                score,
                converged,
                evaluation,
                history: Vec::new(),
                candidates: Vec::new(),
            });
        }
        if converged {
            break;
        }
    }
    let mut out = best.expect("schedule is non-empty");
    out.history = history;
    out.candidates = candidates;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_bank::{Family, FeatureDescriptor};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sel(method: Method, selected: Vec<usize>, k: usize) -> SelectionResult {
        SelectionResult {
            method,
            step_scores: vec![0.0; selected.len()],
            selected,
            k,
        }
    }

    fn matrix(cols: Vec<Vec<f64>>, labels: Vec<usize>) -> FeatureMatrix {
        let rows: Vec<Vec<f64>> = (0..labels.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        let descriptors = (0..cols.len())
            .map(|j| FeatureDescriptor {
                layer: 1,
                family: Family::Td,
                name: format!("f{j}"),
                lineage: Vec::new(),
            })
            .collect();
        FeatureMatrix::from_rows(&rows, descriptors, labels).unwrap()
    }

    #[test]
    fn union_rules() {
        let x = sel(Method::Mrmr, vec![3, 1], 2);
        let y = sel(Method::Mrms, vec![1, 7], 2);
        assert_eq!(union_select(&x, &y).unwrap().selected, vec![3, 1, 7]);
        assert_eq!(union_select(&x, &x).unwrap().selected, x.selected);
        let d = sel(Method::Mrms, vec![4, 5], 2);
        assert_eq!(union_select(&x, &d).unwrap().len(), 4);
        let z = union_select(&x, &y).unwrap();
        assert_eq!(union_select(&z, &z).unwrap().selected, z.selected);
        let other = sel(Method::Mrmr, vec![0], 1);
        assert!(matches!(union_select(&z, &other), Err(SelectionError::MethodMismatch(2, 1))));
    }

    fn determined_dataset(seed: u64) -> (FeatureMatrix, Vec<usize>) {
        // label = at least two of four binary determiners set, padded with noise
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 200;
        let det: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| rng.gen_range(0..2) as f64).collect()).collect();
        let labels: Vec<usize> = (0..n)
            .map(|i| usize::from(det.iter().map(|d| d[i]).sum::<f64>() >= 2.0))
            .collect();
        let mut cols: Vec<Vec<f64>> = (0..20).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
        let positions = [2usize, 7, 11, 16];
        for (p, d) in positions.iter().zip(det) {
            cols[*p] = d;
        }
        (matrix(cols, labels), positions.to_vec())
    }

    #[test]
    fn constant_evaluator_behaviour() {
        let (m, _) = determined_dataset(1);
        let cfg = SelectionConfig {
            k_schedule: vec![2, 4, 8],
            tau: 0.9,
            ..Default::default()
        };
        let one = iterative_k::<(), SelectionError, _>(&m, &cfg, |_, _| Ok((1.0, ()))).unwrap();
        assert!(one.converged);
        assert_eq!(one.k, 2);
        assert_eq!(one.history.len(), 1);
        let zero = iterative_k::<(), SelectionError, _>(&m, &cfg, |_, _| Ok((0.0, ()))).unwrap();
        assert!(!zero.converged);
        assert_eq!(zero.k, 2);
        assert_eq!(zero.history.len(), 3);
    }

    #[test]
    fn halts_once_determiners_are_in() {
        for seed in 0..5 {
            let (m, det) = determined_dataset(seed);
            let cfg = SelectionConfig {
                k_schedule: vec![2, 4, 8],
                tau: 0.99,
                ..Default::default()
            };
            // evaluator: exact when every determiner column is present
            let out = iterative_k::<(), SelectionError, _>(&m, &cfg, |proj, _| {
                let names = proj.names();
                let all = det.iter().all(|d| names.contains(&format!("f{d}").as_str()));
                Ok((if all { 1.0 } else { 0.5 }, ()))
            })
            .unwrap();
            assert!(out.converged, "seed {seed}");
            // k = 2 can only succeed if the two selectors split the determiners
            assert!(out.k == 4 || out.k == 8 || out.z.len() == 4, "seed {seed} k {}", out.k);
            for d in &det {
                assert!(out.z.selected.contains(d));
            }
        }
    }

    #[test]
    fn constant_columns_are_dropped() {
        let labels = vec![0, 1, 0, 1];
        let m = matrix(vec![vec![1.0; 4], vec![0.0, 1.0, 0.0, 1.0]], labels);
        assert_eq!(nonconstant_columns(&m), vec![1]);
        let out = iterative_k::<(), SelectionError, _>(
            &m,
            &SelectionConfig {
                k_schedule: vec![1, 5],
                ..Default::default()
            },
            |_, _| Ok((1.0, ())),
        )
        .unwrap();
        assert_eq!(out.z.selected, vec![1]);
    }

    #[test]
    fn schedule_validation() {
        let mut cfg = SelectionConfig::default();
        cfg.k_schedule = vec![4, 4];
        assert!(cfg.validate().is_err());
        cfg.k_schedule = vec![];
        assert!(cfg.validate().is_err());
        cfg.k_schedule = vec![1, 2];
        cfg.tau = 1.5;
        assert!(cfg.validate().is_err());
        cfg.tau = 0.0;
        assert!(cfg.validate().is_ok());
    }
}
