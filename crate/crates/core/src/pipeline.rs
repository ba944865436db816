//! Layered orchestration: evaluate layer 1, escalate to layers 2 and 3 only
//! while the cross-validated score stays below the target.

use std::fmt::{self, Write as _};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline_pca::{pca_pipeline_with_grid, PcaError, PcaMethod};
use crate::classifier::kernel::GRID_C;
use crate::classifier::{
    default_grid, evaluate_cv, make_folds, rbf_grid, ClassifierError, CvOutcome, FoldAssignment, FoldProtocol,
    KernelSpec, MetricKind, Metrics,
};
use crate::feature_bank::{build_feature_matrix, ExtractionConfig, FeatureDescriptor, FeatureError, FeatureMatrix, Layer};
use crate::selection::{
    iterative_k, KStep, SelectionConfig, SelectionError, SelectionResult, DEFAULT_BETA, DEFAULT_BINS,
    DEFAULT_K_SCHEDULE, DEFAULT_PRESCREEN,
};
use crate::signal_io::{load_dataset, mean_subtracted, DatasetManifest, Signal, SignalError, WindowPlan};
use crate::transforms::{select_mother_wavelet_by_vote, Taper, TransformError, Wavelet, DEFAULT_FFT_SIZE};

pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 15;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Signal(#[from] SignalError),

    #[error(transparent)]
    Transform(#[from] TransformError),

    #[error(transparent)]
    Feature(#[from] FeatureError),

    #[error(transparent)]
    Selection(#[from] SelectionError),

    #[error(transparent)]
    Classifier(#[from] ClassifierError),

    #[error(transparent)]
    Pca(#[from] PcaError),

    #[error("no signal could be loaded ({0} failed)")]
    NoSignals(usize),

    #[error("report has no evaluated layer")]
    EmptyReport,

    #[error("layer {layer} failed: {source}")]
    LayerFailed {
        layer: u8,
        source: Box<PipelineError>,
        partial: Box<PipelineReport>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelGrid {
    /// Linear, RBF, sigmoid and polynomial sweep.
    Full,
    Rbf,
    Linear,
}

impl KernelGrid {
    pub fn specs(self) -> Vec<KernelSpec> {
        match self {
            KernelGrid::Full => default_grid(),
            KernelGrid::Rbf => rbf_grid(),
            KernelGrid::Linear => GRID_C.iter().map(|&c| KernelSpec::linear(c)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub tau: f64,
    pub metric: MetricKind,
    pub k_schedule: Vec<usize>,
    /// Overrides the manifest's sampling rate.
    pub fs: Option<f64>,
    /// Window length in samples; one second when absent.
    pub window_len: Option<usize>,
    /// Hop in samples; half the window when absent.
    pub hop: Option<usize>,
    pub fft_size: usize,
    pub wavelets: Vec<Wavelet>,
    pub grid: KernelGrid,
    pub protocol: FoldProtocol,
    pub seed: u64,
    pub bins: usize,
    pub beta: f64,
    pub prescreen: usize,
    /// Largest `z` searched exhaustively over feature subsets; 0 disables.
    pub exhaustive_limit: usize,
    pub max_layer: u8,
    /// PCA baselines to run on the layer-1 matrix; empty skips them.
    pub pca_methods: Vec<PcaMethod>,
    /// PCA components; defaults to the recommended feature count.
    pub pca_components: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau: 0.95,
            metric: MetricKind::Accuracy,
            k_schedule: DEFAULT_K_SCHEDULE.to_vec(),
            fs: None,
            window_len: None,
            hop: None,
            fft_size: DEFAULT_FFT_SIZE,
            wavelets: Wavelet::ALL.to_vec(),
            grid: KernelGrid::Full,
            protocol: FoldProtocol::StratifiedK(5),
            seed: 0,
            bins: DEFAULT_BINS,
            beta: DEFAULT_BETA,
            prescreen: DEFAULT_PRESCREEN,
            exhaustive_limit: DEFAULT_EXHAUSTIVE_LIMIT,
            max_layer: 3,
            pca_methods: Vec::new(),
            pca_components: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.tau > 0.0 && self.tau <= 1.0) && self.tau != 0.0 {
            return bad(format!("tau must lie in (0, 1] (or be 0 to halt at once), got {}", self.tau));
        }
        self.selection().validate()?;
        if let Some(fs) = self.fs {
            if !(fs.is_finite() && fs > 0.0) {
                return bad(format!("fs must be positive, got {fs}"));
            }
        }
        if self.window_len == Some(0) || self.hop == Some(0) {
            return bad("window_len and hop must be positive".into());
        }
        if self.fft_size < 2 || !self.fft_size.is_power_of_two() {
            return bad(format!("fft_size must be a power of two >= 2, got {}", self.fft_size));
        }
        if self.wavelets.is_empty() {
            return bad("wavelet candidate list is empty".into());
        }
        if !(1..=3).contains(&self.max_layer) {
            return bad(format!("max_layer must be 1, 2 or 3, got {}", self.max_layer));
        }
        if self.pca_components == Some(0) {
            return bad("pca_components must be positive".into());
        }
        Ok(())
    }

    pub fn selection(&self) -> SelectionConfig {
        SelectionConfig {
            k_schedule: self.k_schedule.clone(),
            tau: self.tau,
            bins: self.bins,
            beta: self.beta,
            prescreen: self.prescreen,
        }
    }

    pub fn window_plan(&self, fs: f64) -> Result<WindowPlan, PipelineError> {
        let default = WindowPlan::one_second(fs)?;
        let len = self.window_len.unwrap_or(default.window_len);
        let hop = self.hop.unwrap_or((len / 2).max(1));
        Ok(WindowPlan::new(len, hop)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Combination {
    pub features: Vec<usize>,
    pub names: Vec<String>,
    pub kernel: KernelSpec,
    pub mean_accuracy: f64,
    pub subsets_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub layer: u8,
    /// Cumulative columns available at this layer.
    pub feature_count: usize,
    /// Columns left after the constant filter and relevance pre-screen.
    pub screened_count: usize,
    pub x: SelectionResult,
    pub y: SelectionResult,
    pub z: SelectionResult,
    pub z_names: Vec<String>,
    pub k: usize,
    pub score: f64,
    pub converged: bool,
    pub best_kernel: KernelSpec,
    pub mean_accuracy: f64,
    pub metrics: Metrics,
    pub history: Vec<KStep>,
    pub leakage_free: bool,
    pub dual_feasible: bool,
    pub models_trained: usize,
    /// Seconds; kept out of the structured report so reruns compare equal.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub rank: usize,
    pub name: String,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaRow {
    pub method: PcaMethod,
    pub components: usize,
    pub best_kernel: KernelSpec,
    pub mean_accuracy: f64,
    pub metrics: Metrics,
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub dataset: String,
    pub instances: usize,
    pub class_names: Vec<String>,
    pub fs: f64,
    pub signal_len: usize,
    pub wavelet: Wavelet,
    pub warnings: Vec<String>,
    pub layers: Vec<LayerRecord>,
    pub halting_layer: u8,
    pub converged: bool,
    pub tau: f64,
    pub metric: MetricKind,
    pub protocol: String,
    pub seed: u64,
    pub recommended: Vec<Recommendation>,
    pub best_combination: Option<Combination>,
    pub pca: Vec<PcaRow>,
}

impl PipelineReport {
    pub fn halting_record(&self) -> Option<&LayerRecord> {
        self.layers.iter().find(|l| l.layer == self.halting_layer)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<PipelineReport, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("malformed report: {e}")))
    }
}

/// Signals that loaded, cut to a common length.
#[derive(Debug, Clone)]
pub struct LoadedDataset {
    pub signals: Vec<Signal>,
    pub fs: f64,
    pub warnings: Vec<String>,
}

/// Loads every manifest entry. Failing files are dropped with a warning;
/// longer signals are truncated to the shortest one so columns align.
pub fn load_signals(manifest: &DatasetManifest, fs_override: Option<f64>) -> Result<LoadedDataset, PipelineError> {
    let fs = fs_override
        .or(manifest.fs)
        .ok_or_else(|| PipelineError::Config("sampling rate unknown: set fs in the manifest or the config".into()))?;
    let mut warnings = Vec::new();
    let mut signals = Vec::new();
    for r in load_dataset(manifest, fs) {
        match r {
            Ok(s) => signals.push(s),
            Err(e) => warnings.push(format!("dropped signal: {e}")),
        }
    }
    if signals.is_empty() {
        return Err(PipelineError::NoSignals(warnings.len()));
    }
    let min = signals.iter().map(Signal::len).min().expect("non-empty");
    if signals.iter().any(|s| s.len() != min) {
        warnings.push(format!("signals have different lengths; truncated to {min} samples"));
        signals = signals
            .into_iter()
            .map(|s| {
                if s.len() == min {
                    Ok(s)
                } else {
                    Signal::new(s.samples()[..min].to_vec(), s.fs(), s.label(), s.source_id())
                }
            })
            .collect::<Result<_, _>>()?;
    }
    Ok(LoadedDataset { signals, fs, warnings })
}

struct Evaluated {
    record: LayerRecord,
    matrix: FeatureMatrix,
}

fn evaluate_layer(
    layer: u8,
    matrix: &FeatureMatrix,
    config: &PipelineConfig,
    grid: &[KernelSpec],
    folds: &FoldAssignment,
) -> Result<Evaluated, PipelineError> {
    let start = Instant::now();
    let metric = config.metric;
    let out = iterative_k(matrix, &config.selection(), |m, _z| -> Result<(f64, CvOutcome), PipelineError> {
        let cv = evaluate_cv(m, grid, folds)?;
        let score = match metric {
            MetricKind::Accuracy => cv.mean_accuracy,
            other => cv.metrics.get(other),
        };
        Ok((score, cv))
    })?;
    let descriptors = matrix.descriptors();
    let cv = out.evaluation;
    let record = LayerRecord {
        layer,
        feature_count: matrix.n_cols(),
        screened_count: out.candidates.len(),
        z_names: out.z.selected.iter().map(|&j| descriptors[j].name.clone()).collect(),
        x: out.x,
        y: out.y,
        z: out.z,
        k: out.k,
        score: out.score,
        converged: out.converged,
        best_kernel: cv.best,
        mean_accuracy: cv.mean_accuracy,
        metrics: cv.metrics,
        history: out.history,
        leakage_free: cv.leakage_free,
        dual_feasible: cv.dual_feasible,
        models_trained: cv.models_trained,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok(Evaluated {
        record,
        matrix: matrix.clone(),
    })
}

/// Every non-empty subset of `z` scored with one kernel. Best: highest mean
/// accuracy, then fewer features, then earliest subset in greedy order.
fn exhaustive_combination(
    matrix: &FeatureMatrix,
    z: &[usize],
    kernel: KernelSpec,
    folds: &FoldAssignment,
) -> Result<Combination, PipelineError> {
    let masks: Vec<u32> = (1..(1u32 << z.len())).collect();
    let scores: Vec<f64> = masks
        .par_iter()
        .map(|&mask| {
            let cols: Vec<usize> = (0..z.len()).filter(|b| mask >> b & 1 == 1).map(|b| z[b]).collect();
            evaluate_cv(&matrix.select_columns(&cols), &[kernel], folds).map(|cv| cv.mean_accuracy)
        })
        .collect::<Result<_, _>>()?;
    let rank = |mask: u32| (mask.count_ones(), mask.reverse_bits());
    let (best_mask, best_score) = masks
        .iter()
        .zip(&scores)
        .fold(None::<(u32, f64)>, |acc, (&m, &s)| match acc {
            Some((bm, bs)) if bs > s + 1e-12 || ((bs - s).abs() <= 1e-12 && rank(bm) <= rank(m)) => Some((bm, bs)),
            _ => Some((m, s)),
        })
        .expect("z is non-empty");
    let features: Vec<usize> = (0..z.len()).filter(|b| best_mask >> b & 1 == 1).map(|b| z[b]).collect();
    Ok(Combination {
        names: features.iter().map(|&j| matrix.descriptors()[j].name.clone()).collect(),
        features,
        kernel,
        mean_accuracy: best_score,
        subsets_evaluated: masks.len(),
    })
}

fn layer_of(n: u8) -> Layer {
    Layer::from_number(n).expect("validated layer number")
}

/// One wavelet for every fold, voted on the first split's training signals.
pub fn choose_wavelet(signals: &[Signal], folds: &FoldAssignment, candidates: &[Wavelet]) -> Result<Wavelet, PipelineError> {
    let train: Vec<Vec<f64>> = folds.splits[0]
        .train
        .iter()
        .map(|&i| mean_subtracted(signals[i].samples()))
        .collect();
    let refs: Vec<&[f64]> = train.iter().map(Vec::as_slice).collect();
    Ok(select_mother_wavelet_by_vote(&refs, candidates)?)
}

/// Runs the layered search over a manifest.
pub fn run_pipeline(manifest: &DatasetManifest, config: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    config.validate()?;
    let data = load_signals(manifest, config.fs)?;
    run_on_signals(&manifest.name, &manifest.label_names, data, config)
}

/// [`run_pipeline`] on signals already in memory.
pub fn run_on_signals(
    dataset: &str,
    class_names: &[String],
    data: LoadedDataset,
    config: &PipelineConfig,
) -> Result<PipelineReport, PipelineError> {
    config.validate()?;
    let LoadedDataset { signals, fs, warnings } = data;
    let labels: Vec<usize> = signals.iter().map(Signal::label).collect();
    let n = signals[0].len();
    let plan = config.window_plan(fs)?;
    if plan.count(n) == 0 {
        return Err(PipelineError::Config(format!(
            "signals of {n} samples hold no {}-sample window",
            plan.window_len
        )));
    }
    let folds = make_folds(&labels, config.protocol, config.seed)?;

    let wavelet = choose_wavelet(&signals, &folds, &config.wavelets)?;

    let extraction = ExtractionConfig {
        plan,
        fft_size: config.fft_size,
        wavelet,
        taper: Taper::Hann,
    };
    let grid = config.grid.specs();
    let mut report = PipelineReport {
        dataset: dataset.to_string(),
        instances: signals.len(),
        class_names: class_names.to_vec(),
        fs,
        signal_len: n,
        wavelet,
        warnings,
        layers: Vec::new(),
        halting_layer: 0,
        converged: false,
        tau: config.tau,
        metric: config.metric,
        protocol: config.protocol.name(),
        seed: config.seed,
        recommended: Vec::new(),
        best_combination: None,
        pca: Vec::new(),
    };

    let mut cumulative: Option<FeatureMatrix> = None;
    let mut layer1: Option<FeatureMatrix> = None;
    let mut best: Option<Evaluated> = None;
    for number in 1..=config.max_layer {
        let step = || -> Result<Evaluated, PipelineError> {
            let fresh = build_feature_matrix(&signals, &extraction, &[layer_of(number)])?;
            let matrix = match &cumulative {
                Some(prev) => prev.hstack(&fresh)?,
                None => fresh,
            };
            evaluate_layer(number, &matrix, config, &grid, &folds)
        };
        let evaluated = match step() {
            Ok(e) => e,
            Err(source) => {
                if let Some(b) = &best {
                    report.halting_layer = b.record.layer;
                }
                return Err(PipelineError::LayerFailed {
                    layer: number,
                    source: Box::new(source),
                    partial: Box::new(report),
                });
            }
        };
        report.layers.push(evaluated.record.clone());
        if number == 1 {
            layer1 = Some(evaluated.matrix.clone());
        }
        let converged = evaluated.record.converged;
        if best.as_ref().is_none_or(|b| evaluated.record.score > b.record.score) || converged {
            cumulative = Some(evaluated.matrix.clone());
            best = Some(evaluated);
        } else {
            cumulative = Some(evaluated.matrix);
        }
        if converged {
            break;
        }
    }

    let best = best.expect("at least one layer");
    report.halting_layer = best.record.layer;
    report.converged = best.record.converged;
    report.recommended = recommend_from(&best.record, best.matrix.descriptors(), usize::MAX);
    let z = &best.record.z.selected;
    if !z.is_empty() && z.len() <= config.exhaustive_limit {
        report.best_combination = Some(exhaustive_combination(&best.matrix, z, best.record.best_kernel, &folds)?);
    }
    if !config.pca_methods.is_empty() {
        let m = layer1.expect("layer 1 always runs");
        let p = pca_components(config.pca_components, report.recommended.len(), &m, &folds);
        report.pca = pca_rows(&m, p, &config.pca_methods, &folds, &grid)?;
    }
    Ok(report)
}

/// Requested components, clamped to what every split can support.
pub fn pca_components(requested: Option<usize>, recommended: usize, matrix: &FeatureMatrix, folds: &FoldAssignment) -> usize {
    let smallest_train = folds.splits.iter().map(|s| s.train.len()).min().unwrap_or(0);
    let max = smallest_train.saturating_sub(1).min(matrix.n_cols()).max(1);
    requested.unwrap_or(recommended.max(1)).min(max)
}

pub fn pca_rows(
    matrix: &FeatureMatrix,
    p: usize,
    methods: &[PcaMethod],
    folds: &FoldAssignment,
    grid: &[KernelSpec],
) -> Result<Vec<PcaRow>, PipelineError> {
    methods
        .iter()
        .map(|&method| {
            let out = pca_pipeline_with_grid(matrix, p, method, folds, grid)?;
            Ok(PcaRow {
                method,
                components: out.components,
                best_kernel: out.best,
                mean_accuracy: out.mean_accuracy,
                metrics: out.metrics,
                rank_deficient: out.rank_deficient,
            })
        })
        .collect()
}

fn recommend_from(record: &LayerRecord, descriptors: &[FeatureDescriptor], top: usize) -> Vec<Recommendation> {
    record
        .z
        .selected
        .iter()
        .take(top)
        .enumerate()
        .map(|(rank, &j)| Recommendation {
            rank: rank + 1,
            name: descriptors[j].name.clone(),
            explanation: descriptors[j].explain(),
        })
        .collect()
}

/// The halting layer's `z` in greedy order, cut to `top`.
pub fn recommend(report: &PipelineReport, top: usize) -> Result<Vec<Recommendation>, PipelineError> {
    if report.halting_record().is_none() || report.recommended.is_empty() {
        return Err(PipelineError::EmptyReport);
    }
    Ok(report.recommended.iter().take(top).cloned().collect())
}

/// Externally reported reference numbers for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceNumbers {
    /// Percent.
    pub accuracy: f64,
    pub features: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub soa_accuracy: Option<f64>,
    pub soa_features: Option<usize>,
    /// Percent.
    pub pipeline_accuracy: Option<f64>,
    pub pipeline_features: Option<usize>,
    pub pca_method: Option<PcaMethod>,
    pub pca_components: Option<usize>,
    /// Percent.
    pub pca_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

const MISSING: &str = "—";

fn cell<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| MISSING.to_string(), T::to_string)
}

fn percent(v: f64) -> f64 {
    (v * 10000.0).round() / 100.0
}

/// One row per PCA row (or a single row without PCA), each carrying the
/// reference numbers and the pipeline's own accuracy and feature count.
pub fn compare_report(report: Option<&PipelineReport>, pca: &[PcaRow], soa: Option<&ReferenceNumbers>, dataset: &str) -> ComparisonTable {
    let pipeline_accuracy = report.and_then(|r| r.halting_record()).map(|l| percent(l.mean_accuracy));
    let pipeline_features = report.and_then(|r| r.halting_record()).map(|l| l.z.len());
    let base = ComparisonRow {
        dataset: dataset.to_string(),
        soa_accuracy: soa.map(|s| s.accuracy),
        soa_features: soa.map(|s| s.features),
        pipeline_accuracy,
        pipeline_features,
        pca_method: None,
        pca_components: None,
        pca_accuracy: None,
    };
    let rows = if pca.is_empty() {
        vec![base]
    } else {
        pca.iter()
            .map(|p| ComparisonRow {
                pca_method: Some(p.method),
                pca_components: Some(p.components),
                pca_accuracy: Some(percent(p.mean_accuracy)),
                ..base.clone()
            })
            .collect()
    };
    ComparisonTable { rows }
}

impl ComparisonTable {
    pub const HEADER: [&'static str; 8] = [
        "dataset",
        "soa_accuracy",
        "soa_features",
        "recommended_accuracy",
        "recommended_features",
        "pca_method",
        "pca_components",
        "pca_accuracy",
    ];

    pub fn cells(row: &ComparisonRow) -> [String; 8] {
        [
            row.dataset.clone(),
            cell(&row.soa_accuracy),
            cell(&row.soa_features),
            cell(&row.pipeline_accuracy),
            cell(&row.pipeline_features),
            cell(&row.pca_method),
            cell(&row.pca_components),
            cell(&row.pca_accuracy),
        ]
    }

    /// Aligned plain-text table.
    pub fn render(&self) -> String {
        let body: Vec<[String; 8]> = self.rows.iter().map(Self::cells).collect();
        let mut widths = Self::HEADER.map(|h| h.chars().count());
        for r in &body {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| -> String {
            let padded: Vec<String> = cells
                .iter()
                .zip(widths)
                .map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&Self::HEADER.map(String::from));
        for r in &body {
            out.push_str(&line(r));
        }
        out
    }
}

/// Human-readable report. The only place wall times appear.
pub fn render_text(report: &PipelineReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dataset: {} ({} instances, {} samples at {} Hz)", report.dataset, report.instances, report.signal_len, report.fs);
    let _ = writeln!(s, "classes: {}", report.class_names.join(", "));
    let _ = writeln!(s, "protocol: {} (seed {})", report.protocol, report.seed);
    let _ = writeln!(s, "mother wavelet: {}", report.wavelet.as_str());
    let _ = writeln!(s, "target: {:?} >= {}", report.metric, report.tau);
    for w in &report.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    for l in &report.layers {
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "layer {}: {} features, {} after screening, k={} |z|={}",
            l.layer,
            l.feature_count,
            l.screened_count,
            l.k,
            l.z.len()
        );
        for h in &l.history {
            let _ = writeln!(s, "  k={:<3} |z|={:<3} score={:.4}", h.k, h.z_size, h.score);
        }
        let m = &l.metrics;
        let _ = writeln!(
            s,
            "  best kernel {}: score {:.4}, accuracy {:.4}, sensitivity {:.4}, specificity {:.4}, f-score {:.4}",
            l.best_kernel, l.score, l.mean_accuracy, m.sensitivity, m.specificity, m.f_score
        );
        let _ = writeln!(s, "  wall time {:.2} s", l.wall_time);
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "halting layer: {} ({})",
        report.halting_layer,
        if report.converged { "target reached" } else { "target not reached, best layer shown" }
    );
    let _ = writeln!(s, "recommended features:");
    for r in &report.recommended {
        let _ = writeln!(s, "  {:>2}. {}", r.rank, r.name);
        let _ = writeln!(s, "      {}", r.explanation);
    }
    if let Some(c) = &report.best_combination {
        let _ = writeln!(
            s,
            "best subset of z ({} subsets, kernel {}): accuracy {:.4} with {}",
            c.subsets_evaluated,
            c.kernel,
            c.mean_accuracy,
            c.names.join(", ")
        );
    }
    if !report.pca.is_empty() {
        let _ = writeln!(s);
        let table = compare_report(Some(report), &report.pca, None, &report.dataset);
        s.push_str(&table.render());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_bank::{Family, LineageStep};
    use crate::selection::Method;

    fn descriptor(name: &str) -> FeatureDescriptor {
        FeatureDescriptor {
            layer: 2,
            family: Family::Spectral,
            name: name.into(),
            lineage: vec![
                LineageStep::MeanSubtract,
                LineageStep::Window {
                    index: 7,
                    start: 896,
                    len: 256,
                },
                LineageStep::Spectrum { fft_size: 256 },
                LineageStep::Statistic {
                    kind: "spectral_centroid".into(),
                },
            ],
        }
    }

    fn record(z: Vec<usize>) -> LayerRecord {
        let sel = |method| SelectionResult {
            method,
            selected: z.clone(),
            step_scores: vec![0.0; z.len()],
            k: z.len(),
        };
        LayerRecord {
            layer: 2,
            feature_count: 10,
            screened_count: 10,
            x: sel(Method::Mrmr),
            y: sel(Method::Mrms),
            z: sel(Method::Union),
            z_names: Vec::new(),
            k: z.len(),
            score: 0.97,
            converged: true,
            best_kernel: KernelSpec::linear(1.0),
            mean_accuracy: 0.97,
            metrics: Metrics::from_counts(9, 1, 8, 2),
            history: Vec::new(),
            leakage_free: true,
            dual_feasible: true,
            models_trained: 1,
            wall_time: 1.5,
        }
    }

    fn report(z: Vec<usize>) -> PipelineReport {
        let descriptors: Vec<FeatureDescriptor> = (0..5).map(|j| descriptor(&format!("f{j}"))).collect();
        let rec = record(z);
        PipelineReport {
            dataset: "toy".into(),
            instances: 20,
            class_names: vec!["a".into(), "b".into()],
            fs: 256.0,
            signal_len: 1024,
            wavelet: Wavelet::Db4,
            warnings: Vec::new(),
            recommended: recommend_from(&rec, &descriptors, usize::MAX),
            layers: vec![rec],
            halting_layer: 2,
            converged: true,
            tau: 0.95,
            metric: MetricKind::Accuracy,
            protocol: "stratified-5".into(),
            seed: 0,
            best_combination: None,
            pca: Vec::new(),
        }
    }

    #[test]
    fn recommend_truncates_in_greedy_order() {
        let r = report(vec![3, 1]);
        let top = recommend(&r, 1).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].name, "f3");
        assert_eq!(recommend(&r, 10).unwrap().len(), 2);
        let text = &top[0].explanation;
        assert!(text.contains("layer=2"));
        assert!(text.contains("transform=stft"));
        assert!(text.contains("window=7"));
    }

    #[test]
    fn empty_report() {
        let mut r = report(vec![]);
        assert!(matches!(recommend(&r, 3), Err(PipelineError::EmptyReport)));
        r.layers.clear();
        assert!(matches!(recommend(&r, 3), Err(PipelineError::EmptyReport)));
    }

    #[test]
    fn comparison_cells() {
        let r = report(vec![3, 1]);
        let soa = ReferenceNumbers {
            accuracy: 99.38,
            features: 15,
        };
        let t = compare_report(Some(&r), &[], Some(&soa), "NASA");
        let cells = ComparisonTable::cells(&t.rows[0]);
        assert_eq!(cells[1], "99.38");
        assert_eq!(cells[2], "15");
        assert_eq!(cells[3], "97");
        assert_eq!(cells[4], "2");
        let bp = ReferenceNumbers {
            accuracy: 79.5,
            features: 23,
        };
        let cells = ComparisonTable::cells(&compare_report(None, &[], Some(&bp), "BP").rows[0]);
        assert_eq!((cells[1].as_str(), cells[2].as_str()), ("79.5", "23"));
        let t = compare_report(Some(&r), &[], None, "x");
        let line: Vec<String> = t.render().lines().nth(1).unwrap().split_whitespace().map(String::from).collect();
        assert_eq!(line, ["x", "—", "—", "97", "2", "—", "—", "—"]);
        assert_eq!(ComparisonTable::cells(&t.rows[0])[1], "—");
    }

    #[test]
    fn wall_time_stays_out_of_json() {
        let r = report(vec![0]);
        let json = r.to_json();
        assert!(!json.contains("wall_time"));
        let back = PipelineReport::from_json(&json).unwrap();
        assert_eq!(back.layers[0].wall_time, 0.0);
        assert!(render_text(&r).contains("wall time 1.50 s"));
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let zero = PipelineConfig {
            tau: 0.0,
            ..Default::default()
        };
        assert!(zero.validate().is_ok());
        for tau in [-0.1, 1.5, f64::NAN] {
            let c = PipelineConfig {
                tau,
                ..Default::default()
            };
            assert!(c.validate().is_err());
        }
        let c = PipelineConfig {
            k_schedule: vec![5, 5],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = PipelineConfig {
            fft_size: 100,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_toml_round_trip() {
        let c = PipelineConfig {
            protocol: FoldProtocol::Bp3Set,
            pca_methods: vec![PcaMethod::Svd],
            ..Default::default()
        };
        let text = toml::to_string(&c).unwrap();
        assert!(text.contains("protocol = \"bp-3set\""));
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), c);
        assert!(toml::from_str::<PipelineConfig>("tau = 0.9\nbogus = 1\n").is_err());
    }
}
