//! `featforge` command-line front-end.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 runtime
//! failure, 4 the pipeline finished without reaching its target.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use featforge_core::baseline_pca::{PcaError, PcaMethod};
use featforge_core::classifier::{make_folds, ClassifierError, FoldProtocol, MetricKind};
use featforge_core::feature_bank::{build_feature_matrix, feature_budget_with, ExtractionConfig, Layer};
use featforge_core::pipeline::{
    choose_wavelet, compare_report, load_signals, pca_components, pca_rows, recommend, render_text, run_pipeline,
    ComparisonTable, KernelGrid, PipelineError, PipelineReport, ReferenceNumbers,
};
use featforge_core::selection::SelectionError;
use featforge_core::signal_io::{load_manifest, WindowPlan};
use featforge_core::synth::{self, Recipe, SynthError, SynthSpec};
use featforge_core::transforms::{Taper, Wavelet};

use config::RunConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_NOT_CONVERGED: i32 = 4;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const FEATURES_CSV: &str = "features.csv";
pub const FEATURES_JSON: &str = "features.json";
pub const COMPARISON_JSON: &str = "comparison.json";
pub const COMPARISON_TEXT: &str = "comparison.txt";

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => EXIT_VALIDATION,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let msg = e.to_string();
        match e {
            PipelineError::Config(_)
            | PipelineError::Signal(_)
            | PipelineError::Selection(_)
            | PipelineError::Pca(PcaError::UnsupportedMethod(_) | PcaError::InvalidComponents { .. })
            | PipelineError::Classifier(
                ClassifierError::ProtocolCompositionImpossible(_)
                | ClassifierError::UnknownProtocol(_)
                | ClassifierError::InvalidKernel(_)
                | ClassifierError::SingleClass,
            ) => Failure::Validation(msg),
            _ => Failure::Runtime(msg),
        }
    }
}

impl From<SelectionError> for Failure {
    fn from(e: SelectionError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(m) => Failure::Validation(m),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

#[derive(Debug, Parser)]
#[command(name = "featforge", version, about = "Layered feature engineering for labeled 1-D signals")]
pub struct Cli {
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic dataset.
    Synth(SynthArgs),
    /// Extract feature layers into CSV plus a descriptor sidecar.
    Extract(ExtractArgs),
    /// Run the layered search and write the report.
    Run(RunArgs),
    /// PCA baseline comparison.
    Baseline(BaselineArgs),
    /// Feature-count estimate for a signal length and sampling rate.
    Budget(BudgetArgs),
    /// Render a saved report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub recipe: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub fs: Option<f64>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
}

/// Options shared by every command that reads a manifest.
#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sampling rate, overriding the manifest.
    #[arg(long)]
    pub fs: Option<f64>,
    /// `stratified-K`, `bearing-5fold` or `bp-3set`.
    #[arg(long)]
    pub protocol: Option<String>,
    #[arg(long)]
    pub window_len: Option<usize>,
    #[arg(long)]
    pub hop: Option<usize>,
    #[arg(long)]
    pub fft_size: Option<usize>,
    /// Comma-separated mother-wavelet candidates.
    #[arg(long, value_delimiter = ',')]
    pub wavelets: Option<Vec<String>>,
    /// `full`, `rbf` or `linear`.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated layers, e.g. `1,2`.
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<u8>>,
    #[arg(long)]
    pub wavelet: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub tau: Option<f64>,
    /// `accuracy`, `sensitivity`, `specificity` or `f_score`.
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub k_schedule: Option<Vec<usize>>,
    #[arg(long)]
    pub max_layer: Option<u8>,
    #[arg(long)]
    pub prescreen: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub exhaustive_limit: Option<usize>,
    /// PCA baselines to add to the report, e.g. `svd,eig`.
    #[arg(long, value_delimiter = ',')]
    pub pca: Option<Vec<String>>,
    #[arg(long)]
    pub pca_components: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `svd` or `eig`; repeat or separate with commas for several rows.
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<String>>,
    #[arg(long)]
    pub components: Option<usize>,
    /// Pipeline report supplying the recommended accuracy and feature count.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<String>,
    /// Externally reported accuracy, percent.
    #[arg(long)]
    pub soa_accuracy: Option<f64>,
    #[arg(long)]
    pub soa_features: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub n: i64,
    #[arg(long, allow_hyphen_values = true)]
    pub fs: f64,
    #[arg(long)]
    pub window_len: Option<usize>,
    #[arg(long)]
    pub hop: Option<usize>,
    #[arg(long, default_value_t = 256)]
    pub fft_size: usize,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Structured report written by `run`.
    #[arg(long)]
    pub report: PathBuf,
    /// Number of recommended features to list.
    #[arg(long)]
    pub top: Option<usize>,
    /// Comparison written by `baseline`, appended as a table.
    #[arg(long)]
    pub comparison: Option<PathBuf>,
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e| Failure::Validation(format!("{what}: {e}")))
}

fn parse_grid(s: &str) -> Result<KernelGrid, Failure> {
    match s {
        "full" => Ok(KernelGrid::Full),
        "rbf" => Ok(KernelGrid::Rbf),
        "linear" => Ok(KernelGrid::Linear),
        other => Err(Failure::Validation(format!("unknown kernel grid {other:?}"))),
    }
}

fn parse_methods(names: &[String]) -> Result<Vec<PcaMethod>, Failure> {
    if names.is_empty() {
        return Err(Failure::Validation("no PCA method given".into()));
    }
    names
        .iter()
        .map(|m| m.parse::<PcaMethod>().map_err(|e| Failure::Validation(e.to_string())))
        .collect()
}

impl DataArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut c = RunConfig::load(self.config.as_deref())?;
        if self.manifest.is_some() {
            c.manifest.clone_from(&self.manifest);
        }
        if self.out.is_some() {
            c.out.clone_from(&self.out);
        }
        let p = &mut c.pipeline;
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if self.fs.is_some() {
            p.fs = self.fs;
        }
        if let Some(v) = &self.protocol {
            p.protocol = parse::<FoldProtocol>("protocol", v)?;
        }
        if self.window_len.is_some() {
            p.window_len = self.window_len;
        }
        if self.hop.is_some() {
            p.hop = self.hop;
        }
        if let Some(v) = self.fft_size {
            p.fft_size = v;
        }
        if let Some(ws) = &self.wavelets {
            p.wavelets = ws.iter().map(|w| parse::<Wavelet>("wavelet", w)).collect::<Result<_, _>>()?;
        }
        if let Some(g) = &self.grid {
            p.grid = parse_grid(g)?;
        }
        Ok(c)
    }
}

fn required<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, Failure> {
    v.as_deref()
        .ok_or_else(|| Failure::Validation(format!("missing --{flag} (or `{flag}` in the config file)")))
}

fn cmd_synth(args: &SynthArgs) -> Result<i32, Failure> {
    let mut c = RunConfig::load(args.config.as_deref())?;
    if args.out.is_some() {
        c.out.clone_from(&args.out);
    }
    if let Some(r) = &args.recipe {
        c.synth.recipe = Some(parse::<Recipe>("recipe", r)?);
    }
    if let Some(s) = args.seed {
        c.pipeline.seed = s;
    }
    let s = &mut c.synth;
    let recipe = s
        .recipe
        .ok_or_else(|| Failure::Validation("missing --recipe".into()))?;
    let defaults = SynthSpec::defaults(recipe);
    s.per_class = args.per_class.or(s.per_class).or(Some(defaults.per_class));
    s.n = args.n.or(s.n).or(Some(defaults.n));
    s.fs = args.fs.or(s.fs).or(Some(defaults.fs));
    s.noise_sigma = args.noise_sigma.or(s.noise_sigma).or(Some(defaults.noise_sigma));
    let spec = SynthSpec {
        recipe,
        per_class: s.per_class.expect("filled"),
        n: s.n.expect("filled"),
        fs: s.fs.expect("filled"),
        noise_sigma: s.noise_sigma.expect("filled"),
        seed: c.pipeline.seed,
    };
    spec.validate()?;
    let out = required(&c.out, "out")?.to_path_buf();
    synth::generate(&spec, &out)?;
    c.write_resolved(&out)?;
    println!("wrote {} instances of {} to {}", spec.instances(), recipe, out.display());
    Ok(EXIT_OK)
}

fn extraction_config(c: &RunConfig, fs: f64, wavelet: Wavelet) -> Result<ExtractionConfig, Failure> {
    Ok(ExtractionConfig {
        plan: c.pipeline.window_plan(fs)?,
        fft_size: c.pipeline.fft_size,
        wavelet,
        taper: Taper::Hann,
    })
}

fn cmd_extract(args: &ExtractArgs) -> Result<i32, Failure> {
    let mut c = args.data.resolve()?;
    if let Some(l) = &args.layers {
        c.extract.layers.clone_from(l);
    }
    if let Some(w) = &args.wavelet {
        c.extract.wavelet = Some(parse::<Wavelet>("wavelet", w)?);
    }
    c.pipeline.validate()?;
    let mut layers = Vec::new();
    for &l in &c.extract.layers {
        let layer = Layer::from_number(l).ok_or_else(|| Failure::Validation(format!("unknown layer {l}")))?;
        if !layers.contains(&layer) {
            layers.push(layer);
        }
    }
    if layers.is_empty() {
        return Err(Failure::Validation("no layer requested".into()));
    }
    layers.sort_by_key(|l| l.number());
    let manifest = load_manifest(required(&c.manifest, "manifest")?).map_err(PipelineError::from)?;
    let out = required(&c.out, "out")?.to_path_buf();
    let data = load_signals(&manifest, c.pipeline.fs)?;
    for w in &data.warnings {
        eprintln!("warning: {w}");
    }
    let wavelet = match c.extract.wavelet {
        Some(w) => w,
        None => {
            let labels: Vec<usize> = data.signals.iter().map(|s| s.label()).collect();
            let folds = make_folds(&labels, c.pipeline.protocol, c.pipeline.seed).map_err(PipelineError::from)?;
            choose_wavelet(&data.signals, &folds, &c.pipeline.wavelets)?
        }
    };
    let extraction = extraction_config(&c, data.fs, wavelet)?;
    let matrix = build_feature_matrix(&data.signals, &extraction, &layers)
        .map_err(|e| Failure::Runtime(format!("extraction failed: {e}")))?;
    create_dir(&out)?;
    let io = |e: featforge_core::feature_bank::FeatureError| Failure::Runtime(e.to_string());
    matrix.write_csv(&out.join(FEATURES_CSV)).map_err(io)?;
    matrix.write_descriptors(&out.join(FEATURES_JSON)).map_err(io)?;
    c.extract.wavelet = Some(wavelet);
    c.write_resolved(&out)?;
    println!(
        "wrote {} rows x {} features (wavelet {wavelet}) to {}",
        matrix.n_rows(),
        matrix.n_cols(),
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_run(args: &RunArgs) -> Result<i32, Failure> {
    let mut c = args.data.resolve()?;
    let p = &mut c.pipeline;
    if let Some(v) = args.tau {
        p.tau = v;
    }
    if let Some(m) = &args.metric {
        p.metric = parse::<MetricKind>("metric", m)?;
    }
    if let Some(k) = &args.k_schedule {
        p.k_schedule.clone_from(k);
    }
    if let Some(v) = args.max_layer {
        p.max_layer = v;
    }
    if let Some(v) = args.prescreen {
        p.prescreen = v;
    }
    if let Some(v) = args.bins {
        p.bins = v;
    }
    if let Some(v) = args.beta {
        p.beta = v;
    }
    if let Some(v) = args.exhaustive_limit {
        p.exhaustive_limit = v;
    }
    if let Some(m) = &args.pca {
        p.pca_methods = parse_methods(m)?;
    }
    if args.pca_components.is_some() {
        p.pca_components = args.pca_components;
    }
    c.pipeline.validate()?;
    let manifest = load_manifest(required(&c.manifest, "manifest")?).map_err(PipelineError::from)?;
    let out = required(&c.out, "out")?.to_path_buf();
    create_dir(&out)?;
    c.write_resolved(&out)?;
    let report = match run_pipeline(&manifest, &c.pipeline) {
        Ok(r) => r,
        Err(PipelineError::LayerFailed { layer, source, partial }) => {
            write_report(&out, &partial)?;
            return Err(Failure::Runtime(format!(
                "layer {layer} failed: {source}; partial report written to {}",
                out.display()
            )));
        }
        Err(e) => return Err(e.into()),
    };
    write_report(&out, &report)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let halting = report.halting_record().expect("finished report has a halting layer");
    println!(
        "halting layer {} with {:?} {:.4} ({})",
        report.halting_layer,
        report.metric,
        halting.score,
        if report.converged { "target reached" } else { "target not reached" }
    );
    for r in &report.recommended {
        println!("  {:>2}. {}", r.rank, r.name);
    }
    Ok(if report.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

fn write_report(out: &Path, report: &PipelineReport) -> Result<(), Failure> {
    write_file(&out.join(REPORT_JSON), &report.to_json())?;
    write_file(&out.join(REPORT_TEXT), &render_text(report))
}

fn read_report(path: &Path) -> Result<PipelineReport, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read report {}: {e}", path.display())))?;
    PipelineReport::from_json(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

fn cmd_baseline(args: &BaselineArgs) -> Result<i32, Failure> {
    let mut c = args.data.resolve()?;
    let b = &mut c.baseline;
    if let Some(m) = &args.method {
        b.methods.clone_from(m);
    }
    if args.components.is_some() {
        b.components = args.components;
    }
    if args.report.is_some() {
        b.report.clone_from(&args.report);
    }
    if args.dataset.is_some() {
        b.dataset.clone_from(&args.dataset);
    }
    if args.soa_accuracy.is_some() {
        b.soa_accuracy = args.soa_accuracy;
    }
    if args.soa_features.is_some() {
        b.soa_features = args.soa_features;
    }
    let methods = parse_methods(&c.baseline.methods)?;
    if c.baseline.components == Some(0) {
        return Err(Failure::Validation("--components must be positive".into()));
    }
    let soa = match (c.baseline.soa_accuracy, c.baseline.soa_features) {
        (Some(accuracy), Some(features)) => Some(ReferenceNumbers { accuracy, features }),
        (None, None) => None,
        _ => return Err(Failure::Validation("--soa-accuracy and --soa-features go together".into())),
    };
    c.pipeline.validate()?;
    let report = c.baseline.report.as_deref().map(read_report).transpose()?;
    let manifest = load_manifest(required(&c.manifest, "manifest")?).map_err(PipelineError::from)?;
    let out = required(&c.out, "out")?.to_path_buf();
    let data = load_signals(&manifest, c.pipeline.fs)?;
    let labels: Vec<usize> = data.signals.iter().map(|s| s.label()).collect();
    let folds = make_folds(&labels, c.pipeline.protocol, c.pipeline.seed).map_err(PipelineError::from)?;
    let wavelet = match c.extract.wavelet {
        Some(w) => w,
        None => choose_wavelet(&data.signals, &folds, &c.pipeline.wavelets)?,
    };
    let extraction = extraction_config(&c, data.fs, wavelet)?;
    let matrix = build_feature_matrix(&data.signals, &extraction, &[Layer::L1]).map_err(PipelineError::from)?;
    let recommended = report.as_ref().map_or(10, |r| r.recommended.len());
    let p = pca_components(c.baseline.components, recommended, &matrix, &folds);
    if let Some(asked) = c.baseline.components {
        if asked != p {
            eprintln!("warning: {asked} components requested, {p} fit every training split");
        }
    }
    let rows = pca_rows(&matrix, p, &methods, &folds, &c.pipeline.grid.specs())?;
    let dataset = c.baseline.dataset.clone().unwrap_or_else(|| manifest.name.clone());
    let table = compare_report(report.as_ref(), &rows, soa.as_ref(), &dataset);
    create_dir(&out)?;
    let json = serde_json::to_string_pretty(&serde_json::json!({ "pca": rows, "table": table }))
        .expect("comparison serializes")
        + "\n";
    write_file(&out.join(COMPARISON_JSON), &json)?;
    let text = table.render();
    write_file(&out.join(COMPARISON_TEXT), &text)?;
    c.write_resolved(&out)?;
    print!("{text}");
    Ok(EXIT_OK)
}

fn cmd_budget(args: &BudgetArgs) -> Result<i32, Failure> {
    if args.n <= 0 {
        return Err(Failure::Validation(format!("--n must be positive, got {}", args.n)));
    }
    if !(args.fs.is_finite() && args.fs > 0.0) {
        return Err(Failure::Validation(format!("--fs must be positive, got {}", args.fs)));
    }
    let default = WindowPlan::one_second(args.fs).map_err(|e| Failure::Validation(e.to_string()))?;
    let len = args.window_len.unwrap_or(default.window_len);
    let plan = WindowPlan::new(len, args.hop.unwrap_or((len / 2).max(1))).map_err(|e| Failure::Validation(e.to_string()))?;
    let budget = feature_budget_with(args.n as u64, args.fs, &plan, args.fft_size);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&budget).expect("budget serializes"));
    } else {
        println!("{budget}");
    }
    Ok(EXIT_OK)
}

fn cmd_report(args: &ReportArgs) -> Result<i32, Failure> {
    let report = read_report(&args.report)?;
    print!("{}", render_text(&report));
    if let Some(top) = args.top {
        let recs = recommend(&report, top).map_err(|e| Failure::Validation(e.to_string()))?;
        println!();
        println!("top {} recommended features:", recs.len());
        for r in recs {
            println!("  {:>2}. {}  [{}]", r.rank, r.name, r.explanation);
        }
    }
    if let Some(path) = &args.comparison {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Validation(format!("cannot read comparison {}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        let table: ComparisonTable = serde_json::from_value(value["table"].clone())
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        println!();
        print!("{}", table.render());
    }
    Ok(EXIT_OK)
}

fn dispatch(command: &Command) -> Result<i32, Failure> {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Extract(a) => cmd_extract(a),
        Command::Run(a) => cmd_run(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Budget(a) => cmd_budget(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Errors are printed to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(Failure::Validation("--jobs must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command)),
            Err(e) => Err(Failure::Runtime(format!("cannot start {n} workers: {e}"))),
        },
        None => dispatch(&cli.command),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failure_classes() {
        let v: Failure = PipelineError::Config("x".into()).into();
        assert_eq!(v.exit_code(), EXIT_VALIDATION);
        let v: Failure = PipelineError::Pca(PcaError::UnsupportedMethod("als".into())).into();
        assert_eq!(v.exit_code(), EXIT_VALIDATION);
        let r: Failure = PipelineError::NoSignals(3).into();
        assert_eq!(r.exit_code(), EXIT_RUNTIME);
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
