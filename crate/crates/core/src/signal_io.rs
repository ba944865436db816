//! Loading labeled 1-D signals from disk, plus the windowing primitives the
//! rest of the crate builds on.
//!
//! Two text formats are understood:
//!
//! * a manifest CSV with header `path,label`, one row per signal file. Leading
//!   `# key: value` lines carry dataset metadata (`fs`, `name`). Relative paths
//!   are resolved against the manifest's directory.
//! * a signal file holding one numeric sample per line. Lines starting with `#`
//!   and blank lines are ignored.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SignalError {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("malformed manifest: {0}")]
    MalformedManifest(String),

    #[error("duplicate path in manifest: {}", .0.display())]
    DuplicatePath(PathBuf),

    #[error("manifest contains a single class; at least two labels are required")]
    SingleClassDataset,

    #[error("non-numeric sample at line {line} of {}", path.display())]
    NonNumericSample { path: PathBuf, line: usize },

    #[error("non-finite sample at line {line} of {}", path.display())]
    NonFiniteSample { path: PathBuf, line: usize },

    #[error("signal has no samples")]
    EmptySignal,

    #[error("signal contains a non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("sampling rate must be positive and finite, got {0}")]
    InvalidRate(f64),

    #[error("window of {window_len} samples does not fit a signal of {len} samples")]
    WindowTooLong { window_len: usize, len: usize },

    #[error("invalid window plan: {0}")]
    InvalidWindowPlan(String),
}

pub type Result<T> = std::result::Result<T, SignalError>;

/// One labeled 1-D sensor record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    samples: Vec<f64>,
    fs: f64,
    label: usize,
    source_id: String,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64, label: usize, source_id: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(SignalError::EmptySignal);
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(SignalError::NonFinite(i));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(SignalError::InvalidRate(fs));
        }
        Ok(Self {
            samples,
            fs,
            label,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn windows(&self, plan: &WindowPlan) -> Result<Vec<&[f64]>> {
        windows(&self.samples, plan)
    }
}

/// Window length and hop, both in samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_len: usize,
    pub hop: usize,
}

impl WindowPlan {
    pub fn new(window_len: usize, hop: usize) -> Result<Self> {
        if window_len == 0 || hop == 0 {
            return Err(SignalError::InvalidWindowPlan(
                "window length and hop must be positive".into(),
            ));
        }
        if hop > window_len {
            return Err(SignalError::InvalidWindowPlan(format!(
                "hop {hop} exceeds window length {window_len}"
            )));
        }
        Ok(Self { window_len, hop })
    }

    /// One-second windows with 50% overlap.
    pub fn one_second(fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(SignalError::InvalidRate(fs));
        }
        let window_len = (fs.round() as usize).max(1);
        Self::new(window_len, (window_len / 2).max(1))
    }

    /// Number of full windows that fit in `n` samples.
    pub fn count(&self, n: usize) -> usize {
        if n < self.window_len {
            0
        } else {
            (n - self.window_len) / self.hop + 1
        }
    }

    pub fn starts(&self, n: usize) -> Vec<usize> {
        (0..self.count(n)).map(|i| i * self.hop).collect()
    }
}

/// Full windows over `samples`; a trailing partial window is dropped.
pub fn windows<'a>(samples: &'a [f64], plan: &WindowPlan) -> Result<Vec<&'a [f64]>> {
    if plan.window_len > samples.len() {
        return Err(SignalError::WindowTooLong {
            window_len: plan.window_len,
            len: samples.len(),
        });
    }
    Ok(plan
        .starts(samples.len())
        .into_iter()
        .map(|s| &samples[s..s + plan.window_len])
        .collect())
}

pub fn mean_subtract(signal: &Signal) -> Signal {
    Signal {
        samples: mean_subtracted(&signal.samples),
        fs: signal.fs,
        label: signal.label,
        source_id: signal.source_id.clone(),
    }
}

/// Subtracts the arithmetic mean. A second correction pass removes the
/// rounding residue of the first.
pub fn mean_subtracted(samples: &[f64]) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let mut out: Vec<f64> = samples.iter().map(|v| v - mean).collect();
    let residue = out.iter().sum::<f64>() / n;
    out.iter_mut().for_each(|v| *v -= residue);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    /// Sampling rate shared by every entry, when the manifest declares one.
    pub fs: Option<f64>,
    pub entries: Vec<ManifestEntry>,
    /// Original label strings, indexed by contiguous label id.
    pub label_names: Vec<String>,
}

impl DatasetManifest {
    /// Builds a manifest from `(path, label string)` pairs, mapping labels to
    /// contiguous ids in order of first appearance.
    pub fn from_entries<I, P, S>(name: impl Into<String>, fs: Option<f64>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (P, S)>,
        P: Into<PathBuf>,
        S: AsRef<str>,
    {
        let mut label_names: Vec<String> = Vec::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut seen: HashSet<PathBuf> = HashSet::new();
        let mut out = Vec::new();
        for (row, (path, label)) in entries.into_iter().enumerate() {
            let path: PathBuf = path.into();
            let label = label.as_ref().trim();
            if path.as_os_str().is_empty() {
                return Err(SignalError::MalformedRow {
                    row: row + 1,
                    reason: "empty path".into(),
                });
            }
            if label.is_empty() {
                return Err(SignalError::MalformedRow {
                    row: row + 1,
                    reason: "empty label".into(),
                });
            }
            if !seen.insert(path.clone()) {
                return Err(SignalError::DuplicatePath(path));
            }
            let id = *ids.entry(label.to_string()).or_insert_with(|| {
                label_names.push(label.to_string());
                label_names.len() - 1
            });
            out.push(ManifestEntry { path, label: id });
        }
        if let Some(fs) = fs {
            if !(fs.is_finite() && fs > 0.0) {
                return Err(SignalError::InvalidRate(fs));
            }
        }
        if label_names.len() < 2 {
            return Err(SignalError::SingleClassDataset);
        }
        Ok(Self {
            name: name.into(),
            fs,
            entries: out,
            label_names,
        })
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn class_count(&self) -> usize {
        self.label_names.len()
    }
}

/// Reads and validates a manifest CSV. Every listed signal file must exist.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = read_text(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();

    let mut fs_meta = None;
    let mut name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    let mut body = String::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if let Some(meta) = trimmed.strip_prefix('#') {
            if let Some((key, value)) = meta.split_once(':') {
                match key.trim() {
                    "fs" => {
                        let v: f64 = value.trim().parse().map_err(|_| {
                            SignalError::MalformedManifest(format!("bad fs value {:?}", value.trim()))
                        })?;
                        fs_meta = Some(v);
                    }
                    "name" => name = value.trim().to_string(),
                    _ => {}
                }
            }
            continue;
        }
        body.push_str(line);
        body.push('\n');
    }

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| SignalError::MalformedManifest(e.to_string()))?
        .clone();
    if headers.len() < 2 || &headers[0] != "path" || &headers[1] != "label" {
        return Err(SignalError::MalformedManifest(
            "expected header `path,label`".into(),
        ));
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| SignalError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        if record.len() != 2 {
            return Err(SignalError::MalformedRow {
                row,
                reason: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let raw = record[0].trim();
        if raw.is_empty() {
            return Err(SignalError::MalformedRow {
                row,
                reason: "empty path".into(),
            });
        }
        let p = PathBuf::from(raw);
        let resolved = if p.is_absolute() { p } else { base.join(p) };
        rows.push((resolved, record[1].to_string()));
    }

    let manifest = DatasetManifest::from_entries(name, fs_meta, rows)?;
    for entry in &manifest.entries {
        if !entry.path.is_file() {
            return Err(SignalError::MissingFile(entry.path.clone()));
        }
    }
    Ok(manifest)
}

/// Writes `manifest` as CSV. Paths under the manifest's directory are written
/// relative to it.
pub fn save_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut out = Vec::new();
    writeln!(out, "# name: {}", manifest.name).expect("write to vec");
    if let Some(fs) = manifest.fs {
        writeln!(out, "# fs: {fs}").expect("write to vec");
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["path", "label"]).expect("write to vec");
        for e in &manifest.entries {
            let rel = e.path.strip_prefix(&base).unwrap_or(&e.path);
            w.write_record([
                rel.to_string_lossy().as_ref(),
                manifest.label_names[e.label].as_str(),
            ])
            .expect("write to vec");
        }
        w.flush().map_err(|source| SignalError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, out).map_err(|source| SignalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_signal(path: &Path, fs: f64, label: usize) -> Result<Signal> {
    let text = read_text(path)?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| SignalError::NonNumericSample {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        if !v.is_finite() {
            return Err(SignalError::NonFiniteSample {
                path: path.to_path_buf(),
                line: i + 1,
            });
        }
        samples.push(v);
    }
    Signal::new(samples, fs, label, path.to_string_lossy())
}

/// Writes one sample per line using the shortest round-tripping decimal form.
pub fn save_signal(samples: &[f64], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(samples.len() * 20);
    for v in samples {
        out.push_str(&format!("{v}\n"));
    }
    fs::write(path, out).map_err(|source| SignalError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads every manifest entry in parallel, keeping manifest order.
pub fn load_dataset(manifest: &DatasetManifest, fs: f64) -> Vec<Result<Signal>> {
    manifest
        .entries
        .par_iter()
        .map(|e| load_signal(&e.path, fs, e.label))
        .collect()
}

fn read_text(path: &Path) -> Result<String> {
    match fs::read_to_string(path) {
        Ok(t) => Ok(t),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(SignalError::MissingFile(path.to_path_buf()))
        }
        Err(source) => Err(SignalError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}
