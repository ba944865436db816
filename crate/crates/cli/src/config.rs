//! TOML run configuration. Every key is optional; command-line flags win
//! over file values, and the merged result is written next to the outputs.

use std::path::{Path, PathBuf};

use featforge_core::pipeline::PipelineConfig;
use featforge_core::synth::Recipe;
use featforge_core::transforms::Wavelet;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const RESOLVED_CONFIG: &str = "resolved-config.toml";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// Not echoed: outputs must not depend on it.
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
    pub pipeline: PipelineConfig,
    pub extract: ExtractSection,
    pub baseline: BaselineSection,
    pub synth: SynthSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractSection {
    pub layers: Vec<u8>,
    /// Fixed mother wavelet; voted on the first training split when absent.
    pub wavelet: Option<Wavelet>,
}

impl Default for ExtractSection {
    fn default() -> Self {
        Self {
            layers: vec![1],
            wavelet: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    /// Method names; kept as text so unsupported ones get a clear message.
    pub methods: Vec<String>,
    pub components: Option<usize>,
    /// Pipeline report whose accuracy and feature count join the table.
    pub report: Option<PathBuf>,
    pub dataset: Option<String>,
    pub soa_accuracy: Option<f64>,
    pub soa_features: Option<usize>,
}

impl Default for BaselineSection {
    fn default() -> Self {
        Self {
            methods: vec!["svd".into()],
            components: None,
            report: None,
            dataset: None,
            soa_accuracy: None,
            soa_features: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub recipe: Option<Recipe>,
    pub per_class: Option<usize>,
    pub n: Option<usize>,
    pub fs: Option<f64>,
    pub noise_sigma: Option<f64>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, Failure> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Validation(format!("config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn write_resolved(&self, dir: &Path) -> Result<(), Failure> {
        crate::write_file(&dir.join(RESOLVED_CONFIG), &self.to_toml())
    }
}
