//! Layered run configuration: built-in defaults, then a TOML file, then
//! `section.key=value` overrides from the command line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assoc::AssocConfig;
use crate::motion::KalmanConfig;
use crate::points::OracleNoiseConfig;
pub use crate::pipeline::PipelineMode;
use crate::pipeline::PipelineConfig;
use crate::sampler::SamplerConfig;
use crate::simulator::ScenarioConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Parse(String),
    #[error("override '{0}': expected section.key=value")]
    Override(String),
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub stride: usize,
    pub mode: PipelineMode,
    /// Snap radius (px) when answering queries from point-track files.
    pub snap_radius: f64,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            stride: 8,
            mode: PipelineMode::Finenet,
            snap_radius: 4.0,
        }
    }
}

/// The benchmark sweep: seeds and the axes varied across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub seeds: usize,
    pub base_seed: u64,
    pub decimation: Vec<usize>,
    pub poi_counts: Vec<usize>,
    pub modes: Vec<PipelineMode>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seeds: 20,
            base_seed: 0,
            decimation: vec![1, 2, 4, 8],
            poi_counts: vec![1, 4, 9, 16],
            modes: PipelineMode::ALL.to_vec(),
        }
    }
}

impl SuiteConfig {
    /// Scenario seed of the `k`-th sequence.
    pub fn seed(&self, k: usize) -> u64 {
        self.base_seed.wrapping_add(k as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// IOU thresholds for the HOTA family.
    pub alphas: Vec<f64>,
}

impl Default for MetricsSection {
    fn default() -> Self {
        Self {
            alphas: crate::metrics::default_alphas(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: PipelineSection,
    pub assoc: AssocConfig,
    pub sampler: SamplerConfig,
    pub motion: KalmanConfig,
    pub oracle: OracleNoiseConfig,
    pub simulator: ScenarioConfig,
    pub suite: SuiteConfig,
    pub metrics: MetricsSection,
}

impl RunConfig {
    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            stride: self.pipeline.stride,
            mode: self.pipeline.mode,
            assoc: self.assoc.clone(),
            sampler: self.sampler.clone(),
            motion: self.motion.clone(),
        }
    }

    /// The fully resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.pipeline.stride == 0 {
            return invalid("pipeline.stride must be at least 1".into());
        }
        if self.pipeline.snap_radius.is_nan() || self.pipeline.snap_radius < 0.0 {
            return invalid("pipeline.snap_radius must be non-negative".into());
        }
        self.assoc.validate().map_err(ConfigError::Invalid)?;
        if self.sampler.rows == 0 || self.sampler.cols == 0 {
            return invalid("sampler.rows and sampler.cols must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.oracle.dropout) {
            return invalid(format!("oracle.dropout = {} is outside [0, 1]", self.oracle.dropout));
        }
        if self.oracle.sigma.is_nan() || self.oracle.sigma < 0.0 {
            return invalid(format!("oracle.sigma = {} must be non-negative", self.oracle.sigma));
        }
        self.simulator
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("simulator: {e}")))?;
        if self.suite.decimation.contains(&0) {
            return invalid("suite.decimation factors must be at least 1".into());
        }
        for &k in &self.suite.poi_counts {
            SamplerConfig::grid_for_count(k)
                .map_err(|e| ConfigError::Invalid(format!("suite.poi_counts: {e}")))?;
        }
        if self.metrics.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) || self.metrics.alphas.is_empty() {
            return invalid("metrics.alphas must be a non-empty list of values in [0, 1]".into());
        }
        Ok(())
    }
}

/// Parse an override value as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn apply_override(table: &mut toml::Table, key: &str, raw: &str) -> Result<(), ConfigError> {
    let parts: Vec<&str> = key.split('.').map(str::trim).collect();
    if parts.len() < 2 || parts.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(format!("{key}={raw}")));
    }
    let mut cur = table;
    for section in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| ConfigError::Parse(format!("'{section}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

/// Split `section.key=value`.
pub fn parse_override(s: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = s.split_once('=').ok_or_else(|| ConfigError::Override(s.to_string()))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Resolve the run configuration. Overrides win over the file, which wins
/// over the defaults. Unknown keys are rejected by name.
pub fn read_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.to_path_buf(),
            source,
        })?,
        None => String::new(),
    };
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    for (k, v) in overrides {
        apply_override(&mut table, k, v)?;
    }
    let merged = toml::to_string(&table).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let cfg: RunConfig = toml::from_str(&merged).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
