//! Pipeline configuration file.
//!
//! A single TOML file with one table per stage. Every field has a default,
//! so an empty file is a valid configuration. Relative paths are resolved
//! against the directory holding the file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use entropath_core::{
    zonal_adjacency, ChangepointConfig, EntropyParams, Granularity, PathwayConstraints, SynthConfig,
    ZONAL_REGIONS,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImpactSettings {
    pub ci_level: f64,
    pub features: Granularity,
}

impl Default for ImpactSettings {
    fn default() -> Self {
        Self {
            ci_level: 0.99,
            features: Granularity::Entropy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalImpact {
    pub variable: String,
    pub region: String,
    /// The selected node is the record of this pair whose interval contains
    /// this date.
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathwaySettings {
    pub epsilon: f64,
    pub temporal_slack_days: usize,
    pub variables: Vec<String>,
    pub variable_deps: Vec<(String, String)>,
    pub regions: Vec<String>,
    pub region_adjacency: Vec<(String, String)>,
    pub source_variable: String,
    /// When absent, the earliest node of `source_variable` in any region.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_region: Option<String>,
    pub final_impact: FinalImpact,
}

impl Default for PathwaySettings {
    fn default() -> Self {
        let pair = |a: &str, b: &str| (a.to_string(), b.to_string());
        Self {
            epsilon: 1.0,
            temporal_slack_days: 0,
            variables: ["AEROD_v", "FSDSC", "TREFHT"].map(String::from).to_vec(),
            variable_deps: vec![
                pair("AEROD_v", "AEROD_v"),
                pair("AEROD_v", "FSDSC"),
                pair("FSDSC", "FSDSC"),
                pair("FSDSC", "TREFHT"),
                pair("TREFHT", "TREFHT"),
            ],
            regions: ZONAL_REGIONS.map(String::from).to_vec(),
            region_adjacency: zonal_adjacency().into_iter().filter(|(a, b)| a < b).collect(),
            source_variable: "AEROD_v".into(),
            source_region: Some("Tropical".into()),
            final_impact: FinalImpact {
                variable: "TREFHT".into(),
                region: "Temperate North".into(),
                date: NaiveDate::from_ymd_opt(1992, 6, 1).unwrap(),
            },
        }
    }
}

impl PathwaySettings {
    pub fn constraints(&self) -> Result<PathwayConstraints, CliError> {
        PathwayConstraints::new(
            self.variable_deps.iter().cloned().collect(),
            &self.variables,
            &self.regions,
            self.region_adjacency.iter().cloned().collect::<BTreeSet<_>>(),
            self.epsilon,
            self.temporal_slack_days,
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSettings {
    /// Ingest CSV files.
    pub inputs: Vec<PathBuf>,
    /// Validated dataset store written by `ingest`, read by later stages.
    pub store: PathBuf,
    /// Run artifacts.
    pub output: PathBuf,
    /// Where `synth` writes its dataset and ground truth.
    pub data_dir: PathBuf,
}

impl Default for PathSettings {
    fn default() -> Self {
        Self {
            inputs: vec![PathBuf::from("data/synth.csv")],
            store: PathBuf::from("store"),
            output: PathBuf::from("out"),
            data_dir: PathBuf::from("data"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub entropy: EntropyParams,
    pub changepoint: ChangepointConfig,
    pub impacts: ImpactSettings,
    pub pathway: PathwaySettings,
    pub paths: PathSettings,
    pub synth: SynthConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.entropy.validate()?;
        self.changepoint.validate()?;
        self.synth.validate()?;
        if !(self.impacts.ci_level > 0.0 && self.impacts.ci_level < 1.0) {
            return Err(CliError::Config(format!(
                "impacts.ci_level must lie in (0, 1), got {}",
                self.impacts.ci_level
            )));
        }
        let p = &self.pathway;
        p.constraints()?;
        if !p.variables.contains(&p.source_variable) {
            return Err(CliError::Config(format!(
                "pathway.source_variable `{}` is not a declared variable",
                p.source_variable
            )));
        }
        if !p.variables.contains(&p.final_impact.variable) {
            return Err(CliError::Config(format!(
                "pathway.final_impact.variable `{}` is not a declared variable",
                p.final_impact.variable
            )));
        }
        for r in p.source_region.iter().chain([&p.final_impact.region]) {
            if !p.regions.contains(r) {
                return Err(CliError::Config(format!("region `{r}` is not a declared region")));
            }
        }
        Ok(())
    }

    /// Canonical serialisation: parsing it back gives the same config and
    /// re-serialising gives the same text.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Hex SHA-256 of the canonical serialisation.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml().as_bytes()))
    }
}

/// A loaded configuration together with the directory its paths are
/// relative to.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub base: PathBuf,
    pub hash: String,
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok(Self::from_parts(PipelineConfig::from_toml(&text)?, path.parent().unwrap_or(Path::new("."))))
    }

    pub fn from_parts(config: PipelineConfig, base: &Path) -> Self {
        let hash = config.hash();
        Self {
            config,
            base: base.to_path_buf(),
            hash,
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn store_dir(&self) -> PathBuf {
        self.resolve(&self.config.paths.store)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.paths.output)
    }

    pub fn data_dir(&self) -> PathBuf {
        self.resolve(&self.config.paths.data_dir)
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        self.config.paths.inputs.iter().map(|p| self.resolve(p)).collect()
    }

    /// Header line declaring the producing configuration.
    pub fn hash_line(&self) -> String {
        format!("config_hash: {}", self.hash)
    }
}
