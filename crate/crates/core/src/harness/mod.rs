//! Experiment specs, output formats and figure-data reproduction.

pub mod experiments;
pub mod io;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::externality::{ExternalityError, MuNormalization};
use crate::game::{GameError, MarketGrid, OracleSettings};
use crate::netsim::{Band, ScenarioConfig, SimError};

pub use experiments::{
    audit_consistency, reproduce_fig2, reproduce_fig6, AuditReport, BandResult, Fig2Result,
};
pub use io::FitReport;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("malformed record in {path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("scenario {path}: {source}")]
    Scenario {
        path: PathBuf,
        #[source]
        source: SimError,
    },
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Externality(#[from] ExternalityError),
    #[error(transparent)]
    Game(#[from] GameError),
}

fn default_n_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

fn default_drops() -> usize {
    20
}

fn default_slots() -> usize {
    200
}

fn default_resamples() -> usize {
    1000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSettings {
    /// Market rows sampled for the price-stage check.
    pub price_rows: usize,
    /// Market keys sampled for the quality-stage check, per regime.
    pub quality_rows: usize,
    pub oracle: OracleSettings,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            price_rows: 24,
            quality_rows: 2,
            oracle: OracleSettings::default(),
        }
    }
}

/// On-disk form of an experiment. Relative scenario paths resolve against
/// the spec file's directory; missing scenarios fall back to the presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default)]
    pub mmwave_scenario: Option<PathBuf>,
    #[serde(default)]
    pub microwave_scenario: Option<PathBuf>,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<f64>,
    #[serde(default = "default_drops")]
    pub drops: usize,
    #[serde(default = "default_slots")]
    pub slots: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub market: MarketGrid,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub mu_normalization: MuNormalization,
    #[serde(default)]
    pub audit: AuditSettings,
}

impl Default for ExperimentFile {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields defaulted")
    }
}

impl ExperimentFile {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut file: Self = serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for p in [&mut file.mmwave_scenario, &mut file.microwave_scenario].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(file)
    }

    /// Loads the scenarios and fixes the seed. `seed` overrides the file's.
    pub fn resolve(self, seed: Option<u64>) -> Result<ExperimentSpec, HarnessError> {
        let seed = seed
            .or(self.seed)
            .ok_or_else(|| HarnessError::InvalidSpec("no seed given".into()))?;
        let load = |path: &Option<PathBuf>, band: Band| -> Result<ScenarioConfig, HarnessError> {
            let config = match path {
                Some(p) => ScenarioConfig::load(p).map_err(|source| HarnessError::Scenario {
                    path: p.clone(),
                    source,
                })?,
                None => ScenarioConfig::preset(band),
            };
            if config.channel.band != band {
                return Err(HarnessError::InvalidSpec(format!(
                    "scenario for {band:?} has a {:?} channel",
                    config.channel.band
                )));
            }
            config.validate()?;
            Ok(config)
        };
        let spec = ExperimentSpec {
            mmwave: load(&self.mmwave_scenario, Band::Mmwave)?,
            microwave: load(&self.microwave_scenario, Band::Microwave)?,
            n_grid: self.n_grid,
            drops: self.drops,
            slots: self.slots,
            seed,
            market: self.market,
            output_dir: self.output_dir,
            bootstrap_resamples: self.bootstrap_resamples,
            workers: self.workers,
            mu_normalization: self.mu_normalization,
            audit: self.audit,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub mmwave: ScenarioConfig,
    pub microwave: ScenarioConfig,
    pub n_grid: Vec<f64>,
    pub drops: usize,
    pub slots: usize,
    pub seed: u64,
    pub market: MarketGrid,
    pub output_dir: PathBuf,
    pub bootstrap_resamples: usize,
    pub workers: Option<usize>,
    pub mu_normalization: MuNormalization,
    pub audit: AuditSettings,
}

impl ExperimentSpec {
    /// Defaults throughout, with the given seed and output directory.
    pub fn with_seed(seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        let mut spec = ExperimentFile::default()
            .resolve(Some(seed))
            .expect("defaults are valid");
        spec.output_dir = output_dir.into();
        spec
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.drops == 0 || self.slots == 0 {
            return Err(HarnessError::InvalidSpec("drops and slots must be positive".into()));
        }
        if self.n_grid.len() < 2 {
            return Err(HarnessError::InvalidSpec("n_grid needs at least two points".into()));
        }
        if self.bootstrap_resamples == 0 {
            return Err(HarnessError::InvalidSpec("bootstrap_resamples must be positive".into()));
        }
        Ok(())
    }

    pub fn scenario(&self, band: Band) -> &ScenarioConfig {
        match band {
            Band::Mmwave => &self.mmwave,
            Band::Microwave => &self.microwave,
        }
    }
}
