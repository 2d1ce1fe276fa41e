//! JSON run configurations, one document per subcommand.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use gab_core::agg::{DegreeRule, LimitExperimentConfig, RareEventScaling};
use gab_core::mle::{FitConfig, FitFamily};
use gab_core::model::{read_weight_matrix_csv, ModelSpec};
use gab_core::sim::SimConfig;
use gab_core::{GabError, Result};

/// A model spec given inline or by file path.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path { path: PathBuf },
    Inline(Box<ModelSpec>),
}

impl ModelRef {
    pub fn load(&self, base: &Path) -> Result<ModelSpec> {
        match self {
            ModelRef::Inline(spec) => Ok((**spec).clone()),
            ModelRef::Path { path } => {
                let full = if path.is_absolute() { path.clone() } else { base.join(path) };
                let text = std::fs::read_to_string(&full)?;
                ModelSpec::from_json(&text)
            }
        }
    }
}

/// Serializable estimation-family descriptor; network weights load from CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum FamilySpec {
    Constant,
    Linear {
        #[serde(default = "one")]
        s: usize,
        #[serde(default = "one")]
        q: usize,
    },
    Logit11,
    Exchangeable,
    Interactive {
        #[serde(default)]
        include_alpha: bool,
    },
    Network {
        weights_csv: PathBuf,
        #[serde(default)]
        include_alpha: bool,
    },
}

fn one() -> usize {
    1
}

impl FamilySpec {
    pub fn resolve(&self, base: &Path) -> Result<FitFamily> {
        Ok(match self {
            FamilySpec::Constant => FitFamily::Constant,
            FamilySpec::Linear { s, q } => FitFamily::Linear { s: *s, q: *q },
            FamilySpec::Logit11 => FitFamily::Logit11,
            FamilySpec::Exchangeable => FitFamily::Exchangeable,
            FamilySpec::Interactive { include_alpha } => {
                FitFamily::Interactive { include_alpha: *include_alpha }
            }
            FamilySpec::Network { weights_csv, include_alpha } => {
                let full = if weights_csv.is_absolute() {
                    weights_csv.clone()
                } else {
                    base.join(weights_csv)
                };
                FitFamily::Network {
                    weights: read_weight_matrix_csv(&full)?,
                    include_alpha: *include_alpha,
                }
            }
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_fit_seed")]
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_min_horizon")]
    pub min_horizon: usize,
}

fn default_starts() -> usize {
    5
}
fn default_fit_seed() -> u64 {
    0x5eed
}
fn default_max_iters() -> usize {
    400
}
fn default_min_horizon() -> usize {
    20
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: default_starts(),
            seed: default_fit_seed(),
            max_iters: default_max_iters(),
            min_horizon: default_min_horizon(),
        }
    }
}

impl FitOptions {
    pub fn to_fit_config(&self) -> FitConfig {
        FitConfig {
            starts: self.starts,
            seed: self.seed,
            max_iters: self.max_iters,
            min_horizon: self.min_horizon,
            ..FitConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub model: ModelRef,
    /// Optional CSV override for the spec's weight matrix.
    #[serde(default)]
    pub network_csv: Option<PathBuf>,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateBinaryConfig {
    pub panel_csv: PathBuf,
    #[serde(flatten)]
    pub family: FamilySpec,
    #[serde(default)]
    pub fit: FitOptions,
    /// Also export the in-sample Σᵢp̂ overlay path.
    #[serde(default)]
    pub export_sum_path: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatePoissonConfig {
    pub counts_csv: PathBuf,
    #[serde(default)]
    pub fit: FitOptions,
    /// Pin γ̄ = β = 0 (i.i.d. Poisson fit).
    #[serde(default)]
    pub no_dynamics: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateConfig {
    pub scaling: RareEventScaling,
    #[serde(default)]
    pub experiment: LimitExperimentConfig,
    /// When set, also run the d-regular network comparison.
    #[serde(default)]
    pub network_rule: Option<DegreeRule>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub panel_csv: PathBuf,
    /// Holdout starts strictly after this date (mutually exclusive with
    /// `holdout_len`).
    #[serde(default)]
    pub split_date: Option<String>,
    #[serde(default)]
    pub holdout_len: Option<usize>,
    #[serde(default = "default_level")]
    pub constant_level: f64,
    #[serde(default)]
    pub fit: FitOptions,
}

pub fn default_level() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestConfig {
    pub returns_csv: PathBuf,
    pub factors_csv: PathBuf,
    #[serde(default = "default_level")]
    pub level: f64,
    pub split_date: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CouplingConfig {
    pub model: ModelRef,
    #[serde(default)]
    pub network_csv: Option<PathBuf>,
    /// Initial probability lags, newest first: exactly `s` vectors each.
    pub init_a: Vec<Vec<f64>>,
    pub init_b: Vec<Vec<f64>>,
    pub horizon: usize,
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GabError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| GabError::Config(format!("{}: {e}", path.display())))
}
