//! Config files and the effective-config echo.
//!
//! A config file is a JSON object whose keys are the long flag names. Flags
//! override file values, which override defaults.

use std::path::{Path, PathBuf};

use lcent::harness::{FamilyWeight, Suite, Tolerances};
use lcent::lc2d::generate::Family;
use lcent::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct FileConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing)]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub density: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direction: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub doubled_precision: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_non_log_concave: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suite: Option<Suite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub families: Option<Vec<FamilyWeight>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polygon_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub product_pieces: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub small_theta_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epi_lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }
}

/// `flag`, else the file value, else `None`.
pub fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

/// Parses `polygon:2,product:2,grid:1`.
pub fn parse_families(s: &str) -> std::result::Result<Vec<FamilyWeight>, String> {
    s.split(',')
        .map(|item| {
            let (name, weight) = item.split_once(':').unwrap_or((item, "1"));
            let family: Family = name.trim().parse().map_err(|e: Error| e.to_string())?;
            let weight: u32 = weight.trim().parse().map_err(|_| format!("bad weight in {item:?}"))?;
            Ok(FamilyWeight { family, weight })
        })
        .collect()
}
