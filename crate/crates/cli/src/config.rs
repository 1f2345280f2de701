//! Optional TOML config file. Every key mirrors a command-line flag; flags
//! given on the command line take precedence.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// Fallback seed for every command that takes one.
    pub seed: Option<u64>,
    #[serde(default)]
    pub segment: SegmentSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub label: LabelSection,
    #[serde(default)]
    pub degrade: DegradeSection,
    #[serde(default)]
    pub bleu: BleuSection,
    #[serde(default)]
    pub demo: DemoSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSection {
    pub window: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub targets: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub disjoint: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    pub topics: Option<usize>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub init: Option<String>,
    pub min_df: Option<usize>,
    pub max_df: Option<f64>,
    pub max_terms: Option<usize>,
    pub names: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSection {
    pub source: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradeSection {
    pub p_drop: Option<f64>,
    pub p_sub: Option<f64>,
    pub seed: Option<u64>,
    pub sub_list: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BleuSection {
    pub smooth: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemoSection {
    pub seed: Option<u64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
