use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;

/// Optional TOML run file. Every key mirrors a command-line flag; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub train_dataset: Option<PathBuf>,
    pub predictions: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub split: Option<String>,
    pub ranker: Option<String>,
    pub k1: Option<f64>,
    pub b: Option<f64>,
    pub window_tokens: Option<usize>,
    pub seed: Option<u64>,
    pub m: Option<usize>,
    pub scorer: Option<String>,
    pub timeout_secs: Option<u64>,
    pub url_base: Option<String>,
    pub min_tokens: Option<usize>,
    pub min_sections: Option<usize>,
    pub min_inlinks: Option<usize>,
    pub max_inlinks: Option<usize>,
    pub max_link_fraction: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
