use std::path::Path;

use anyhow::Context;
use serde::Deserialize;

/// Defaults read from `--config`. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub betas: Option<Vec<f64>>,
    pub burnin: Option<usize>,
    pub samples: Option<usize>,
    pub thin: Option<usize>,
    pub epsilon: Option<f64>,
}

impl FileConfig {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
