use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::learners::LearnerParams;

/// Keys accepted in a `--config` TOML file. Explicit flags override them.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub k: Option<usize>,
    pub format: Option<String>,
    pub labels: Option<usize>,
    pub method: Option<String>,
    pub ratio: Option<f64>,
    pub learner: Option<String>,
    pub folds: Option<usize>,
    pub repeats: Option<usize>,
    pub members: Option<usize>,
    pub diversify: Option<String>,
    pub min_minority: Option<usize>,
    pub learner_params: Option<LearnerParams>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("config {}: {}", path.display(), e.message())))
    }
}
