//! Oversampling (MLSOL, MLROS) and undersampling (MLUL, MLRUS) of multi-label data.

mod mlsol;
mod mlul;
mod random;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::neighbors::{build_index, NeighborIndex};

pub use mlsol::{assign_label, create_instance, mlsol, threshold_for};
pub use mlul::mlul;
pub use random::{mlros, mlrus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mlsol,
    Mlul,
    Mlros,
    Mlrus,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mlsol, Method::Mlul, Method::Mlros, Method::Mlrus];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mlsol => "mlsol",
            Method::Mlul => "mlul",
            Method::Mlros => "mlros",
            Method::Mlrus => "mlrus",
        }
    }

    pub fn is_oversampler(&self) -> bool {
        matches!(self, Method::Mlsol | Method::Mlros)
    }

    pub fn needs_neighbors(&self) -> bool {
        matches!(self, Method::Mlsol | Method::Mlul)
    }

    /// Ratio used when none is given.
    pub fn default_ratio(&self) -> f64 {
        match self {
            Method::Mlsol | Method::Mlros => 0.3,
            Method::Mlul | Method::Mlrus => 0.1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sampling method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: Method,
    pub p: f64,
    pub k: usize,
    pub rng_seed: u64,
}

impl SamplerConfig {
    pub fn new(method: Method, p: f64, k: usize, rng_seed: u64) -> Self {
        SamplerConfig { method, p, k, rng_seed }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.p.is_finite() || self.p <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "--ratio must be positive for {}, got {}",
                self.method, self.p
            )));
        }
        if !self.method.is_oversampler() && self.p >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "--ratio must lie in (0, 1) for {}, got {}",
                self.method, self.p
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidArgument("--k must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }
}

/// Where an output row came from; ids index the input dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Provenance {
    Original { id: usize },
    Synthetic { seed: usize, reference: usize },
    Retained { id: usize },
    Duplicated { id: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub dataset: MultiLabelDataset,
    pub provenance: Vec<Provenance>,
    pub warnings: Vec<String>,
}

impl SampleOutcome {
    pub(crate) fn unchanged(ds: &MultiLabelDataset, warning: String) -> Self {
        log::warn!("{warning}");
        SampleOutcome {
            dataset: ds.clone(),
            provenance: (0..ds.n()).map(|id| Provenance::Original { id }).collect(),
            warnings: vec![warning],
        }
    }
}

/// `floor(n * ratio)`, robust to the ratio's binary representation
/// (`100 * 0.29` must count 29).
pub fn ratio_count(n: usize, ratio: f64) -> usize {
    (n as f64 * ratio + 1e-9).floor().max(0.0) as usize
}

/// Runs the configured sampler, building the neighbor index when needed.
pub fn sample(ds: &MultiLabelDataset, cfg: &SamplerConfig) -> Result<SampleOutcome> {
    cfg.validate()?;
    match cfg.method {
        Method::Mlsol | Method::Mlul => {
            let idx = build_index(ds, cfg.k)?;
            sample_with_index(ds, &idx, cfg)
        }
        Method::Mlros => mlros(ds, cfg),
        Method::Mlrus => mlrus(ds, cfg),
    }
}

/// Like [`sample`] but reuses a prebuilt index (ignored by the random baselines).
pub fn sample_with_index(ds: &MultiLabelDataset, idx: &NeighborIndex, cfg: &SamplerConfig) -> Result<SampleOutcome> {
    cfg.validate()?;
    match cfg.method {
        Method::Mlsol => mlsol(ds, idx, cfg),
        Method::Mlul => mlul(ds, idx, cfg),
        Method::Mlros => mlros(ds, cfg),
        Method::Mlrus => mlrus(ds, cfg),
    }
}

pub(crate) fn check_index(ds: &MultiLabelDataset, idx: &NeighborIndex, cfg: &SamplerConfig) -> Result<()> {
    if idx.n() != ds.n() {
        return Err(Error::InvalidArgument(format!(
            "neighbor index covers {} instances, dataset has {}",
            idx.n(),
            ds.n()
        )));
    }
    if idx.k() != cfg.k {
        return Err(Error::InvalidArgument(format!(
            "neighbor index was built with k = {}, sampler expects k = {}",
            idx.k(),
            cfg.k
        )));
    }
    Ok(())
}
