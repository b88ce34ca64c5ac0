//! Multi-label imbalance measurement, resampling and evaluation.

pub mod cli;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod imbalance;
pub mod learners;
pub mod neighbors;
pub mod sampling;
pub mod seeds;
pub mod synthetic;

pub use dataset::MultiLabelDataset;
pub use error::{Error, Result};
