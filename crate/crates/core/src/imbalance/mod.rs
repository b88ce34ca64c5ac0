//! Global (label frequency) and local (neighborhood) imbalance measures.

mod global;
mod local;

pub use global::{global_measures, minority_labels, GlobalMeasures};
pub use local::{
    importance, influence, limb, limb_sensitivity, local_stats, InstanceType, LocalStats, NOT_INFORMATIVE,
};
