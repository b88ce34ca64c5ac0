use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::{ratio_count, Method, Provenance, SampleOutcome, SamplerConfig};
use crate::dataset::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::imbalance::minority_labels;

fn carries_minority(ds: &MultiLabelDataset, minority: &[usize], i: usize) -> bool {
    minority.iter().any(|&j| ds.labels()[[i, j]] == 1)
}

fn expect_method(cfg: &SamplerConfig, m: Method) -> Result<()> {
    cfg.validate()?;
    if cfg.method != m {
        return Err(Error::InvalidArgument(format!(
            "config method is {}, expected {m}",
            cfg.method
        )));
    }
    Ok(())
}

/// Appends uniformly drawn copies of instances that carry a minority label.
pub fn mlros(ds: &MultiLabelDataset, cfg: &SamplerConfig) -> Result<SampleOutcome> {
    expect_method(cfg, Method::Mlros)?;
    let minority = minority_labels(ds)?;
    let pool: Vec<usize> = (0..ds.n()).filter(|&i| carries_minority(ds, &minority, i)).collect();
    if pool.is_empty() {
        return Ok(SampleOutcome::unchanged(
            ds,
            "no instance carries a minority label; nothing to clone".into(),
        ));
    }
    let count = ratio_count(ds.n(), cfg.p);
    let mut rng = cfg.rng();
    let clones: Vec<usize> = (0..count).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
    let mut rows: Vec<usize> = (0..ds.n()).collect();
    rows.extend(&clones);
    let mut provenance: Vec<Provenance> = (0..ds.n()).map(|id| Provenance::Original { id }).collect();
    provenance.extend(clones.iter().map(|&id| Provenance::Duplicated { id }));
    Ok(SampleOutcome {
        dataset: ds.subset(&rows),
        provenance,
        warnings: Vec::new(),
    })
}

/// Removes uniformly drawn instances that carry no minority label.
pub fn mlrus(ds: &MultiLabelDataset, cfg: &SamplerConfig) -> Result<SampleOutcome> {
    expect_method(cfg, Method::Mlrus)?;
    let minority = minority_labels(ds)?;
    let pool: Vec<usize> = (0..ds.n()).filter(|&i| !carries_minority(ds, &minority, i)).collect();
    if pool.is_empty() {
        return Ok(SampleOutcome::unchanged(
            ds,
            "every instance carries a minority label; nothing to remove".into(),
        ));
    }
    let wanted = ratio_count(ds.n(), cfg.p);
    let mut warnings = Vec::new();
    if wanted > pool.len() {
        let msg = format!("only {} removable instances, {wanted} requested", pool.len());
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let count = wanted.min(pool.len());
    let mut rng = cfg.rng();
    let mut removed = vec![false; ds.n()];
    for k in sample_indices(&mut rng, pool.len(), count) {
        removed[pool[k]] = true;
    }
    let kept: Vec<usize> = (0..ds.n()).filter(|&i| !removed[i]).collect();
    Ok(SampleOutcome {
        dataset: ds.subset(&kept),
        provenance: kept.iter().map(|&id| Provenance::Retained { id }).collect(),
        warnings,
    })
}
