use ndarray::{Array2, ArrayView1};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::{check_index, ratio_count, Provenance, SampleOutcome, SamplerConfig};
use crate::dataset::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::imbalance::{local_stats, InstanceType};
use crate::neighbors::{DistanceMetric, NeighborIndex};

/// Label-assignment threshold on `cd` for a minority cell of type `t`.
pub fn threshold_for(t: InstanceType) -> f64 {
    match t {
        InstanceType::Safe => 0.5,
        InstanceType::Borderline => 0.75,
        InstanceType::Rare => 1.0 + 1e-5,
        InstanceType::Outlier => -1e-5,
        // Only reachable when both sides are majority, which implies equal labels.
        InstanceType::Majority => 0.5,
    }
}

/// Label of the synthetic cell given seed and reference values, their types,
/// and the synthetic point's relative position `cd` (0 at the seed).
pub fn assign_label(y_s: u8, t_s: InstanceType, y_r: u8, t_r: InstanceType, cd: f64) -> u8 {
    if y_s == y_r {
        return y_s;
    }
    // Measure from the minority side.
    let (y_min, t_min, y_maj, cd) = if t_s == InstanceType::Majority {
        (y_r, t_r, y_s, 1.0 - cd)
    } else {
        (y_s, t_s, y_r, cd)
    };
    if cd <= threshold_for(t_min) {
        y_min
    } else {
        y_maj
    }
}

/// Interpolates between a seed and a reference instance. Numeric features draw
/// an independent gap per feature; a nominal feature takes the value of the
/// parent nearer to its drawn position. Returns the features and labels.
#[allow(clippy::too_many_arguments)]
pub fn create_instance<R: Rng + ?Sized>(
    metric: &DistanceMetric,
    seed_x: ArrayView1<'_, f64>,
    seed_y: ArrayView1<'_, u8>,
    seed_t: ArrayView1<'_, InstanceType>,
    ref_x: ArrayView1<'_, f64>,
    ref_y: ArrayView1<'_, u8>,
    ref_t: ArrayView1<'_, InstanceType>,
    rng: &mut R,
) -> (Vec<f64>, Vec<u8>) {
    let x: Vec<f64> = (0..seed_x.len())
        .map(|j| {
            let gap: f64 = rng.gen();
            if metric.is_numeric(j) {
                seed_x[j] + gap * (ref_x[j] - seed_x[j])
            } else if gap <= 0.5 {
                seed_x[j]
            } else {
                ref_x[j]
            }
        })
        .collect();

    let xc = metric.normalize_row(ArrayView1::from(&x[..]));
    let xs = metric.normalize_row(seed_x);
    let xr = metric.normalize_row(ref_x);
    let ds_ = metric.squared_normalized(&xc, &xs).sqrt();
    let dr = metric.squared_normalized(&xc, &xr).sqrt();
    let cd = if ds_ + dr > 0.0 { ds_ / (ds_ + dr) } else { 0.5 };

    let y = (0..seed_y.len())
        .map(|j| assign_label(seed_y[j], seed_t[j], ref_y[j], ref_t[j], cd))
        .collect();
    (x, y)
}

pub fn mlsol(ds: &MultiLabelDataset, idx: &NeighborIndex, cfg: &SamplerConfig) -> Result<SampleOutcome> {
    cfg.validate()?;
    check_index(ds, idx, cfg)?;
    let n = ds.n();
    let gen_num = ratio_count(n, cfg.p);
    if gen_num == 0 {
        return Err(Error::InvalidArgument(format!(
            "ratio {} generates no instances for n = {n}; use a larger --ratio",
            cfg.p
        )));
    }
    let stats = local_stats(ds, idx)?;
    let metric = DistanceMetric::fit(ds);
    let mut warnings = Vec::new();
    let weighted = WeightedIndex::new(&stats.w).ok();
    if weighted.is_none() {
        let msg = "all seed weights are zero; drawing seeds uniformly".to_string();
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut rng = cfg.rng();
    let mut new_x = Array2::<f64>::zeros((gen_num, ds.d()));
    let mut new_y = Array2::<u8>::zeros((gen_num, ds.q()));
    let mut provenance: Vec<Provenance> = (0..n).map(|id| Provenance::Original { id }).collect();
    for g in 0..gen_num {
        let s = match &weighted {
            Some(dist) => dist.sample(&mut rng),
            None => rng.gen_range(0..n),
        };
        let nb = idx.knn(s);
        let r = nb[rng.gen_range(0..nb.len())];
        let (x, y) = create_instance(
            &metric,
            ds.row(s),
            ds.label_row(s),
            stats.types.row(s),
            ds.row(r),
            ds.label_row(r),
            stats.types.row(r),
            &mut rng,
        );
        new_x.row_mut(g).assign(&ArrayView1::from(&x[..]));
        new_y.row_mut(g).assign(&ArrayView1::from(&y[..]));
        provenance.push(Provenance::Synthetic { seed: s, reference: r });
    }
    Ok(SampleOutcome {
        dataset: ds.append(&new_x, &new_y)?,
        provenance,
        warnings,
    })
}
