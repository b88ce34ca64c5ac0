use rand::seq::index::sample as sample_indices;
use rand::Rng;

use super::{check_index, ratio_count, Provenance, SampleOutcome, SamplerConfig};
use crate::dataset::MultiLabelDataset;
use crate::error::{Error, Result};
use crate::imbalance::{importance, influence, local_stats};
use crate::neighbors::NeighborIndex;

/// Prefix sums over non-negative weights with point updates.
struct Fenwick {
    tree: Vec<f64>,
}

impl Fenwick {
    fn new(weights: &[f64]) -> Self {
        let n = weights.len();
        let mut tree = vec![0.0; n + 1];
        for (i, &w) in weights.iter().enumerate() {
            tree[i + 1] += w;
            let parent = (i + 1) + ((i + 1) & (i + 1).wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i + 1];
            }
        }
        Fenwick { tree }
    }

    fn add(&mut self, i: usize, delta: f64) {
        let mut p = i + 1;
        while p < self.tree.len() {
            self.tree[p] += delta;
            p += p & p.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn search(&self, mut target: f64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Draws `count` distinct indices with probability proportional to the
/// remaining weights; once the remaining weight is exhausted the rest are drawn
/// uniformly. Returns the picks and whether the uniform fallback was used.
pub(crate) fn weighted_without_replacement<R: Rng + ?Sized>(
    weights: &[f64],
    count: usize,
    rng: &mut R,
) -> (Vec<usize>, bool) {
    let n = weights.len();
    let mut remaining: Vec<f64> = weights.iter().map(|&w| if w > 0.0 { w } else { 0.0 }).collect();
    let mut fen = Fenwick::new(&remaining);
    let mut mass: f64 = remaining.iter().sum();
    let mut positive = remaining.iter().filter(|&&w| w > 0.0).count();
    let mut taken = vec![false; n];
    let mut picks = Vec::with_capacity(count);
    while picks.len() < count && positive > 0 {
        let target = rng.gen::<f64>() * mass;
        let mut i = fen.search(target);
        if i >= n || remaining[i] <= 0.0 {
            // rounding pushed the target past the last positive weight
            i = (0..n)
                .rev()
                .find(|&j| remaining[j] > 0.0)
                .expect("positive weight left");
        }
        picks.push(i);
        taken[i] = true;
        fen.add(i, -remaining[i]);
        mass -= remaining[i];
        remaining[i] = 0.0;
        positive -= 1;
    }
    let fallback = picks.len() < count;
    if fallback {
        let pool: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
        let extra = sample_indices(rng, pool.len(), count - picks.len());
        picks.extend(extra.into_iter().map(|k| pool[k]));
    }
    (picks, fallback)
}

pub fn mlul(ds: &MultiLabelDataset, idx: &NeighborIndex, cfg: &SamplerConfig) -> Result<SampleOutcome> {
    cfg.validate()?;
    check_index(ds, idx, cfg)?;
    let n = ds.n();
    let ret_num = ratio_count(n, 1.0 - cfg.p);
    if ret_num == 0 {
        return Err(Error::InvalidArgument(format!(
            "ratio {} retains no instances for n = {n}; use a smaller --ratio",
            cfg.p
        )));
    }
    let stats = local_stats(ds, idx)?;
    let u = influence(ds, idx, &stats);
    let v = importance(&stats.w, &u);

    let mut rng = cfg.rng();
    let (mut kept, fallback) = weighted_without_replacement(&v, ret_num, &mut rng);
    let mut warnings = Vec::new();
    if fallback {
        let msg =
            format!("importance weights cover fewer than {ret_num} instances; remaining retentions drawn uniformly");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    kept.sort_unstable();
    Ok(SampleOutcome {
        dataset: ds.subset(&kept),
        provenance: kept.iter().map(|&id| Provenance::Retained { id }).collect(),
        warnings,
    })
}
