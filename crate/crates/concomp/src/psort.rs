//! Distributed samplesort with regular sampling.
//!
//! Each rank sorts locally, contributes rho-1 equally spaced samples, and the
//! sorted union of samples yields rho-1 global splitters. Elements are routed
//! by splitter bin and the received sorted runs are merged locally. The result
//! is globally sorted by key: every element on rank i compares <= every
//! element on rank i+1. Output blocks are only approximately balanced; callers
//! that need the block invariant restored follow up with `rebalance_blocks`.

use itertools::Itertools;

use crate::team::TeamContext;

/// Sorts a block-distributed sequence globally by `key`. Callers pass a key
/// covering the full element when deterministic total order matters; equal
/// keys keep a deterministic order either way (stable local sorts, merges tie
/// toward the lower source rank).
pub fn samplesort<T, K, F>(ctx: &mut TeamContext, mut local: Vec<T>, key: F) -> Vec<T>
where
    T: Send + 'static,
    K: Ord + Clone + Send + 'static,
    F: Fn(&T) -> K,
{
    local.sort_by_key(&key);
    let rho = ctx.size();
    if rho == 1 {
        return local;
    }

    let samples: Vec<K> = (1..rho)
        .filter_map(|i| {
            if local.is_empty() {
                None
            } else {
                Some(key(&local[i * local.len() / rho]))
            }
        })
        .collect();
    let mut all_samples: Vec<K> = ctx.all_gather(samples).into_iter().flatten().collect();
    all_samples.sort();

    let splitters: Vec<K> = if all_samples.is_empty() {
        Vec::new()
    } else {
        (1..rho)
            .map(|i| all_samples[(i * all_samples.len() / rho).min(all_samples.len() - 1)].clone())
            .collect()
    };

    let mut buckets: Vec<Vec<T>> = (0..rho).map(|_| Vec::new()).collect();
    for item in local {
        let k = key(&item);
        let dest = splitters.partition_point(|s| *s < k);
        buckets[dest].push(item);
    }

    let runs = ctx.all_to_all_v_runs(buckets);
    runs.into_iter()
        .kmerge_by(|a, b| key(a) <= key(b))
        .collect()
}
