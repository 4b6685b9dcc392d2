//! Bucket resolution over globally sorted, block-distributed data.
//!
//! After a samplesort, tuples of one bucket sit contiguously but the bucket
//! may span several ranks. Rather than walking neighbor ranks (worst case
//! O(rho) hops for one giant bucket), each rank contributes its last run's
//! aggregate to a forward exclusive scan and its first run's aggregate to a
//! reverse exclusive scan, both with a "prefer the closer key, merge on equal
//! key" operator. One scan pair resolves every boundary bucket regardless of
//! how many ranks it spans.

use crate::team::{ScanOperator, TeamContext};

/// One locally held run of equal keys, with the aggregate of the *entire*
/// global bucket it belongs to.
#[derive(Debug, Clone)]
pub struct GlobalRun<K, M> {
    pub start: usize,
    pub end: usize,
    pub key: K,
    /// Aggregate over every tuple of the bucket on all ranks.
    pub agg: M,
    /// True iff this rank holds the bucket's first tuple globally.
    pub owns_start: bool,
    /// True iff this rank holds the bucket's last tuple globally.
    pub owns_end: bool,
}

/// Resolves per-bucket aggregates over locally sorted `sorted` (which must be
/// globally sorted by `key` across ranks). `lift` maps one element into the
/// aggregate monoid and `merge` combines aggregates; `merge` must be
/// associative, with operands always passed in global position order.
///
/// Collective: every rank must call this, even with an empty slice.
pub fn resolve_runs<T, K, M>(
    ctx: &mut TeamContext,
    sorted: &[T],
    key: impl Fn(&T) -> K,
    lift: impl Fn(&T) -> M,
    merge: impl Fn(&M, &M) -> M + Send + Sync + Clone + 'static,
) -> Vec<GlobalRun<K, M>>
where
    K: Ord + Clone + Send + 'static,
    M: Clone + Send + 'static,
{
    let mut runs: Vec<GlobalRun<K, M>> = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let k = key(&sorted[i]);
        let mut agg = lift(&sorted[i]);
        let mut j = i + 1;
        while j < sorted.len() && key(&sorted[j]) == k {
            agg = merge(&agg, &lift(&sorted[j]));
            j += 1;
        }
        runs.push(GlobalRun {
            start: i,
            end: j,
            key: k,
            agg,
            owns_start: true,
            owns_end: true,
        });
        i = j;
    }

    type Boundary<K, M> = Option<(K, M)>;
    let fwd_merge = merge.clone();
    let fwd_op: ScanOperator<Boundary<K, M>> = ScanOperator::new(None, move |x, y| {
        // x folds lower ranks, y is the next higher rank
        match (x, y) {
            (None, b) => b.clone(),
            (a, None) => a.clone(),
            (Some((ka, ma)), Some((kb, mb))) => match ka.cmp(kb) {
                std::cmp::Ordering::Less => Some((kb.clone(), mb.clone())),
                std::cmp::Ordering::Greater => Some((ka.clone(), ma.clone())),
                std::cmp::Ordering::Equal => Some((ka.clone(), fwd_merge(ma, mb))),
            },
        }
    });
    let rev_merge = merge.clone();
    let rev_op: ScanOperator<Boundary<K, M>> = ScanOperator::new(None, move |x, y| {
        // x folds higher ranks, y is the next lower rank
        match (x, y) {
            (None, b) => b.clone(),
            (a, None) => a.clone(),
            (Some((ka, ma)), Some((kb, mb))) => match kb.cmp(ka) {
                std::cmp::Ordering::Less => Some((kb.clone(), mb.clone())),
                std::cmp::Ordering::Greater => Some((ka.clone(), ma.clone())),
                std::cmp::Ordering::Equal => Some((kb.clone(), rev_merge(mb, ma))),
            },
        }
    });

    let fwd_contrib: Boundary<K, M> = runs.last().map(|r| (r.key.clone(), r.agg.clone()));
    let rev_contrib: Boundary<K, M> = runs.first().map(|r| (r.key.clone(), r.agg.clone()));
    let from_below = ctx.exclusive_scan(fwd_contrib, &fwd_op);
    let from_above = ctx.reverse_exclusive_scan(rev_contrib, &rev_op);

    if let Some(first) = runs.first_mut() {
        if let Some((k, m)) = &from_below {
            if *k == first.key {
                first.agg = merge(m, &first.agg);
                first.owns_start = false;
            }
        }
    }
    if let Some(last) = runs.last_mut() {
        if let Some((k, m)) = &from_above {
            if *k == last.key {
                last.agg = merge(&last.agg, m);
                last.owns_end = false;
            }
        }
    }
    runs
}
