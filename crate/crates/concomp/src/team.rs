//! In-process SPMD worker team.
//!
//! A team of `rho` workers runs the same function on disjoint data shards and
//! synchronizes only through the collectives defined here. Workers never share
//! mutable state outside a collective call, which keeps the distributed-memory
//! semantics intact while staying runnable in a single process. The collective
//! set is exactly what the connectivity pipeline needs: variable all-to-all,
//! all-gather, custom-operator exclusive scans in both rank directions, an
//! all-reduce, and block rebalancing.

use std::any::Any;
use std::sync::{Arc, Condvar, Mutex};

type Combine<T> = Arc<dyn Fn(&T, &T) -> T + Send + Sync>;

/// An associative combine with an identity element, usable in scans and
/// reductions. Associativity is the caller's obligation (property-tested for
/// every operator the pipeline uses).
pub struct ScanOperator<T> {
    identity: T,
    combine: Combine<T>,
}

impl<T: Clone> ScanOperator<T> {
    pub fn new(identity: T, combine: impl Fn(&T, &T) -> T + Send + Sync + 'static) -> Self {
        Self {
            identity,
            combine: Arc::new(combine),
        }
    }

    pub fn identity(&self) -> T {
        self.identity.clone()
    }

    pub fn combine(&self, a: &T, b: &T) -> T {
        (self.combine)(a, b)
    }
}

impl<T: Clone> Clone for ScanOperator<T> {
    fn clone(&self) -> Self {
        Self {
            identity: self.identity.clone(),
            combine: Arc::clone(&self.combine),
        }
    }
}

struct BarrierState {
    arrived: usize,
    generation: u64,
    poisoned: bool,
}

/// Reusable barrier that can be poisoned when a worker panics, so the
/// remaining workers fail fast instead of deadlocking.
struct PoisonBarrier {
    state: Mutex<BarrierState>,
    cv: Condvar,
    size: usize,
}

impl PoisonBarrier {
    fn new(size: usize) -> Self {
        Self {
            state: Mutex::new(BarrierState {
                arrived: 0,
                generation: 0,
                poisoned: false,
            }),
            cv: Condvar::new(),
            size,
        }
    }

    fn wait(&self) {
        let mut st = self.state.lock().unwrap_or_else(std::sync::PoisonError::into_inner);
        if st.poisoned {
            panic!("worker team poisoned by a peer failure");
        }
        st.arrived += 1;
        if st.arrived == self.size {
            st.arrived = 0;
            st.generation = st.generation.wrapping_add(1);
            self.cv.notify_all();
            return;
        }
        let gen = st.generation;
        while st.generation == gen && !st.poisoned {
            st = self
                .cv
                .wait(st)
                .unwrap_or_else(std::sync::PoisonError::into_inner);
        }
        if st.poisoned {
            panic!("worker team poisoned by a peer failure");
        }
    }

    fn poison(&self) {
        let mut st = self.state.lock().unwrap_or_else(std::sync::PoisonError::into_inner);
        st.poisoned = true;
        self.cv.notify_all();
    }
}

struct Slot {
    epoch: u64,
    tag: &'static str,
    payload: Option<Box<dyn Any + Send>>,
}

struct TeamCore {
    size: usize,
    slots: Vec<Mutex<Slot>>,
    barrier: PoisonBarrier,
}

/// Per-worker handle to the team. All collectives are matched calls: every
/// rank must invoke the same collective in the same order. Mismatches are
/// reported as protocol faults.
pub struct TeamContext {
    rank: usize,
    epoch: u64,
    core: Arc<TeamCore>,
}

/// Runs `f` on a team of `size` workers and returns the per-rank results in
/// rank order. A panic on any worker poisons the team and is re-raised here.
pub fn run_team<F, R>(size: usize, f: F) -> Vec<R>
where
    F: Fn(&mut TeamContext) -> R + Send + Sync,
    R: Send,
{
    assert!(size >= 1, "team size must be at least 1");
    let core = Arc::new(TeamCore {
        size,
        slots: (0..size)
            .map(|_| {
                Mutex::new(Slot {
                    epoch: 0,
                    tag: "",
                    payload: None,
                })
            })
            .collect(),
        barrier: PoisonBarrier::new(size),
    });

    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(size);
        for rank in 0..size {
            let core = Arc::clone(&core);
            let f = &f;
            handles.push(scope.spawn(move || {
                let guard = PoisonOnPanic(&core);
                let mut ctx = TeamContext {
                    rank,
                    epoch: 0,
                    core: Arc::clone(&core),
                };
                let out = f(&mut ctx);
                std::mem::forget(guard);
                out
            }));
        }
        let mut results = Vec::with_capacity(size);
        let mut panic: Option<Box<dyn Any + Send>> = None;
        for h in handles {
            match h.join() {
                Ok(r) => results.push(r),
                Err(e) => {
                    core.barrier.poison();
                    panic.get_or_insert(e);
                }
            }
        }
        if let Some(p) = panic {
            std::panic::resume_unwind(p);
        }
        results
    })
}

struct PoisonOnPanic<'a>(&'a TeamCore);

impl Drop for PoisonOnPanic<'_> {
    fn drop(&mut self) {
        self.0.barrier.poison();
    }
}

impl TeamContext {
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn size(&self) -> usize {
        self.core.size
    }

    /// Count of completed collectives on this rank.
    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    fn fault(&self, what: &str) -> ! {
        eprintln!(
            "protocol fault on rank {} at epoch {}: {}",
            self.rank, self.epoch, what
        );
        panic!("collective protocol fault: {what}");
    }

    fn deposit(&mut self, tag: &'static str, payload: Box<dyn Any + Send>) {
        let mut slot = self.core.slots[self.rank].lock().unwrap_or_else(std::sync::PoisonError::into_inner);
        slot.epoch = self.epoch;
        slot.tag = tag;
        slot.payload = Some(payload);
        drop(slot);
        self.core.barrier.wait();
    }

    fn check_slot(&self, src: usize, slot: &Slot, tag: &'static str) {
        if slot.epoch != self.epoch || slot.tag != tag {
            self.fault(&format!(
                "rank {} is in collective '{}' (epoch {}) but rank {} posted '{}' (epoch {})",
                self.rank, tag, self.epoch, src, slot.tag, slot.epoch
            ));
        }
    }

    fn finish(&mut self) {
        self.core.barrier.wait();
        self.epoch += 1;
    }

    /// Plain synchronization point.
    pub fn barrier(&mut self) {
        self.deposit("barrier", Box::new(()));
        self.finish();
    }

    /// Variable all-to-all keeping per-source runs separate: entry `s` of the
    /// result is what rank `s` addressed to this rank.
    pub fn all_to_all_v_runs<T: Send + 'static>(&mut self, buckets: Vec<Vec<T>>) -> Vec<Vec<T>> {
        if buckets.len() != self.size() {
            self.fault(&format!(
                "all_to_all_v called with {} buckets on a team of {}",
                buckets.len(),
                self.size()
            ));
        }
        let staged: Vec<Option<Vec<T>>> = buckets.into_iter().map(Some).collect();
        self.deposit("all_to_all_v", Box::new(staged));
        let mut received = Vec::with_capacity(self.size());
        for src in 0..self.size() {
            let mut slot = self.core.slots[src].lock().unwrap_or_else(std::sync::PoisonError::into_inner);
            self.check_slot(src, &slot, "all_to_all_v");
            let staged = slot
                .payload
                .as_mut()
                .and_then(|p| p.downcast_mut::<Vec<Option<Vec<T>>>>())
                .unwrap_or_else(|| self.fault("all_to_all_v payload type mismatch"));
            let part = staged[self.rank]
                .take()
                .unwrap_or_else(|| self.fault("all_to_all_v bucket taken twice"));
            received.push(part);
        }
        self.finish();
        received
    }

    /// Variable all-to-all: rank j receives the concatenation, in source-rank
    /// order, of every rank's bucket j.
    pub fn all_to_all_v<T: Send + 'static>(&mut self, buckets: Vec<Vec<T>>) -> Vec<T> {
        self.all_to_all_v_runs(buckets).into_iter().flatten().collect()
    }

    /// Every rank receives every rank's value, indexed by source rank.
    pub fn all_gather<T: Clone + Send + 'static>(&mut self, value: T) -> Vec<T> {
        self.deposit("all_gather", Box::new(value));
        let mut out = Vec::with_capacity(self.size());
        for src in 0..self.size() {
            let slot = self.core.slots[src].lock().unwrap_or_else(std::sync::PoisonError::into_inner);
            self.check_slot(src, &slot, "all_gather");
            let v = slot
                .payload
                .as_ref()
                .and_then(|p| p.downcast_ref::<T>())
                .unwrap_or_else(|| self.fault("all_gather payload type mismatch"));
            out.push(v.clone());
        }
        self.finish();
        out
    }

    fn gathered_for<T: Clone + Send + 'static>(&mut self, tag: &'static str, value: T) -> Vec<T> {
        self.deposit(tag, Box::new(value));
        let mut out = Vec::with_capacity(self.size());
        for src in 0..self.size() {
            let slot = self.core.slots[src].lock().unwrap_or_else(std::sync::PoisonError::into_inner);
            self.check_slot(src, &slot, tag);
            let v = slot
                .payload
                .as_ref()
                .and_then(|p| p.downcast_ref::<T>())
                .unwrap_or_else(|| self.fault("scan payload type mismatch"));
            out.push(v.clone());
        }
        self.finish();
        out
    }

    /// Rank i receives the fold of ranks 0..i's values; rank 0 receives the
    /// identity.
    pub fn exclusive_scan<T: Clone + Send + 'static>(
        &mut self,
        value: T,
        op: &ScanOperator<T>,
    ) -> T {
        let values = self.gathered_for("exclusive_scan", value);
        let mut acc = op.identity();
        for v in &values[..self.rank] {
            acc = op.combine(&acc, v);
        }
        acc
    }

    /// Mirror of `exclusive_scan` with rank order reversed: rank i receives
    /// the fold of ranks rho-1 down to i+1; the last rank receives the
    /// identity.
    pub fn reverse_exclusive_scan<T: Clone + Send + 'static>(
        &mut self,
        value: T,
        op: &ScanOperator<T>,
    ) -> T {
        let values = self.gathered_for("reverse_exclusive_scan", value);
        let mut acc = op.identity();
        for v in values[self.rank + 1..].iter().rev() {
            acc = op.combine(&acc, v);
        }
        acc
    }

    /// Every rank receives the identical fold, in rank order, of all values.
    pub fn all_reduce<T: Clone + Send + 'static>(&mut self, value: T, op: &ScanOperator<T>) -> T {
        let values = self.gathered_for("all_reduce", value);
        let mut acc = op.identity();
        for v in &values {
            acc = op.combine(&acc, v);
        }
        acc
    }

    /// Restores the block distribution: per-rank counts end up differing by at
    /// most one, and the global concatenation order is preserved.
    pub fn rebalance_blocks<T: Send + 'static>(&mut self, local: Vec<T>) -> Vec<T> {
        let counts = self.all_gather(local.len() as u64);
        let total: u64 = counts.iter().sum();
        let my_offset: u64 = counts[..self.rank].iter().sum();

        let mut buckets: Vec<Vec<T>> = (0..self.size()).map(|_| Vec::new()).collect();
        for (i, item) in local.into_iter().enumerate() {
            let pos = my_offset + i as u64;
            buckets[block_owner(pos, total, self.size())].push(item);
        }
        self.all_to_all_v(buckets)
    }
}

/// Size of rank `rank`'s block when `total` items are block-distributed over
/// `size` ranks: the first `total % size` ranks get one extra item.
pub fn block_size(total: u64, size: usize, rank: usize) -> u64 {
    let size = size as u64;
    let rank = rank as u64;
    total / size + u64::from(rank < total % size)
}

/// First global index of rank `rank`'s block.
pub fn block_offset(total: u64, size: usize, rank: usize) -> u64 {
    let size = size as u64;
    let rank = rank as u64;
    let base = total / size;
    let extra = total % size;
    rank * base + rank.min(extra)
}

/// Rank owning global index `pos` under the block distribution.
pub fn block_owner(pos: u64, total: u64, size: usize) -> usize {
    debug_assert!(pos < total);
    let base = total / size as u64;
    let extra = total % size as u64;
    let boundary = extra * (base + 1);
    if pos < boundary {
        (pos / (base + 1)) as usize
    } else {
        (extra + (pos - boundary) / base) as usize
    }
}

/// Common operators.
pub fn sum_u64() -> ScanOperator<u64> {
    ScanOperator::new(0u64, |a, b| a + b)
}

pub fn max_u64() -> ScanOperator<u64> {
    ScanOperator::new(0u64, |a, b| (*a).max(*b))
}

pub fn min_u64() -> ScanOperator<u64> {
    ScanOperator::new(u64::MAX, |a, b| (*a).min(*b))
}

pub fn and_bool() -> ScanOperator<bool> {
    ScanOperator::new(true, |a, b| *a && *b)
}
