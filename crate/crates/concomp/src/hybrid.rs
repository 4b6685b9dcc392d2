//! End-to-end driver: permute ids, classify the topology, optionally peel the
//! giant component with one BFS (relabel, traverse, filter), run SV on what
//! remains, and report canonical labels in the original id space together
//! with per-stage timing.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

use crate::bfs::{bfs, build_adjacency, VisitedSet};
use crate::buckets::resolve_runs;
use crate::graph::{
    dedup_arcs, permute_id, unpermute_id, ComponentLabeling, Edge, EdgeList, VertexId,
};
use crate::powerlaw::{classify_scale_free, degree_histogram, fit_power_law, PowerLawFit};
use crate::psort::samplesort;
use crate::sv::{run_sv, SvOptions, SvReport, SvVariant};
use crate::team::{and_bool, block_owner, min_u64, sum_u64, ScanOperator, TeamContext};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum ForceMode {
    /// Classify the degree distribution and decide at runtime.
    #[default]
    Dynamic,
    AlwaysBfs,
    NeverBfs,
}

#[derive(Clone, Debug)]
pub struct HybridOptions {
    pub tau: f64,
    pub force_mode: ForceMode,
    pub rng_seed: u64,
    pub variant: SvVariant,
    /// Apply the invertible id permutation before processing. Output labels
    /// are canonical either way; this only affects internal id placement.
    pub permute: bool,
    /// Drop exact duplicate arcs at ingestion.
    pub dedup: bool,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions {
            tau: 0.05,
            force_mode: ForceMode::Dynamic,
            rng_seed: 1,
            variant: SvVariant::Balanced,
            permute: true,
            dedup: false,
        }
    }
}

/// Wall seconds per pipeline stage plus the decision and global outcome
/// figures. Stages that did not run report zero seconds.
#[derive(Clone, Debug, Default)]
pub struct StageReport {
    pub seconds_prediction: f64,
    pub seconds_relabel: f64,
    pub seconds_bfs: f64,
    pub seconds_filter: f64,
    pub seconds_sv: f64,
    pub ran_bfs: bool,
    pub fit: Option<PowerLawFit>,
    pub component_count: u64,
    pub largest_component_edge_fraction: f64,
    pub bfs_component_edges: u64,
    pub bfs_component_vertices: u64,
    pub sv: SvReport,
}

impl StageReport {
    pub fn total_seconds(&self) -> f64 {
        self.seconds_prediction
            + self.seconds_relabel
            + self.seconds_bfs
            + self.seconds_filter
            + self.seconds_sv
    }

    /// One key=value per line; timing lines carry wall-clock noise, the rest
    /// is deterministic for a fixed (input, seed, team size).
    pub fn key_value_lines(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("ran_bfs={}\n", self.ran_bfs));
        s.push_str(&format!("component_count={}\n", self.component_count));
        s.push_str(&format!(
            "largest_component_edge_fraction={:.6}\n",
            self.largest_component_edge_fraction
        ));
        s.push_str(&format!("sv_iterations={}\n", self.sv.iterations));
        s.push_str(&format!("sv_initial_tuples={}\n", self.sv.initial_tuples));
        if let Some(fit) = &self.fit {
            s.push_str(&format!("ks_stat={:.6}\n", fit.ks_stat));
            s.push_str(&format!("alpha={:.6}\n", fit.alpha));
            s.push_str(&format!("x_min={}\n", fit.x_min));
        }
        for (name, secs) in self.stage_seconds() {
            s.push_str(&format!("seconds_{name}={secs:.6}\n"));
        }
        s.push_str(&format!("seconds_total={:.6}\n", self.total_seconds()));
        s
    }

    pub fn stage_seconds(&self) -> [(&'static str, f64); 5] {
        [
            ("prediction", self.seconds_prediction),
            ("relabel", self.seconds_relabel),
            ("bfs", self.seconds_bfs),
            ("filter", self.seconds_filter),
            ("sv", self.seconds_sv),
        ]
    }

    /// Human-readable stage table with percentages of total time.
    pub fn human_table(&self) -> String {
        let total = self.total_seconds().max(f64::MIN_POSITIVE);
        let mut s = String::new();
        s.push_str(&format!(
            "{:<12} {:>12} {:>8}\n",
            "stage", "seconds", "share"
        ));
        for (name, secs) in self.stage_seconds() {
            s.push_str(&format!(
                "{:<12} {:>12.6} {:>7.1}%\n",
                name,
                secs,
                100.0 * secs / total
            ));
        }
        s.push_str(&format!(
            "components: {}   largest component: {:.1}% of edges   bfs: {}\n",
            self.component_count,
            100.0 * self.largest_component_edge_fraction,
            if self.ran_bfs { "yes" } else { "no" },
        ));
        s
    }
}

/// Block-distributed bijection between the sparse ids in play and [0, n).
/// Rank i owns the canonical dense block [block_offset(n,rho,i), +size).
pub struct RelabelMap {
    pub n: u64,
    lo: u64,
    sparse_by_dense: Vec<u64>,
}

impl RelabelMap {
    /// Sparse id for an owned dense id.
    pub fn sparse_of(&self, dense: u64) -> u64 {
        self.sparse_by_dense[(dense - self.lo) as usize]
    }
}

/// Rightmost-some combiner: the scan yields each rank's nearest lower
/// contribution, used to propagate run assignments across rank boundaries.
fn latest<T: Clone + Send + 'static>() -> ScanOperator<Option<T>> {
    ScanOperator::new(None, |a: &Option<T>, b: &Option<T>| {
        b.clone().or_else(|| a.clone())
    })
}

/// Assigns dense ids [0, n) to the distinct values of `keys` in global sorted
/// order. `sorted_pairs` is the samplesorted (key, payload) list; returns the
/// per-element dense id plus this rank's owned (sparse, dense) assignments.
fn assign_dense_ids(
    ctx: &mut TeamContext,
    sorted_keys: &[u64],
) -> (Vec<u64>, Vec<(u64, u64)>, u64) {
    let runs = resolve_runs(ctx, sorted_keys, |k| *k, |_| (), |_, _| ());
    let owned = runs.iter().filter(|r| r.owns_start).count() as u64;
    let base = ctx.exclusive_scan(owned, &sum_u64());
    let total = ctx.all_reduce(owned, &sum_u64());

    // dense ids for owned runs, in local order
    let mut assignments: Vec<(u64, u64)> = Vec::with_capacity(owned as usize);
    let mut dense_of_run: Vec<Option<u64>> = Vec::with_capacity(runs.len());
    let mut next = base;
    for run in &runs {
        if run.owns_start {
            assignments.push((run.key, next));
            dense_of_run.push(Some(next));
            next += 1;
        } else {
            dense_of_run.push(None);
        }
    }

    // a non-owned run is always the first local run; its id comes from the
    // nearest lower rank that owns an assignment
    let contribution = runs
        .last()
        .and_then(|r| dense_of_run.last().copied().flatten().map(|d| (r.key, d)));
    let from_below = ctx.exclusive_scan(contribution, &latest());
    let mut ids = vec![0u64; sorted_keys.len()];
    for (run, dense) in runs.iter().zip(&dense_of_run) {
        let dense = dense.unwrap_or_else(|| {
            let (k, d) = from_below.expect("continuation run with no owner below");
            assert_eq!(k, run.key, "boundary run key mismatch");
            d
        });
        for slot in &mut ids[run.start..run.end] {
            *slot = dense;
        }
    }
    (ids, assignments, total)
}

/// Relabels sparse vertex ids to dense [0, n): one sort by source assigns ids
/// to distinct sources, a second sort by destination maps the destinations
/// through the same order-isomorphic assignment (arc pairs guarantee the two
/// distinct-value sequences are identical). Returns the dense arcs (sorted by
/// destination), the distributed map, and n.
pub fn relabel_vertices(
    ctx: &mut TeamContext,
    edges: &EdgeList,
) -> (Vec<Edge>, RelabelMap, u64) {
    let arcs = samplesort(ctx, edges.arcs.clone(), |e| (e.src, e.dst));
    let srcs: Vec<u64> = arcs.iter().map(|e| e.src.0).collect();
    let (dense_src, assignments, n) = assign_dense_ids(ctx, &srcs);

    let half: Vec<(u64, u64)> = arcs
        .iter()
        .zip(&dense_src)
        .map(|(e, &ds)| (e.dst.0, ds))
        .collect();
    let half = samplesort(ctx, half, |&(dst, src)| (dst, src));
    let dsts: Vec<u64> = half.iter().map(|&(dst, _)| dst).collect();
    let (dense_dst, _, n2) = assign_dense_ids(ctx, &dsts);
    assert_eq!(n, n2, "source and destination vertex sets must coincide");

    let dense_arcs: Vec<Edge> = half
        .iter()
        .zip(&dense_dst)
        .map(|(&(_, ds), &dd)| Edge::new(ds, dd))
        .collect();

    // route (sparse, dense) assignments to the canonical owner of each dense id
    let rho = ctx.size();
    let mut buckets: Vec<Vec<(u64, u64)>> = (0..rho).map(|_| Vec::new()).collect();
    for &(sparse, dense) in &assignments {
        buckets[block_owner(dense, n, rho)].push((sparse, dense));
    }
    let mut mine = ctx.all_to_all_v(buckets);
    mine.sort_unstable_by_key(|&(_, dense)| dense);
    let lo = crate::team::block_offset(n, rho, ctx.rank());
    debug_assert!(mine.iter().enumerate().all(|(i, &(_, d))| d == lo + i as u64));
    let map = RelabelMap {
        n,
        lo,
        sparse_by_dense: mine.into_iter().map(|(sparse, _)| sparse).collect(),
    };
    (dense_arcs, map, n)
}

/// Answers `queries` (dense ids) with `f(owner_local_answer)` computed on the
/// owning rank, preserving query order. One request and one response
/// all-to-all.
fn query_owners<A: Send + Clone + 'static>(
    ctx: &mut TeamContext,
    n: u64,
    queries: &[u64],
    answer: impl Fn(&[u64]) -> Vec<A>,
) -> Vec<A> {
    let rho = ctx.size();
    let mut requests: Vec<Vec<u64>> = (0..rho).map(|_| Vec::new()).collect();
    let mut owner_of: Vec<usize> = Vec::with_capacity(queries.len());
    for &q in queries {
        let o = block_owner(q, n, rho);
        owner_of.push(o);
        requests[o].push(q);
    }
    let incoming = ctx.all_to_all_v_runs(requests);
    let responses: Vec<Vec<A>> = incoming.iter().map(|req| answer(req)).collect();
    let returned = ctx.all_to_all_v_runs(responses);
    let mut cursors = vec![0usize; rho];
    owner_of
        .iter()
        .map(|&o| {
            let a = returned[o][cursors[o]].clone();
            cursors[o] += 1;
            a
        })
        .collect()
}

/// Removes every arc incident to the visited component. Arc-pair symmetry
/// makes one endpoint test per arc sufficient, but both endpoints are checked
/// to enforce the invariant that BFS never leaves a component half-visited.
/// Returns the surviving arcs and the number removed.
pub fn filter_component(
    ctx: &mut TeamContext,
    arcs: Vec<Edge>,
    visited: &VisitedSet,
    n: u64,
) -> (Vec<Edge>, u64) {
    let dsts: Vec<u64> = arcs.iter().map(|e| e.dst.0).collect();
    let srcs: Vec<u64> = arcs.iter().map(|e| e.src.0).collect();
    let dst_flags = query_owners(ctx, n, &dsts, |req| {
        req.iter().map(|&v| visited.contains(v)).collect()
    });
    let src_flags = query_owners(ctx, n, &srcs, |req| {
        req.iter().map(|&v| visited.contains(v)).collect()
    });

    let consistent = arcs
        .iter()
        .zip(dst_flags.iter().zip(&src_flags))
        .all(|(_, (d, s))| d == s);
    let all_consistent = ctx.all_reduce(consistent, &and_bool());
    assert!(
        all_consistent,
        "BFS visited one endpoint of an arc but not the other"
    );

    let kept: Vec<Edge> = arcs
        .iter()
        .zip(&dst_flags)
        .filter(|&(_, visited)| !visited)
        .map(|(e, _)| *e)
        .collect();
    let removed = ctx.all_reduce((arcs.len() - kept.len()) as u64, &sum_u64());
    (kept, removed)
}

fn maybe_permute(v: VertexId, enabled: bool) -> VertexId {
    if enabled {
        permute_id(v)
    } else {
        v
    }
}

fn maybe_unpermute(v: VertexId, enabled: bool) -> VertexId {
    if enabled {
        unpermute_id(v)
    } else {
        v
    }
}

/// Canonicalizes labels to the minimum original vertex id per component and
/// returns entries globally sorted by vertex.
fn canonicalize(
    ctx: &mut TeamContext,
    entries: Vec<(VertexId, VertexId)>, // (group key, original vertex)
) -> Vec<(VertexId, VertexId)> {
    let sorted = samplesort(ctx, entries, |&(key, v)| (key, v));
    let runs = resolve_runs(
        ctx,
        &sorted,
        |&(key, _)| key,
        |&(_, v)| v,
        |a: &VertexId, b: &VertexId| *a.min(b),
    );
    let mut labeled: Vec<(VertexId, VertexId)> = Vec::with_capacity(sorted.len());
    for run in &runs {
        let canon = run.agg;
        for &(_, v) in &sorted[run.start..run.end] {
            labeled.push((v, canon));
        }
    }
    samplesort(ctx, labeled, |&(v, l)| (v, l))
}

/// The full adaptive pipeline over a raw (original-id) edge list.
pub fn run_hybrid(
    ctx: &mut TeamContext,
    edges: EdgeList,
    opts: &HybridOptions,
) -> (ComponentLabeling, StageReport) {
    let mut report = StageReport::default();

    let edges = if opts.dedup { dedup_arcs(ctx, edges) } else { edges };
    let arcs = edges.map_ids(|v| maybe_permute(v, opts.permute));
    let mut working = EdgeList::from_local(ctx, arcs);
    let total_edges = working.global_arc_count / 2;

    // prediction
    let decision = match opts.force_mode {
        ForceMode::AlwaysBfs => true,
        ForceMode::NeverBfs => false,
        ForceMode::Dynamic => {
            if working.is_empty() {
                false
            } else {
                let t = Instant::now();
                let hist = degree_histogram(ctx, &working);
                let fit = fit_power_law(&hist);
                let scale_free = classify_scale_free(&fit, opts.tau);
                report.seconds_prediction = t.elapsed().as_secs_f64();
                report.fit = Some(fit);
                scale_free
            }
        }
    };
    report.ran_bfs = decision && !working.is_empty();

    let mut bfs_entries: Vec<(VertexId, VertexId)> = Vec::new();
    if report.ran_bfs {
        let t = Instant::now();
        let (dense_arcs, map, n) = relabel_vertices(ctx, &working);
        report.seconds_relabel = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let adjacency = build_adjacency(ctx, &dense_arcs, n);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.rng_seed);
        let seed = rng.gen_range(0..n);
        let (visited, _levels) = bfs(ctx, &adjacency, seed);
        report.seconds_bfs = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let (kept_dense, removed) = filter_component(ctx, dense_arcs, &visited, n);
        report.bfs_component_edges = removed / 2;
        report.bfs_component_vertices = visited.visited_count;

        // survivors go back to the sparse id space SV runs in
        let kept_srcs: Vec<u64> = kept_dense.iter().map(|e| e.src.0).collect();
        let kept_dsts: Vec<u64> = kept_dense.iter().map(|e| e.dst.0).collect();
        let sparse_srcs = query_owners(ctx, n, &kept_srcs, |req| {
            req.iter().map(|&d| map.sparse_of(d)).collect()
        });
        let sparse_dsts = query_owners(ctx, n, &kept_dsts, |req| {
            req.iter().map(|&d| map.sparse_of(d)).collect()
        });
        let kept: Vec<Edge> = sparse_srcs
            .into_iter()
            .zip(sparse_dsts)
            .map(|(s, d)| Edge::new(s, d))
            .collect();
        working = EdgeList::from_local(ctx, kept);

        // the visited component is labeled by its minimum original id
        let visited_orig: Vec<VertexId> = visited
            .local_ids()
            .map(|dense| maybe_unpermute(VertexId(map.sparse_of(dense)), opts.permute))
            .collect();
        let local_min = visited_orig.iter().map(|v| v.0).min().unwrap_or(u64::MAX);
        let component_label = VertexId(ctx.all_reduce(local_min, &min_u64()));
        bfs_entries = visited_orig.into_iter().map(|v| (v, component_label)).collect();
        report.seconds_filter = t.elapsed().as_secs_f64();
    }

    // SV on whatever remains
    let t = Instant::now();
    let sv_opts = SvOptions { variant: opts.variant, pointer_doubling: true };
    let (sv_labeling, sv_report) = run_sv(ctx, &working, &sv_opts);
    report.seconds_sv = t.elapsed().as_secs_f64();
    report.sv = sv_report;

    // canonicalize SV labels to min original id per component and merge
    let sv_entries: Vec<(VertexId, VertexId)> = sv_labeling
        .entries
        .iter()
        .map(|&(r, p)| (p, maybe_unpermute(r, opts.permute)))
        .collect();
    let mut entries = canonicalize(ctx, sv_entries);
    entries.extend(bfs_entries);
    let entries = samplesort(ctx, entries, |&(v, l)| (v, l));
    let entries = ctx.rebalance_blocks(entries);

    report.component_count = report.sv.component_count + u64::from(report.ran_bfs);
    let largest_edges = report
        .bfs_component_edges
        .max(report.sv.max_component_arc_tuples / 2);
    report.largest_component_edge_fraction = if total_edges == 0 {
        0.0
    } else {
        largest_edges as f64 / total_edges as f64
    };

    let labeling = ComponentLabeling {
        entries,
        component_count: report.component_count,
    };
    (labeling, report)
}
