//! Edge-centric Shiloach-Vishkin connectivity over sorted tuple arrays.
//!
//! The working state is an array of tuples (p, q, r): partition id, candidate
//! partition id, vertex id. Each iteration sorts by vertex id to let every
//! vertex nominate its minimum incident partition, then sorts by partition id
//! to join each partition to its minimum candidate. A second round of the two
//! sorts with one temporary tuple per partition performs pointer jumping, so
//! a freshly joined partition immediately jumps to its parent's partition;
//! this is what bounds the iteration count logarithmically.
//!
//! Buckets that span rank boundaries are resolved with one forward and one
//! reverse exclusive scan per sort (see `buckets`), keeping communication
//! independent of bucket size. Partitions whose neighborhood has collapsed to
//! themselves are detected via the potentially-completed marking and retired
//! from the active working set; active tuples can be rebalanced every
//! iteration to keep per-rank counts even.

use std::time::Instant;

use crate::buckets::resolve_runs;
use crate::graph::{ComponentLabeling, EdgeList, VertexId};
use crate::psort::samplesort;
use crate::team::{and_bool, max_u64, sum_u64, TeamContext};

const FLAG_TEMPORARY: u8 = 1 << 0;
const FLAG_POTENTIALLY_COMPLETED: u8 = 1 << 1;
const FLAG_COMPLETED: u8 = 1 << 2;

/// The unit of algorithm state. `r` is fixed at construction; `p` and `q`
/// are rewritten every iteration.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct WorkTuple {
    pub p: VertexId,
    pub q: VertexId,
    pub r: VertexId,
    flags: u8,
}

impl WorkTuple {
    /// Vertex tuple <x,_,x>; q starts as the tuple's own p.
    pub fn vertex(x: VertexId) -> Self {
        WorkTuple { p: x, q: x, r: x, flags: 0 }
    }

    /// Edge tuple <x,_,y> for an arc x -> y.
    pub fn arc(x: VertexId, y: VertexId) -> Self {
        WorkTuple { p: x, q: x, r: y, flags: 0 }
    }

    /// Temporary tuple <p_min,_,p_min>, alive only within one iteration.
    fn temporary(p_min: VertexId) -> Self {
        WorkTuple { p: p_min, q: p_min, r: p_min, flags: FLAG_TEMPORARY }
    }

    pub fn is_temporary(&self) -> bool {
        self.flags & FLAG_TEMPORARY != 0
    }

    pub fn is_potentially_completed(&self) -> bool {
        self.flags & FLAG_POTENTIALLY_COMPLETED != 0
    }

    pub fn is_completed(&self) -> bool {
        self.flags & FLAG_COMPLETED != 0
    }

    fn set_potentially_completed(&mut self, value: bool) {
        if value {
            self.flags |= FLAG_POTENTIALLY_COMPLETED;
        } else {
            self.flags &= !FLAG_POTENTIALLY_COMPLETED;
        }
    }

    fn set_completed(&mut self) {
        self.flags |= FLAG_COMPLETED;
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum SvVariant {
    /// No completed-partition exclusion, no rebalancing.
    Naive,
    /// Completed-partition exclusion only.
    Exclude,
    /// Exclusion plus unconditional rebalancing each iteration.
    #[default]
    Balanced,
}

#[derive(Clone, Debug)]
pub struct SvOptions {
    pub variant: SvVariant,
    /// Disables the second sort round (test knob for measuring what pointer
    /// jumping buys; always on in production paths).
    pub pointer_doubling: bool,
}

impl Default for SvOptions {
    fn default() -> Self {
        SvOptions { variant: SvVariant::Balanced, pointer_doubling: true }
    }
}

#[derive(Clone, Debug)]
pub struct IterationStats {
    pub iteration: u32,
    /// Active tuple counts per rank after this iteration's maintenance.
    pub active_min: u64,
    pub active_mean: f64,
    pub active_max: u64,
    /// |P_i|: distinct partitions seen in the first partition pass; equals the
    /// number of temporary tuples appended.
    pub partitions: u64,
    pub temporaries: u64,
    /// (stage name, seconds) in execution order, on this rank's clock.
    pub stages: Vec<(&'static str, f64)>,
}

#[derive(Clone, Debug, Default)]
pub struct SvReport {
    pub iterations: u32,
    pub initial_tuples: u64,
    pub per_iteration: Vec<IterationStats>,
    pub component_count: u64,
    /// Arc-tuple count (2 * edge count) of the largest component.
    pub max_component_arc_tuples: u64,
}

/// Builds the initial tuple array: one vertex tuple per distinct vertex and
/// one tuple per arc, so |A_0| = n + 2m. Distinct vertices are discovered by
/// sorting arc sources and uniquing across rank boundaries.
pub fn init_tuples(ctx: &mut TeamContext, edges: &EdgeList) -> Vec<WorkTuple> {
    let mut tuples: Vec<WorkTuple> =
        edges.arcs.iter().map(|e| WorkTuple::arc(e.src, e.dst)).collect();

    let srcs: Vec<u64> = edges.arcs.iter().map(|e| e.src.0).collect();
    let sorted = samplesort(ctx, srcs, |v| *v);
    let runs = resolve_runs(ctx, &sorted, |v| *v, |_| (), |_, _| ());
    for run in &runs {
        if run.owns_start {
            tuples.push(WorkTuple::vertex(VertexId(run.key)));
        }
    }
    ctx.rebalance_blocks(tuples)
}

/// Sort by vertex id and let each vertex bucket nominate its minimum incident
/// partition: q <- min M_i(u) for every tuple, with the potentially-completed
/// flag set iff the bucket contains exactly one distinct partition.
pub fn vertex_bucket_pass(ctx: &mut TeamContext, tuples: Vec<WorkTuple>) -> Vec<WorkTuple> {
    let mut sorted = samplesort(ctx, tuples, |t| (t.r, t.p, t.q));
    let runs = resolve_runs(
        ctx,
        &sorted,
        |t| t.r,
        |t| (t.p, t.p),
        |a: &(VertexId, VertexId), b: &(VertexId, VertexId)| (a.0.min(b.0), a.1.max(b.1)),
    );
    for run in &runs {
        let (u_min, u_max) = run.agg;
        let single_partition = u_min == u_max;
        for t in &mut sorted[run.start..run.end] {
            t.q = u_min;
            t.set_potentially_completed(single_partition);
        }
    }
    sorted
}

/// Sort by partition id and join each partition to its minimum candidate:
/// p <- min C_i(p). Returns whether every partition was already stable. When
/// `emit_temporaries` is set, the rank owning a bucket's first tuple appends
/// the bucket's temporary tuple. Partitions whose tuples are all potentially
/// completed are marked completed.
pub fn partition_bucket_pass(
    ctx: &mut TeamContext,
    tuples: Vec<WorkTuple>,
    emit_temporaries: bool,
) -> (Vec<WorkTuple>, bool, u64) {
    let mut sorted = samplesort(ctx, tuples, |t| (t.p, t.q, t.r));
    let runs = resolve_runs(
        ctx,
        &sorted,
        |t| t.p,
        |t| (t.q, t.is_potentially_completed()),
        |a: &(VertexId, bool), b: &(VertexId, bool)| (a.0.min(b.0), a.1 && b.1),
    );
    let mut converged = true;
    let mut partitions_owned = 0u64;
    let mut temporaries = Vec::new();
    for run in &runs {
        let (p_min, all_potentially_completed) = run.agg;
        debug_assert!(p_min <= run.key, "partition ids only decrease");
        if p_min != run.key {
            converged = false;
        }
        for t in &mut sorted[run.start..run.end] {
            t.p = p_min;
            if all_potentially_completed {
                t.set_completed();
            }
        }
        if run.owns_start {
            partitions_owned += 1;
            if emit_temporaries {
                temporaries.push(WorkTuple::temporary(p_min));
            }
        }
    }
    sorted.extend_from_slice(&temporaries);
    (sorted, converged, partitions_owned)
}

/// Moves completed tuples out of the active set. Retired tuples are never
/// touched again; their first element is the final component label.
pub fn exclude_completed(active: Vec<WorkTuple>, retired: &mut Vec<WorkTuple>) -> Vec<WorkTuple> {
    let (keep, done): (Vec<_>, Vec<_>) = active.into_iter().partition(|t| !t.is_completed());
    retired.extend_from_slice(&done);
    keep
}

// Convergence is bounded by 2*ceil(log2(n)) + 2 <= 130 for 64-bit ids; well
// past that means a logic error, not a slow graph.
const ITERATION_FAILSAFE: u32 = 200;

/// Runs the full iteration loop to convergence and extracts one label per
/// distinct vertex. Labels are the minimum vertex id of each component in the
/// id space the edges use (callers permute/canonicalize around this).
pub fn run_sv(
    ctx: &mut TeamContext,
    edges: &EdgeList,
    opts: &SvOptions,
) -> (ComponentLabeling, SvReport) {
    let mut active = init_tuples(ctx, edges);
    let mut retired: Vec<WorkTuple> = Vec::new();
    let initial_tuples = ctx.all_reduce(active.len() as u64, &sum_u64());

    let mut report = SvReport {
        initial_tuples,
        ..SvReport::default()
    };

    loop {
        report.iterations += 1;
        if report.iterations > ITERATION_FAILSAFE {
            panic!("SV failed to converge within {ITERATION_FAILSAFE} iterations");
        }
        let mut stages: Vec<(&'static str, f64)> = Vec::with_capacity(5);
        let timed = |name: &'static str, stages: &mut Vec<(&'static str, f64)>, t0: Instant| {
            stages.push((name, t0.elapsed().as_secs_f64()));
        };

        let t = Instant::now();
        active = vertex_bucket_pass(ctx, active);
        timed("vertex_pass_1", &mut stages, t);

        let t = Instant::now();
        let (a, conv_first, partitions) =
            partition_bucket_pass(ctx, active, opts.pointer_doubling);
        active = a;
        timed("partition_pass_1", &mut stages, t);

        let mut converged_local = conv_first;
        let mut temporaries = 0;
        if opts.pointer_doubling {
            temporaries = ctx.all_reduce(
                active.iter().filter(|t| t.is_temporary()).count() as u64,
                &sum_u64(),
            );

            let t = Instant::now();
            active = vertex_bucket_pass(ctx, active);
            timed("vertex_pass_2", &mut stages, t);

            let t = Instant::now();
            let (a, conv_second, _) = partition_bucket_pass(ctx, active, false);
            active = a;
            timed("partition_pass_2", &mut stages, t);
            converged_local = converged_local && conv_second;

            active.retain(|t| !t.is_temporary());
        }

        let t = Instant::now();
        if opts.variant != SvVariant::Naive {
            active = exclude_completed(active, &mut retired);
        }
        if opts.variant == SvVariant::Balanced {
            active = ctx.rebalance_blocks(active);
        }
        timed("maintenance", &mut stages, t);

        let counts = ctx.all_gather(active.len() as u64);
        let global_partitions = ctx.all_reduce(partitions, &sum_u64());
        report.per_iteration.push(IterationStats {
            iteration: report.iterations,
            active_min: counts.iter().copied().min().unwrap_or(0),
            active_mean: counts.iter().sum::<u64>() as f64 / counts.len() as f64,
            active_max: counts.iter().copied().max().unwrap_or(0),
            partitions: global_partitions,
            temporaries,
            stages,
        });

        let total = ctx.all_reduce((active.len() + retired.len()) as u64, &sum_u64());
        assert_eq!(total, initial_tuples, "tuple conservation violated");

        if ctx.all_reduce(converged_local, &and_bool()) {
            break;
        }
    }

    let mut all = active;
    all.extend_from_slice(&retired);

    // label extraction: one (r, p) per distinct vertex
    let by_vertex = samplesort(ctx, all, |t| (t.r, t.p, t.q));
    let runs = resolve_runs(
        ctx,
        &by_vertex,
        |t| t.r,
        |t| (t.p, t.p),
        |a: &(VertexId, VertexId), b: &(VertexId, VertexId)| (a.0.min(b.0), a.1.max(b.1)),
    );
    let mut entries: Vec<(VertexId, VertexId)> = Vec::new();
    for run in &runs {
        if run.owns_start {
            debug_assert_eq!(run.agg.0, run.agg.1, "vertex labels disagree at convergence");
            entries.push((run.key, run.agg.0));
        }
    }

    // per-component totals: tuples and distinct vertices per final partition
    #[derive(Copy, Clone)]
    struct Seg {
        tuples: u64,
        vertices: u64,
        first_r: VertexId,
        last_r: VertexId,
    }
    let by_partition = samplesort(ctx, by_vertex, |t| (t.p, t.r, t.q));
    let runs = resolve_runs(
        ctx,
        &by_partition,
        |t| t.p,
        |t| Seg { tuples: 1, vertices: 1, first_r: t.r, last_r: t.r },
        |a: &Seg, b: &Seg| Seg {
            tuples: a.tuples + b.tuples,
            vertices: a.vertices + b.vertices - u64::from(a.last_r == b.first_r),
            first_r: a.first_r,
            last_r: b.last_r,
        },
    );
    let mut owned_components = 0u64;
    let mut max_arc_tuples = 0u64;
    for run in &runs {
        if run.owns_start {
            owned_components += 1;
            max_arc_tuples = max_arc_tuples.max(run.agg.tuples - run.agg.vertices);
        }
    }
    report.component_count = ctx.all_reduce(owned_components, &sum_u64());
    report.max_component_arc_tuples = ctx.all_reduce(max_arc_tuples, &max_u64());

    let entries = ctx.rebalance_blocks(entries);
    let labeling = ComponentLabeling {
        entries,
        component_count: report.component_count,
    };
    (labeling, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{expand_undirected, EdgeList};
    use crate::oracle::union_find_oracle;
    use crate::team::run_team;

    fn edge_list_on_rank0(ctx: &mut TeamContext, pairs: &[(u64, u64)]) -> EdgeList {
        let arcs = if ctx.rank() == 0 { expand_undirected(pairs) } else { vec![] };
        EdgeList::from_local(ctx, arcs)
    }

    fn tuple_multiset(tuples: &[WorkTuple]) -> Vec<(u64, u64)> {
        let mut v: Vec<(u64, u64)> = tuples.iter().map(|t| (t.p.0, t.r.0)).collect();
        v.sort_unstable();
        v
    }

    #[test]
    fn init_single_edge_yields_four_tuples() {
        let out = run_team(1, |ctx| {
            let edges = edge_list_on_rank0(ctx, &[(0, 1)]);
            init_tuples(ctx, &edges)
        });
        assert_eq!(
            tuple_multiset(&out[0]),
            vec![(0, 0), (0, 1), (1, 0), (1, 1)]
        );
    }

    #[test]
    fn init_triangle_has_n_plus_2m_tuples() {
        let out = run_team(3, |ctx| {
            let edges = edge_list_on_rank0(ctx, &[(0, 1), (1, 2), (0, 2)]);
            init_tuples(ctx, &edges).len() as u64
        });
        assert_eq!(out.iter().sum::<u64>(), 3 + 6);
    }

    #[test]
    fn init_matches_bucket_definitions_for_hub_graph() {
        // hub u=5 with spokes v1=1, v2=9
        let (u, v1, v2) = (5u64, 1u64, 9u64);
        let out = run_team(2, |ctx| {
            let edges = edge_list_on_rank0(ctx, &[(u, v1), (u, v2)]);
            init_tuples(ctx, &edges)
        });
        let all: Vec<WorkTuple> = out.into_iter().flatten().collect();
        let vb_u: Vec<u64> = all.iter().filter(|t| t.r.0 == u).map(|t| t.p.0).collect();
        let pb_u: Vec<u64> = all.iter().filter(|t| t.p.0 == u).map(|t| t.r.0).collect();
        let sorted = |mut v: Vec<u64>| {
            v.sort_unstable();
            v
        };
        assert_eq!(sorted(vb_u), vec![v1, u, v2]);
        assert_eq!(sorted(pb_u), vec![v1, u, v2]);
    }

    #[test]
    fn vertex_pass_nominates_minimum_and_marks_singletons() {
        let out = run_team(1, |ctx| {
            let tuples = vec![
                WorkTuple::vertex(VertexId(5)),
                WorkTuple::arc(VertexId(9), VertexId(7)),
                WorkTuple::arc(VertexId(4), VertexId(7)),
                WorkTuple::vertex(VertexId(7)),
            ];
            vertex_bucket_pass(ctx, tuples)
        });
        for t in &out[0] {
            if t.r.0 == 7 {
                assert_eq!(t.q.0, 4);
                assert!(!t.is_potentially_completed());
            } else {
                assert_eq!(t.q.0, 5);
                assert!(t.is_potentially_completed(), "singleton bucket");
            }
        }
    }

    #[test]
    fn boundary_bucket_matches_single_rank_run() {
        // one vertex bucket (r=7) split across 3 ranks with partitions 9/4/7
        let mk = |p: u64| WorkTuple::arc(VertexId(p), VertexId(7));
        let serial = run_team(1, |ctx| vertex_bucket_pass(ctx, vec![mk(9), mk(4), mk(7)]));
        let split = run_team(3, |ctx| {
            let mine = vec![mk([9, 4, 7][ctx.rank()])];
            vertex_bucket_pass(ctx, mine)
        });
        for t in split.iter().flatten() {
            assert_eq!(t.q.0, 4);
        }
        for t in &serial[0] {
            assert_eq!(t.q.0, 4);
        }
    }

    #[test]
    fn partition_pass_updates_and_detects_stability() {
        let (out, conv) = run_team(1, |ctx| {
            // stable partition 3 (candidates only itself), unstable 8 -> 3
            let mut a = WorkTuple::arc(VertexId(3), VertexId(6));
            a.q = VertexId(3);
            let mut b = WorkTuple::arc(VertexId(8), VertexId(3));
            b.q = VertexId(3);
            let (tuples, conv, _) = partition_bucket_pass(ctx, vec![a, b], false);
            (tuples, conv)
        })
        .pop()
        .unwrap();
        assert!(!conv, "a joining partition means not converged");
        assert!(out.iter().all(|t| t.p.0 == 3));

        let (_, conv2) = run_team(1, |ctx| {
            let mut a = WorkTuple::arc(VertexId(3), VertexId(6));
            a.q = VertexId(3);
            let (tuples, conv, _) = partition_bucket_pass(ctx, vec![a], false);
            (tuples, conv)
        })
        .pop()
        .unwrap();
        assert!(conv2, "stable partition alone converges");
    }

    #[test]
    fn temporary_count_equals_partition_count() {
        let out = run_team(2, |ctx| {
            let edges = edge_list_on_rank0(ctx, &[(0, 1), (1, 2), (3, 4)]);
            let tuples = init_tuples(ctx, &edges);
            let tuples = vertex_bucket_pass(ctx, tuples);
            let (tuples, _, owned) = partition_bucket_pass(ctx, tuples, true);
            let temps = tuples.iter().filter(|t| t.is_temporary()).count() as u64;
            let total_temps = ctx.all_reduce(temps, &sum_u64());
            let total_partitions = ctx.all_reduce(owned, &sum_u64());
            (total_temps, total_partitions)
        });
        let (temps, parts) = out[0];
        assert_eq!(temps, parts);
        assert_eq!(parts, 5, "|P_0| is the vertex count before any join");
    }

    #[test]
    fn erase_restores_pre_append_count() {
        let out = run_team(2, |ctx| {
            let edges = edge_list_on_rank0(ctx, &[(0, 1), (1, 2)]);
            let tuples = init_tuples(ctx, &edges);
            let before = ctx.all_reduce(tuples.len() as u64, &sum_u64());
            let tuples = vertex_bucket_pass(ctx, tuples);
            let (mut tuples, _, _) = partition_bucket_pass(ctx, tuples, true);
            tuples.retain(|t| !t.is_temporary());
            let after = ctx.all_reduce(tuples.len() as u64, &sum_u64());
            (before, after)
        });
        assert_eq!(out[0].0, out[0].1);
    }

    #[test]
    fn hub_graph_converges_to_min_id() {
        let out = run_team(2, |ctx| {
            let edges = edge_list_on_rank0(ctx, &[(5, 9), (5, 7)]);
            run_sv(ctx, &edges, &SvOptions::default())
        });
        let (labeling, report) = &out[0];
        assert_eq!(labeling.component_count, 1);
        let mut entries: Vec<(u64, u64)> = Vec::new();
        for (lab, _) in &out {
            entries.extend(lab.entries.iter().map(|&(v, l)| (v.0, l.0)));
        }
        entries.sort_unstable();
        assert_eq!(entries, vec![(5, 5), (7, 5), (9, 5)]);
        assert_eq!(report.max_component_arc_tuples, 4);
    }

    #[test]
    fn empty_graph_is_zero_components() {
        let out = run_team(2, |ctx| {
            let edges = EdgeList::from_local(ctx, vec![]);
            run_sv(ctx, &edges, &SvOptions::default())
        });
        assert_eq!(out[0].0.component_count, 0);
        assert!(out[0].0.entries.is_empty());
        assert_eq!(out[0].1.iterations, 1);
    }

    #[test]
    fn two_components_stay_apart() {
        let out = run_team(2, |ctx| {
            let edges = edge_list_on_rank0(ctx, &[(0, 1), (2, 3)]);
            run_sv(ctx, &edges, &SvOptions::default()).0
        });
        let mut entries: Vec<(u64, u64)> = out
            .iter()
            .flat_map(|l| l.entries.iter().map(|&(v, c)| (v.0, c.0)))
            .collect();
        entries.sort_unstable();
        assert_eq!(entries, vec![(0, 0), (1, 0), (2, 2), (3, 2)]);
        assert_eq!(out[0].component_count, 2);
    }

    fn labels_of(rho: usize, pairs: &[(u64, u64)], opts: &SvOptions) -> Vec<(u64, u64)> {
        let pairs = pairs.to_vec();
        let opts = opts.clone();
        let out = run_team(rho, move |ctx| {
            let edges = edge_list_on_rank0(ctx, &pairs);
            run_sv(ctx, &edges, &opts).0
        });
        let mut entries: Vec<(u64, u64)> = out
            .iter()
            .flat_map(|l| l.entries.iter().map(|&(v, c)| (v.0, c.0)))
            .collect();
        entries.sort_unstable();
        entries
    }

    #[test]
    fn random_graphs_match_union_find_oracle() {
        let mut state = 7u64;
        for case in 0..30 {
            let n = 1 + (case % 6) * 20;
            let mut pairs = Vec::new();
            for _ in 0..(n * 2) {
                state = crate::generate::splitmix64(state);
                let u = state % n;
                state = crate::generate::splitmix64(state);
                let v = state % n;
                pairs.push((u, v));
            }
            let oracle = union_find_oracle(&expand_undirected(&pairs));
            let expect: Vec<(u64, u64)> =
                oracle.entries.iter().map(|&(v, l)| (v.0, l.0)).collect();
            for rho in [1usize, 4] {
                assert_eq!(
                    labels_of(rho, &pairs, &SvOptions::default()),
                    expect,
                    "case {case} rho {rho}"
                );
            }
        }
    }

    #[test]
    fn variants_agree_on_labels() {
        let pairs: Vec<(u64, u64)> = (0..40).map(|i| (i, (i * 7 + 3) % 41)).collect();
        let expect = labels_of(2, &pairs, &SvOptions::default());
        for variant in [SvVariant::Naive, SvVariant::Exclude] {
            let opts = SvOptions { variant, pointer_doubling: true };
            assert_eq!(labels_of(2, &pairs, &opts), expect, "{variant:?}");
        }
    }

    #[test]
    fn self_loops_are_harmless() {
        let entries = labels_of(2, &[(4, 4), (4, 6)], &SvOptions::default());
        assert_eq!(entries, vec![(4, 4), (6, 4)]);
    }

    #[test]
    fn pointer_doubling_reaches_the_root_earlier() {
        // path 0-1-2-3: with doubling, vertex 3's partition hits 0 after
        // iteration 1; without, it takes an extra iteration
        let path = [(0u64, 1u64), (1, 2), (2, 3)];
        let partition_of_3_after_one_iter = |doubling: bool| -> u64 {
            run_team(1, |ctx| {
                let edges = edge_list_on_rank0(ctx, &path);
                let tuples = init_tuples(ctx, &edges);
                let tuples = vertex_bucket_pass(ctx, tuples);
                let (tuples, _, _) = partition_bucket_pass(ctx, tuples, doubling);
                let tuples = if doubling {
                    let tuples = vertex_bucket_pass(ctx, tuples);
                    let (mut tuples, _, _) = partition_bucket_pass(ctx, tuples, false);
                    tuples.retain(|t| !t.is_temporary());
                    tuples
                } else {
                    tuples
                };
                // the vertex has fully reached a partition once all its
                // tuples carry it
                tuples
                    .iter()
                    .filter(|t| t.r.0 == 3)
                    .map(|t| t.p.0)
                    .max()
                    .unwrap()
            })[0]
        };
        assert_eq!(partition_of_3_after_one_iter(true), 0);
        assert!(partition_of_3_after_one_iter(false) > 0);

        let with = run_team(1, |ctx| {
            let edges = edge_list_on_rank0(ctx, &path);
            run_sv(ctx, &edges, &SvOptions::default()).1.iterations
        })[0];
        let without = run_team(1, |ctx| {
            let edges = edge_list_on_rank0(ctx, &path);
            let opts = SvOptions { pointer_doubling: false, ..SvOptions::default() };
            run_sv(ctx, &edges, &opts).1.iterations
        })[0];
        assert!(with <= without);
    }

    #[test]
    fn forest_of_disjoint_edges_retires_quickly() {
        let pairs: Vec<(u64, u64)> = (0..1000).map(|i| (2 * i, 2 * i + 1)).collect();
        let out = run_team(4, |ctx| {
            let edges = edge_list_on_rank0(ctx, &pairs);
            run_sv(ctx, &edges, &SvOptions { variant: SvVariant::Exclude, ..Default::default() })
        });
        let report = &out[0].1;
        assert_eq!(out[0].0.component_count, 1000);
        let means: Vec<f64> = report.per_iteration.iter().map(|s| s.active_mean).collect();
        assert!(
            means.first().copied().unwrap_or(0.0) < report.initial_tuples as f64,
            "exclusion shrinks the active set: {means:?}"
        );
    }

    #[test]
    fn single_component_retires_nothing_until_the_end() {
        let pairs: Vec<(u64, u64)> = (0..63).map(|i| (i, i + 1)).collect();
        let out = run_team(2, |ctx| {
            let edges = edge_list_on_rank0(ctx, &pairs);
            run_sv(ctx, &edges, &SvOptions { variant: SvVariant::Exclude, ..Default::default() })
        });
        let stats = &out[0].1.per_iteration;
        // a single component only retires once fully joined: every iteration
        // before the join completes keeps the full working set
        assert!(stats.len() >= 3);
        for s in &stats[..stats.len() - 2] {
            let total = s.active_mean * 2.0;
            assert_eq!(total as u64, out[0].1.initial_tuples, "iter {}", s.iteration);
        }
        assert_eq!(stats.last().unwrap().active_max, 0, "everything retired at the end");
    }

    #[test]
    fn convergence_bound_on_paths() {
        for k in [4u32, 6, 8] {
            let n = 1u64 << k;
            let pairs: Vec<(u64, u64)> = (0..n - 1).map(|i| (i, i + 1)).collect();
            let out = run_team(2, |ctx| {
                let edges = edge_list_on_rank0(ctx, &pairs);
                run_sv(ctx, &edges, &SvOptions::default()).1.iterations
            });
            assert!(out[0] <= 2 * k + 2, "path 2^{k}: {} iterations", out[0]);
        }
    }

    #[test]
    fn balanced_variant_keeps_ranks_even() {
        let pairs: Vec<(u64, u64)> = (0..500).map(|i| (i % 97, (i * 31) % 97)).collect();
        let out = run_team(4, |ctx| {
            let edges = edge_list_on_rank0(ctx, &pairs);
            run_sv(ctx, &edges, &SvOptions::default()).1
        });
        for s in &out[0].per_iteration {
            assert!(s.active_max - s.active_min <= 1, "iteration {}", s.iteration);
        }
    }

    #[test]
    fn naive_variant_keeps_constant_working_set() {
        let pairs: Vec<(u64, u64)> = (0..200).map(|i| (2 * i, 2 * i + 1)).collect();
        let out = run_team(2, |ctx| {
            let edges = edge_list_on_rank0(ctx, &pairs);
            let opts = SvOptions { variant: SvVariant::Naive, ..Default::default() };
            run_sv(ctx, &edges, &opts).1
        });
        let report = &out[0];
        for s in &report.per_iteration {
            let total = (s.active_mean * 2.0).round() as u64;
            assert_eq!(total, report.initial_tuples);
        }
    }
}
