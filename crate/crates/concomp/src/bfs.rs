//! Level-synchronous BFS over a 1-D block partition of dense vertex ids.
//!
//! Each rank owns a contiguous id range and the compressed rows of its owned
//! sources. Per level, owners expand their frontier rows, route discovered
//! ids to their owners, and dedupe against a visited bitmap; the frontier
//! exchange is the only communication. Used to peel the giant component of
//! scale-free graphs and to estimate diameters.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::Edge;
use crate::team::{block_offset, block_owner, block_size, max_u64, sum_u64, TeamContext};

/// Compressed rows for this rank's owned vertex range [lo, hi).
pub struct LocalAdjacency {
    pub n: u64,
    pub lo: u64,
    pub hi: u64,
    offsets: Vec<usize>,
    neighbors: Vec<u64>,
}

impl LocalAdjacency {
    pub fn row(&self, v: u64) -> &[u64] {
        debug_assert!(v >= self.lo && v < self.hi);
        let i = (v - self.lo) as usize;
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn local_arc_count(&self) -> usize {
        self.neighbors.len()
    }
}

/// Routes every arc to the owner of its source and builds sorted rows.
/// Vertices must already carry dense ids below `n`.
pub fn build_adjacency(ctx: &mut TeamContext, arcs: &[Edge], n: u64) -> LocalAdjacency {
    let rho = ctx.size();
    let mut buckets: Vec<Vec<(u64, u64)>> = (0..rho).map(|_| Vec::new()).collect();
    for e in arcs {
        assert!(
            e.src.0 < n && e.dst.0 < n,
            "arc ({}, {}) outside dense id range [0, {n})",
            e.src.0,
            e.dst.0
        );
        buckets[block_owner(e.src.0, n, rho)].push((e.src.0, e.dst.0));
    }
    let mut mine = ctx.all_to_all_v(buckets);
    mine.sort_unstable();

    let lo = block_offset(n, rho, ctx.rank());
    let hi = lo + block_size(n, rho, ctx.rank());
    let rows = (hi - lo) as usize;
    let mut offsets = vec![0usize; rows + 1];
    let mut neighbors = Vec::with_capacity(mine.len());
    for (src, dst) in mine {
        offsets[(src - lo) as usize + 1] += 1;
        neighbors.push(dst);
    }
    for i in 0..rows {
        offsets[i + 1] += offsets[i];
    }
    LocalAdjacency { n, lo, hi, offsets, neighbors }
}

/// Per-rank bitmap over the owned dense id range.
pub struct VisitedSet {
    pub lo: u64,
    pub hi: u64,
    words: Vec<u64>,
    pub visited_count: u64,
}

impl VisitedSet {
    fn new(lo: u64, hi: u64) -> Self {
        VisitedSet {
            lo,
            hi,
            words: vec![0; ((hi - lo) as usize).div_ceil(64)],
            visited_count: 0,
        }
    }

    pub fn contains(&self, v: u64) -> bool {
        let i = (v - self.lo) as usize;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn insert(&mut self, v: u64) -> bool {
        let i = (v - self.lo) as usize;
        let fresh = self.words[i / 64] >> (i % 64) & 1 == 0;
        self.words[i / 64] |= 1 << (i % 64);
        fresh
    }

    /// Owned dense ids that are visited.
    pub fn local_ids(&self) -> impl Iterator<Item = u64> + '_ {
        (self.lo..self.hi).filter(|&v| self.contains(v))
    }
}

/// Expands frontiers level-synchronously from `seed` until the global
/// frontier is empty. Returns the visited set (the seed's connected
/// component) and the level count, which is the seed's eccentricity.
pub fn bfs(ctx: &mut TeamContext, adj: &LocalAdjacency, seed: u64) -> (VisitedSet, u64) {
    assert!(seed < adj.n, "seed {seed} outside [0, {})", adj.n);
    let rho = ctx.size();
    let mut visited = VisitedSet::new(adj.lo, adj.hi);
    let mut frontier: Vec<u64> = Vec::new();
    if seed >= adj.lo && seed < adj.hi {
        visited.insert(seed);
        frontier.push(seed);
    }
    let mut levels = 0u64;
    loop {
        let mut buckets: Vec<Vec<u64>> = (0..rho).map(|_| Vec::new()).collect();
        for &u in &frontier {
            for &v in adj.row(u) {
                buckets[block_owner(v, adj.n, rho)].push(v);
            }
        }
        let incoming = ctx.all_to_all_v(buckets);
        let mut next = Vec::new();
        for v in incoming {
            if visited.insert(v) {
                next.push(v);
            }
        }
        let discovered = ctx.all_reduce(next.len() as u64, &sum_u64());
        if discovered == 0 {
            break;
        }
        levels += 1;
        frontier = next;
    }
    visited.visited_count = ctx.all_reduce(
        visited.words.iter().map(|w| w.count_ones() as u64).sum(),
        &sum_u64(),
    );
    (visited, levels)
}

/// Maximum eccentricity over `trials` BFS runs from seeded-random start
/// vertices; a lower bound on the true diameter.
pub fn approx_diameter(
    ctx: &mut TeamContext,
    adj: &LocalAdjacency,
    trials: u64,
    rng_seed: u64,
) -> u64 {
    if adj.n == 0 {
        return 0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut best = 0u64;
    for _ in 0..trials {
        let seed = rng.gen_range(0..adj.n);
        let (_, levels) = bfs(ctx, adj, seed);
        best = best.max(levels);
    }
    ctx.all_reduce(best, &max_u64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::expand_undirected;
    use crate::team::run_team;

    fn arcs_for(ctx: &TeamContext, pairs: &[(u64, u64)]) -> Vec<Edge> {
        if ctx.rank() == 0 {
            expand_undirected(pairs)
        } else {
            vec![]
        }
    }

    #[test]
    fn triangle_rows_on_one_rank() {
        let out = run_team(1, |ctx| {
            let arcs = arcs_for(ctx, &[(0, 1), (1, 2), (0, 2)]);
            let adj = build_adjacency(ctx, &arcs, 3);
            (0..3).map(|v| adj.row(v).to_vec()).collect::<Vec<_>>()
        });
        assert_eq!(out[0], vec![vec![1, 2], vec![0, 2], vec![0, 1]]);
    }

    #[test]
    fn four_cycle_split_over_two_ranks() {
        let out = run_team(2, |ctx| {
            let arcs = arcs_for(ctx, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
            let adj = build_adjacency(ctx, &arcs, 4);
            (adj.hi - adj.lo, adj.local_arc_count() as u64)
        });
        assert_eq!(out, vec![(2, 4), (2, 4)]);
    }

    #[test]
    fn row_degrees_sum_to_arc_count() {
        let pairs: Vec<(u64, u64)> = (0..50).map(|i| (i % 20, (i * 13 + 1) % 20)).collect();
        let total = run_team(4, |ctx| {
            let arcs = arcs_for(ctx, &pairs);
            let adj = build_adjacency(ctx, &arcs, 20);
            ctx.all_reduce(adj.local_arc_count() as u64, &sum_u64())
        });
        assert_eq!(total[0], 100);
    }

    #[test]
    fn hub_graph_is_one_level() {
        let out = run_team(2, |ctx| {
            let arcs = arcs_for(ctx, &[(0, 1), (0, 2)]);
            let adj = build_adjacency(ctx, &arcs, 3);
            let (visited, levels) = bfs(ctx, &adj, 0);
            (visited.visited_count, levels)
        });
        assert_eq!(out[0], (3, 1));
    }

    #[test]
    fn isolated_seed_visits_itself() {
        let out = run_team(2, |ctx| {
            let arcs = arcs_for(ctx, &[(0, 1)]);
            // n = 3 leaves vertex 2 with an empty row
            let adj = build_adjacency(ctx, &arcs, 3);
            let (visited, levels) = bfs(ctx, &adj, 2);
            (visited.visited_count, levels)
        });
        assert_eq!(out[0], (1, 0));
    }

    #[test]
    fn path_eccentricity_from_the_end() {
        let pairs: Vec<(u64, u64)> = (0..100).map(|i| (i, i + 1)).collect();
        let out = run_team(4, |ctx| {
            let arcs = arcs_for(ctx, &pairs);
            let adj = build_adjacency(ctx, &arcs, 101);
            let (visited, levels) = bfs(ctx, &adj, 100);
            (visited.visited_count, levels)
        });
        assert_eq!(out[0], (101, 100));
    }

    #[test]
    fn visited_set_is_rank_invariant_and_matches_component() {
        let pairs: Vec<(u64, u64)> = vec![(0, 1), (1, 2), (3, 4), (4, 5), (5, 3)];
        let mut reference: Option<(Vec<u64>, u64)> = None;
        for rho in [1usize, 2, 4] {
            let out = run_team(rho, |ctx| {
                let arcs = arcs_for(ctx, &pairs);
                let adj = build_adjacency(ctx, &arcs, 6);
                let (visited, levels) = bfs(ctx, &adj, 4);
                (visited.local_ids().collect::<Vec<u64>>(), levels)
            });
            let mut ids: Vec<u64> = out.iter().flat_map(|(v, _)| v.clone()).collect();
            ids.sort_unstable();
            let levels = out[0].1;
            match &reference {
                None => reference = Some((ids, levels)),
                Some((ref_ids, ref_levels)) => {
                    assert_eq!(&ids, ref_ids, "rho={rho}");
                    assert_eq!(levels, *ref_levels, "rho={rho}");
                }
            }
        }
        assert_eq!(reference.unwrap().0, vec![3, 4, 5]);
    }

    #[test]
    fn complete_graph_diameter_is_one() {
        let mut pairs = Vec::new();
        for i in 0..5u64 {
            for j in i + 1..5 {
                pairs.push((i, j));
            }
        }
        let out = run_team(2, |ctx| {
            let arcs = arcs_for(ctx, &pairs);
            let adj = build_adjacency(ctx, &arcs, 5);
            approx_diameter(ctx, &adj, 10, 42)
        });
        assert_eq!(out[0], 1);
    }

    #[test]
    fn grid_diameter_estimate_brackets_truth() {
        // 32x32 grid: exact diameter 62; 100 random-seed runs lower-bound it
        let w = 32u64;
        let mut pairs = Vec::new();
        for y in 0..w {
            for x in 0..w {
                if x + 1 < w {
                    pairs.push((y * w + x, y * w + x + 1));
                }
                if y + 1 < w {
                    pairs.push((y * w + x, (y + 1) * w + x));
                }
            }
        }
        let est = run_team(2, |ctx| {
            let arcs = arcs_for(ctx, &pairs);
            let adj = build_adjacency(ctx, &arcs, w * w);
            approx_diameter(ctx, &adj, 100, 7)
        })[0];
        assert!(est <= 62, "estimate {est} exceeds the exact diameter");
        assert!(est >= 40, "estimate {est} implausibly low for 100 trials");
    }
}
