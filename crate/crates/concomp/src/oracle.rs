//! Sequential union-find, the exact reference every distributed result is
//! checked against. Single rank only.

use std::collections::HashMap;

use crate::graph::{ComponentLabeling, Edge, VertexId};

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, x: usize, y: usize) {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return;
        }
        match self.rank[rx].cmp(&self.rank[ry]) {
            std::cmp::Ordering::Less => self.parent[rx] = ry,
            std::cmp::Ordering::Greater => self.parent[ry] = rx,
            std::cmp::Ordering::Equal => {
                self.parent[ry] = rx;
                self.rank[rx] += 1;
            }
        }
    }
}

/// Exact connected components of an arc list, labels canonicalized to the
/// minimum vertex id of each component, entries sorted by vertex id.
pub fn union_find_oracle(arcs: &[Edge]) -> ComponentLabeling {
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut ids: Vec<u64> = Vec::new();
    let intern = |v: u64, ids: &mut Vec<u64>, index: &mut HashMap<u64, usize>| -> usize {
        *index.entry(v).or_insert_with(|| {
            ids.push(v);
            ids.len() - 1
        })
    };
    let mut pairs = Vec::with_capacity(arcs.len());
    for e in arcs {
        let a = intern(e.src.0, &mut ids, &mut index);
        let b = intern(e.dst.0, &mut ids, &mut index);
        pairs.push((a, b));
    }

    let mut dsu = DisjointSet::new(ids.len());
    for (a, b) in pairs {
        dsu.union(a, b);
    }

    let mut min_of_root: HashMap<usize, u64> = HashMap::new();
    for (i, &id) in ids.iter().enumerate() {
        let root = dsu.find(i);
        let entry = min_of_root.entry(root).or_insert(u64::MAX);
        *entry = (*entry).min(id);
    }

    let mut entries: Vec<(VertexId, VertexId)> = (0..ids.len())
        .map(|i| {
            let root = dsu.find(i);
            (VertexId(ids[i]), VertexId(min_of_root[&root]))
        })
        .collect();
    entries.sort_unstable();

    ComponentLabeling {
        component_count: min_of_root.len() as u64,
        entries,
    }
}
