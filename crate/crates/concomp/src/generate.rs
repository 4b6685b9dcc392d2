//! Synthetic graph generators: Kronecker-style RMAT per the Graph500
//! recursive bisection, 4-neighbor grids, paths, Erdos-Renyi, and forests of
//! small components.
//!
//! Every generator is a deterministic function of its spec alone: edges are
//! indexed globally and each rank materializes its block, drawing per-edge
//! randomness from a counter-based stream. The generated graph is therefore
//! identical for every team size.

use crate::graph::{expand_undirected, EdgeList};
use crate::team::{block_offset, block_size, TeamContext};
use crate::{Error, Result};

/// Graph500 partition probabilities for the recursive bisection.
const RMAT_A: f64 = 0.57;
const RMAT_B: f64 = 0.19;
const RMAT_C: f64 = 0.19;

#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Rmat { scale: u32, edge_factor: u64, seed: u64 },
    Grid { width: u64, height: u64 },
    Path { n: u64 },
    Er { n: u64, p: f64, seed: u64 },
    Forest { components: u64, component_size: u64 },
}

impl GeneratorSpec {
    /// Count of undirected edges the generator will emit.
    fn edge_count(&self) -> Result<u64> {
        match *self {
            GeneratorSpec::Rmat { scale, edge_factor, .. } => {
                if scale > 32 {
                    return Err(Error::InvalidInput(format!(
                        "rmat scale {scale} exceeds the supported maximum of 32"
                    )));
                }
                Ok(edge_factor * (1u64 << scale))
            }
            GeneratorSpec::Grid { width, height } => {
                if width == 0 || height == 0 {
                    return Err(Error::InvalidInput("grid dimensions must be positive".into()));
                }
                Ok(height * (width - 1) + width * (height - 1))
            }
            GeneratorSpec::Path { n } => Ok(n.saturating_sub(1)),
            GeneratorSpec::Er { n, p, .. } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidInput(format!("er probability {p} not in [0,1]")));
                }
                Ok(n * n.saturating_sub(1) / 2)
            }
            GeneratorSpec::Forest { components, component_size } => {
                if component_size < 2 {
                    return Err(Error::InvalidInput(
                        "forest component size must be at least 2".into(),
                    ));
                }
                Ok(components * (component_size - 1))
            }
        }
    }
}

/// Counter-based random stream; each (seed, counter) pair yields an
/// independent deterministic sequence.
struct Stream {
    state: u64,
}

impl Stream {
    fn for_index(seed: u64, index: u64) -> Self {
        Stream {
            state: splitmix64(seed ^ splitmix64(index.wrapping_add(0x51ED_2701))),
        }
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        splitmix64(self.state)
    }

    fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn rmat_edge(scale: u32, seed: u64, index: u64) -> (u64, u64) {
    let mut stream = Stream::for_index(seed, index);
    let (mut u, mut v) = (0u64, 0u64);
    for _ in 0..scale {
        let r = stream.next_f64();
        let (bu, bv) = if r < RMAT_A {
            (0, 0)
        } else if r < RMAT_A + RMAT_B {
            (0, 1)
        } else if r < RMAT_A + RMAT_B + RMAT_C {
            (1, 0)
        } else {
            (1, 1)
        };
        u = (u << 1) | bu;
        v = (v << 1) | bv;
    }
    (u, v)
}

/// This rank's block of the generator's undirected edge list.
pub fn generate_pairs(ctx: &mut TeamContext, spec: &GeneratorSpec) -> Result<Vec<(u64, u64)>> {
    let total = spec.edge_count()?;
    let lo = block_offset(total, ctx.size(), ctx.rank());
    let hi = lo + block_size(total, ctx.size(), ctx.rank());
    let mut pairs = Vec::with_capacity((hi - lo) as usize);
    match *spec {
        GeneratorSpec::Rmat { scale, seed, .. } => {
            for i in lo..hi {
                pairs.push(rmat_edge(scale, seed, i));
            }
        }
        GeneratorSpec::Grid { width, height } => {
            let horizontal = height * (width - 1);
            for i in lo..hi {
                if i < horizontal {
                    let (y, x) = (i / (width - 1), i % (width - 1));
                    pairs.push((y * width + x, y * width + x + 1));
                } else {
                    let j = i - horizontal;
                    let (y, x) = (j / width, j % width);
                    pairs.push((y * width + x, (y + 1) * width + x));
                }
            }
        }
        GeneratorSpec::Path { .. } => {
            for i in lo..hi {
                pairs.push((i, i + 1));
            }
        }
        GeneratorSpec::Er { n, p, seed } => {
            // pair index k enumerates (i,j), i<j, row-major; rows outside the
            // block are skipped wholesale
            let threshold = (p * (1u64 << 63) as f64 * 2.0) as u64;
            let mut row_start = 0u64;
            for i in 0..n.saturating_sub(1) {
                let row_len = n - 1 - i;
                let row_end = row_start + row_len;
                if row_end > lo && row_start < hi {
                    let from = lo.max(row_start);
                    let to = hi.min(row_end);
                    for k in from..to {
                        let j = i + 1 + (k - row_start);
                        let coin = splitmix64(seed ^ splitmix64(k.wrapping_add(0xE5C0)));
                        if coin < threshold {
                            pairs.push((i, j));
                        }
                    }
                }
                row_start = row_end;
                if row_start >= hi {
                    break;
                }
            }
        }
        GeneratorSpec::Forest { component_size, .. } => {
            let per = component_size - 1;
            for i in lo..hi {
                let (c, j) = (i / per, i % per);
                pairs.push((c * component_size + j, c * component_size + j + 1));
            }
        }
    }
    Ok(pairs)
}

/// Generates and canonicalizes to the block-distributed arc-pair form.
pub fn generate_arcs(ctx: &mut TeamContext, spec: &GeneratorSpec) -> Result<EdgeList> {
    let pairs = generate_pairs(ctx, spec)?;
    Ok(EdgeList::from_local(ctx, expand_undirected(&pairs)))
}
