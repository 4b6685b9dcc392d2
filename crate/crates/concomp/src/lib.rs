//! Connected components for large undirected graphs on an SPMD worker team.
//!
//! The pipeline runs an edge-centric Shiloach-Vishkin algorithm over sorted
//! tuple arrays, with a topology classifier that fits the degree distribution
//! to a discrete power law and, for scale-free graphs, peels the giant
//! component with one parallel BFS before handing the rest to SV.

pub mod bfs;
pub mod buckets;
pub mod cli;
pub mod generate;
pub mod graph;
pub mod hybrid;
pub mod io;
pub mod oracle;
pub mod powerlaw;
pub mod psort;
pub mod sv;
pub mod team;

use std::path::PathBuf;

/// Errors surfaced to the CLI. Collective protocol faults and violated
/// internal contracts panic instead: they are bugs, not inputs.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: truncated binary input at offset {offset}")]
    Truncated { path: PathBuf, offset: u64 },
    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
