//! Edge-list and label file I/O.
//!
//! Files are read concurrently: each rank takes one byte block, aligns to
//! record boundaries, and parses its share. Writes go the other way: ranks
//! serialize their blocks and write at offsets from an exclusive scan, so the
//! bytes are identical regardless of team size.
//!
//! Text edges: ASCII decimal "src dst\n", '#'-prefixed and blank lines are
//! ignored. Binary edges: consecutive little-endian u64 pairs. Both encode
//! one undirected edge per record; ingestion expands each into its arc pair.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom};
use std::os::unix::fs::FileExt;
use std::path::Path;

use crate::graph::{expand_undirected, ComponentLabeling, EdgeList, VertexId};
use crate::team::{block_offset, block_size, sum_u64, TeamContext};
use crate::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum FileFormat {
    Text,
    Binary,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Makes an I/O outcome collective: if any rank failed, every rank returns an
/// error, keeping the collective call sequence matched across the team.
fn sync_result<T>(ctx: &mut TeamContext, result: Result<T>) -> Result<T> {
    let message = result.as_ref().err().map(|e| e.to_string());
    let peer_error = ctx
        .all_gather(message)
        .into_iter()
        .flatten()
        .next();
    match (result, peer_error) {
        (Ok(v), None) => Ok(v),
        (Ok(_), Some(m)) => Err(Error::InvalidInput(m)),
        (Err(e), _) => Err(e),
    }
}

fn read_text_block(path: &Path, lo: u64, hi: u64) -> Result<Vec<(u64, u64)>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = BufReader::new(file);
    let mut pos = lo;
    if lo > 0 {
        reader
            .seek(SeekFrom::Start(lo - 1))
            .map_err(|e| io_err(path, e))?;
        let mut prev = [0u8; 1];
        reader.read_exact(&mut prev).map_err(|e| io_err(path, e))?;
        if prev[0] != b'\n' {
            // the line straddling the boundary belongs to the previous rank
            let mut skipped = Vec::new();
            let n = reader
                .read_until(b'\n', &mut skipped)
                .map_err(|e| io_err(path, e))?;
            pos += n as u64;
        }
    }

    let mut pairs = Vec::new();
    let mut line_no = 0usize;
    let mut buf = Vec::new();
    while pos < hi {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|e| io_err(path, e))?;
        if n == 0 {
            break;
        }
        line_no += 1;
        pos += n as u64;
        let line = std::str::from_utf8(&buf)
            .map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: line_no,
                message: "not valid UTF-8".into(),
            })?
            .trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let parse = |tok: Option<&str>| -> std::result::Result<u64, String> {
            let tok = tok.ok_or("expected 'src dst'")?;
            tok.parse::<u64>().map_err(|e| format!("bad vertex id '{tok}': {e}"))
        };
        let src = parse(it.next());
        let dst = parse(it.next());
        match (src, dst, it.next()) {
            (Ok(s), Ok(d), None) => pairs.push((s, d)),
            (s, d, extra) => {
                let message = s
                    .err()
                    .or(d.err())
                    .unwrap_or_else(|| format!("unexpected trailing token '{}'", extra.unwrap()));
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no,
                    message,
                });
            }
        }
    }
    Ok(pairs)
}

fn read_binary_block(path: &Path, rec_lo: u64, rec_hi: u64) -> Result<Vec<(u64, u64)>> {
    let mut file = File::open(path).map_err(|e| io_err(path, e))?;
    file.seek(SeekFrom::Start(rec_lo * 16)).map_err(|e| io_err(path, e))?;
    let mut bytes = vec![0u8; ((rec_hi - rec_lo) * 16) as usize];
    file.read_exact(&mut bytes).map_err(|e| io_err(path, e))?;
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            (
                u64::from_le_bytes(c[..8].try_into().unwrap()),
                u64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect())
}

/// Concurrent block read of an undirected edge file into the canonical
/// arc-pair edge list.
pub fn read_edges(ctx: &mut TeamContext, path: &Path, format: FileFormat) -> Result<EdgeList> {
    let attempt = (|| -> Result<Vec<(u64, u64)>> {
        let len = std::fs::metadata(path).map_err(|e| io_err(path, e))?.len();
        match format {
            FileFormat::Text => {
                let lo = block_offset(len, ctx.size(), ctx.rank());
                let hi = lo + block_size(len, ctx.size(), ctx.rank());
                read_text_block(path, lo, hi)
            }
            FileFormat::Binary => {
                if len % 16 != 0 {
                    return Err(Error::Truncated {
                        path: path.to_path_buf(),
                        offset: len - len % 16,
                    });
                }
                let records = len / 16;
                let lo = block_offset(records, ctx.size(), ctx.rank());
                let hi = lo + block_size(records, ctx.size(), ctx.rank());
                read_binary_block(path, lo, hi)
            }
        }
    })();
    let pairs = sync_result(ctx, attempt)?;
    Ok(EdgeList::from_local(ctx, expand_undirected(&pairs)))
}

/// Writes each rank's serialized block at its scanned offset. Rank 0 creates
/// the file; everyone then writes disjoint regions.
fn write_blocks(ctx: &mut TeamContext, path: &Path, bytes: &[u8]) -> Result<()> {
    let offset = ctx.exclusive_scan(bytes.len() as u64, &sum_u64());
    let created = if ctx.rank() == 0 {
        File::create(path).map(|_| ()).map_err(|e| io_err(path, e))
    } else {
        Ok(())
    };
    sync_result(ctx, created)?;
    let written = (|| -> Result<()> {
        let file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        file.write_all_at(bytes, offset).map_err(|e| io_err(path, e))?;
        Ok(())
    })();
    sync_result(ctx, written)
}

fn pairs_to_bytes(pairs: impl Iterator<Item = (u64, u64)>, format: FileFormat) -> Vec<u8> {
    let mut bytes = Vec::new();
    match format {
        FileFormat::Text => {
            use std::io::Write;
            for (a, b) in pairs {
                writeln!(&mut bytes, "{a} {b}").unwrap();
            }
        }
        FileFormat::Binary => {
            for (a, b) in pairs {
                bytes.extend_from_slice(&a.to_le_bytes());
                bytes.extend_from_slice(&b.to_le_bytes());
            }
        }
    }
    bytes
}

/// Writes this rank's block of undirected edges (one record per edge).
pub fn write_edges(
    ctx: &mut TeamContext,
    pairs: &[(u64, u64)],
    path: &Path,
    format: FileFormat,
) -> Result<()> {
    write_blocks(ctx, path, &pairs_to_bytes(pairs.iter().copied(), format))
}

/// Writes the labeling, one "vertex label" record per vertex, in vertex order.
/// The labeling must already be globally sorted by vertex (the pipeline's
/// output contract), which makes the bytes deterministic and independent of
/// team size.
pub fn write_labels(
    ctx: &mut TeamContext,
    labeling: &ComponentLabeling,
    path: &Path,
    format: FileFormat,
) -> Result<()> {
    let bytes = pairs_to_bytes(labeling.entries.iter().map(|&(v, l)| (v.0, l.0)), format);
    write_blocks(ctx, path, &bytes)
}

/// Serial label read-back, used by tests and tools.
pub fn read_labels(path: &Path, format: FileFormat) -> Result<Vec<(VertexId, VertexId)>> {
    let mut out = Vec::new();
    match format {
        FileFormat::Text => {
            let file = File::open(path).map_err(|e| io_err(path, e))?;
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| io_err(path, e))?;
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let mut it = line.split_whitespace();
                let mut next = || -> Result<u64> {
                    it.next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Parse {
                            path: path.to_path_buf(),
                            line: i + 1,
                            message: "expected 'vertex label'".into(),
                        })
                };
                let v = next()?;
                let l = next()?;
                out.push((VertexId(v), VertexId(l)));
            }
        }
        FileFormat::Binary => {
            let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
            if bytes.len() % 16 != 0 {
                return Err(Error::Truncated {
                    path: path.to_path_buf(),
                    offset: (bytes.len() - bytes.len() % 16) as u64,
                });
            }
            for c in bytes.chunks_exact(16) {
                out.push((
                    VertexId(u64::from_le_bytes(c[..8].try_into().unwrap())),
                    VertexId(u64::from_le_bytes(c[8..].try_into().unwrap())),
                ));
            }
        }
    }
    Ok(out)
}
