//! Text formats for graphs and coordinates, plus the binary spectral cache.
//!
//! Edge lists hold one `i j weight` triple per line with 0-based node
//! indices; `#` starts a comment. Coordinate files are CSV with a
//! `node,x,y` or `node,lat,lon` header.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, LaplacianMatrix};
use crate::spectral::{eigendecompose, SpectralBasis};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses an edge list. The node count is `n_nodes` when given, otherwise one
/// more than the largest index mentioned.
pub fn parse_edge_list(text: &str, n_nodes: Option<usize>) -> Result<Graph> {
    let mut edges = Vec::new();
    let mut max_index = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(parse_err(line_no, format!("expected `i j weight`, found {} fields", fields.len())));
        }
        let i: usize = fields[0].parse().map_err(|_| parse_err(line_no, format!("bad node index `{}`", fields[0])))?;
        let j: usize = fields[1].parse().map_err(|_| parse_err(line_no, format!("bad node index `{}`", fields[1])))?;
        let weight: f64 = fields[2].parse().map_err(|_| parse_err(line_no, format!("bad weight `{}`", fields[2])))?;
        max_index = Some(max_index.map_or(i.max(j), |m: usize| m.max(i).max(j)));
        edges.push(Edge { i, j, weight });
    }
    let n = match (n_nodes, max_index) {
        (Some(n), _) => n,
        (None, Some(m)) => m.checked_add(1).ok_or_else(|| parse_err(0, "node index overflow"))?,
        (None, None) => return Err(Error::EmptyGraph),
    };
    Graph::new(n, edges, None)
}

/// Writes the edges of `g` in the format read by [`parse_edge_list`].
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = format!("# {} nodes\n", g.n_nodes());
    for e in g.edges() {
        let _ = writeln!(out, "{} {} {:?}", e.i, e.j, e.weight);
    }
    out
}

/// Parses a coordinate CSV. Rows may come in any order but every node in
/// `0..rows` must appear exactly once.
pub fn parse_coords_csv(text: &str) -> Result<Vec<[f64; 2]>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != ["node", "x", "y"] && names != ["node", "lat", "lon"] {
        return Err(parse_err(1, format!("expected header `node,x,y` or `node,lat,lon`, found `{}`", names.join(","))));
    }
    let mut rows: Vec<(usize, [f64; 2], usize)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line_no = k + 2;
        let rec = rec.map_err(|e| parse_err(line_no, e.to_string()))?;
        if rec.len() != 3 {
            return Err(parse_err(line_no, format!("expected 3 fields, found {}", rec.len())));
        }
        let node: usize = rec[0].parse().map_err(|_| parse_err(line_no, format!("bad node index `{}`", &rec[0])))?;
        let a: f64 = rec[1].parse().map_err(|_| parse_err(line_no, format!("bad coordinate `{}`", &rec[1])))?;
        let b: f64 = rec[2].parse().map_err(|_| parse_err(line_no, format!("bad coordinate `{}`", &rec[2])))?;
        if !(a.is_finite() && b.is_finite()) {
            return Err(parse_err(line_no, "coordinate is not finite"));
        }
        rows.push((node, [a, b], line_no));
    }
    if rows.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let n = rows.len();
    let mut out: Vec<Option<[f64; 2]>> = vec![None; n];
    for (node, xy, line_no) in rows {
        if node >= n {
            return Err(parse_err(line_no, format!("node {node} outside 0..{n}")));
        }
        if out[node].replace(xy).is_some() {
            return Err(parse_err(line_no, format!("node {node} listed twice")));
        }
    }
    Ok(out.into_iter().map(|c| c.expect("every slot filled")).collect())
}

pub fn write_coords_csv(coords: &[[f64; 2]]) -> String {
    let mut out = String::from("node,x,y\n");
    for (i, c) in coords.iter().enumerate() {
        let _ = writeln!(out, "{i},{:?},{:?}", c[0], c[1]);
    }
    out
}

const CACHE_MAGIC: &[u8; 8] = b"GSPCACHE";
const CACHE_VERSION: u32 = 1;
const CACHE_HEADER: usize = 8 + 4 + 8 + 32;

/// SHA-256 of the Laplacian entries (column-major little-endian doubles,
/// preceded by the dimension).
pub fn laplacian_digest(l: &LaplacianMatrix) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((l.n() as u64).to_le_bytes());
    for v in l.matrix().iter() {
        h.update(v.to_le_bytes());
    }
    h.finalize().into()
}

/// Serializes a basis keyed by the digest of the Laplacian it came from.
pub fn encode_spectral_cache(l: &LaplacianMatrix, basis: &SpectralBasis) -> Vec<u8> {
    let n = basis.n();
    let mut out = Vec::with_capacity(CACHE_HEADER + 8 * (n + n * n));
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&laplacian_digest(l));
    for v in basis.lambdas() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in basis.u().iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn read_f64s(bytes: &[u8]) -> Vec<f64> {
    bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect()
}

/// Decodes a cache blob into its key and basis.
pub fn decode_spectral_cache(bytes: &[u8]) -> Result<([u8; 32], SpectralBasis)> {
    if bytes.len() < CACHE_HEADER {
        return Err(Error::Cache(format!("truncated header ({} bytes)", bytes.len())));
    }
    if &bytes[..8] != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != CACHE_VERSION {
        return Err(Error::Cache(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let mut key = [0u8; 32];
    key.copy_from_slice(&bytes[20..52]);
    let body = &bytes[CACHE_HEADER..];
    let expected = usize::try_from(n)
        .ok()
        .and_then(|n| n.checked_mul(n)?.checked_add(n)?.checked_mul(8))
        .ok_or_else(|| Error::Cache(format!("dimension {n} too large")))?;
    if n == 0 || body.len() != expected {
        return Err(Error::Cache(format!("body is {} bytes, expected {expected} for n = {n}", body.len())));
    }
    let n = n as usize;
    let lambdas = read_f64s(&body[..8 * n]);
    let u = DMatrix::from_column_slice(n, n, &read_f64s(&body[8 * n..]));
    let basis = SpectralBasis::from_parts(u, lambdas).map_err(|e| Error::Cache(format!("invalid basis: {e}")))?;
    Ok((key, basis))
}

/// Returns the cached basis at `path` when its key matches `l`; otherwise
/// decomposes `l` and rewrites the cache. A corrupt cache is replaced.
pub fn eigendecompose_cached(l: &LaplacianMatrix, path: &Path) -> std::io::Result<SpectralBasis> {
    let key = laplacian_digest(l);
    if let Ok(bytes) = std::fs::read(path) {
        if let Ok((k, basis)) = decode_spectral_cache(&bytes) {
            if k == key && basis.n() == l.n() {
                return Ok(basis);
            }
        }
    }
    let basis = eigendecompose(l).map_err(std::io::Error::other)?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, encode_spectral_cache(l, &basis))?;
    Ok(basis)
}
