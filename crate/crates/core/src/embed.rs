//! Embedding ingestion and storage.
//!
//! Two interchangeable on-disk layouts carry pre-computed hyperboloid points
//! (e.g. exported from a real encoder):
//!
//! **Binary** (all little-endian):
//!
//! ```text
//! magic "HYPE" | u32 version = 1 | u32 ambient_dim | f64 K | u64 count
//! then per record: u32 id_len | id (UTF-8) | ambient_dim * f64 coords
//! ```
//!
//! **JSONL**: a header line `{"format":"hype-embed","K":...,"dim":...}`
//! (`dim` is the ambient dimension, matching the binary header) followed by
//! one `{"id":..., "coords":[...]}` object per line.
//!
//! Loading sniffs the magic bytes to pick the decoder, validates every record
//! against the manifold constraint (tolerance 1e-6), and reports failures
//! with the offending record's position.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CurvatureParams, GeometryError, HyperbolicPoint, MANIFOLD_TOL_INGEST};

const MAGIC: &[u8; 4] = b"HYPE";
const VERSION: u32 = 1;

/// Errors raised while reading or writing embedding files.
#[derive(Debug, Error)]
pub enum EmbedIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes (expected \"HYPE\")")]
    BadMagic,
    #[error("unsupported embedding format version {0} (expected 1)")]
    UnsupportedVersion(u32),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("file truncated inside record {record}")]
    Truncated { record: usize },
    #[error("record {record}: id is not valid UTF-8")]
    NonUtf8Id { record: usize },
    #[error("record {record}: duplicate id '{id}'")]
    DuplicateId { record: usize, id: String },
    #[error("record {record}: expected {expected} coordinates, got {got}")]
    CoordCount { record: usize, expected: usize, got: usize },
    #[error("record {record}: {source}")]
    BadPoint { record: usize, source: GeometryError },
    #[error("record {record}: malformed JSON: {message}")]
    BadJson { record: usize, message: String },
}

/// One named point.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub id: String,
    pub point: HyperbolicPoint,
}

/// A coherent set of embeddings sharing one curvature.
#[derive(Debug, Clone)]
pub struct EmbeddingSet {
    pub curvature: CurvatureParams,
    pub records: Vec<EmbeddingRecord>,
}

/// Storage layout selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedFormat {
    Binary,
    Jsonl,
}

#[derive(Serialize, Deserialize)]
struct JsonlHeader {
    format: String,
    #[serde(rename = "K")]
    k: f64,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct JsonlRecord {
    id: String,
    coords: Vec<f64>,
}

/// Writes an embedding set in the requested format.
pub fn store_embeddings(set: &EmbeddingSet, path: &Path, format: EmbedFormat) -> Result<(), EmbedIoError> {
    match format {
        EmbedFormat::Binary => store_binary(set, path),
        EmbedFormat::Jsonl => store_jsonl(set, path),
    }
}

/// Reads an embedding set, sniffing the format from the first bytes.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet, EmbedIoError> {
    let bytes = fs::read(path)?;
    if bytes.len() >= 4 && &bytes[..4] == MAGIC {
        load_binary(&bytes)
    } else {
        load_jsonl(&bytes)
    }
}

fn store_binary(set: &EmbeddingSet, path: &Path) -> Result<(), EmbedIoError> {
    let ambient = set.curvature.ambient_dim();
    let mut out = fs::File::create(path)?;
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(ambient as u32).to_le_bytes())?;
    out.write_all(&set.curvature.k().to_le_bytes())?;
    out.write_all(&(set.records.len() as u64).to_le_bytes())?;
    for rec in &set.records {
        out.write_all(&(rec.id.len() as u32).to_le_bytes())?;
        out.write_all(rec.id.as_bytes())?;
        for c in rec.point.coords() {
            out.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, record: usize) -> Result<&'a [u8], EmbedIoError> {
        if self.pos + n > self.bytes.len() {
            return Err(EmbedIoError::Truncated { record });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self, record: usize) -> Result<u32, EmbedIoError> {
        Ok(u32::from_le_bytes(self.take(4, record)?.try_into().unwrap()))
    }

    fn u64(&mut self, record: usize) -> Result<u64, EmbedIoError> {
        Ok(u64::from_le_bytes(self.take(8, record)?.try_into().unwrap()))
    }

    fn f64(&mut self, record: usize) -> Result<f64, EmbedIoError> {
        Ok(f64::from_le_bytes(self.take(8, record)?.try_into().unwrap()))
    }
}

fn load_binary(bytes: &[u8]) -> Result<EmbeddingSet, EmbedIoError> {
    let mut cur = Cursor { bytes, pos: 4 }; // magic already checked
    let version = cur.u32(0)?;
    if version != VERSION {
        return Err(EmbedIoError::UnsupportedVersion(version));
    }
    let ambient = cur.u32(0)? as usize;
    if ambient < 2 {
        return Err(EmbedIoError::InvalidHeader(format!(
            "ambient_dim must be at least 2, got {ambient}"
        )));
    }
    let k = cur.f64(0)?;
    let curvature = CurvatureParams::new(k, ambient - 1)
        .map_err(|e| EmbedIoError::InvalidHeader(e.to_string()))?;
    let count = cur.u64(0)? as usize;

    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(count);
    for record in 1..=count {
        let id_len = cur.u32(record)? as usize;
        let id_bytes = cur.take(id_len, record)?;
        let id = std::str::from_utf8(id_bytes)
            .map_err(|_| EmbedIoError::NonUtf8Id { record })?
            .to_string();
        if !seen.insert(id.clone()) {
            return Err(EmbedIoError::DuplicateId { record, id });
        }
        let mut coords = Vec::with_capacity(ambient);
        for _ in 0..ambient {
            coords.push(cur.f64(record)?);
        }
        let point = HyperbolicPoint::from_coords(coords, &curvature, MANIFOLD_TOL_INGEST)
            .map_err(|source| EmbedIoError::BadPoint { record, source })?;
        records.push(EmbeddingRecord { id, point });
    }
    Ok(EmbeddingSet { curvature, records })
}

fn store_jsonl(set: &EmbeddingSet, path: &Path) -> Result<(), EmbedIoError> {
    let mut out = String::new();
    let header = JsonlHeader {
        format: "hype-embed".into(),
        k: set.curvature.k(),
        dim: set.curvature.ambient_dim(),
    };
    out.push_str(&serde_json::to_string(&header).expect("header serializes"));
    out.push('\n');
    for rec in &set.records {
        let row = JsonlRecord {
            id: rec.id.clone(),
            coords: rec.point.coords().to_vec(),
        };
        out.push_str(&serde_json::to_string(&row).expect("record serializes"));
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

fn load_jsonl(bytes: &[u8]) -> Result<EmbeddingSet, EmbedIoError> {
    let text = std::str::from_utf8(bytes).map_err(|_| EmbedIoError::NonUtf8Id { record: 0 })?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| EmbedIoError::InvalidHeader("file is empty".into()))?;
    let header: JsonlHeader = serde_json::from_str(header_line)
        .map_err(|e| EmbedIoError::InvalidHeader(e.to_string()))?;
    if header.format != "hype-embed" {
        return Err(EmbedIoError::InvalidHeader(format!(
            "unexpected format tag '{}'",
            header.format
        )));
    }
    if header.dim < 2 {
        return Err(EmbedIoError::InvalidHeader(format!(
            "dim must be at least 2 ambient coordinates, got {}",
            header.dim
        )));
    }
    let curvature = CurvatureParams::new(header.k, header.dim - 1)
        .map_err(|e| EmbedIoError::InvalidHeader(e.to_string()))?;

    let mut seen = BTreeSet::new();
    let mut records = Vec::new();
    for (record, (line_no, line)) in lines.enumerate() {
        let record = record + 1;
        let row: JsonlRecord = serde_json::from_str(line).map_err(|e| EmbedIoError::BadJson {
            record,
            message: format!("line {}: {}", line_no + 1, e),
        })?;
        if row.coords.len() != header.dim {
            return Err(EmbedIoError::CoordCount {
                record,
                expected: header.dim,
                got: row.coords.len(),
            });
        }
        if !seen.insert(row.id.clone()) {
            return Err(EmbedIoError::DuplicateId { record, id: row.id });
        }
        let point = HyperbolicPoint::from_coords(row.coords, &curvature, MANIFOLD_TOL_INGEST)
            .map_err(|source| EmbedIoError::BadPoint { record, source })?;
        records.push(EmbeddingRecord { id: row.id, point });
    }
    Ok(EmbeddingSet { curvature, records })
}

/// Convenience: byte size of one binary record for a given ambient dimension.
pub fn binary_record_size(id_len: usize, ambient_dim: usize) -> usize {
    4 + id_len + 8 * ambient_dim
}
