//! Persistence for evaluation artifacts: embedding stores (CSV and a
//! compact binary form), distance-matrix CSVs, and PGM heatmaps.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::corpus::Instrument;
use crate::error::{Error, Result};
use crate::eval::{DistanceMatrix, EmbeddingIndex, IndexEntry};

/// CSV with header `track_id,segment_index,e0..e{d-1}`.
pub fn write_embeddings_csv(path: impl AsRef<Path>, index: &EmbeddingIndex) -> Result<()> {
    let path = path.as_ref();
    let dim = index
        .entries
        .first()
        .map(|e| e.embedding.len())
        .unwrap_or(0);
    let mut out = String::from("track_id,segment_index");
    for d in 0..dim {
        out.push_str(&format!(",e{d}"));
    }
    out.push('\n');
    for e in &index.entries {
        out.push_str(&e.track_id);
        out.push_str(&format!(",{}", e.segment_index));
        for v in e.embedding.iter() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings_csv(
    path: impl AsRef<Path>,
    role: Instrument,
    trial: usize,
) -> Result<EmbeddingIndex> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut entries = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let bad = |msg: &str| {
            Error::InvalidConfig(format!("{}:{}: {msg}", path.display(), lineno + 1))
        };
        let track_id = fields.next().ok_or_else(|| bad("missing track_id"))?.to_string();
        let segment_index = fields
            .next()
            .ok_or_else(|| bad("missing segment_index"))?
            .parse::<usize>()
            .map_err(|_| bad("bad segment_index"))?;
        let embedding = fields
            .map(|f| f.parse::<f64>().map_err(|_| bad("bad embedding value")))
            .collect::<Result<Vec<f64>>>()?;
        entries.push(IndexEntry {
            track_id,
            segment_index,
            embedding: Array1::from(embedding),
        });
    }
    EmbeddingIndex::new(role, trial, entries)
}

/// Binary embedding store: u32 entry count, u32 dimension, then per entry a
/// u16-length-prefixed track id, a u32 segment index, and the embedding as
/// little-endian f32 values.
pub fn write_embeddings_bin(path: impl AsRef<Path>, index: &EmbeddingIndex) -> Result<()> {
    let path = path.as_ref();
    let dim = index
        .entries
        .first()
        .map(|e| e.embedding.len())
        .unwrap_or(0);
    let mut bytes = Vec::new();
    bytes.extend_from_slice(&(index.entries.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    for e in &index.entries {
        let id = e.track_id.as_bytes();
        bytes.extend_from_slice(&(id.len() as u16).to_le_bytes());
        bytes.extend_from_slice(id);
        bytes.extend_from_slice(&(e.segment_index as u32).to_le_bytes());
        for v in e.embedding.iter() {
            bytes.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_embeddings_bin(
    path: impl AsRef<Path>,
    role: Instrument,
    trial: usize,
) -> Result<EmbeddingIndex> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: &str| Error::InvalidConfig(format!("{}: {msg}", path.display()));
    if bytes.len() < 8 {
        return Err(bad("truncated header"));
    }
    let count = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let mut offset = 8;
    let mut entries = Vec::with_capacity(count);
    for _ in 0..count {
        if bytes.len() < offset + 2 {
            return Err(bad("truncated entry"));
        }
        let id_len = u16::from_le_bytes(bytes[offset..offset + 2].try_into().unwrap()) as usize;
        offset += 2;
        if bytes.len() < offset + id_len + 4 + dim * 4 {
            return Err(bad("truncated entry"));
        }
        let track_id = String::from_utf8(bytes[offset..offset + id_len].to_vec())
            .map_err(|_| bad("track id is not utf-8"))?;
        offset += id_len;
        let segment_index =
            u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap()) as usize;
        offset += 4;
        let mut embedding = Vec::with_capacity(dim);
        for chunk in bytes[offset..offset + dim * 4].chunks_exact(4) {
            embedding.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
        }
        offset += dim * 4;
        // f32 storage perturbs the norm slightly; renormalize on load.
        let mut embedding = Array1::from(embedding);
        let norm = embedding.dot(&embedding).sqrt();
        if norm > 0.0 {
            embedding /= norm;
        }
        entries.push(IndexEntry {
            track_id,
            segment_index,
            embedding,
        });
    }
    EmbeddingIndex::new(role, trial, entries)
}

/// Distance matrix CSV: first row and column carry the track ids.
pub fn write_distance_matrix_csv(path: impl AsRef<Path>, matrix: &DistanceMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for id in &matrix.ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (i, id) in matrix.ids.iter().enumerate() {
        out.push_str(id);
        for j in 0..matrix.n() {
            out.push_str(&format!(",{}", matrix.values[(i, j)]));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_distance_matrix_csv(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::InvalidConfig(format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let ids: Vec<String> = header.split(',').skip(1).map(|s| s.to_string()).collect();
    let n = ids.len();
    let mut values = Array2::zeros((n, n));
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let row_id = fields.next().unwrap_or_default();
        if i >= n || row_id != ids[i] {
            return Err(bad(format!("row {i} id {row_id:?} does not match header")));
        }
        for (j, field) in fields.enumerate() {
            if j >= n {
                return Err(bad(format!("row {i} has too many columns")));
            }
            values[(i, j)] = field
                .parse::<f64>()
                .map_err(|_| bad(format!("bad value at ({i}, {j})")))?;
        }
    }
    Ok(DistanceMatrix {
        ids,
        values,
        role: None,
        trials_averaged: 1,
    })
}

/// Renders the matrix as a binary PGM heatmap: black (0) for distance zero
/// and white for the largest distance present, so darker cells mean more
/// similar tracks. The diagonal is black by construction.
pub fn write_distance_matrix_pgm(path: impl AsRef<Path>, matrix: &DistanceMatrix) -> Result<()> {
    let path = path.as_ref();
    let n = matrix.n();
    let max = matrix.values.iter().fold(0.0f64, |m, &v| m.max(v));
    let scale = if max > 0.0 { max } else { 1.0 };
    let mut bytes = format!("P5\n{n} {n}\n255\n").into_bytes();
    for i in 0..n {
        for j in 0..n {
            bytes.push((matrix.values[(i, j)] / scale * 255.0).round() as u8);
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_index() -> EmbeddingIndex {
        let entries = (0..6)
            .map(|i| {
                let mut v = Array1::zeros(4);
                v[i % 4] = if i < 4 { 1.0 } else { -1.0 };
                IndexEntry {
                    track_id: format!("track{:02}", i / 2),
                    segment_index: i % 2,
                    embedding: v,
                }
            })
            .collect();
        EmbeddingIndex::new(Instrument::Guitar, 0, entries).unwrap()
    }

    #[test]
    fn embeddings_csv_roundtrip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let index = toy_index();
        write_embeddings_csv(&path, &index).unwrap();
        let back = read_embeddings_csv(&path, Instrument::Guitar, 0).unwrap();
        assert_eq!(back.len(), index.len());
        for (a, b) in index.entries.iter().zip(&back.entries) {
            assert_eq!(a.track_id, b.track_id);
            assert_eq!(a.segment_index, b.segment_index);
            assert_eq!(a.embedding, b.embedding);
        }
    }

    #[test]
    fn embeddings_bin_roundtrip_at_f32_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.bin");
        let index = toy_index();
        write_embeddings_bin(&path, &index).unwrap();
        let back = read_embeddings_bin(&path, Instrument::Guitar, 0).unwrap();
        assert_eq!(back.len(), index.len());
        for (a, b) in index.entries.iter().zip(&back.entries) {
            assert_eq!(a.track_id, b.track_id);
            for (x, y) in a.embedding.iter().zip(b.embedding.iter()) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn distance_matrix_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let matrix = DistanceMatrix {
            ids: vec!["a".into(), "b".into(), "c".into()],
            values: ndarray::array![[0.0, 0.25, 0.5], [0.25, 0.0, 0.125], [0.5, 0.125, 0.0]],
            role: None,
            trials_averaged: 1,
        };
        write_distance_matrix_csv(&path, &matrix).unwrap();
        let back = read_distance_matrix_csv(&path).unwrap();
        assert_eq!(back.ids, matrix.ids);
        assert_eq!(back.values, matrix.values);
    }

    #[test]
    fn pgm_header_and_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.pgm");
        let matrix = DistanceMatrix {
            ids: vec!["a".into(), "b".into()],
            values: ndarray::array![[0.0, 1.0], [1.0, 0.0]],
            role: None,
            trials_averaged: 1,
        };
        write_distance_matrix_pgm(&path, &matrix).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(bytes.len(), b"P5\n2 2\n255\n".len() + 4);
        // Diagonal black, off-diagonal white.
        let pixels = &bytes[bytes.len() - 4..];
        assert_eq!(pixels, &[0, 255, 255, 0]);
    }
}
