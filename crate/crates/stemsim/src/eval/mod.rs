//! Objective evaluation of a learned metric: embedding indexes,
//! leave-one-out kNN track-ID accuracy, centroid distance matrices,
//! cross-metric correlations, similarity queries and listening sets.

mod correlation;
mod listening;
pub mod store;

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};

use crate::corpus::Instrument;
use crate::encoder::embed;
use crate::error::{Error, Result};
use crate::features::MelSpectrogram;
use crate::trainer::TrainedModel;

pub use correlation::{average_ranks, pearson_upper, spearman_avg};
pub use listening::{
    build_listening_sets, build_listening_sets_multi, ListeningConfig, ListeningSet,
};

/// One embedded segment.
#[derive(Debug, Clone)]
pub struct IndexEntry {
    pub track_id: String,
    pub segment_index: usize,
    pub embedding: Array1<f64>,
}

/// All embedded segments of one (role, trial) evaluation.
#[derive(Debug, Clone)]
pub struct EmbeddingIndex {
    pub role: Instrument,
    pub trial: usize,
    pub entries: Vec<IndexEntry>,
}

impl EmbeddingIndex {
    /// Validates uniqueness of (track, segment) keys and unit norms.
    pub fn new(role: Instrument, trial: usize, entries: Vec<IndexEntry>) -> Result<Self> {
        let mut keys = std::collections::BTreeSet::new();
        for e in &entries {
            if !keys.insert((e.track_id.clone(), e.segment_index)) {
                return Err(Error::DimensionMismatch(format!(
                    "duplicate index entry {}:{}",
                    e.track_id, e.segment_index
                )));
            }
            let norm = e.embedding.dot(&e.embedding).sqrt();
            if (norm - 1.0).abs() > 1e-6 {
                return Err(Error::DimensionMismatch(format!(
                    "entry {}:{} has norm {norm}, expected 1",
                    e.track_id, e.segment_index
                )));
            }
        }
        Ok(EmbeddingIndex {
            role,
            trial,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Track ids present, sorted and deduplicated.
    pub fn track_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self
            .entries
            .iter()
            .map(|e| e.track_id.clone())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        ids.sort();
        ids
    }
}

/// Embeds every segment with a trained model. Entry order follows the
/// input; the index contents do not depend on it beyond that.
pub fn embed_corpus(model: &TrainedModel, mels: &[MelSpectrogram]) -> Result<EmbeddingIndex> {
    use rayon::prelude::*;
    if let Some(stray) = mels.iter().find(|m| m.instrument != model.instrument) {
        return Err(Error::DimensionMismatch(format!(
            "segment {}:{} is {} audio but the model was trained on {}",
            stray.track_id, stray.segment_index, stray.instrument, model.instrument
        )));
    }
    let entries: Vec<IndexEntry> = mels
        .par_iter()
        .map(|mel| {
            Ok(IndexEntry {
                track_id: mel.track_id.clone(),
                segment_index: mel.segment_index,
                embedding: embed(&model.params, &mel.values)?,
            })
        })
        .collect::<Result<_>>()?;
    EmbeddingIndex::new(model.instrument, model.trial, entries)
}

/// Leave-one-out kNN track-ID prediction for the entry with the given key.
///
/// The query entry itself is excluded; the k nearest others by cosine
/// distance vote by track id. Vote ties are broken by the smaller summed
/// distance among the tied ids, then lexicographically.
pub fn knn_predict(
    index: &EmbeddingIndex,
    query: (&str, usize),
    k: usize,
) -> Result<String> {
    if index.len() <= k {
        return Err(Error::DimensionMismatch(format!(
            "index of {} entries cannot answer k={k} queries",
            index.len()
        )));
    }
    let query_entry = index
        .entries
        .iter()
        .find(|e| e.track_id == query.0 && e.segment_index == query.1)
        .ok_or_else(|| Error::UnknownTrack(format!("{}:{}", query.0, query.1)))?;

    let mut neighbors: Vec<(f64, &str, usize)> = index
        .entries
        .iter()
        .filter(|e| !(e.track_id == query.0 && e.segment_index == query.1))
        .map(|e| {
            (
                1.0 - query_entry.embedding.dot(&e.embedding),
                e.track_id.as_str(),
                e.segment_index,
            )
        })
        .collect();
    neighbors.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then_with(|| a.1.cmp(b.1))
            .then_with(|| a.2.cmp(&b.2))
    });
    neighbors.truncate(k);

    let mut votes: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
    for (d, id, _) in &neighbors {
        let v = votes.entry(id).or_insert((0, 0.0));
        v.0 += 1;
        v.1 += d;
    }
    let winner = votes
        .iter()
        .max_by(|(id_a, (count_a, dist_a)), (id_b, (count_b, dist_b))| {
            count_a
                .cmp(count_b)
                .then_with(|| dist_b.partial_cmp(dist_a).unwrap())
                .then_with(|| id_b.cmp(id_a))
        })
        .map(|(id, _)| id.to_string())
        .expect("k >= 1 neighbors");
    Ok(winner)
}

/// Fraction of index entries whose leave-one-out kNN prediction recovers
/// their own track id.
pub fn knn_accuracy(index: &EmbeddingIndex, k: usize) -> Result<f64> {
    use rayon::prelude::*;
    let hits = index
        .entries
        .par_iter()
        .map(|e| {
            knn_predict(index, (&e.track_id, e.segment_index), k)
                .map(|p| (p == e.track_id) as usize)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(hits as f64 / index.len() as f64)
}

/// Mean embedding of a track's segments, not renormalized.
pub fn centroid(index: &EmbeddingIndex, track_id: &str) -> Result<Array1<f64>> {
    let mut sum: Option<Array1<f64>> = None;
    let mut count = 0usize;
    for e in index.entries.iter().filter(|e| e.track_id == track_id) {
        sum = Some(match sum {
            None => e.embedding.clone(),
            Some(s) => s + &e.embedding,
        });
        count += 1;
    }
    match sum {
        Some(s) => Ok(s / count as f64),
        None => Err(Error::UnknownTrack(track_id.to_string())),
    }
}

/// Square matrix of centroid-to-centroid cosine distances over an ordered
/// track list.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub ids: Vec<String>,
    pub values: Array2<f64>,
    pub role: Option<Instrument>,
    /// How many per-trial matrices were averaged into this one.
    pub trials_averaged: usize,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn index_of(&self, track_id: &str) -> Result<usize> {
        self.ids
            .iter()
            .position(|id| id == track_id)
            .ok_or_else(|| Error::UnknownTrack(track_id.to_string()))
    }

    /// Elementwise mean over per-trial matrices with identical track lists.
    pub fn average(matrices: &[DistanceMatrix]) -> Result<DistanceMatrix> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no matrices to average".into()))?;
        let mut values = Array2::zeros(first.values.dim());
        for m in matrices {
            if m.ids != first.ids {
                return Err(Error::DimensionMismatch(
                    "distance matrices cover different track lists".into(),
                ));
            }
            values += &m.values;
        }
        values /= matrices.len() as f64;
        Ok(DistanceMatrix {
            ids: first.ids.clone(),
            values,
            role: first.role,
            trials_averaged: matrices.iter().map(|m| m.trials_averaged).sum(),
        })
    }
}

/// Builds the distance matrix over ordered (id, centroid) pairs with
/// explicit normalization by the centroid magnitudes. Zero centroids are
/// rejected as degenerate.
pub fn distance_matrix(centroids: &[(String, Array1<f64>)]) -> Result<DistanceMatrix> {
    let n = centroids.len();
    let mut norms = Vec::with_capacity(n);
    for (id, c) in centroids {
        let norm = c.dot(c).sqrt();
        if norm < 1e-12 {
            return Err(Error::ZeroCentroid(id.clone()));
        }
        norms.push(norm);
    }
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (1.0 - centroids[i].1.dot(&centroids[j].1) / (norms[i] * norms[j]))
                .clamp(0.0, 2.0);
            values[(i, j)] = d;
            values[(j, i)] = d;
        }
    }
    Ok(DistanceMatrix {
        ids: centroids.iter().map(|(id, _)| id.clone()).collect(),
        values,
        role: None,
        trials_averaged: 1,
    })
}

/// Centroid distance matrix of an index, tracks ordered lexicographically.
pub fn centroid_distance_matrix(index: &EmbeddingIndex) -> Result<DistanceMatrix> {
    let centroids = index
        .track_ids()
        .into_iter()
        .map(|id| {
            let c = centroid(index, &id)?;
            Ok((id, c))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut matrix = distance_matrix(&centroids)?;
    matrix.role = Some(index.role);
    Ok(matrix)
}

/// Other tracks ordered by ascending distance to `track_id`, ties
/// lexicographic, truncated to `top_n`.
pub fn query_similar(
    matrix: &DistanceMatrix,
    track_id: &str,
    top_n: usize,
) -> Result<Vec<(String, f64)>> {
    let row = matrix.index_of(track_id)?;
    let mut others: Vec<(String, f64)> = matrix
        .ids
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != row)
        .map(|(j, id)| (id.clone(), matrix.values[(row, j)]))
        .collect();
    others.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    others.truncate(top_n);
    Ok(others)
}
