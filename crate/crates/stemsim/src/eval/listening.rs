//! Listening-set construction for perceptual evaluation.
//!
//! A set pairs an anchor track with a positive drawn from the anchor's two
//! most similar tracks under the focused metric and a negative drawn from
//! the anchor's two most similar tracks under the reference metric. A draw
//! is invalid whenever the two candidate pools share a track, in which case
//! the whole set is redrawn.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Instrument;
use crate::error::{Error, Result};
use crate::eval::{query_similar, DistanceMatrix};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ListeningSet {
    pub anchor: String,
    pub positive: String,
    pub negative: String,
    /// Instrument whose audio is presented to listeners.
    pub role: Instrument,
}

#[derive(Debug, Clone, Copy)]
pub struct ListeningConfig {
    /// Redraw budget per emitted set before construction fails.
    pub max_attempts_per_set: usize,
}

impl Default for ListeningConfig {
    fn default() -> Self {
        ListeningConfig {
            max_attempts_per_set: 200,
        }
    }
}

/// Builds `n_sets` listening sets with the negative pool taken from a
/// single reference metric (the mix metric when evaluating an instrument
/// metric).
pub fn build_listening_sets<R: Rng>(
    sim_focused: &DistanceMatrix,
    sim_negative: &DistanceMatrix,
    role: Instrument,
    n_sets: usize,
    rng: &mut R,
    cfg: &ListeningConfig,
) -> Result<Vec<ListeningSet>> {
    build_listening_sets_multi(sim_focused, &[sim_negative], role, n_sets, rng, cfg)
}

/// Like [`build_listening_sets`], but each attempt draws the negative pool
/// from one of several reference metrics chosen uniformly. Used when the
/// focused metric is the mix: the negative then comes from a random
/// instrument metric.
pub fn build_listening_sets_multi<R: Rng>(
    sim_focused: &DistanceMatrix,
    negative_sources: &[&DistanceMatrix],
    role: Instrument,
    n_sets: usize,
    rng: &mut R,
    cfg: &ListeningConfig,
) -> Result<Vec<ListeningSet>> {
    if negative_sources.is_empty() {
        return Err(Error::InvalidConfig(
            "listening sets need at least one negative-source metric".into(),
        ));
    }
    for source in negative_sources {
        if source.ids != sim_focused.ids {
            return Err(Error::DimensionMismatch(
                "listening-set matrices cover different track lists".into(),
            ));
        }
    }
    if sim_focused.n() < 4 {
        return Err(Error::DimensionMismatch(format!(
            "listening sets need at least 4 tracks, got {}",
            sim_focused.n()
        )));
    }

    let mut sets = Vec::with_capacity(n_sets);
    for _ in 0..n_sets {
        let mut emitted = false;
        for _attempt in 0..cfg.max_attempts_per_set {
            let anchor = &sim_focused.ids[rng.gen_range(0..sim_focused.n())];
            let negative_source = negative_sources[rng.gen_range(0..negative_sources.len())];

            let pool_pos = query_similar(sim_focused, anchor, 2)?;
            let pool_neg = query_similar(negative_source, anchor, 2)?;
            let overlap = pool_pos
                .iter()
                .any(|(p, _)| pool_neg.iter().any(|(n, _)| n == p));
            if overlap {
                continue;
            }
            let positive = pool_pos[rng.gen_range(0..pool_pos.len())].0.clone();
            let negative = pool_neg[rng.gen_range(0..pool_neg.len())].0.clone();
            sets.push(ListeningSet {
                anchor: anchor.clone(),
                positive,
                negative,
                role,
            });
            emitted = true;
            break;
        }
        if !emitted {
            return Err(Error::ListeningSetConstruction {
                attempts: cfg.max_attempts_per_set,
            });
        }
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn matrix_from(ids: &[&str], f: impl Fn(usize, usize) -> f64) -> DistanceMatrix {
        let n = ids.len();
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    values[(i, j)] = f(i.min(j), i.max(j));
                }
            }
        }
        DistanceMatrix {
            ids: ids.iter().map(|s| s.to_string()).collect(),
            values,
            role: None,
            trials_averaged: 1,
        }
    }

    #[test]
    fn sets_follow_the_pool_rules() {
        let ids = ["a", "b", "c", "d", "e", "f"];
        // Focused metric: neighbors are adjacent ids; reference metric:
        // neighbors are far ids. Pools rarely overlap.
        let focused = matrix_from(&ids, |i, j| (j - i) as f64 * 0.1);
        let reference = matrix_from(&ids, |i, j| 1.0 - (j - i) as f64 * 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sets = build_listening_sets(
            &focused,
            &reference,
            Instrument::Drums,
            20,
            &mut rng,
            &ListeningConfig::default(),
        )
        .unwrap();
        assert_eq!(sets.len(), 20);
        for set in &sets {
            assert_ne!(set.anchor, set.positive);
            assert_ne!(set.anchor, set.negative);
            assert_ne!(set.positive, set.negative);

            let pool_pos = query_similar(&focused, &set.anchor, 2).unwrap();
            let pool_neg = query_similar(&reference, &set.anchor, 2).unwrap();
            assert!(pool_pos.iter().any(|(id, _)| *id == set.positive));
            assert!(pool_neg.iter().any(|(id, _)| *id == set.negative));
            assert!(!pool_pos
                .iter()
                .any(|(p, _)| pool_neg.iter().any(|(n, _)| n == p)));
        }
    }

    #[test]
    fn identical_metrics_always_overlap_and_fail() {
        let ids = ["a", "b", "c", "d"];
        let m = matrix_from(&ids, |i, j| (i * 4 + j) as f64 * 0.07 + 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = build_listening_sets(
            &m,
            &m,
            Instrument::Bass,
            1,
            &mut rng,
            &ListeningConfig {
                max_attempts_per_set: 50,
            },
        );
        assert!(matches!(err, Err(Error::ListeningSetConstruction { .. })));
    }

    #[test]
    fn mismatched_track_lists_are_rejected() {
        let a = matrix_from(&["a", "b", "c", "d"], |i, j| (i + j) as f64);
        let b = matrix_from(&["a", "b", "c", "e"], |i, j| (i + j) as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(build_listening_sets(
            &a,
            &b,
            Instrument::Mix,
            1,
            &mut rng,
            &ListeningConfig::default()
        )
        .is_err());
    }
}
