//! Triplet sampling by track identity: positives share the anchor's track,
//! negatives come from any other track.

use rand::Rng;

use crate::error::{Error, Result};

/// References into the segment list a [`TripletIndex`] was built over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Training segments grouped by track, ready for uniform triplet draws.
#[derive(Debug, Clone)]
pub struct TripletIndex {
    /// Segment indices grouped by track, concatenated.
    order: Vec<usize>,
    /// Half-open range into `order` per track.
    track_ranges: Vec<(usize, usize)>,
    /// Track ordinal per grouped position.
    position_track: Vec<usize>,
}

impl TripletIndex {
    /// Groups segments by their track id. Requires at least two tracks and
    /// at least two segments in every track.
    pub fn new<S: AsRef<str>>(track_ids: &[S]) -> Result<Self> {
        let mut order: Vec<usize> = (0..track_ids.len()).collect();
        order.sort_by(|&a, &b| {
            track_ids[a]
                .as_ref()
                .cmp(track_ids[b].as_ref())
                .then(a.cmp(&b))
        });

        let mut track_ranges = Vec::new();
        let mut position_track = Vec::with_capacity(order.len());
        let mut start = 0usize;
        for pos in 0..order.len() {
            let here = track_ids[order[pos]].as_ref();
            let next_differs = pos + 1 == order.len() || track_ids[order[pos + 1]].as_ref() != here;
            position_track.push(track_ranges.len());
            if next_differs {
                track_ranges.push((start, pos + 1));
                start = pos + 1;
            }
        }

        if track_ranges.len() < 2 {
            return Err(Error::SamplingPrecondition(format!(
                "at least 2 tracks, got {}",
                track_ranges.len()
            )));
        }
        if let Some((s, e)) = track_ranges.iter().find(|(s, e)| e - s < 2) {
            let id = track_ids[order[*s]].as_ref();
            return Err(Error::SamplingPrecondition(format!(
                "at least 2 segments per track; track {id} has {}",
                e - s
            )));
        }
        Ok(TripletIndex {
            order,
            track_ranges,
            position_track,
        })
    }

    pub fn n_segments(&self) -> usize {
        self.order.len()
    }

    pub fn n_tracks(&self) -> usize {
        self.track_ranges.len()
    }

    /// Draws exactly `batch_size` triplets: anchor uniform over all
    /// segments, positive uniform over the anchor's track minus the anchor,
    /// negative uniform over all segments of other tracks. Deterministic
    /// per generator state; no rejection, every draw maps directly.
    pub fn sample_batch<R: Rng>(&self, batch_size: usize, rng: &mut R) -> Vec<Triplet> {
        let n = self.order.len();
        let mut out = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let anchor_pos = rng.gen_range(0..n);
            let (s, e) = self.track_ranges[self.position_track[anchor_pos]];
            let track_len = e - s;

            let mut pos_pos = s + rng.gen_range(0..track_len - 1);
            if pos_pos >= anchor_pos {
                pos_pos += 1;
            }

            let mut neg_pos = rng.gen_range(0..n - track_len);
            if neg_pos >= s {
                neg_pos += track_len;
            }

            out.push(Triplet {
                anchor: self.order[anchor_pos],
                positive: self.order[pos_pos],
                negative: self.order[neg_pos],
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_ids(tracks: usize, per_track: usize) -> Vec<String> {
        let mut ids = Vec::new();
        for t in 0..tracks {
            for _ in 0..per_track {
                ids.push(format!("tr{t:02}"));
            }
        }
        ids
    }

    #[test]
    fn batch_satisfies_triplet_invariants() {
        let ids = toy_ids(5, 4);
        let index = TripletIndex::new(&ids).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for t in index.sample_batch(64, &mut rng) {
            assert_eq!(ids[t.anchor], ids[t.positive]);
            assert_ne!(t.anchor, t.positive);
            assert_ne!(ids[t.anchor], ids[t.negative]);
        }
    }

    #[test]
    fn preconditions_are_enforced() {
        assert!(TripletIndex::new(&toy_ids(1, 5)).is_err());
        let mut ids = toy_ids(2, 3);
        ids.push("lonely".into());
        assert!(TripletIndex::new(&ids).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let ids = toy_ids(4, 3);
        let index = TripletIndex::new(&ids).unwrap();
        let a = index.sample_batch(32, &mut ChaCha8Rng::seed_from_u64(9));
        let b = index.sample_batch(32, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
        let c = index.sample_batch(32, &mut ChaCha8Rng::seed_from_u64(10));
        assert_ne!(a, c);
    }

    #[test]
    fn anchor_marginals_are_near_uniform() {
        // Balanced toy index: every track should anchor ~uniformly.
        let tracks = 5;
        let ids = toy_ids(tracks, 4);
        let index = TripletIndex::new(&ids).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut counts = vec![0usize; tracks];
        let draws = 10_000;
        for t in index.sample_batch(draws, &mut rng) {
            let track: usize = ids[t.anchor][2..].parse().unwrap();
            counts[track] += 1;
        }
        let expected = draws as f64 / tracks as f64;
        for (track, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expected).abs() / expected < 0.2,
                "track {track} anchored {c} times, expected about {expected}"
            );
        }
    }

    #[test]
    fn negative_draws_cover_all_other_tracks() {
        let ids = toy_ids(3, 2);
        let index = TripletIndex::new(&ids).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = std::collections::BTreeSet::new();
        for t in index.sample_batch(500, &mut rng) {
            seen.insert((ids[t.anchor].clone(), ids[t.negative].clone()));
        }
        // Every (anchor track, other track) pair should occur in 500 draws.
        assert_eq!(seen.len(), 6);
    }
}
