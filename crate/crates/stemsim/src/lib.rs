//! Per-instrument music similarity metrics from multi-stem audio.
//!
//! `stemsim` learns one similarity metric per instrument role (drums, bass,
//! piano, guitar, or the full mix) from a corpus of multi-stem tracks. Each
//! metric is a small convolutional encoder trained with a triplet loss in
//! which segments of the same track are positives and segments of other
//! tracks are negatives; similarity between segments is the cosine distance
//! between their unit-norm embeddings.
//!
//! The pipeline is:
//!
//! 1. [`corpus`] — load stems (manifest or Slakh-style layout, or a
//!    deterministic synthetic corpus), cut them into non-silent
//!    fixed-length segments, and measure separation quality with
//!    scale-invariant SDR.
//! 2. [`features`] — convert each segment into a log-mel spectrogram.
//! 3. [`encoder`] — the convolutional embedding network: forward pass to a
//!    unit-norm embedding and exact backpropagation.
//! 4. [`trainer`] — triplet sampling by track identity, the hinge loss under
//!    cosine distance, Adam, and the per-role training loop.
//! 5. [`eval`] — embedding indexes, leave-one-out kNN track-ID accuracy,
//!    centroid distance matrices, Pearson/Spearman cross-metric analysis,
//!    similarity queries and listening-set construction.
//!
//! Each capability has a runnable example under `examples/`; start with
//! `end_to_end`. The `stemsim` binary exposes the same pipeline as
//! subcommands (`synth`, `featurize`, `train`, `eval`, `distmat`,
//! `correlate`, `query`, `listening-sets`, `sdr`).

pub mod cli;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod features;
pub mod trainer;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
