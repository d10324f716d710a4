//! clap argument definitions for the `stemsim` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::cli::config::RunConfig;
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(
    name = "stemsim",
    version,
    about = "Per-instrument music similarity metrics from multi-stem audio"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a deterministic synthetic multi-stem corpus.
    Synth(SynthArgs),
    /// Warm the on-disk feature cache for every split and role.
    Featurize(FeaturizeArgs),
    /// Train per-role encoders, one model per trial.
    Train(TrainArgs),
    /// Evaluate trained encoders: kNN accuracy, distance matrices,
    /// cross-metric correlations.
    Eval(EvalArgs),
    /// Write trial-averaged centroid distance matrices.
    Distmat(DistmatArgs),
    /// Correlate previously written distance matrices across roles.
    Correlate(CorrelateArgs),
    /// Rank tracks by similarity to a query track.
    Query(QueryArgs),
    /// Build listening sets (JSON plus snippet WAVs).
    #[command(name = "listening-sets")]
    ListeningSets(ListeningSetsArgs),
    /// Scale-invariant SDR of an estimate against a reference WAV.
    Sdr(SdrArgs),
}

/// Shared config plumbing: an optional JSON file plus path overrides.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// JSON run configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Corpus manifest path (overrides the config file).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Run/output directory (overrides the config file).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(manifest) = &self.manifest {
            cfg.manifest = Some(manifest.clone());
        }
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of training tracks.
    #[arg(long)]
    pub train: usize,
    /// Number of test tracks.
    #[arg(long)]
    pub test: usize,
    /// Track duration in seconds.
    #[arg(long)]
    pub duration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output corpus directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 44_100)]
    pub sample_rate: u32,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Cache directory (default: <out>/cache).
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Role to train, or "all".
    #[arg(long)]
    pub role: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated roles, or "all".
    #[arg(long)]
    pub roles: Option<String>,
    /// Neighbors for the kNN vote.
    #[arg(long)]
    pub k: Option<usize>,
    /// Also export per-trial embedding CSVs.
    #[arg(long)]
    pub save_embeddings: bool,
}

#[derive(Debug, Args)]
pub struct DistmatArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Role(s) to compute, or "all".
    #[arg(long)]
    pub role: Option<String>,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated roles, or "all" (default: every matrix present).
    #[arg(long)]
    pub roles: Option<String>,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Metric role to query.
    #[arg(long)]
    pub role: String,
    /// Query track id.
    #[arg(long)]
    pub track: String,
    /// Number of tracks to return.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ListeningSetsArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Role(s) to build sets for, or "all" (default: every matrix present).
    #[arg(long)]
    pub role: Option<String>,
    /// Sets per role.
    #[arg(long, default_value_t = 8)]
    pub n: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 10.0)]
    pub snippet_seconds: f64,
}

#[derive(Debug, Args)]
pub struct SdrArgs {
    /// Reference WAV file.
    #[arg(long)]
    pub reference: PathBuf,
    /// Estimate WAV file.
    #[arg(long)]
    pub estimate: PathBuf,
}
