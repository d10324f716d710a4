//! Training: triplet sampling by track identity, the hinge loss under
//! cosine distance, Adam, and the per-role loop producing one model per
//! trial.
//!
//! A training run is fully deterministic given (corpus, configs, seed):
//! trial `t` initializes its parameters from `seed + t`, batches are drawn
//! from a generator derived from the same value, and per-triplet gradients
//! are reduced in a fixed order even when computed in parallel.

mod adam;
mod loss;
mod sampler;

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{collect_split_segments, CorpusManifest, Instrument, SegmentationConfig, Split};
use crate::encoder::{backward, forward, init_params, EncoderArch, EncoderParams, ParamGrads};
use crate::error::{Error, Result};
use crate::features::{log_mel_batch, FeatureConfig, MelSpectrogram};

pub use adam::{adam_step, AdamConfig, AdamState};
pub use loss::{cosine_distance, hinge_gradients, triplet_loss};
pub use sampler::{Triplet, TripletIndex};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Margin of the hinge loss.
    pub margin: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Triplets drawn per epoch; `None` means one per training segment.
    pub triplets_per_epoch: Option<usize>,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Independent trainings with different initial settings.
    pub n_trials: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            margin: 0.2,
            batch_size: 64,
            epochs: 150,
            triplets_per_epoch: None,
            learning_rate: 1e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            n_trials: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.margin < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "margin must be >= 0, got {}",
                self.margin
            )));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.n_trials < 1 {
            return Err(Error::InvalidConfig("n_trials must be >= 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        for (name, beta) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be in [0, 1), got {beta}"
                )));
            }
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// The outcome of one trial: trained parameters plus the loss trajectory.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub instrument: Instrument,
    pub trial: usize,
    pub params: EncoderParams,
    /// Mean triplet loss per epoch.
    pub loss_history: Vec<f64>,
    pub config: TrainConfig,
}

/// Trains one encoder per trial for the given role: loads the training
/// split, featurizes it, then runs [`train_on_features`].
pub fn train(
    manifest: &CorpusManifest,
    role: Instrument,
    seg_cfg: &SegmentationConfig,
    feat_cfg: &FeatureConfig,
    arch: &EncoderArch,
    cfg: &TrainConfig,
) -> Result<Vec<TrainedModel>> {
    let segments = collect_split_segments(manifest, Split::Train, role, seg_cfg)?;
    let mels = log_mel_batch(&segments, feat_cfg, manifest.sample_rate)?;
    train_on_features(role, &mels, arch, cfg)
}

/// Training loop over in-memory features, one [`TrainedModel`] per trial.
pub fn train_on_features(
    role: Instrument,
    mels: &[MelSpectrogram],
    arch: &EncoderArch,
    cfg: &TrainConfig,
) -> Result<Vec<TrainedModel>> {
    cfg.validate()?;
    arch.validate()?;
    let ids: Vec<&str> = mels.iter().map(|m| m.track_id.as_str()).collect();
    let index = TripletIndex::new(&ids)?;

    let triplets_per_epoch = cfg.triplets_per_epoch.unwrap_or(mels.len()).max(1);
    let n_batches = triplets_per_epoch.div_ceil(cfg.batch_size);

    (0..cfg.n_trials)
        .map(|trial| {
            let trial_seed = cfg.seed.wrapping_add(trial as u64);
            let mut params = init_params(arch, trial_seed)?;
            let mut state = AdamState::new(&params);
            // Separate stream for sampling so batch draws are decoupled
            // from the weight draws.
            let mut rng =
                ChaCha8Rng::seed_from_u64(trial_seed ^ 0x9E37_79B9_7F4A_7C15);

            let mut loss_history = Vec::with_capacity(cfg.epochs);
            for _epoch in 0..cfg.epochs {
                let mut epoch_loss = 0.0;
                for _ in 0..n_batches {
                    let triplets = index.sample_batch(cfg.batch_size, &mut rng);
                    let (batch_loss_sum, grads) =
                        batch_forward_backward(&params, mels, &triplets, cfg.margin)?;
                    adam_step(&mut params, &grads, &mut state, &cfg.adam())?;
                    epoch_loss += batch_loss_sum;
                }
                loss_history.push(epoch_loss / (n_batches * cfg.batch_size) as f64);
            }

            Ok(TrainedModel {
                instrument: role,
                trial,
                params,
                loss_history,
                config: cfg.clone(),
            })
        })
        .collect()
}

/// Loss sum and mean parameter gradient over one batch of triplets.
///
/// Per-triplet work runs in parallel; the reduction always happens in
/// triplet order so results are bit-identical regardless of thread count.
fn batch_forward_backward(
    params: &EncoderParams,
    mels: &[MelSpectrogram],
    triplets: &[Triplet],
    margin: f64,
) -> Result<(f64, ParamGrads)> {
    let per_triplet: Vec<(f64, Option<ParamGrads>)> = triplets
        .par_iter()
        .map(|t| triplet_forward_backward(params, mels, t, margin))
        .collect::<Result<_>>()?;

    let mut grads = ParamGrads::zeros_like(params);
    let mut loss_sum = 0.0;
    for (loss, g) in per_triplet {
        loss_sum += loss;
        if let Some(g) = g {
            grads.add_assign(&g);
        }
    }
    grads.scale(1.0 / triplets.len() as f64);
    Ok((loss_sum, grads))
}

/// Forward and backward for one triplet. Returns the hinge loss and, when
/// the hinge is active, the summed parameter gradient of the three members.
fn triplet_forward_backward(
    params: &EncoderParams,
    mels: &[MelSpectrogram],
    t: &Triplet,
    margin: f64,
) -> Result<(f64, Option<ParamGrads>)> {
    let (e_a, cache_a) = forward(params, &mels[t.anchor].values)?;
    let (e_p, cache_p) = forward(params, &mels[t.positive].values)?;
    let (e_n, cache_n) = forward(params, &mels[t.negative].values)?;

    // Embeddings are unit norm, so d = 1 - <a, b>.
    let d_ap = 1.0 - e_a.dot(&e_p);
    let d_an = 1.0 - e_a.dot(&e_n);
    let loss = triplet_loss(d_ap, d_an, margin);
    if hinge_gradients(d_ap, d_an, margin).0 == 0.0 {
        return Ok((loss, None));
    }

    // With the hinge active: dL/de_a = e_n - e_p, dL/de_p = -e_a,
    // dL/de_n = +e_a.
    let grad_anchor = &e_n - &e_p;
    let grad_positive = e_a.mapv(|v| -v);
    let grad_negative = e_a;

    let mut grads = backward(params, &cache_a, &grad_anchor)?;
    grads.add_assign(&backward(params, &cache_p, &grad_positive)?);
    grads.add_assign(&backward(params, &cache_n, &grad_negative)?);
    Ok((loss, Some(grads)))
}

/// Writes one role's training artifacts: per-trial model files and loss
/// history CSVs (`epoch,mean_loss`).
pub fn save_models(dir: impl AsRef<Path>, models: &[TrainedModel]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for model in models {
        crate::encoder::save_model(dir.join(format!("trial_{:02}.model", model.trial)), &model.params)?;
        let mut csv = String::from("epoch,mean_loss\n");
        for (epoch, loss) in model.loss_history.iter().enumerate() {
            csv.push_str(&format!("{epoch},{loss}\n"));
        }
        let path = dir.join(format!("trial_{:02}_loss.csv", model.trial));
        fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Loads the models previously written by [`save_models`], in trial order.
pub fn load_models(dir: impl AsRef<Path>, role: Instrument) -> Result<Vec<TrainedModel>> {
    let dir = dir.as_ref();
    let mut models = Vec::new();
    for trial in 0.. {
        let path = dir.join(format!("trial_{trial:02}.model"));
        if !path.is_file() {
            break;
        }
        let params = crate::encoder::load_model(&path)?;
        let loss_path = dir.join(format!("trial_{trial:02}_loss.csv"));
        let mut loss_history = Vec::new();
        if loss_path.is_file() {
            let text = fs::read_to_string(&loss_path).map_err(|e| Error::io(&loss_path, e))?;
            for line in text.lines().skip(1) {
                if let Some((_, loss)) = line.split_once(',') {
                    loss_history.push(loss.trim().parse::<f64>().map_err(|e| {
                        Error::InvalidConfig(format!("bad loss value in {}: {e}", loss_path.display()))
                    })?);
                }
            }
        }
        models.push(TrainedModel {
            instrument: role,
            trial,
            params,
            loss_history,
            config: TrainConfig::default(),
        });
    }
    if models.is_empty() {
        return Err(Error::ModelFile {
            path: dir.to_path_buf(),
            message: format!("no trial_XX.model files for role {role}"),
        });
    }
    Ok(models)
}

#[cfg(test)]
mod tests;
