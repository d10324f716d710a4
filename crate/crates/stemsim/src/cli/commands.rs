//! Implementations behind the CLI subcommands.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cli::args::*;
use crate::cli::config::RunConfig;
use crate::corpus::{
    self, collect_split_segments, compute_sdr, load_track, synth_corpus, CorpusManifest,
    Instrument, Split, SynthSpec,
};
use crate::error::{Error, Result};
use crate::eval::{
    build_listening_sets, build_listening_sets_multi, centroid_distance_matrix, embed_corpus,
    knn_accuracy, pearson_upper, query_similar, spearman_avg, store, DistanceMatrix,
    ListeningConfig,
};
use crate::features::{log_mel_batch, FeatureCache, MelSpectrogram};
use crate::trainer::{load_models, save_models, train};

fn parse_roles(arg: &Option<String>) -> Result<Option<Vec<Instrument>>> {
    let Some(s) = arg else { return Ok(None) };
    if s.eq_ignore_ascii_case("all") {
        return Ok(Some(Instrument::ALL.to_vec()));
    }
    s.split(',')
        .map(|part| part.trim().parse::<Instrument>())
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// CLI flag beats the config file beats "everything the corpus offers".
fn resolve_roles(
    flag: &Option<String>,
    cfg: &RunConfig,
    manifest: &CorpusManifest,
    split: Split,
) -> Result<Vec<Instrument>> {
    let available = manifest.roles_in_split(split);
    let wanted = match parse_roles(flag)? {
        Some(roles) => roles,
        None => match &cfg.roles {
            Some(roles) => roles.clone(),
            None => return Ok(available),
        },
    };
    if let Some(missing) = wanted.iter().find(|r| !available.contains(r)) {
        return Err(Error::InvalidConfig(format!(
            "role {missing} is not present in the {split} split"
        )));
    }
    Ok(wanted)
}

fn test_mels(
    manifest: &CorpusManifest,
    cfg: &RunConfig,
    role: Instrument,
) -> Result<Vec<MelSpectrogram>> {
    let segments =
        collect_split_segments(manifest, Split::Test, role, &cfg.segmentation.for_test())?;
    log_mel_batch(&segments, &cfg.features, manifest.sample_rate)
}

pub fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n_train_tracks: args.train,
        n_test_tracks: args.test,
        duration_s: args.duration,
    };
    let manifest = synth_corpus(&spec, args.seed, &args.out, args.sample_rate)?;
    let params_path = args.out.join("synth_config.json");
    let snapshot = serde_json::json!({
        "seed": args.seed,
        "sample_rate": args.sample_rate,
        "spec": spec,
    });
    fs::write(
        &params_path,
        serde_json::to_string_pretty(&snapshot)?,
    )
    .map_err(|e| Error::io(&params_path, e))?;
    println!(
        "wrote {} tracks ({} train / {} test) under {}",
        manifest.tracks.len(),
        args.train,
        args.test,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_featurize(args: &FeaturizeArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let manifest = CorpusManifest::load(cfg.manifest_path()?)?;
    let cache_dir = match &args.cache {
        Some(dir) => dir.clone(),
        None => cfg.out_dir_path()?.join("cache"),
    };
    let cache = FeatureCache::new(&cache_dir, &cfg.features, manifest.sample_rate)?;

    let mut written = 0usize;
    for (split, seg_cfg) in [
        (Split::Train, cfg.segmentation.clone()),
        (Split::Test, cfg.segmentation.for_test()),
    ] {
        for role in manifest.roles_in_split(split) {
            let segments = collect_split_segments(&manifest, split, role, &seg_cfg)?;
            for mel in log_mel_batch(&segments, &cfg.features, manifest.sample_rate)? {
                cache.store(&mel)?;
                written += 1;
            }
        }
    }
    println!("cached {written} feature files under {}", cache_dir.display());
    Ok(())
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let mut cfg = args.config.load()?;
    if let Some(epochs) = args.epochs {
        cfg.train.epochs = epochs;
    }
    if let Some(trials) = args.trials {
        cfg.train.n_trials = trials;
    }
    if let Some(seed) = args.seed {
        cfg.train.seed = seed;
    }
    cfg.validate()?;

    let manifest = CorpusManifest::load(cfg.manifest_path()?)?;
    let roles = resolve_roles(&args.role, &cfg, &manifest, Split::Train)?;
    let out_dir = cfg.out_dir_path()?.to_path_buf();
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    cfg.save(out_dir.join("config.json"))?;

    for role in roles {
        let models = train(
            &manifest,
            role,
            &cfg.segmentation,
            &cfg.features,
            &cfg.arch,
            &cfg.train,
        )?;
        save_models(out_dir.join(role.as_str()), &models)?;
        let final_losses: Vec<String> = models
            .iter()
            .map(|m| format!("{:.4}", m.loss_history.last().copied().unwrap_or(f64::NAN)))
            .collect();
        println!(
            "trained {role}: {} trials, final loss [{}]",
            models.len(),
            final_losses.join(", ")
        );
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RoleReport {
    pub n_trials: usize,
    pub n_test_segments: usize,
    pub per_trial_accuracy: Vec<f64>,
    pub accuracy_mean: f64,
    /// Population variance over the trials.
    pub accuracy_variance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CorrelationTables {
    pub roles: Vec<String>,
    pub pearson: Vec<Vec<f64>>,
    pub spearman: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub k: usize,
    pub roles: BTreeMap<String, RoleReport>,
    pub correlations: Option<CorrelationTables>,
}

fn mean_and_population_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Per-trial evaluation of one role: kNN accuracies and the trial-averaged
/// centroid distance matrix.
fn evaluate_role(
    manifest: &CorpusManifest,
    cfg: &RunConfig,
    run_dir: &Path,
    role: Instrument,
    eval_dir: &Path,
) -> Result<(RoleReport, DistanceMatrix)> {
    let models = load_models(run_dir.join(role.as_str()), role)?;
    let mels = test_mels(manifest, cfg, role)?;

    let mut accuracies = Vec::with_capacity(models.len());
    let mut matrices = Vec::with_capacity(models.len());
    for model in &models {
        let index = embed_corpus(model, &mels)?;
        accuracies.push(knn_accuracy(&index, cfg.eval.k)?);
        matrices.push(centroid_distance_matrix(&index)?);
        if cfg.eval.save_embeddings {
            let path = eval_dir.join(format!("{role}_trial_{:02}_embeddings.csv", model.trial));
            store::write_embeddings_csv(path, &index)?;
        }
    }
    let averaged = DistanceMatrix::average(&matrices)?;
    let (mean, variance) = mean_and_population_variance(&accuracies);
    Ok((
        RoleReport {
            n_trials: models.len(),
            n_test_segments: mels.len(),
            per_trial_accuracy: accuracies,
            accuracy_mean: mean,
            accuracy_variance: variance,
        },
        averaged,
    ))
}

fn correlation_tables(matrices: &BTreeMap<Instrument, DistanceMatrix>) -> Result<CorrelationTables> {
    let roles: Vec<Instrument> = matrices.keys().copied().collect();
    let n = roles.len();
    let mut pearson = vec![vec![1.0; n]; n];
    let mut spearman = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let p = pearson_upper(&matrices[&roles[i]], &matrices[&roles[j]])?;
            let s = spearman_avg(&matrices[&roles[i]], &matrices[&roles[j]])?;
            pearson[i][j] = p;
            pearson[j][i] = p;
            spearman[i][j] = s;
            spearman[j][i] = s;
        }
    }
    Ok(CorrelationTables {
        roles: roles.iter().map(|r| r.to_string()).collect(),
        pearson,
        spearman,
    })
}

fn write_correlation_csv(path: &Path, roles: &[String], table: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    for role in roles {
        out.push(',');
        out.push_str(role);
    }
    out.push('\n');
    for (i, role) in roles.iter().enumerate() {
        out.push_str(role);
        for v in &table[i] {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let mut cfg = args.config.load()?;
    if let Some(k) = args.k {
        cfg.eval.k = k;
    }
    if args.save_embeddings {
        cfg.eval.save_embeddings = true;
    }
    cfg.validate()?;

    let manifest = CorpusManifest::load(cfg.manifest_path()?)?;
    let run_dir = cfg.out_dir_path()?.to_path_buf();
    let roles = resolve_roles(&args.roles, &cfg, &manifest, Split::Test)?;
    let eval_dir = run_dir.join("eval");
    fs::create_dir_all(&eval_dir).map_err(|e| Error::io(&eval_dir, e))?;

    let mut reports = BTreeMap::new();
    let mut matrices = BTreeMap::new();
    for role in roles {
        let (report, matrix) = evaluate_role(&manifest, &cfg, &run_dir, role, &eval_dir)?;
        println!(
            "{role}: kNN accuracy mean {:.4} variance {:.2e} over {} trials",
            report.accuracy_mean, report.accuracy_variance, report.n_trials
        );
        store::write_distance_matrix_csv(eval_dir.join(format!("{role}_distmat.csv")), &matrix)?;
        store::write_distance_matrix_pgm(eval_dir.join(format!("{role}_distmat.pgm")), &matrix)?;
        reports.insert(role.to_string(), report);
        matrices.insert(role, matrix);
    }

    let correlations = if matrices.len() >= 2 {
        let tables = correlation_tables(&matrices)?;
        write_correlation_csv(
            &eval_dir.join("correlation_pearson.csv"),
            &tables.roles,
            &tables.pearson,
        )?;
        write_correlation_csv(
            &eval_dir.join("correlation_spearman.csv"),
            &tables.roles,
            &tables.spearman,
        )?;
        Some(tables)
    } else {
        None
    };

    let report = EvalReport {
        seed: cfg.train.seed,
        k: cfg.eval.k,
        roles: reports,
        correlations,
    };
    let report_path = eval_dir.join("report.json");
    fs::write(&report_path, serde_json::to_string_pretty(&report)?)
        .map_err(|e| Error::io(&report_path, e))?;
    println!("report written to {}", report_path.display());
    Ok(())
}

pub fn cmd_distmat(args: &DistmatArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let manifest = CorpusManifest::load(cfg.manifest_path()?)?;
    let run_dir = cfg.out_dir_path()?.to_path_buf();
    let roles = resolve_roles(&args.role, &cfg, &manifest, Split::Test)?;
    let eval_dir = run_dir.join("eval");
    fs::create_dir_all(&eval_dir).map_err(|e| Error::io(&eval_dir, e))?;

    for role in roles {
        let models = load_models(run_dir.join(role.as_str()), role)?;
        let mels = test_mels(&manifest, &cfg, role)?;
        let matrices = models
            .iter()
            .map(|m| centroid_distance_matrix(&embed_corpus(m, &mels)?))
            .collect::<Result<Vec<_>>>()?;
        let averaged = DistanceMatrix::average(&matrices)?;
        let csv = eval_dir.join(format!("{role}_distmat.csv"));
        store::write_distance_matrix_csv(&csv, &averaged)?;
        store::write_distance_matrix_pgm(eval_dir.join(format!("{role}_distmat.pgm")), &averaged)?;
        println!(
            "{role}: {}x{} distance matrix over {} trials -> {}",
            averaged.n(),
            averaged.n(),
            averaged.trials_averaged,
            csv.display()
        );
    }
    Ok(())
}

fn load_distmat(eval_dir: &Path, role: Instrument) -> Result<DistanceMatrix> {
    let path = eval_dir.join(format!("{role}_distmat.csv"));
    if !path.is_file() {
        return Err(Error::InvalidConfig(format!(
            "{} not found; run `eval` or `distmat` for role {role} first",
            path.display()
        )));
    }
    let mut m = store::read_distance_matrix_csv(&path)?;
    m.role = Some(role);
    Ok(m)
}

pub fn cmd_correlate(args: &CorrelateArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let eval_dir = cfg.out_dir_path()?.join("eval");
    let roles = match parse_roles(&args.roles)?.or_else(|| cfg.roles.clone()) {
        Some(roles) => roles,
        None => Instrument::ALL
            .into_iter()
            .filter(|r| eval_dir.join(format!("{r}_distmat.csv")).is_file())
            .collect(),
    };
    if roles.len() < 2 {
        return Err(Error::InvalidConfig(
            "correlation needs at least two roles with distance matrices".into(),
        ));
    }
    let mut matrices = BTreeMap::new();
    for role in roles {
        matrices.insert(role, load_distmat(&eval_dir, role)?);
    }
    let tables = correlation_tables(&matrices)?;
    write_correlation_csv(
        &eval_dir.join("correlation_pearson.csv"),
        &tables.roles,
        &tables.pearson,
    )?;
    write_correlation_csv(
        &eval_dir.join("correlation_spearman.csv"),
        &tables.roles,
        &tables.spearman,
    )?;

    println!("pearson (upper triangles):");
    print_table(&tables.roles, &tables.pearson);
    println!("spearman (column ranks, averaged):");
    print_table(&tables.roles, &tables.spearman);
    Ok(())
}

fn print_table(roles: &[String], table: &[Vec<f64>]) {
    print!("{:>8}", "");
    for role in roles {
        print!(" {role:>8}");
    }
    println!();
    for (i, role) in roles.iter().enumerate() {
        print!("{role:>8}");
        for v in &table[i] {
            print!(" {v:>8.3}");
        }
        println!();
    }
}

pub fn cmd_query(args: &QueryArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let eval_dir = cfg.out_dir_path()?.join("eval");
    let role = args.role.parse::<Instrument>()?;
    let matrix = load_distmat(&eval_dir, role)?;
    let top = args.top.unwrap_or(cfg.eval.top_n);
    let ranked = query_similar(&matrix, &args.track, top)?;
    for (id, distance) in ranked {
        println!("{id}\t{distance:.6}");
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ListeningSetEntry {
    pub anchor: String,
    pub positive: String,
    pub negative: String,
    pub role: String,
    /// Snippet start in seconds per member, keyed anchor/positive/negative.
    pub snippet_offsets: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ListeningSetsFile {
    pub seed: u64,
    pub snippet_seconds: f64,
    pub sets: Vec<ListeningSetEntry>,
}

/// Start of the first non-silent snippet: the snippet begins at the first
/// second (on a one-second grid) whose own RMS clears the silence
/// threshold, pulled back if needed so a full window still fits. Falls back
/// to 0.0 for short or silent signals.
fn first_non_silent_offset(
    samples: &[f64],
    sample_rate: u32,
    snippet_seconds: f64,
    threshold: f64,
) -> f64 {
    let window = (snippet_seconds * sample_rate as f64).round() as usize;
    let step = sample_rate as usize;
    if window == 0 || step == 0 || samples.len() <= window {
        return 0.0;
    }
    let mut start = 0usize;
    while start + step <= samples.len() {
        let rms = (samples[start..start + step]
            .iter()
            .map(|s| s * s)
            .sum::<f64>()
            / step as f64)
            .sqrt();
        if rms >= threshold {
            let latest = samples.len() - window;
            return start.min(latest) as f64 / sample_rate as f64;
        }
        start += step;
    }
    0.0
}

pub fn cmd_listening_sets(args: &ListeningSetsArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let manifest = CorpusManifest::load(cfg.manifest_path()?)?;
    let out_root = cfg.out_dir_path()?.to_path_buf();
    let eval_dir = out_root.join("eval");
    let roles = match parse_roles(&args.role)?.or_else(|| cfg.roles.clone()) {
        Some(roles) => roles,
        None => Instrument::ALL
            .into_iter()
            .filter(|r| eval_dir.join(format!("{r}_distmat.csv")).is_file())
            .collect(),
    };
    if roles.is_empty() {
        return Err(Error::InvalidConfig(
            "no roles with distance matrices found; run `eval` first".into(),
        ));
    }
    let seed = args.seed.unwrap_or(cfg.train.seed);
    let snippet_seconds = args.snippet_seconds;
    let listening_cfg = ListeningConfig::default();

    for role in roles {
        let focused = load_distmat(&eval_dir, role)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ role as u64);
        let sets = if role == Instrument::Mix {
            // Negative drawn from a random instrument-sound similarity.
            let sources: Vec<DistanceMatrix> = Instrument::STEMS
                .iter()
                .filter_map(|r| load_distmat(&eval_dir, *r).ok())
                .collect();
            if sources.is_empty() {
                return Err(Error::InvalidConfig(
                    "mix listening sets need at least one instrument distance matrix".into(),
                ));
            }
            let refs: Vec<&DistanceMatrix> = sources.iter().collect();
            build_listening_sets_multi(&focused, &refs, role, args.n, &mut rng, &listening_cfg)?
        } else {
            let mix = load_distmat(&eval_dir, Instrument::Mix)?;
            build_listening_sets(&focused, &mix, role, args.n, &mut rng, &listening_cfg)?
        };

        let role_dir = out_root.join("listening").join(role.as_str());
        fs::create_dir_all(&role_dir).map_err(|e| Error::io(&role_dir, e))?;

        let mut entries = Vec::with_capacity(sets.len());
        for (set_idx, set) in sets.iter().enumerate() {
            let mut offsets = BTreeMap::new();
            for (member, track_id) in [
                ("anchor", &set.anchor),
                ("positive", &set.positive),
                ("negative", &set.negative),
            ] {
                let track = manifest.track(track_id)?;
                let stem = track.stems.get(&role).ok_or_else(|| {
                    Error::InvalidManifest(format!("track {track_id} has no {role} stem"))
                })?;
                let audio = load_track(manifest.resolve(stem), manifest.sample_rate, track_id, role)?;
                let offset = first_non_silent_offset(
                    &audio.samples,
                    manifest.sample_rate,
                    snippet_seconds,
                    cfg.segmentation.silence_threshold,
                );
                let start = (offset * manifest.sample_rate as f64).round() as usize;
                let len = (snippet_seconds * manifest.sample_rate as f64).round() as usize;
                let end = (start + len).min(audio.samples.len());
                let snippet = &audio.samples[start..end];
                corpus::wav::write_mono_16bit(
                    role_dir.join(format!("set{set_idx:02}_{member}.wav")),
                    manifest.sample_rate,
                    snippet,
                )?;
                offsets.insert(member.to_string(), offset);
            }
            entries.push(ListeningSetEntry {
                anchor: set.anchor.clone(),
                positive: set.positive.clone(),
                negative: set.negative.clone(),
                role: role.to_string(),
                snippet_offsets: offsets,
            });
        }

        let file = ListeningSetsFile {
            seed,
            snippet_seconds,
            sets: entries,
        };
        let json_path = role_dir.join("sets.json");
        fs::write(&json_path, serde_json::to_string_pretty(&file)?)
            .map_err(|e| Error::io(&json_path, e))?;
        println!(
            "{role}: {} sets and {} snippets under {}",
            file.sets.len(),
            file.sets.len() * 3,
            role_dir.display()
        );
    }
    Ok(())
}

pub fn cmd_sdr(args: &SdrArgs) -> Result<()> {
    let (sr_ref, reference) = corpus::wav::read_mono(&args.reference)?;
    let (sr_est, estimate) = corpus::wav::read_mono(&args.estimate)?;
    if sr_ref != sr_est {
        return Err(Error::SampleRateMismatch {
            path: args.estimate.clone(),
            expected: sr_ref,
            found: sr_est,
        });
    }
    let sdr = compute_sdr(&reference, &estimate)?;
    println!("{sdr:.3}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snippet_offset_skips_leading_silence() {
        let sr = 1000u32;
        // 3 s of silence, then sound.
        let mut samples = vec![0.0; 3000];
        samples.extend(vec![0.3; 15_000]);
        let offset = first_non_silent_offset(&samples, sr, 10.0, 1e-4);
        assert_eq!(offset, 3.0);

        // Loud from the start.
        assert_eq!(first_non_silent_offset(&vec![0.4; 15_000], sr, 10.0, 1e-4), 0.0);
        // Shorter than one snippet: fall back to the beginning.
        assert_eq!(first_non_silent_offset(&vec![0.4; 500], sr, 10.0, 1e-4), 0.0);
    }

    #[test]
    fn role_parsing() {
        assert_eq!(parse_roles(&None).unwrap(), None);
        assert_eq!(
            parse_roles(&Some("all".into())).unwrap(),
            Some(Instrument::ALL.to_vec())
        );
        assert_eq!(
            parse_roles(&Some("drums, bass".into())).unwrap(),
            Some(vec![Instrument::Drums, Instrument::Bass])
        );
        assert!(parse_roles(&Some("theremin".into())).is_err());
    }
}
