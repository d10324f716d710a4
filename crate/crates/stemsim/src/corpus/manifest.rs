//! Corpus manifest: the JSON document that names every track, its split and
//! its stem files, plus a loader for Slakh-style directory layouts.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::Instrument;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestTrack {
    pub id: String,
    pub split: Split,
    /// Stem files by role; roles may be omitted. Paths are relative to the
    /// manifest location unless absolute.
    pub stems: BTreeMap<Instrument, PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub sample_rate: u32,
    pub tracks: Vec<ManifestTrack>,
    /// Directory stem paths are resolved against. Not serialized; set to the
    /// manifest's parent directory on load.
    #[serde(skip)]
    pub root: PathBuf,
}

impl CorpusManifest {
    /// Loads and validates a manifest: unique track ids, every stem file
    /// present on disk.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: CorpusManifest = serde_json::from_str(&text)?;
        manifest.root = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text.as_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for track in &self.tracks {
            if !seen.insert(&track.id) {
                return Err(Error::InvalidManifest(format!(
                    "duplicate track id {}",
                    track.id
                )));
            }
            for (role, rel) in &track.stems {
                let p = self.resolve(rel);
                if !p.is_file() {
                    return Err(Error::InvalidManifest(format!(
                        "track {} role {role}: missing file {}",
                        track.id,
                        p.display()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Resolves a stem path against the manifest root.
    pub fn resolve(&self, stem_path: &Path) -> PathBuf {
        if stem_path.is_absolute() {
            stem_path.to_path_buf()
        } else {
            self.root.join(stem_path)
        }
    }

    pub fn tracks_in_split(&self, split: Split) -> impl Iterator<Item = &ManifestTrack> {
        self.tracks.iter().filter(move |t| t.split == split)
    }

    pub fn track(&self, id: &str) -> Result<&ManifestTrack> {
        self.tracks
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::UnknownTrack(id.to_string()))
    }

    /// Roles carried by at least one track in the given split.
    pub fn roles_in_split(&self, split: Split) -> Vec<Instrument> {
        let mut roles = BTreeSet::new();
        for track in self.tracks_in_split(split) {
            roles.extend(track.stems.keys().copied());
        }
        roles.into_iter().collect()
    }

    /// Scans a Slakh-style layout: `root/{train,test}/<track>/<role>.wav`,
    /// one directory per track, stem WAVs named by role. Tracks are ordered
    /// by directory name; WAV files whose stem name is not a known role are
    /// ignored.
    pub fn from_slakh_layout(root: impl AsRef<Path>, sample_rate: u32) -> Result<Self> {
        let root = root.as_ref();
        let mut tracks = Vec::new();
        for (split, dir_name) in [(Split::Train, "train"), (Split::Test, "test")] {
            let split_dir = root.join(dir_name);
            if !split_dir.is_dir() {
                continue;
            }
            let mut entries: Vec<PathBuf> = fs::read_dir(&split_dir)
                .map_err(|e| Error::io(&split_dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_dir())
                .collect();
            entries.sort();
            for track_dir in entries {
                let id = track_dir
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let mut stems = BTreeMap::new();
                for role in Instrument::ALL {
                    let wav = track_dir.join(format!("{role}.wav"));
                    if wav.is_file() {
                        stems.insert(
                            role,
                            wav.strip_prefix(root).unwrap_or(&wav).to_path_buf(),
                        );
                    }
                }
                if !stems.is_empty() {
                    tracks.push(ManifestTrack { id, split, stems });
                }
            }
        }
        if tracks.is_empty() {
            return Err(Error::InvalidManifest(format!(
                "no tracks found under {}",
                root.display()
            )));
        }
        let manifest = CorpusManifest {
            sample_rate,
            tracks,
            root: root.to_path_buf(),
        };
        manifest.validate()?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::wav;

    #[test]
    fn manifest_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let wav_path = dir.path().join("a.wav");
        wav::write_mono_16bit(&wav_path, 44_100, &vec![0.1; 100]).unwrap();

        let manifest = CorpusManifest {
            sample_rate: 44_100,
            tracks: vec![ManifestTrack {
                id: "t1".into(),
                split: Split::Train,
                stems: BTreeMap::from([(Instrument::Mix, PathBuf::from("a.wav"))]),
            }],
            root: dir.path().to_path_buf(),
        };
        let mpath = dir.path().join("manifest.json");
        manifest.save(&mpath).unwrap();
        let back = CorpusManifest::load(&mpath).unwrap();
        assert_eq!(back.sample_rate, 44_100);
        assert_eq!(back.tracks.len(), 1);
        assert_eq!(back.root, dir.path());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = CorpusManifest {
            sample_rate: 44_100,
            tracks: vec![
                ManifestTrack {
                    id: "t".into(),
                    split: Split::Train,
                    stems: BTreeMap::new(),
                },
                ManifestTrack {
                    id: "t".into(),
                    split: Split::Test,
                    stems: BTreeMap::new(),
                },
            ],
            root: dir.path().to_path_buf(),
        };
        assert!(manifest.validate().is_err());
    }

    #[test]
    fn missing_stem_file_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = CorpusManifest {
            sample_rate: 44_100,
            tracks: vec![ManifestTrack {
                id: "t".into(),
                split: Split::Train,
                stems: BTreeMap::from([(Instrument::Drums, PathBuf::from("nope.wav"))]),
            }],
            root: dir.path().to_path_buf(),
        };
        assert!(manifest.validate().is_err());
    }

    #[test]
    fn slakh_layout_scan() {
        let dir = tempfile::tempdir().unwrap();
        for (split, track) in [("train", "Track00001"), ("test", "Track00002")] {
            let tdir = dir.path().join(split).join(track);
            fs::create_dir_all(&tdir).unwrap();
            for role in ["mix", "drums"] {
                wav::write_mono_16bit(tdir.join(format!("{role}.wav")), 44_100, &[0.1; 10])
                    .unwrap();
            }
            // A stray file that is not a role.
            fs::write(tdir.join("notes.txt"), "x").unwrap();
        }
        let manifest = CorpusManifest::from_slakh_layout(dir.path(), 44_100).unwrap();
        assert_eq!(manifest.tracks.len(), 2);
        assert_eq!(manifest.tracks_in_split(Split::Train).count(), 1);
        assert_eq!(manifest.tracks[0].stems.len(), 2);
    }
}
