//! Stem taxonomy, manifest ingestion, dataset statistics and train/test
//! splitting.
//!
//! Manifest schema (JSON):
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "songs": [
//!     { "id": "song-001",
//!       "stems": [ { "path": "song-001/gtr.wav", "label": "Gtr_EG", "notes": "DI" } ] }
//!   ]
//! }
//! ```
//!
//! Labels may be written as the second-level code (`EG`), as
//! `<group>_<code>` (`Gtr_EG`), or as `UNK`.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{peak_normalize, read_wav, rms_db_samples, AudioBuffer, AudioError};

pub const SCHEMA_VERSION: u32 = 1;
pub const UNKNOWN_LABEL: &str = "UNK";
pub const ACTIVE_THRESHOLD_DB: f64 = -40.0;
pub const MIN_TEST_SONGS: usize = 10;

/// First-level groups and their second-level codes, in the published order.
/// Single-child groups use the group code as their only leaf.
const GROUPS: &[(&str, &str, &[&str])] = &[
    ("Voc", "Vocals", &["LV", "BV", "GV"]),
    ("Rhy", "Rhythm section", &["DK", "PERC"]),
    ("Gtr", "Guitars", &["AG", "EG"]),
    ("Kbs", "Keyboards", &["PN", "EP", "MTR", "OR"]),
    ("Orch", "Orchestra", &["STR", "BR", "WW"]),
    ("Synth", "Synthesizers", &["Synth"]),
    ("Bass", "Bass", &["Bass"]),
    ("Misc", "Miscellaneous", &["Misc"]),
    ("MiscRoom", "Room microphones", &["MiscRoom"]),
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read manifest {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("manifest schema violation: {0}")]
    Schema(String),
    #[error("unsupported manifest schema version {0}")]
    UnsupportedVersion(u32),
    #[error("song {song}: invalid label {label:?}")]
    InvalidLabel { song: String, label: String },
    #[error("song {song}: duplicate stem path {path}")]
    DuplicatePath { song: String, path: String },
    #[error("duplicate song id {0}")]
    DuplicateSong(String),
    #[error("unknown target label {0:?}")]
    UnknownTarget(String),
    #[error("no song contains label {0}")]
    LabelAbsent(String),
    #[error("statistics output failed: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaxonomyMode {
    /// Nine first-level buckets and 18 leaves, following the category list.
    #[default]
    ListFaithful,
    /// Eight first-level groups and 17 leaves: room microphones fold into Misc.
    Strict17,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Leaf {
    pub group: &'static str,
    pub code: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Taxonomy {
    mode: TaxonomyMode,
}

impl Taxonomy {
    pub fn new(mode: TaxonomyMode) -> Self {
        Taxonomy { mode }
    }

    pub fn mode(&self) -> TaxonomyMode {
        self.mode
    }

    fn groups(&self) -> impl Iterator<Item = &'static (&'static str, &'static str, &'static [&'static str])> + '_ {
        GROUPS.iter().filter(move |g| !(self.mode == TaxonomyMode::Strict17 && g.0 == "MiscRoom"))
    }

    pub fn group_codes(&self) -> Vec<&'static str> {
        self.groups().map(|g| g.0).collect()
    }

    pub fn leaves(&self) -> Vec<Leaf> {
        self.groups().flat_map(|g| g.2.iter().map(move |&code| Leaf { group: g.0, code })).collect()
    }

    /// Canonical leaf for a label, or `None` for UNK and invalid labels.
    pub fn resolve(&self, label: &str) -> Option<Leaf> {
        let code = match label.split_once('_') {
            Some((group, code)) => {
                let g = GROUPS.iter().find(|g| g.0 == group)?;
                if !g.2.contains(&code) {
                    return None;
                }
                code
            }
            None => label,
        };
        if self.mode == TaxonomyMode::Strict17 && code == "MiscRoom" {
            return Some(Leaf { group: "Misc", code: "Misc" });
        }
        self.leaves().into_iter().find(|l| l.code == code)
    }

    /// Canonical label text: the leaf code, or `UNK`.
    pub fn canonical(&self, label: &str) -> Option<&'static str> {
        if label == UNKNOWN_LABEL {
            return Some(UNKNOWN_LABEL);
        }
        self.resolve(label).map(|l| l.code)
    }

    /// First-level group of a canonical label; `UNK` is its own group.
    pub fn parent(&self, canonical: &str) -> Option<&'static str> {
        if canonical == UNKNOWN_LABEL {
            return Some(UNKNOWN_LABEL);
        }
        self.resolve(canonical).map(|l| l.group)
    }

    /// A split or generation target: either a leaf or a whole first-level group.
    pub fn target(&self, label: &str) -> Result<Target, DatasetError> {
        if let Some(g) = self.groups().find(|g| g.0 == label) {
            return Ok(Target { name: g.0.to_string(), leaves: g.2.iter().map(|s| s.to_string()).collect() });
        }
        if self.mode == TaxonomyMode::Strict17 && label == "Misc" {
            return Ok(Target { name: "Misc".into(), leaves: vec!["Misc".into()] });
        }
        match self.resolve(label) {
            Some(leaf) => Ok(Target { name: leaf.code.to_string(), leaves: vec![leaf.code.to_string()] }),
            None => Err(DatasetError::UnknownTarget(label.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub name: String,
    pub leaves: Vec<String>,
}

impl Target {
    pub fn matches(&self, canonical_label: &str) -> bool {
        self.leaves.iter().any(|l| l == canonical_label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemEntry {
    pub path: String,
    /// Canonical after parsing.
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SongManifest {
    pub id: String,
    pub stems: Vec<StemEntry>,
}

impl SongManifest {
    pub fn labels(&self) -> BTreeSet<&str> {
        self.stems.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn contains(&self, target: &Target) -> bool {
        self.stems.iter().any(|s| target.matches(&s.label))
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ManifestDocument {
    schema_version: u32,
    songs: Vec<SongManifest>,
}

pub fn parse_manifest(path: impl AsRef<Path>, taxonomy: &Taxonomy) -> Result<Vec<SongManifest>, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| DatasetError::Io { path: path.display().to_string(), reason: e.to_string() })?;
    parse_manifest_str(&text, taxonomy)
}

pub fn parse_manifest_str(text: &str, taxonomy: &Taxonomy) -> Result<Vec<SongManifest>, DatasetError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| DatasetError::Schema(e.to_string()))?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| DatasetError::Schema("missing integer schema_version".into()))?;
    if version != SCHEMA_VERSION as u64 {
        return Err(DatasetError::UnsupportedVersion(version as u32));
    }
    let doc: ManifestDocument = serde_json::from_value(value).map_err(|e| DatasetError::Schema(e.to_string()))?;
    let mut ids = HashSet::new();
    let mut songs = doc.songs;
    for song in &mut songs {
        if !ids.insert(song.id.clone()) {
            return Err(DatasetError::DuplicateSong(song.id.clone()));
        }
        let mut paths = HashSet::new();
        for stem in &mut song.stems {
            if !paths.insert(stem.path.clone()) {
                return Err(DatasetError::DuplicatePath { song: song.id.clone(), path: stem.path.clone() });
            }
            stem.label = taxonomy
                .canonical(&stem.label)
                .ok_or_else(|| DatasetError::InvalidLabel { song: song.id.clone(), label: stem.label.clone() })?
                .to_string();
        }
    }
    Ok(songs)
}

pub fn write_manifest(songs: &[SongManifest], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let doc = ManifestDocument { schema_version: SCHEMA_VERSION, songs: songs.to_vec() };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| DatasetError::Output(e.to_string()))?;
    std::fs::write(path.as_ref(), text + "\n").map_err(|e| DatasetError::Output(e.to_string()))
}

/// Number of whole 1 s segments of the peak-normalised buffer whose RMS is
/// above −40 dB. A trailing partial second is ignored.
pub fn active_playing_time(buffer: &AudioBuffer) -> u64 {
    let normalized = match peak_normalize(buffer) {
        Ok(b) => b,
        Err(_) => return 0,
    };
    let seg = buffer.sample_rate() as usize;
    (0..buffer.len() / seg)
        .filter(|i| rms_db_samples(&normalized, i * seg, seg).map(|l| l.0 > ACTIVE_THRESHOLD_DB).unwrap_or(false))
        .count() as u64
}

/// `P(B|A)` over second-level labels. `matrix[a][b]` is `None` when label `a`
/// occurs in no song.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CooccurrenceMatrix {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<Option<f64>>>,
}

impl CooccurrenceMatrix {
    pub fn get(&self, given: &str, observed: &str) -> Option<f64> {
        let a = self.labels.iter().position(|l| l == given)?;
        let b = self.labels.iter().position(|l| l == observed)?;
        self.matrix[a][b]
    }
}

/// Co-occurrence over the labels present in at least one song, sorted.
pub fn cooccurrence(songs: &[SongManifest]) -> CooccurrenceMatrix {
    let labels: BTreeSet<&str> = songs.iter().flat_map(|s| s.labels()).collect();
    let labels: Vec<String> = labels.into_iter().map(String::from).collect();
    cooccurrence_over(songs, &labels)
}

/// Co-occurrence over a fixed label list.
pub fn cooccurrence_over(songs: &[SongManifest], labels: &[String]) -> CooccurrenceMatrix {
    let sets: Vec<BTreeSet<&str>> = songs.iter().map(|s| s.labels()).collect();
    let n = labels.len();
    let mut both = vec![vec![0usize; n]; n];
    for set in &sets {
        let present: Vec<usize> = (0..n).filter(|&i| set.contains(labels[i].as_str())).collect();
        for &a in &present {
            for &b in &present {
                both[a][b] += 1;
            }
        }
    }
    let matrix = (0..n)
        .map(|a| {
            let count_a = both[a][a];
            (0..n).map(|b| (count_a > 0).then(|| both[a][b] as f64 / count_a as f64)).collect()
        })
        .collect();
    CooccurrenceMatrix { labels: labels.to_vec(), matrix }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub label: String,
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Test-set size for `n` songs containing the target: the larger of 10 songs
/// and 10% (rounded up), capped at `n`.
pub fn test_size(n: usize) -> usize {
    MIN_TEST_SONGS.max(n.div_ceil(10)).min(n)
}

/// Seeded split. Test songs are drawn without replacement from the songs
/// containing the target; every other song is training data. Both lists
/// keep manifest order.
pub fn make_split(songs: &[SongManifest], target: &Target, seed: u64) -> Result<Split, DatasetError> {
    let candidates: Vec<usize> = (0..songs.len()).filter(|&i| songs[i].contains(target)).collect();
    if candidates.is_empty() {
        return Err(DatasetError::LabelAbsent(target.name.clone()));
    }
    let mut shuffled = candidates.clone();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let chosen: HashSet<usize> = shuffled.into_iter().take(test_size(candidates.len())).collect();
    let (test, train): (Vec<usize>, Vec<usize>) = (0..songs.len()).partition(|i| chosen.contains(i));
    Ok(Split {
        label: target.name.clone(),
        seed,
        train: train.into_iter().map(|i| songs[i].id.clone()).collect(),
        test: test.into_iter().map(|i| songs[i].id.clone()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelStats {
    /// Songs with at least one stem of this label.
    pub songs: usize,
    pub stems: usize,
    pub active_seconds: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StemStatistics {
    pub song_count: usize,
    pub labels: BTreeMap<String, LabelStats>,
    /// Number of distinct first-level groups per song → number of songs.
    pub first_level_histogram: BTreeMap<usize, usize>,
    /// Number of distinct second-level labels per song → number of songs.
    pub second_level_histogram: BTreeMap<usize, usize>,
    pub missing_files: Vec<String>,
    pub unreadable_files: Vec<(String, String)>,
}

enum StemOutcome {
    Active(u64),
    Missing,
    Unreadable(String),
}

/// Counts and active playing times. Audio paths are resolved against
/// `audio_root`; missing or unreadable files are listed, not fatal.
pub fn stem_statistics(songs: &[SongManifest], audio_root: &Path, taxonomy: &Taxonomy) -> StemStatistics {
    let jobs: Vec<(&SongManifest, &StemEntry)> = songs.iter().flat_map(|s| s.stems.iter().map(move |e| (s, e))).collect();
    let outcomes: Vec<StemOutcome> = jobs
        .par_iter()
        .map(|(_, stem)| {
            let path: PathBuf = audio_root.join(&stem.path);
            match read_wav(&path) {
                Ok(b) => StemOutcome::Active(active_playing_time(&b)),
                Err(AudioError::MissingFile(_)) => StemOutcome::Missing,
                Err(e) => StemOutcome::Unreadable(e.to_string()),
            }
        })
        .collect();

    let mut labels: BTreeMap<String, LabelStats> = BTreeMap::new();
    let mut missing_files = Vec::new();
    let mut unreadable_files = Vec::new();
    for ((_, stem), outcome) in jobs.iter().zip(outcomes) {
        let entry = labels.entry(stem.label.clone()).or_default();
        entry.stems += 1;
        match outcome {
            StemOutcome::Active(s) => entry.active_seconds += s,
            StemOutcome::Missing => missing_files.push(stem.path.clone()),
            StemOutcome::Unreadable(reason) => unreadable_files.push((stem.path.clone(), reason)),
        }
    }
    let mut first_level_histogram = BTreeMap::new();
    let mut second_level_histogram = BTreeMap::new();
    for song in songs {
        let leaves = song.labels();
        for label in &leaves {
            labels.entry(label.to_string()).or_default().songs += 1;
        }
        let groups: BTreeSet<&str> = leaves.iter().filter_map(|l| taxonomy.parent(l)).collect();
        *first_level_histogram.entry(groups.len()).or_insert(0) += 1;
        *second_level_histogram.entry(leaves.len()).or_insert(0) += 1;
    }
    StemStatistics {
        song_count: songs.len(),
        labels,
        first_level_histogram,
        second_level_histogram,
        missing_files,
        unreadable_files,
    }
}

impl StemStatistics {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| DatasetError::Output(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| DatasetError::Output(e.to_string()))
    }

    /// One row per label: `label,songs,stems,active_seconds`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| DatasetError::Output(e.to_string());
        w.write_record(["label", "songs", "stems", "active_seconds"]).map_err(err)?;
        for (label, s) in &self.labels {
            w.write_record([label.clone(), s.songs.to_string(), s.stems.to_string(), s.active_seconds.to_string()])
                .map_err(err)?;
        }
        w.flush().map_err(|e| DatasetError::Output(e.to_string()))
    }
}
