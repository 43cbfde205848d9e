#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use msr_core::audio::{write_wav, AudioBuffer, BitDepth};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Tone plus a little noise, distinct for every `(song, stem)`.
pub fn synth_stem(song: usize, stem: usize, rate: u32, seconds: f64) -> AudioBuffer {
    let mut rng = ChaCha8Rng::seed_from_u64((song * 1000 + stem) as u64);
    let f = 80.0 * (1 + stem) as f64 + 7.0 * song as f64;
    let n = (rate as f64 * seconds) as usize;
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / rate as f64;
            0.25 * (2.0 * PI * f * t).sin() + 0.1 * (2.0 * PI * 2.7 * f * t).sin() + rng.random_range(-0.02..0.02)
        })
        .collect();
    AudioBuffer::mono(rate, x).unwrap()
}

pub fn song_labels(song: usize) -> Vec<&'static str> {
    let mut labels = vec!["Voc_LV", "Bass", "Rhy_DK"];
    if song.is_multiple_of(2) {
        labels.push("Gtr_EG");
    }
    labels
}

/// Writes `songs` songs of short stems under `root` and returns the
/// manifest path.
pub fn write_dataset(root: &Path, songs: usize, rate: u32, seconds: f64) -> PathBuf {
    let mut entries = Vec::new();
    for s in 0..songs {
        let dir = root.join(format!("song{s:03}"));
        std::fs::create_dir_all(&dir).unwrap();
        let mut stems = Vec::new();
        for (k, label) in song_labels(s).into_iter().enumerate() {
            let rel = format!("song{s:03}/stem{k}.wav");
            write_wav(&synth_stem(s, k, rate, seconds), root.join(&rel), BitDepth::Float32).unwrap();
            stems.push(serde_json::json!({ "path": rel, "label": label }));
        }
        entries.push(serde_json::json!({ "id": format!("song{s:03}"), "stems": stems }));
    }
    let manifest = root.join("manifest.json");
    let doc = serde_json::json!({ "schema_version": 1, "songs": entries });
    std::fs::write(&manifest, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    manifest
}

/// Every file under `dir` with its bytes, sorted by relative path.
pub fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.push((p.strip_prefix(base).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

pub fn msr(args: &[&str]) -> i32 {
    let mut full = vec!["msr"];
    full.extend_from_slice(args);
    msr_core::cli::run(full)
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}
