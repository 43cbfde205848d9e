//! Manifest parsing, co-occurrence, split and active playing time.

use std::f64::consts::PI;

use msr_core::audio::AudioBuffer;
use msr_core::dataset::{active_playing_time, cooccurrence, make_split, parse_manifest_str, Taxonomy, TaxonomyMode};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let taxonomy = Taxonomy::new(TaxonomyMode::ListFaithful);
    let mut songs = String::new();
    for i in 0..24 {
        let labels: &[&str] = match i % 3 {
            0 => &["Voc_LV", "Gtr_EG", "Bass", "Rhy_DK"],
            1 => &["LV", "AG", "Bass"],
            _ => &["EG", "AG", "PN", "Bass", "MiscRoom"],
        };
        let stems: Vec<String> =
            labels.iter().enumerate().map(|(k, l)| format!(r#"{{"path":"s{i}/{k}.wav","label":"{l}"}}"#)).collect();
        if i > 0 {
            songs.push(',');
        }
        songs.push_str(&format!(r#"{{"id":"song{i:02}","stems":[{}]}}"#, stems.join(",")));
    }
    let manifest = format!(r#"{{"schema_version":1,"songs":[{songs}]}}"#);
    let parsed = parse_manifest_str(&manifest, &taxonomy)?;

    let m = cooccurrence(&parsed);
    for given in ["EG", "AG"] {
        println!(
            "P(Bass|{given}) = {:.2}, P(AG|{given}) = {:.2}",
            m.get(given, "Bass").unwrap_or(f64::NAN),
            m.get(given, "AG").unwrap_or(f64::NAN)
        );
    }

    let split = make_split(&parsed, &taxonomy.target("Gtr")?, 0)?;
    println!("guitar split: {} train / {} test songs", split.train.len(), split.test.len());

    let mut x: Vec<f64> = (0..3 * 8000).map(|i| (2.0 * PI * 440.0 * i as f64 / 8000.0).sin()).collect();
    x.extend(vec![0.0; 2 * 8000]);
    println!("active playing time of 3 s tone + 2 s silence: {} s", active_playing_time(&AudioBuffer::mono(8000, x)?));
    Ok(())
}

fn main() {
    run_example().expect("dataset example");
}
