//! Builds a degraded mixture / clean target pair, saves it and replays the record.

use std::f64::consts::PI;

use msr_core::audio::{write_wav, AudioBuffer, BitDepth};
use msr_core::degrade::{build_training_example, replay, ChainConfig, DegradationRecord};

fn tone(freqs: &[f64], seconds: f64) -> AudioBuffer {
    let n = (22050.0 * seconds) as usize;
    let x = (0..n)
        .map(|i| {
            let t = i as f64 / 22050.0;
            freqs.iter().map(|f| 0.2 * (2.0 * PI * f * t).sin()).sum::<f64>() * (1.0 - (-8.0 * t).exp())
        })
        .collect();
    AudioBuffer::mono(22050, x).expect("valid tone")
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let vocal = tone(&[220.0, 440.0, 660.0], 1.0);
    let bass = tone(&[55.0, 110.0], 1.0);
    let drums = tone(&[90.0, 3000.0], 1.0);

    // no MP3 encoder needed for this example
    let config = ChainConfig { codec_enabled: false, ..ChainConfig::default() };
    let example = build_training_example(std::slice::from_ref(&vocal), &[bass.clone(), drums.clone()], 42, &config, false)?;
    let r = &example.record;
    println!("target chain:     {:?}", r.stem_chain.iter().map(|e| e.name()).collect::<Vec<_>>());
    println!("background chain: {:?}", r.background_chain.iter().map(|e| e.name()).collect::<Vec<_>>());
    println!("mixture chain:    {:?}", r.mixture_chain.iter().map(|e| e.name()).collect::<Vec<_>>());
    println!("snr {:.2} dB (applied: {}), noise {:?}", r.snr_db, r.snr_applied, r.noise);

    let dir = tempfile::tempdir()?;
    write_wav(&example.mixture, dir.path().join("mixture.wav"), BitDepth::Float32)?;
    write_wav(&example.target, dir.path().join("target.wav"), BitDepth::Float32)?;
    std::fs::write(dir.path().join("record.json"), r.to_json())?;

    let loaded = DegradationRecord::from_json(&std::fs::read_to_string(dir.path().join("record.json"))?)?;
    let (mixture, _) = replay(&loaded, &[vocal], &[bass, drums])?;
    println!("replay bit-identical: {}", mixture == example.mixture);
    Ok(())
}

fn main() {
    run_example().expect("degradation example");
}
