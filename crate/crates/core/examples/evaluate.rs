//! SI-SDR and mel-spectrogram SSIM of progressively noisier estimates.

use std::f64::consts::PI;

use msr_core::audio::{add_gaussian_noise, AudioBuffer};
use msr_core::metrics::{evaluate_pairs, MelSpecConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rate = 16000;
    let n = 25 * rate as usize;
    let reference = AudioBuffer::mono(
        rate,
        (0..n)
            .map(|i| {
                let t = i as f64 / rate as f64;
                0.3 * (2.0 * PI * 330.0 * t).sin() * (0.5 + 0.5 * (2.0 * PI * 0.5 * t).sin())
            })
            .collect(),
    )?;
    let config = MelSpecConfig::default();
    for sigma in [0.001, 0.01, 0.1] {
        let estimate = add_gaussian_noise(&reference, sigma, 1)?;
        let summary = evaluate_pairs(&[(estimate, reference.clone())], &config)?;
        println!(
            "noise sigma {sigma:<5}: SI-SDR {:6.2} ± {:.2} dB, SSIM {:.4} ± {:.4} over {} segments",
            summary.si_sdr.mean, summary.si_sdr.ci95, summary.ssim_mel.mean, summary.ssim_mel.ci95, summary.si_sdr.n
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("evaluation example");
}
