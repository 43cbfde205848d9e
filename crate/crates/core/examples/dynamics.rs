//! Compressor and limiter on steady sines, compared with the static curve.

use std::f64::consts::PI;

use msr_core::audio::{rms_db_samples, AudioBuffer};
use msr_core::effects::{compress, limit, CompressorParams, LimiterParams};

fn sine(amp: f64, seconds: f64) -> AudioBuffer {
    let n = (44100.0 * seconds) as usize;
    AudioBuffer::mono(44100, (0..n).map(|i| amp * (2.0 * PI * 1000.0 * i as f64 / 44100.0).sin()).collect())
        .expect("valid sine")
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let params = CompressorParams { threshold_db: -20.0, ratio: 4.0, attack_ms: 5.0, release_ms: 100.0 };
    println!("compressor: threshold {} dB, ratio {}", params.threshold_db, params.ratio);
    for level_db in [-30.0, -20.0, -12.0, -6.0] {
        // peak level in dB; a sine's RMS sits 3 dB below
        let x = sine(10f64.powf(level_db / 20.0), 1.0);
        let y = compress(&x, &params)?;
        let tail = 22050;
        let gain = rms_db_samples(&y, tail, 22050)?.0 - rms_db_samples(&x, tail, 22050)?.0;
        println!(
            "  in {level_db:>6.1} dB peak: measured gain {gain:+6.2} dB, static curve {:+6.2} dB",
            params.static_curve(level_db) - level_db
        );
    }

    let limiter = LimiterParams { threshold_db: -6.0, release_ms: 100.0 };
    let y = limit(&sine(1.0, 0.5), &limiter)?;
    println!("limiter at {} dB: output peak {:.2} dB", limiter.threshold_db, 20.0 * y.peak().log10());
    Ok(())
}

fn main() {
    run_example().expect("dynamics example");
}
