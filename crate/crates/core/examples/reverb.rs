//! FreeVerb impulse responses for three room sizes.

use msr_core::audio::AudioBuffer;
use msr_core::effects::{freeverb, ReverbParams};

fn energy_after(x: &[f64], from: usize) -> f64 {
    x[from..].iter().map(|v| v * v).sum()
}

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let mut impulse = vec![0.0; 3 * 44100];
    impulse[0] = 1.0;
    let input = AudioBuffer::new(44100, vec![impulse.clone(), impulse])?;
    for room_size in [0.1, 0.5, 1.0] {
        let params = ReverbParams { room_size, damping: 0.3, wet_level: 0.5, width: 1.0 };
        let out = freeverb(&input, &params)?;
        let left = out.channel(0);
        let total = energy_after(left, 1);
        let late = energy_after(left, 44100);
        println!(
            "room {room_size:.1}: comb feedback {:.3}, tail energy after 1 s is {:.1} dB of the total",
            params.comb_feedback(),
            10.0 * (late / total).log10()
        );
    }
    Ok(())
}

fn main() {
    run_example().expect("reverb example");
}
