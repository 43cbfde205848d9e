//! MP3 round trip through the external encoder named by MSR_LAME_PATH.

use std::f64::consts::PI;

use msr_core::audio::AudioBuffer;
use msr_core::codec::{encode_decode_mp3, encoder_version, resolve_encoder, CodecParams};
use msr_core::metrics::si_sdr;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    if resolve_encoder().is_none() {
        println!("no MP3 encoder found; set MSR_LAME_PATH to run this example");
        return Ok(());
    }
    println!("encoder: {}", encoder_version()?);
    let x = AudioBuffer::mono(44100, (0..44100).map(|i| 0.5 * (2.0 * PI * 1000.0 * i as f64 / 44100.0).sin()).collect())?;
    for q in [1.0, 5.0, 9.0] {
        let y = encode_decode_mp3(&x, &CodecParams { vbr_quality: q })?;
        println!("V{q}: length {} -> {}, SI-SDR {:.1} dB", x.len(), y.len(), si_sdr(y.channel(0), x.channel(0))?);
    }
    Ok(())
}

fn main() {
    run_example().expect("codec example");
}
