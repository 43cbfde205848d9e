//! 16-band graphic EQ and a parametric EQ applied to white noise.

use msr_core::audio::{rms_db_full, AudioBuffer};
use msr_core::filters::{
    frequency_response, graphic_eq, parametric_eq, process_sos, BandType, GraphicEqSettings, ParametricBand,
    GRAPHIC_EQ_CENTERS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 44100.0;
    let mut settings = GraphicEqSettings::flat();
    settings.gains_db[4] = 6.0;
    settings.gains_db[10] = -6.0;
    let eq = graphic_eq(&settings, fs)?;
    let response = frequency_response(&eq, &GRAPHIC_EQ_CENTERS, fs);
    for (fc, db) in GRAPHIC_EQ_CENTERS.iter().zip(&response) {
        println!("{fc:>8.0} Hz {db:+6.2} dB");
    }

    let bands = [
        ParametricBand { band_type: BandType::Highpass, fc: 80.0, q: 0.7, gain_db: 0.0 },
        ParametricBand { band_type: BandType::Peak, fc: 3000.0, q: 2.0, gain_db: 4.0 },
        ParametricBand { band_type: BandType::Highshelf, fc: 8000.0, q: 0.7, gain_db: -3.0 },
    ];
    let peq = parametric_eq(&bands, fs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = AudioBuffer::mono(44100, (0..44100).map(|_| rng.random_range(-0.5..0.5)).collect())?;
    let filtered = process_sos(&peq, &noise);
    println!(
        "parametric EQ on white noise: {:.2} dB -> {:.2} dB RMS",
        rms_db_full(&noise)?.0,
        rms_db_full(&filtered)?.0
    );
    Ok(())
}

fn main() {
    run_example().expect("graphic EQ example");
}
