//! Designs one filter per family and prints its magnitude response.

use msr_core::filters::{frequency_response, FilterDesignSpec, FilterFamily, FilterKind};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let fs = 44100.0;
    let probes = [250.0, 1000.0, 2000.0, 4000.0, 8000.0];
    println!("4th-order lowpass at 1 kHz, response in dB at {probes:?} Hz");
    for family in FilterFamily::ALL {
        let spec = FilterDesignSpec {
            family,
            kind: FilterKind::Lowpass,
            order: 4,
            cutoff_hz: 1000.0,
            cutoff2_hz: None,
            passband_ripple_db: family.uses_ripple().then_some(1.0),
            stopband_atten_db: family.uses_attenuation().then_some(40.0),
        };
        let sos = spec.design(fs)?;
        let db = frequency_response(&sos, &probes, fs);
        let row: Vec<String> = db.iter().map(|v| format!("{v:8.2}")).collect();
        println!("{family:>12?} {} (max |pole| {:.4})", row.join(" "), sos.max_pole_magnitude());
    }

    let band = FilterDesignSpec {
        family: FilterFamily::Butterworth,
        kind: FilterKind::Bandpass,
        order: 4,
        cutoff_hz: 0.0,
        cutoff2_hz: None,
        passband_ripple_db: None,
        stopband_atten_db: None,
    };
    let (f1, f2) = FilterDesignSpec::band_edges(2000.0, Some(2.0));
    let band = FilterDesignSpec { cutoff_hz: f1, cutoff2_hz: Some(f2), ..band };
    let sos = band.design(fs)?;
    println!("bandpass {f1:.1}-{f2:.1} Hz: {} sections, centre {:.2} dB", sos.sections.len(), frequency_response(&sos, &[2000.0], fs)[0]);
    Ok(())
}

fn main() {
    run_example().expect("filter design example");
}
