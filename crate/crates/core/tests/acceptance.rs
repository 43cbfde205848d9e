//! Acceptance suite. Prints one `PASS`, `FAIL` or `SKIP` line per criterion
//! and exits non-zero when any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::{msr, s, synth_stem, tree_bytes, write_dataset};
use msr_core::audio::{read_wav, write_wav, AudioBuffer, BitDepth};
use msr_core::codec::{encode_decode_mp3, resolve_encoder, CodecParams};
use msr_core::dataset::{
    active_playing_time, cooccurrence, make_split, test_size, SongManifest, StemEntry, Taxonomy, TaxonomyMode,
};
use msr_core::degrade::{
    build_training_example, replay, sample_mixture_chain, sample_snr, sample_stem_chain, ChainConfig, Effect,
};
use msr_core::effects::{
    compress, freeverb, limit, CompressorParams, LimiterParams, ReverbParams, COMP_ATTACK_RANGE_MS,
    COMP_RATIO_RANGE, COMP_THRESHOLD_RANGE_DB, DAMPING_RANGE, DRIVE_RANGE_DB, LIMIT_THRESHOLD_RANGE_DB,
    RELEASE_RANGE_MS, ROOM_SIZE_RANGE, WET_LEVEL_RANGE, WIDTH_RANGE,
};
use msr_core::filters::{
    design_frequency_range, frequency_response, graphic_eq, sample_filter_design, FilterDesignSpec,
    FilterFamily, FilterKind, GraphicEqSettings, ATTENUATION_RANGE_DB, EQ_GAIN_RANGE_DB, GRAPHIC_EQ_CENTERS,
    Q_RANGE, RIPPLE_RANGE_DB,
};
use msr_core::metrics::{
    evaluate_pairs, mel_power_spec, pairwise_sum, si_sdr, ssim_log_mel, MelSpecConfig, CI95_Z, SEGMENT_SECONDS,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn db(x: f64) -> f64 {
    20.0 * x.log10()
}

fn sine(freq: f64, amp: f64, rate: u32, len: usize) -> AudioBuffer {
    let x = (0..len).map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin()).collect();
    AudioBuffer::mono(rate, x).unwrap()
}

fn noise(rng: &mut ChaCha8Rng, amp: f64, rate: u32, len: usize) -> AudioBuffer {
    AudioBuffer::mono(rate, (0..len).map(|_| rng.random_range(-amp..amp)).collect()).unwrap()
}

fn peak_of(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Digital frequencies whose prototype frequency magnitude is `omega`.
fn digital_freqs(spec: &FilterDesignSpec, omega: f64, fs: f64) -> Vec<f64> {
    let warp = |f: f64| 2.0 * fs * (PI * f / fs).tan();
    let unwarp = |w: f64| fs / PI * (w / (2.0 * fs)).atan();
    let w1 = warp(spec.cutoff_hz);
    let ws = match spec.kind {
        FilterKind::Lowpass => vec![omega * w1],
        FilterKind::Highpass => vec![w1 / omega],
        FilterKind::Bandpass | FilterKind::Bandstop => {
            let w2 = warp(spec.cutoff2_hz.unwrap());
            let (bw, w0sq) = (w2 - w1, w1 * w2);
            let upper = if spec.kind == FilterKind::Bandpass {
                (omega * bw + (omega * omega * bw * bw + 4.0 * w0sq).sqrt()) / 2.0
            } else {
                w0sq / ((-bw + (bw * bw + 4.0 * omega * omega * w0sq).sqrt()) / (2.0 * omega))
            };
            vec![upper, w0sq / upper]
        }
    };
    ws.into_iter().map(unwarp).collect()
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn criterion_1() -> Outcome {
    let fs = 44100.0;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let specs: Vec<FilterDesignSpec> = (0..200).map(|_| sample_filter_design(&mut rng)).collect();
    let failures: Vec<String> = specs
        .par_iter()
        .filter_map(|spec| {
            let sos = spec.design(fs).ok()?;
            let mut problems = Vec::new();
            if !sos.is_stable() {
                problems.push(format!("pole radius {}", sos.max_pole_magnitude()));
            }
            let response = |omegas: &[f64]| -> Vec<f64> {
                let freqs: Vec<f64> = omegas.iter().flat_map(|&o| digital_freqs(spec, o, fs)).collect();
                frequency_response(&sos, &freqs, fs)
            };
            let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
            let pass_grid: Vec<f64> = (0..=2000).map(|i| (i as f64 / 2000.0).max(1e-6)).collect();
            let pass = response(&pass_grid);
            let edge = response(&[1.0]);
            match spec.family {
                FilterFamily::Butterworth | FilterFamily::Bessel => {
                    if (min(&edge) + 3.0103).abs() > 0.5 || max(&pass) > 0.5 {
                        problems.push(format!("edge {:.3} dB, passband max {:.3} dB", min(&edge), max(&pass)));
                    }
                }
                FilterFamily::Chebyshev1 | FilterFamily::Elliptic => {
                    let r = spec.passband_ripple_db.unwrap();
                    let measured = max(&pass) - min(&pass);
                    if (measured - r).abs() > 0.5 || max(&pass) > 0.5 {
                        problems.push(format!("ripple {measured:.3} dB, designed {r:.3} dB"));
                    }
                }
                FilterFamily::Chebyshev2 => {
                    if max(&pass) > 0.5 {
                        problems.push(format!("passband max {:.3} dB", max(&pass)));
                    }
                }
            }
            if let Some(edge) = spec.prototype_stopband_edge() {
                let a = spec.stopband_atten_db.unwrap();
                let stop = response(&log_grid(edge, edge * 1e4, 4000));
                let measured = -max(&stop);
                if (measured - a).abs() > 0.5 {
                    problems.push(format!("attenuation {measured:.3} dB, designed {a:.3} dB"));
                }
            }
            (!problems.is_empty()).then(|| format!("{:?}: {}", spec, problems.join("; ")))
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    check(
        failures.is_empty() && secs < 30.0,
        format!("200 designs, {} off-spec, {secs:.1} s{}", failures.len(), failures.first().map(|f| format!(", first: {f}")).unwrap_or_default()),
    )
}

fn criterion_2() -> Outcome {
    let fs = 44100.0;
    let sweep = log_grid(20.0, 20000.0, 512);
    let flat = frequency_response(&graphic_eq(&GraphicEqSettings::flat(), fs).unwrap(), &sweep, fs);
    let flat_dev = flat.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut band_err = 0.0_f64;
    for (i, &fc) in GRAPHIC_EQ_CENTERS.iter().enumerate().filter(|(_, &fc)| fc < fs / 2.0) {
        let mut settings = GraphicEqSettings::flat();
        settings.gains_db[i] = 6.0;
        let at = frequency_response(&graphic_eq(&settings, fs).unwrap(), &[fc], fs)[0];
        band_err = band_err.max((at - 6.0).abs());
    }
    check(
        flat_dev < 0.01 && band_err <= 0.05,
        format!("flat deviation {flat_dev:.2e} dB, single-band +6 dB error {band_err:.2e} dB"),
    )
}

fn criterion_3() -> Outcome {
    let rate = 44100;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let p = CompressorParams {
            threshold_db: rng.random_range(COMP_THRESHOLD_RANGE_DB.0..COMP_THRESHOLD_RANGE_DB.1),
            ratio: rng.random_range(COMP_RATIO_RANGE.0..COMP_RATIO_RANGE.1),
            attack_ms: rng.random_range(COMP_ATTACK_RANGE_MS.0..COMP_ATTACK_RANGE_MS.1),
            release_ms: rng.random_range(RELEASE_RANGE_MS.0..RELEASE_RANGE_MS.1),
        };
        let over = rng.random_range(3.0..15.0);
        let x = sine(1000.0, 10f64.powf((p.threshold_db + over) / 20.0), rate, 2 * rate as usize);
        let y = compress(&x, &p).unwrap();
        let tail = rate as usize * 3 / 2;
        let input_db = db(peak_of(&x.channel(0)[tail..]));
        let output_db = db(peak_of(&y.channel(0)[tail..]));
        worst = worst.max((output_db - p.static_curve(input_db)).abs());
    }
    check(worst <= 0.1, format!("50 settings, worst steady-state error {worst:.4} dB"))
}

fn criterion_4() -> Outcome {
    let rate = 44100;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..50 {
        let p = LimiterParams {
            threshold_db: rng.random_range(LIMIT_THRESHOLD_RANGE_DB.0..LIMIT_THRESHOLD_RANGE_DB.1),
            release_ms: rng.random_range(RELEASE_RANGE_MS.0..RELEASE_RANGE_MS.1),
        };
        let amp = 10f64.powf(rng.random_range(p.threshold_db..=0.0) / 20.0);
        let x = sine(rng.random_range(50.0..5000.0), amp, rate, rate as usize);
        let y = limit(&x, &p).unwrap();
        let after = rate as usize / 100;
        worst = worst.max(db(peak_of(&y.channel(0)[after..])) - p.threshold_db);
    }
    check(worst < 0.1, format!("50 settings, largest overshoot {worst:.2e} dB"))
}

fn criterion_5() -> Outcome {
    let rate = 44100;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = noise(&mut rng, 0.5, rate, 4096);
    let dry = ReverbParams { room_size: 0.7, damping: 0.4, wet_level: 0.0, width: 1.0 };
    let passthrough = freeverb(&x, &dry).unwrap() == x;

    let len = 20 * rate as usize;
    let mut impulse = vec![0.0; len];
    impulse[0] = 1.0;
    let impulse = AudioBuffer::mono(rate, impulse).unwrap();
    let mut decay_times = Vec::new();
    let mut finite = true;
    for room_size in [0.1, 0.5, 1.0] {
        let p = ReverbParams { room_size, damping: 0.5, wet_level: 0.3, width: 1.0 };
        let y = freeverb(&impulse, &p).unwrap();
        let tail = &y.channel(0)[1..];
        let energy: Vec<f64> = tail.iter().map(|v| v * v).collect();
        let total: f64 = energy.iter().sum();
        let last_second: f64 = energy[energy.len() - rate as usize..].iter().sum();
        finite &= tail.iter().all(|v| v.is_finite()) && total.is_finite() && total > 0.0 && last_second < total * 1e-3;
        // time at which the backward-integrated energy falls 30 dB
        let mut remaining = total;
        let mut t30 = f64::NAN;
        for (i, e) in energy.iter().enumerate() {
            remaining -= e;
            if remaining <= total * 1e-3 {
                t30 = i as f64 / rate as f64;
                break;
            }
        }
        decay_times.push(t30);
    }
    let increasing = decay_times.windows(2).all(|w| w[0] < w[1]);
    check(
        passthrough && increasing && finite,
        format!(
            "wet=0 passthrough {passthrough}, 30 dB decay {:.3}/{:.3}/{:.3} s, finite {finite}",
            decay_times[0], decay_times[1], decay_times[2]
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut problems = Vec::new();
    let n = 8000;
    let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e: Vec<f64> = r.iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
    let base = si_sdr(&e, &r).unwrap();
    for a in [0.1, 10.0, -2.0] {
        let scaled: Vec<f64> = e.iter().map(|v| a * v).collect();
        let d = (si_sdr(&scaled, &r).unwrap() - base).abs();
        if d > 1e-9 {
            problems.push(format!("scale {a}: {d:e}"));
        }
    }
    // noise orthogonal to the reference with equal energy
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rr: f64 = r.iter().map(|v| v * v).sum();
    let proj = raw.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() / rr;
    let ortho: Vec<f64> = raw.iter().zip(&r).map(|(a, b)| a - proj * b).collect();
    let scale = (rr / ortho.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let est: Vec<f64> = r.iter().zip(&ortho).map(|(a, b)| a + scale * b).collect();
    let orth = si_sdr(&est, &r).unwrap();
    if orth.abs() > 1e-9 {
        problems.push(format!("orthogonal noise gave {orth:e} dB"));
    }

    let rate = 16000;
    let mel = MelSpecConfig { n_mels: 64, fft_size: 1024, hop: 256, ..MelSpecConfig::default() };
    let clean = synth_stem(1, 2, rate, 2.0);
    let clean_mel = mel_power_spec(&clean, &mel).unwrap();
    let self_ssim = ssim_log_mel(&clean_mel, &clean_mel).unwrap();
    if (self_ssim - 1.0).abs() > 1e-12 {
        problems.push(format!("SSIM(x, x) = {self_ssim}"));
    }
    let hiss = noise(&mut rng, 1.0, rate, clean.len());
    let mut last = (f64::INFINITY, f64::INFINITY);
    for level in [0.003, 0.01, 0.03, 0.1, 0.3, 1.0] {
        let noisy = clean.add(&msr_core::audio::apply_gain(&hiss, level).unwrap()).unwrap();
        let sm = ssim_log_mel(&mel_power_spec(&noisy, &mel).unwrap(), &clean_mel).unwrap();
        let sd = si_sdr(noisy.channel(0), clean.channel(0)).unwrap();
        if !(sm < last.0 && sd < last.1) {
            problems.push(format!("not monotone at noise level {level}"));
        }
        last = (sm, sd);
    }

    // aggregation over a constructed corpus: remainders dropped, silent
    // reference segments skipped
    let rate = 8000;
    let seg = (SEGMENT_SECONDS * rate as f64) as usize;
    let corpus_mel = MelSpecConfig { n_mels: 32, fft_size: 512, hop: 256, ..MelSpecConfig::default() };
    let mut pairs = Vec::new();
    for (k, seconds) in [25.0, 10.0, 31.0].into_iter().enumerate() {
        let mut reference = synth_stem(k, 0, rate, seconds).into_data().remove(0);
        if k == 2 {
            reference[seg..2 * seg].iter_mut().for_each(|v| *v = 0.0);
        }
        let reference = AudioBuffer::mono(rate, reference).unwrap();
        let estimate = reference.add(&noise(&mut rng, 0.05 * (k + 1) as f64, rate, reference.len())).unwrap();
        pairs.push((estimate, reference));
    }
    let summary = evaluate_pairs(&pairs, &corpus_mel).unwrap();
    let mut expected_sdr = Vec::new();
    let mut expected_ssim = Vec::new();
    for (est, reference) in &pairs {
        for sidx in 0..est.len() / seg {
            let e = est.slice(sidx * seg, seg).unwrap();
            let r = reference.slice(sidx * seg, seg).unwrap();
            if r.is_silent() {
                continue;
            }
            expected_sdr.push(si_sdr(e.channel(0), r.channel(0)).unwrap());
            expected_ssim.push(
                ssim_log_mel(&mel_power_spec(&e, &corpus_mel).unwrap(), &mel_power_spec(&r, &corpus_mel).unwrap())
                    .unwrap(),
            );
        }
    }
    for (report, expected) in [(&summary.si_sdr, &expected_sdr), (&summary.ssim_mel, &expected_ssim)] {
        let n = expected.len() as f64;
        let mean = pairwise_sum(expected) / n;
        let sd = (expected.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let ci = CI95_Z * sd / n.sqrt();
        if report.values != *expected || report.n != expected.len() || report.mean != mean || (report.ci95 - ci).abs() > 1e-12 {
            problems.push(format!("{} aggregation differs", report.metric));
        }
    }
    if summary.si_sdr.skipped_segments != 1 || expected_sdr.len() != 5 {
        problems.push(format!("expected 5 scored and 1 skipped segment, got {} / {}", summary.si_sdr.n, summary.si_sdr.skipped_segments));
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("scale invariance, orthogonal 0 dB ({orth:.1e}), SSIM(x,x)=1, monotone under noise, 5-segment corpus aggregated exactly")
        } else {
            problems.join("; ")
        },
    )
}

/// Kolmogorov-Smirnov statistic against U(lo, hi).
fn ks_uniform(mut values: Vec<f64>, (lo, hi): (f64, f64)) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[derive(Default)]
struct Draws {
    counts: Vec<(&'static str, usize)>,
    params: Vec<(&'static str, (f64, f64), Vec<f64>)>,
}

impl Draws {
    fn count(&mut self, name: &'static str, hit: bool) {
        match self.counts.iter_mut().find(|c| c.0 == name) {
            Some(c) => c.1 += hit as usize,
            None => self.counts.push((name, hit as usize)),
        }
    }

    fn param(&mut self, name: &'static str, range: (f64, f64), v: f64) {
        match self.params.iter_mut().find(|p| p.0 == name) {
            Some(p) => p.2.push(v),
            None => self.params.push((name, range, vec![v])),
        }
    }
}

fn criterion_7() -> Outcome {
    const N: u64 = 100_000;
    let config = ChainConfig { codec_enabled: false, ..ChainConfig::default() };
    // same draw order as example generation: target chain, background
    // chain, SNR, mixture chain
    let draws: Vec<_> = (0..N)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let stem_chain = sample_stem_chain(&mut rng, &config);
            let _background = sample_stem_chain(&mut rng, &config);
            let snr_db = sample_snr(&mut rng, &config);
            let mixture = sample_mixture_chain(&mut rng, &config, false).unwrap();
            (stem_chain, snr_db, mixture)
        })
        .collect();

    let mut d = Draws::default();
    let mut snr_in_range = true;
    for (stem_chain, snr_db, mixture) in &draws {
        let has = |chain: &[Effect], name: &str| chain.iter().any(|e| e.name() == name);
        let eq = stem_chain.iter().any(|e| matches!(e, Effect::GraphicEq { .. } | Effect::ParametricEq { .. } | Effect::Filter { .. }));
        d.count("equalizer", eq);
        d.count("resample", has(stem_chain, "resample"));
        d.count("compressor", has(stem_chain, "compressor"));
        d.count("distortion", has(stem_chain, "distortion"));
        d.count("reverb", has(stem_chain, "reverb"));
        d.count("limiter", has(&mixture.effects, "limiter"));
        d.count("mixture_resample", has(&mixture.effects, "resample"));
        d.count("codec", mixture.effects.iter().any(|e| matches!(e, Effect::CodecSkipped { .. } | Effect::Codec { .. })));
        d.count("noise", mixture.noise.is_some());
        snr_in_range &= (-5.0..=20.0).contains(snr_db);
        d.param("snr_db", config.snr_range_db, *snr_db);
        if let Some(n) = mixture.noise {
            d.param("noise_sigma", config.noise_sigma_range, n.sigma);
        }
        for effect in stem_chain.iter().chain(&mixture.effects) {
            match effect {
                Effect::Gain { gain } => d.param("gain", config.gain_range, *gain),
                Effect::GraphicEq { settings } => {
                    settings.gains_db.iter().for_each(|g| d.param("graphic_gain_db", EQ_GAIN_RANGE_DB, *g))
                }
                Effect::ParametricEq { bands } => {
                    for b in bands {
                        let (lo, hi) = b.band_type.frequency_range();
                        d.param("parametric_fc (normalised)", (0.0, 1.0), (b.fc - lo) / (hi - lo));
                        d.param("parametric_q", Q_RANGE, b.q);
                        if b.band_type.uses_gain() {
                            d.param("parametric_gain_db", EQ_GAIN_RANGE_DB, b.gain_db);
                        }
                    }
                }
                Effect::Filter { design } => {
                    let (lo, hi) = design_frequency_range(design.kind);
                    let f = match design.cutoff2_hz {
                        Some(f2) => (design.cutoff_hz * f2).sqrt(),
                        None => design.cutoff_hz,
                    };
                    d.param("filter_frequency (normalised)", (0.0, 1.0), (f - lo) / (hi - lo));
                    if let Some(r) = design.passband_ripple_db {
                        d.param("filter_ripple_db", RIPPLE_RANGE_DB, r);
                    }
                    if let Some(a) = design.stopband_atten_db {
                        d.param("filter_attenuation_db", ATTENUATION_RANGE_DB, a);
                    }
                }
                Effect::Compressor(p) => {
                    d.param("compressor_threshold_db", COMP_THRESHOLD_RANGE_DB, p.threshold_db);
                    d.param("compressor_ratio", COMP_RATIO_RANGE, p.ratio);
                    d.param("compressor_attack_ms", COMP_ATTACK_RANGE_MS, p.attack_ms);
                    d.param("compressor_release_ms", RELEASE_RANGE_MS, p.release_ms);
                }
                Effect::Distortion(p) => d.param("drive_db", DRIVE_RANGE_DB, p.drive_db),
                Effect::Reverb(p) => {
                    d.param("room_size", ROOM_SIZE_RANGE, p.room_size);
                    d.param("damping", DAMPING_RANGE, p.damping);
                    d.param("wet_level", WET_LEVEL_RANGE, p.wet_level);
                    d.param("width", WIDTH_RANGE, p.width);
                }
                Effect::Limiter(p) => {
                    d.param("limiter_threshold_db", LIMIT_THRESHOLD_RANGE_DB, p.threshold_db);
                    d.param("limiter_release_ms", RELEASE_RANGE_MS, p.release_ms);
                }
                Effect::CodecSkipped { vbr_quality } | Effect::Codec { vbr_quality } => {
                    d.param("vbr_quality", config.vbr_quality, *vbr_quality)
                }
                Effect::Resample { .. } => {}
            }
        }
    }

    let mut problems = Vec::new();
    let sigma = (N as f64 * 0.25).sqrt();
    for (name, k) in &d.counts {
        if (*k as f64 - N as f64 / 2.0).abs() > 3.0 * sigma {
            problems.push(format!("{name} applied {k} times"));
        }
    }
    for (name, range, values) in &d.params {
        let n = values.len();
        let stat = ks_uniform(values.clone(), *range);
        if stat > 1.6276 / (n as f64).sqrt() {
            problems.push(format!("{name} KS D={stat:.4} over {n} draws"));
        }
    }
    if !snr_in_range {
        problems.push("SNR outside [-5, 20] dB".into());
    }
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{N} seeded draws: {} effect rates within 3 sigma, {} parameters pass KS at 0.01, SNR in range", d.counts.len(), d.params.len())
        } else {
            problems.join("; ")
        },
    )
}

fn criterion_8() -> Outcome {
    let data = tempfile::tempdir().unwrap();
    let manifest = write_dataset(data.path(), 4, 16000, 1.5);
    let run = |name: &str, workers: &str| {
        let out = data.path().join(name);
        let code = msr(&[
            "degrade", "--manifest", s(&manifest), "--audio-root", s(data.path()), "--label", "Voc", "--n", "12",
            "--seed", "2024", "--no-codec", "--segment-seconds", "1", "--workers", workers, "--out", s(&out),
        ]);
        (code, tree_bytes(&out))
    };
    let (c1, first) = run("a", "1");
    let (c2, second) = run("b", "1");
    let (c3, parallel) = run("c", "4");
    let files = first.len();
    check(
        c1 == 0 && c2 == 0 && c3 == 0 && files == 1 + 12 * 3 && first == second && first == parallel,
        format!("{files} files; repeat identical {}, workers 1 vs 4 identical {}", first == second, first == parallel),
    )
}

fn criterion_9() -> Outcome {
    let rate = 22050;
    let config = ChainConfig { codec_enabled: false, ..ChainConfig::default() };
    let mismatches: usize = (0..50usize)
        .into_par_iter()
        .map(|i| {
            let targets = vec![synth_stem(i, 0, rate, 0.5), synth_stem(i, 1, rate, 0.5)];
            let backgrounds = vec![synth_stem(i, 2, rate, 0.5), synth_stem(i, 3, rate, 0.45)];
            let ex = build_training_example(&targets, &backgrounds, 9000 + i as u64, &config, false).unwrap();
            let record = msr_core::degrade::DegradationRecord::from_json(&ex.record.to_json()).unwrap();
            let (mixture, target) = replay(&record, &targets, &backgrounds).unwrap();
            (mixture != ex.mixture || target != ex.target) as usize
        })
        .sum();
    check(mismatches == 0, format!("50 examples replayed from serialised records, {mismatches} mismatches"))
}

fn brute_force_active_seconds(x: &[f64], rate: usize) -> u64 {
    let peak = peak_of(x);
    if peak == 0.0 {
        return 0;
    }
    x.chunks_exact(rate)
        .filter(|c| {
            let ms = c.iter().map(|v| (v / peak).powi(2)).sum::<f64>() / rate as f64;
            10.0 * ms.log10() > -40.0
        })
        .count() as u64
}

fn criterion_10() -> Outcome {
    let mut problems = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let dir = tempfile::tempdir().unwrap();
    let rate = 8000;
    for f in 0..20 {
        let seconds = rng.random_range(1..8);
        let mut x = Vec::new();
        for _ in 0..seconds {
            let amp = if f == 0 { 0.0 } else { 10f64.powf(rng.random_range(-70.0..0.0) / 20.0) };
            let freq = rng.random_range(50.0..3000.0);
            x.extend((0..rate).map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64).sin()));
        }
        x.extend((0..rng.random_range(0..rate)).map(|_| rng.random_range(-1.0..1.0)));
        let path = dir.path().join(format!("{f}.wav"));
        write_wav(&AudioBuffer::mono(rate as u32, x).unwrap(), &path, BitDepth::Float32).unwrap();
        let buffer = read_wav(&path).unwrap();
        let (got, want) = (active_playing_time(&buffer), brute_force_active_seconds(buffer.channel(0), rate));
        if got != want {
            problems.push(format!("file {f}: {got} s vs {want} s"));
        }
    }

    let tax = Taxonomy::new(TaxonomyMode::ListFaithful);
    let codes: Vec<&str> = tax.leaves().iter().map(|l| l.code).collect();
    let songs: Vec<SongManifest> = (0..60)
        .map(|i| SongManifest {
            id: format!("s{i}"),
            stems: codes
                .iter()
                .filter(|_| rng.random_bool(0.3))
                .map(|c| StemEntry { path: format!("{c}.wav"), label: c.to_string(), notes: None })
                .collect(),
        })
        .collect();
    let m = cooccurrence(&songs);
    let mut present = BTreeSet::new();
    for song in &songs {
        for stem in &song.stems {
            present.insert(stem.label.as_str());
        }
    }
    if m.labels.iter().map(String::as_str).collect::<BTreeSet<_>>() != present {
        problems.push("co-occurrence label set differs".into());
    }
    for a in &present {
        for b in &present {
            let (mut with_a, mut with_both) = (0usize, 0usize);
            for song in &songs {
                let has_a = song.stems.iter().any(|s| s.label == *a);
                let has_b = song.stems.iter().any(|s| s.label == *b);
                with_a += has_a as usize;
                with_both += (has_a && has_b) as usize;
            }
            if m.get(a, b) != Some(with_both as f64 / with_a as f64) {
                problems.push(format!("P({b}|{a}) differs"));
            }
        }
    }

    let target = tax.target("EG").unwrap();
    let mut sizes = Vec::new();
    for n in [6usize, 57, 100, 200] {
        let songs: Vec<SongManifest> = (0..n)
            .map(|i| SongManifest {
                id: format!("s{i}"),
                stems: vec![StemEntry { path: "g.wav".into(), label: "EG".into(), notes: None }],
            })
            .collect();
        let split = make_split(&songs, &target, 7).unwrap();
        let want = (10usize.max(n.div_ceil(10))).min(n);
        if split.test.len() != want || test_size(n) != want || split.train.len() + split.test.len() != n {
            problems.push(format!("N={n}: test {}", split.test.len()));
        }
        sizes.push(format!("{n}->{}", split.test.len()));
    }

    let data = tempfile::tempdir().unwrap();
    let manifest = write_dataset(data.path(), 12, 8000, 0.25);
    let out = data.path().join("bench");
    let code = msr(&[
        "benchgen", "--manifest", s(&manifest), "--audio-root", s(data.path()), "--label", "LV", "--seed", "5",
        "--no-codec", "--out", s(&out),
    ]);
    let variants = if code == 0 {
        let index: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("index.json")).unwrap()).unwrap();
        let listed = index["variants"].as_array().map(Vec::len).unwrap_or(0);
        let dirs = std::fs::read_dir(out.join("variants")).unwrap().count();
        if listed != 1000 || dirs != 1000 || index["variant_count"] != 1000 {
            problems.push(format!("benchmark has {listed} indexed variants, {dirs} directories"));
        }
        listed
    } else {
        problems.push(format!("benchgen exited {code}"));
        0
    };
    check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("20 files match RMS oracle, {} co-occurrence entries match, split sizes {}, {variants} benchmark variants", present.len().pow(2), sizes.join(" "))
        } else {
            problems.join("; ")
        },
    )
}

fn criterion_11() -> Outcome {
    let Some(encoder) = resolve_encoder() else {
        return Outcome::Skip("no MP3 encoder resolvable from MSR_LAME_PATH or PATH".into());
    };
    let rate = 44100;
    let tone = sine(1000.0, 0.5, rate, 2 * rate as usize + 123);
    let coded = match encode_decode_mp3(&tone, &CodecParams { vbr_quality: 1.0 }) {
        Ok(b) => b,
        Err(e) => return Outcome::Fail(format!("{}: {e}", encoder.display())),
    };
    let sdr = si_sdr(coded.channel(0), tone.channel(0)).unwrap();

    let hiss = noise(&mut ChaCha8Rng::seed_from_u64(11), 0.5, rate, 2 * rate as usize + 77);
    let coded_hiss = match encode_decode_mp3(&hiss, &CodecParams { vbr_quality: 9.0 }) {
        Ok(b) => b,
        Err(e) => return Outcome::Fail(format!("{}: {e}", encoder.display())),
    };
    let config = MelSpecConfig { fft_size: 4096, hop: 1024, ..MelSpecConfig::default() };
    let high_energy = |b: &AudioBuffer| {
        let p = msr_core::metrics::stft_power(b, &config).unwrap();
        let first = (16000.0 / rate as f64 * config.fft_size as f64).ceil() as usize;
        (first..p.rows).map(|k| p.row(k).iter().sum::<f64>()).sum::<f64>()
    };
    let attenuation = 10.0 * (high_energy(&hiss) / high_energy(&coded_hiss)).log10();
    let lengths = coded.len() == tone.len() && coded_hiss.len() == hiss.len();
    check(
        sdr > 20.0 && attenuation >= 20.0 && lengths,
        format!("sine SI-SDR {sdr:.1} dB, >16 kHz attenuation {attenuation:.1} dB, lengths preserved {lengths}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("filter design oracle", criterion_1),
        ("graphic EQ identity", criterion_2),
        ("compressor static law", criterion_3),
        ("limiter ceiling", criterion_4),
        ("FreeVerb structure", criterion_5),
        ("metric properties", criterion_6),
        ("degradation sampler statistics", criterion_7),
        ("end-to-end determinism", criterion_8),
        ("replay oracle", criterion_9),
        ("dataset rules", criterion_10),
        ("codec bridge", criterion_11),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Outcome::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let (status, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skip(d) => ("SKIP", d),
        };
        println!("{status} criterion {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
