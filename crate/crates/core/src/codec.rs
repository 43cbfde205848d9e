//! MP3 round trip through an external LAME-compatible encoder.
//!
//! The encoder binary comes from `MSR_LAME_PATH` (default `lame` on `PATH`).
//! Encoding runs in VBR mode (`-V <quality>`), decoding through the same
//! binary's `--decode` mode. The decoded signal is realigned to the input by
//! cross-correlation and trimmed or zero-padded to the input length.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::Command;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{read_wav, resample, write_wav, AudioBuffer, AudioError, BitDepth};

pub const ENCODER_ENV: &str = "MSR_LAME_PATH";
pub const DEFAULT_ENCODER: &str = "lame";
pub const VBR_QUALITY_RANGE: (f64, f64) = (1.0, 9.0);
/// Largest codec delay searched during alignment, in samples.
pub const MAX_ALIGNMENT_LAG: usize = 2000;
pub const MP3_RATES: [u32; 3] = [32000, 44100, 48000];
const FALLBACK_RATE: u32 = 44100;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("encoder binary {path:?} not found: {diagnostics}")]
    EncoderMissing { path: PathBuf, diagnostics: String },
    #[error("encoder exited with {status}: {stderr}")]
    EncoderFailed { status: String, stderr: String },
    #[error("decoding failed: {diagnostics}")]
    DecodeFailed { diagnostics: String },
    #[error("vbr quality {0} outside [1, 9]")]
    InvalidQuality(f64),
    #[error("temporary file error: {0}")]
    TempFile(#[from] std::io::Error),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecParams {
    /// LAME `-V` setting; lower is higher quality.
    pub vbr_quality: f64,
}

impl CodecParams {
    pub fn validate(&self) -> Result<(), CodecError> {
        let (lo, hi) = VBR_QUALITY_RANGE;
        if self.vbr_quality >= lo && self.vbr_quality <= hi {
            Ok(())
        } else {
            Err(CodecError::InvalidQuality(self.vbr_quality))
        }
    }

    /// The `-V` argument, rounded to the three decimals LAME parses.
    pub fn vbr_argument(&self) -> String {
        let s = format!("{:.3}", self.vbr_quality);
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Encoder path from the environment, or the default name.
pub fn encoder_path() -> PathBuf {
    std::env::var_os(ENCODER_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_ENCODER))
}

/// Resolves the encoder to an existing file, searching `PATH` for bare names.
pub fn resolve_encoder() -> Option<PathBuf> {
    resolve_in_path(&encoder_path(), std::env::var_os("PATH"))
}

fn resolve_in_path(candidate: &Path, path_var: Option<OsString>) -> Option<PathBuf> {
    if candidate.components().count() > 1 || candidate.is_absolute() {
        return candidate.is_file().then(|| candidate.to_path_buf());
    }
    std::env::split_paths(&path_var?).map(|dir| dir.join(candidate)).find(|p| p.is_file())
}

fn run(encoder: &Path, args: &[&std::ffi::OsStr]) -> Result<std::process::Output, CodecError> {
    Command::new(encoder).args(args).output().map_err(|e| CodecError::EncoderMissing {
        path: encoder.to_path_buf(),
        diagnostics: e.to_string(),
    })
}

/// First line of the configured encoder's `--version` output.
pub fn encoder_version() -> Result<String, CodecError> {
    encoder_version_of(&encoder_path())
}

pub fn encoder_version_of(encoder: &Path) -> Result<String, CodecError> {
    let out = run(encoder, &["--version".as_ref()])?;
    if !out.status.success() {
        return Err(CodecError::EncoderFailed {
            status: out.status.to_string(),
            stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
        });
    }
    let text = String::from_utf8_lossy(&out.stdout);
    Ok(text.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim().to_string())
}

/// Encodes to MP3 and decodes back. Rates other than 32/44.1/48 kHz pass
/// through 44.1 kHz. Output has the input's rate, channel count and length.
pub fn encode_decode_mp3(buffer: &AudioBuffer, params: &CodecParams) -> Result<AudioBuffer, CodecError> {
    encode_decode_mp3_with(&encoder_path(), buffer, params)
}

/// [`encode_decode_mp3`] with an explicit encoder binary.
pub fn encode_decode_mp3_with(
    encoder: &Path,
    buffer: &AudioBuffer,
    params: &CodecParams,
) -> Result<AudioBuffer, CodecError> {
    params.validate()?;
    let rate = buffer.sample_rate();
    let codec_rate = if MP3_RATES.contains(&rate) { rate } else { FALLBACK_RATE };
    let staged = resample(buffer, codec_rate)?;
    // 16-bit PCM is the one input format every LAME build reads; scale down
    // anything that would clip and undo the scale afterwards.
    let headroom = staged.peak().max(1.0);
    let staged = staged.map_channels(|x| x.iter().map(|v| v / headroom).collect());

    let dir = tempfile::Builder::new().prefix("msr-codec").tempdir()?;
    let wav_in = dir.path().join("in.wav");
    let mp3 = dir.path().join("out.mp3");
    let wav_out = dir.path().join("decoded.wav");
    write_wav(&staged, &wav_in, BitDepth::Pcm16)?;

    let quality = params.vbr_argument();
    let enc = run(encoder, &["--quiet".as_ref(), "-V".as_ref(), quality.as_ref(), wav_in.as_os_str(), mp3.as_os_str()])?;
    if !enc.status.success() {
        return Err(CodecError::EncoderFailed {
            status: enc.status.to_string(),
            stderr: String::from_utf8_lossy(&enc.stderr).into_owned(),
        });
    }
    let dec = run(encoder, &["--quiet".as_ref(), "--decode".as_ref(), mp3.as_os_str(), wav_out.as_os_str()])?;
    if !dec.status.success() {
        return Err(CodecError::DecodeFailed {
            diagnostics: format!("{}: {}", dec.status, String::from_utf8_lossy(&dec.stderr)),
        });
    }
    let decoded = read_wav(&wav_out).map_err(|e| CodecError::DecodeFailed { diagnostics: e.to_string() })?;
    if decoded.is_empty() {
        return Err(CodecError::DecodeFailed { diagnostics: "decoder produced no samples".into() });
    }
    let decoded = match (decoded.channels(), buffer.channels()) {
        (a, b) if a == b => decoded,
        (1, 2) => decoded.upmix(2)?,
        _ => decoded.to_mono(),
    };
    let decoded = resample(&decoded, codec_rate)?.map_channels(|x| x.iter().map(|v| v * headroom).collect());
    let aligned = align_to(&decoded, &staged);
    Ok(resample(&aligned, rate)?.with_len(buffer.len()))
}

/// Shifts `signal` by the lag in `±MAX_ALIGNMENT_LAG` that maximises its
/// cross-correlation with `reference`, then trims or pads to the reference
/// length.
pub fn align_to(signal: &AudioBuffer, reference: &AudioBuffer) -> AudioBuffer {
    let lag = best_lag(signal.to_mono().channel(0), reference.to_mono().channel(0), MAX_ALIGNMENT_LAG);
    let n = reference.len();
    signal.map_channels(|x| {
        (0..n)
            .map(|i| {
                let j = i as isize + lag;
                if j >= 0 && (j as usize) < x.len() {
                    x[j as usize]
                } else {
                    0.0
                }
            })
            .collect()
    })
}

/// Lag `l` maximising `Σ signal[n + l]·reference[n]`; ties go to the
/// smallest `|l|`, and an all-zero correlation gives 0.
pub fn best_lag(signal: &[f64], reference: &[f64], max_lag: usize) -> isize {
    if signal.is_empty() || reference.is_empty() {
        return 0;
    }
    let size = (signal.len() + reference.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let spectrum = |x: &[f64]| {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        buf.resize(size, Complex64::new(0.0, 0.0));
        fwd.process(&mut buf);
        buf
    };
    let s = spectrum(signal);
    let r = spectrum(reference);
    let mut corr: Vec<Complex64> = s.iter().zip(&r).map(|(a, b)| a * b.conj()).collect();
    inv.process(&mut corr);
    let at = |lag: isize| corr[lag.rem_euclid(size as isize) as usize].re;
    let max_lag = max_lag.min(size / 2 - 1) as isize;
    let mut best = (0isize, at(0));
    for l in 1..=max_lag {
        for lag in [l, -l] {
            let v = at(lag);
            if v > best.1 + 1e-9 * best.1.abs().max(f64::MIN_POSITIVE) {
                best = (lag, v);
            }
        }
    }
    if best.1 <= 0.0 {
        0
    } else {
        best.0
    }
}
