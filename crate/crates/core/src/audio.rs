//! Planar multichannel audio, WAV I/O, gain, level measurement, resampling
//! and SNR-controlled mixing.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Level reported for an all-zero window.
pub const SILENCE_DB: f64 = -1000.0;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("audio file not found: {0}")]
    MissingFile(String),
    #[error("malformed WAV header in {path}: {reason}")]
    MalformedHeader { path: String, reason: String },
    #[error("unsupported WAV encoding in {path}: {reason}")]
    UnsupportedEncoding { path: String, reason: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("buffer contains non-finite sample at channel {channel}, index {index}")]
    NonFinite { channel: usize, index: usize },
    #[error("invalid buffer: {0}")]
    InvalidBuffer(String),
    #[error("invalid gain {0}: must be finite and non-zero")]
    InvalidGain(f64),
    #[error("empty measurement window")]
    EmptyWindow,
    #[error("window [{start}, {end}) exceeds buffer length {len}")]
    WindowOutOfBounds { start: usize, end: usize, len: usize },
    #[error("buffer is silent")]
    Silent,
    #[error("buffers are incompatible: {0}")]
    Mismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Planar audio: one `Vec` per channel, all of equal length.
///
/// Samples are stored as `f64` so that filter cascades and gain round trips
/// stay exact; WAV files are the 32-bit (or integer PCM) boundary.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioBuffer {
    sample_rate: u32,
    data: Vec<Vec<f64>>,
}

impl fmt::Debug for AudioBuffer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AudioBuffer")
            .field("sample_rate", &self.sample_rate)
            .field("channels", &self.data.len())
            .field("len", &self.len())
            .finish()
    }
}

impl AudioBuffer {
    pub fn new(sample_rate: u32, data: Vec<Vec<f64>>) -> Result<Self, AudioError> {
        if sample_rate == 0 {
            return Err(AudioError::InvalidBuffer("sample rate must be positive".into()));
        }
        if data.is_empty() || data.len() > 2 {
            return Err(AudioError::InvalidBuffer(format!(
                "expected 1 or 2 channels, got {}",
                data.len()
            )));
        }
        let len = data[0].len();
        if data.iter().any(|c| c.len() != len) {
            return Err(AudioError::InvalidBuffer("channel lengths differ".into()));
        }
        Ok(Self { sample_rate, data })
    }

    pub fn mono(sample_rate: u32, samples: Vec<f64>) -> Result<Self, AudioError> {
        Self::new(sample_rate, vec![samples])
    }

    pub fn silence(sample_rate: u32, channels: usize, len: usize) -> Result<Self, AudioError> {
        Self::new(sample_rate, vec![vec![0.0; len]; channels])
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> usize {
        self.data.len()
    }

    pub fn len(&self) -> usize {
        self.data[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_seconds(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    pub fn channel(&self, index: usize) -> &[f64] {
        &self.data[index]
    }

    pub fn data(&self) -> &[Vec<f64>] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Vec<f64>> {
        self.data
    }

    /// Applies `f` to every channel, keeping the sample rate.
    pub(crate) fn map_channels(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> AudioBuffer {
        AudioBuffer {
            sample_rate: self.sample_rate,
            data: self.data.iter().map(|c| f(c)).collect(),
        }
    }

    pub fn peak(&self) -> f64 {
        self.data
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0_f64, |m, &x| m.max(x.abs()))
    }

    pub fn is_silent(&self) -> bool {
        self.data.iter().all(|c| c.iter().all(|&x| x == 0.0))
    }

    /// Sub-range of samples `[start, start + len)` from every channel.
    pub fn slice(&self, start: usize, len: usize) -> Result<AudioBuffer, AudioError> {
        let end = start + len;
        if end > self.len() {
            return Err(AudioError::WindowOutOfBounds { start, end, len: self.len() });
        }
        Ok(AudioBuffer {
            sample_rate: self.sample_rate,
            data: self.data.iter().map(|c| c[start..end].to_vec()).collect(),
        })
    }

    /// Trims or zero-pads every channel to exactly `len` samples.
    pub fn with_len(&self, len: usize) -> AudioBuffer {
        self.map_channels(|c| {
            let mut v = c[..len.min(c.len())].to_vec();
            v.resize(len, 0.0);
            v
        })
    }

    /// Duplicates a mono buffer into `channels` channels. Buffers that already
    /// have that many channels are returned unchanged.
    pub fn upmix(&self, channels: usize) -> Result<AudioBuffer, AudioError> {
        if self.channels() == channels {
            return Ok(self.clone());
        }
        if self.channels() != 1 {
            return Err(AudioError::Mismatch(format!(
                "cannot upmix {} channels to {}",
                self.channels(),
                channels
            )));
        }
        AudioBuffer::new(self.sample_rate, vec![self.data[0].clone(); channels])
    }

    /// Channel average.
    pub fn to_mono(&self) -> AudioBuffer {
        if self.channels() == 1 {
            return self.clone();
        }
        let n = self.channels() as f64;
        let mixed = (0..self.len())
            .map(|i| self.data.iter().map(|c| c[i]).sum::<f64>() / n)
            .collect();
        AudioBuffer { sample_rate: self.sample_rate, data: vec![mixed] }
    }

    /// Sample-wise sum. Mono operands are up-mixed to the wider channel count.
    pub fn add(&self, other: &AudioBuffer) -> Result<AudioBuffer, AudioError> {
        if self.sample_rate != other.sample_rate || self.len() != other.len() {
            return Err(AudioError::Mismatch(format!(
                "cannot add {}Hz/{} samples to {}Hz/{} samples",
                other.sample_rate,
                other.len(),
                self.sample_rate,
                self.len()
            )));
        }
        let channels = self.channels().max(other.channels());
        let a = self.upmix(channels)?;
        let b = other.upmix(channels)?;
        Ok(AudioBuffer {
            sample_rate: self.sample_rate,
            data: a
                .data
                .iter()
                .zip(&b.data)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
                .collect(),
        })
    }

    /// Sum of a non-empty list of equal-length buffers.
    pub fn sum<'a>(buffers: impl IntoIterator<Item = &'a AudioBuffer>) -> Result<AudioBuffer, AudioError> {
        let mut iter = buffers.into_iter();
        let first = iter
            .next()
            .ok_or_else(|| AudioError::InvalidBuffer("cannot sum zero buffers".into()))?;
        iter.try_fold(first.clone(), |acc, b| acc.add(b))
    }

    fn check_finite(&self) -> Result<(), AudioError> {
        for (channel, c) in self.data.iter().enumerate() {
            if let Some(index) = c.iter().position(|x| !x.is_finite()) {
                return Err(AudioError::NonFinite { channel, index });
            }
        }
        Ok(())
    }
}

/// A level in dB relative to full scale. Silent windows map to [`SILENCE_DB`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LevelDb(pub f64);

impl LevelDb {
    pub const SILENCE: LevelDb = LevelDb(SILENCE_DB);

    pub fn from_power(mean_square: f64) -> LevelDb {
        if mean_square > 0.0 {
            LevelDb(10.0 * mean_square.log10())
        } else {
            LevelDb::SILENCE
        }
    }

    pub fn is_silence(self) -> bool {
        self.0 <= SILENCE_DB
    }
}

/// Bit depth for [`write_wav`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitDepth {
    Pcm16,
    Pcm24,
    Float32,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let path = path.as_ref();
    let name = path.display().to_string();
    if !path.exists() {
        return Err(AudioError::MissingFile(name));
    }
    let reader = hound::WavReader::open(path).map_err(|e| classify_hound(e, &name))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || channels > 2 {
        return Err(AudioError::UnsupportedEncoding {
            path: name,
            reason: format!("{channels} channels (only mono and stereo are supported)"),
        });
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| classify_hound(e, &name))?,
        (hound::SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = (1_i64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<Result<_, _>>()
                .map_err(|e| classify_hound(e, &name))?
        }
        (format, bits) => {
            return Err(AudioError::UnsupportedEncoding {
                path: name,
                reason: format!("{format:?} with {bits} bits per sample"),
            })
        }
    };
    let mut data = vec![Vec::with_capacity(interleaved.len() / channels); channels];
    for frame in interleaved.chunks_exact(channels) {
        for (c, &s) in frame.iter().enumerate() {
            data[c].push(s);
        }
    }
    AudioBuffer::new(spec.sample_rate, data)
}

fn classify_hound(err: hound::Error, path: &str) -> AudioError {
    match err {
        hound::Error::IoError(source) => AudioError::Io { path: path.to_string(), source },
        hound::Error::FormatError(reason) => AudioError::MalformedHeader {
            path: path.to_string(),
            reason: reason.to_string(),
        },
        hound::Error::Unsupported => AudioError::UnsupportedEncoding {
            path: path.to_string(),
            reason: "unsupported WAV feature".into(),
        },
        other => AudioError::MalformedHeader { path: path.to_string(), reason: other.to_string() },
    }
}

pub fn write_wav(buffer: &AudioBuffer, path: impl AsRef<Path>, bit_depth: BitDepth) -> Result<(), AudioError> {
    buffer.check_finite()?;
    let path = path.as_ref();
    let name = path.display().to_string();
    let (bits, format) = match bit_depth {
        BitDepth::Pcm16 => (16, hound::SampleFormat::Int),
        BitDepth::Pcm24 => (24, hound::SampleFormat::Int),
        BitDepth::Float32 => (32, hound::SampleFormat::Float),
    };
    let spec = hound::WavSpec {
        channels: buffer.channels() as u16,
        sample_rate: buffer.sample_rate,
        bits_per_sample: bits,
        sample_format: format,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| classify_hound(e, &name))?;
    for i in 0..buffer.len() {
        for c in &buffer.data {
            let s = c[i];
            let res = match bit_depth {
                BitDepth::Float32 => writer.write_sample(s as f32),
                BitDepth::Pcm16 | BitDepth::Pcm24 => {
                    let scale = (1_i64 << (bits - 1)) as f64;
                    let q = (s * scale).round().clamp(-scale, scale - 1.0) as i32;
                    writer.write_sample(q)
                }
            };
            res.map_err(|e| classify_hound(e, &name))?;
        }
    }
    writer.finalize().map_err(|e| classify_hound(e, &name))
}

pub fn apply_gain(buffer: &AudioBuffer, gain: f64) -> Result<AudioBuffer, AudioError> {
    if gain == 0.0 || !gain.is_finite() {
        return Err(AudioError::InvalidGain(gain));
    }
    Ok(buffer.map_channels(|c| c.iter().map(|x| x * gain).collect()))
}

/// RMS level of `[start_s, start_s + len_s)`, channels averaged in the power
/// domain.
pub fn rms_db(buffer: &AudioBuffer, start_s: f64, len_s: f64) -> Result<LevelDb, AudioError> {
    let rate = buffer.sample_rate as f64;
    let start = (start_s * rate).round();
    let len = (len_s * rate).round();
    if !(start >= 0.0) || !(len >= 0.0) {
        return Err(AudioError::InvalidParameter(format!(
            "window start {start_s}s, length {len_s}s"
        )));
    }
    rms_db_samples(buffer, start as usize, len as usize)
}

pub fn rms_db_samples(buffer: &AudioBuffer, start: usize, len: usize) -> Result<LevelDb, AudioError> {
    if len == 0 {
        return Err(AudioError::EmptyWindow);
    }
    let end = start + len;
    if end > buffer.len() {
        return Err(AudioError::WindowOutOfBounds { start, end, len: buffer.len() });
    }
    let energy: f64 = buffer
        .data
        .iter()
        .map(|c| c[start..end].iter().map(|x| x * x).sum::<f64>())
        .sum();
    Ok(LevelDb::from_power(energy / (len * buffer.channels()) as f64))
}

/// RMS level of the whole buffer.
pub fn rms_db_full(buffer: &AudioBuffer) -> Result<LevelDb, AudioError> {
    rms_db_samples(buffer, 0, buffer.len())
}

/// Scales the buffer so that its largest absolute sample is exactly 1.0.
pub fn peak_normalize(buffer: &AudioBuffer) -> Result<AudioBuffer, AudioError> {
    let peak = buffer.peak();
    if peak == 0.0 {
        return Err(AudioError::Silent);
    }
    if peak == 1.0 {
        return Ok(buffer.clone());
    }
    Ok(buffer.map_channels(|c| c.iter().map(|x| x / peak).collect()))
}

const RESAMPLE_TAPS: usize = 64;
const RESAMPLE_BETA: f64 = 14.0;
/// Cutoff as a fraction of the lower of the two rates. Places the Kaiser
/// transition band (about 0.14 of the rate for 64 taps at beta 14) below the
/// lower Nyquist frequency.
const RESAMPLE_CUTOFF: f64 = 0.43;
/// Above this many phases, kernel values are computed per output sample.
const MAX_TABLE_PHASES: u64 = 4096;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..200 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

struct SincKernel {
    /// Cutoff in cycles per input sample.
    cutoff: f64,
    /// Half width in input samples.
    half_width: f64,
    i0_beta: f64,
}

impl SincKernel {
    fn eval(&self, x: f64) -> f64 {
        let r = x / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(RESAMPLE_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        let arg = 2.0 * self.cutoff * x;
        let sinc = if arg == 0.0 { 1.0 } else { (PI * arg).sin() / (PI * arg) };
        2.0 * self.cutoff * sinc * window
    }

    /// Taps for an output sample located `frac` input samples after `base`,
    /// normalised to unit DC gain. Returns the first input index and weights.
    fn taps(&self, base: i64, frac: f64) -> (i64, Vec<f64>) {
        let reach = self.half_width.ceil() as i64;
        let first = base - reach + 1;
        let mut weights: Vec<f64> = (0..(2 * reach))
            .map(|k| self.eval((first + k) as f64 - (base as f64 + frac)))
            .collect();
        let total: f64 = weights.iter().sum();
        if total != 0.0 {
            weights.iter_mut().for_each(|w| *w /= total);
        }
        (first, weights)
    }
}

/// Band-limited resampling with a Kaiser-windowed sinc kernel.
pub fn resample(buffer: &AudioBuffer, target_rate: u32) -> Result<AudioBuffer, AudioError> {
    if target_rate == 0 {
        return Err(AudioError::InvalidParameter("target rate must be positive".into()));
    }
    let source_rate = buffer.sample_rate;
    if target_rate == source_rate {
        return Ok(buffer.clone());
    }
    let g = gcd(source_rate as u64, target_rate as u64);
    let up = target_rate as u64 / g;
    let down = source_rate as u64 / g;
    let scale = (target_rate as f64 / source_rate as f64).min(1.0);
    let kernel = SincKernel {
        cutoff: RESAMPLE_CUTOFF * scale,
        half_width: (RESAMPLE_TAPS as f64 / 2.0) / scale,
        i0_beta: bessel_i0(RESAMPLE_BETA),
    };
    let in_len = buffer.len();
    let out_len = ((in_len as f64) * target_rate as f64 / source_rate as f64).round() as usize;

    // a table only pays off when every phase is used at least once
    let table: Option<Vec<(i64, Vec<f64>)>> = (up <= MAX_TABLE_PHASES && out_len as u64 >= up)
        .then(|| (0..up).map(|p| kernel.taps(0, p as f64 / up as f64)).collect());

    let data = buffer
        .data
        .iter()
        .map(|input| {
            (0..out_len)
                .map(|n| {
                    let pos = n as u64 * down;
                    let base = (pos / up) as i64;
                    let phase = pos % up;
                    let owned;
                    let (offset, weights) = match &table {
                        Some(t) => {
                            let (o, w) = &t[phase as usize];
                            (*o + base, w.as_slice())
                        }
                        None => {
                            owned = kernel.taps(base, phase as f64 / up as f64);
                            (owned.0, owned.1.as_slice())
                        }
                    };
                    weights
                        .iter()
                        .enumerate()
                        .filter_map(|(k, w)| {
                            let idx = offset + k as i64;
                            (idx >= 0 && (idx as usize) < in_len).then(|| w * input[idx as usize])
                        })
                        .sum()
                })
                .collect()
        })
        .collect();
    AudioBuffer::new(target_rate, data)
}

/// Returns `target + g·background` with `g` chosen so that the level
/// difference between target and scaled background equals `snr_db`.
pub fn mix_at_snr(target: &AudioBuffer, background: &AudioBuffer, snr_db: f64) -> Result<AudioBuffer, AudioError> {
    Ok(mix_at_snr_with_gain(target, background, snr_db)?.0)
}

/// Same as [`mix_at_snr`], also returning the background gain.
pub fn mix_at_snr_with_gain(
    target: &AudioBuffer,
    background: &AudioBuffer,
    snr_db: f64,
) -> Result<(AudioBuffer, f64), AudioError> {
    if !snr_db.is_finite() {
        return Err(AudioError::InvalidParameter(format!("snr {snr_db}")));
    }
    if target.sample_rate != background.sample_rate || target.len() != background.len() {
        return Err(AudioError::Mismatch("target and background differ in rate or length".into()));
    }
    let channels = target.channels().max(background.channels());
    let target = target.upmix(channels)?;
    let background = background.upmix(channels)?;
    let t = rms_db_full(&target)?;
    let b = rms_db_full(&background)?;
    if t.is_silence() || b.is_silence() {
        return Err(AudioError::Silent);
    }
    let gain = 10f64.powf((t.0 - b.0 - snr_db) / 20.0);
    let scaled = apply_gain(&background, gain)?;
    Ok((target.add(&scaled)?, gain))
}

/// Adds zero-mean Gaussian noise with standard deviation `sigma`.
pub fn add_gaussian_noise(buffer: &AudioBuffer, sigma: f64, seed: u64) -> Result<AudioBuffer, AudioError> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(AudioError::InvalidParameter(format!("noise sigma {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(buffer.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| AudioError::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(buffer.map_channels(|c| c.iter().map(|x| x + normal.sample(&mut rng)).collect()))
}
