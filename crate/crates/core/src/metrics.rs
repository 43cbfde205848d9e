//! Restoration metrics: SI-SDR on waveforms, SSIM on log-compressed power
//! mel spectrograms, and 10-second segment aggregation with 95% confidence
//! intervals.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioBuffer;

/// SI-SDR values are clamped to ±this many dB.
pub const SI_SDR_CLAMP_DB: f64 = 100.0;
pub const SEGMENT_SECONDS: f64 = 10.0;
pub const CI95_Z: f64 = 1.96;

const SSIM_WINDOW: usize = 7;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize), (usize, usize)),
    #[error("length mismatch: estimate has {estimate} samples, reference has {reference}")]
    LengthMismatch { estimate: usize, reference: usize },
    #[error("sample rate mismatch: {0} vs {1}")]
    RateMismatch(u32, u32),
    #[error("reference signal is silent")]
    SilentReference,
    #[error("no complete {0}-second segment in any pair")]
    NoSegments(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("report output failed: {0}")]
    Output(String),
}

/// Row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut out = Matrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
            for (k, &a) in self.row(r).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(k)) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelSpecConfig {
    pub n_mels: usize,
    pub fft_size: usize,
    pub hop: usize,
    pub fmin: f64,
    /// `None` means Nyquist.
    pub fmax: Option<f64>,
}

impl Default for MelSpecConfig {
    fn default() -> Self {
        MelSpecConfig { n_mels: 256, fft_size: 4096, hop: 1024, fmin: 0.0, fmax: None }
    }
}

impl MelSpecConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if self.hop == 0 || self.fft_size < self.hop {
            return Err(MetricsError::InvalidConfig(format!("fft {} < hop {}", self.fft_size, self.hop)));
        }
        if self.n_mels == 0 || self.n_mels >= self.fft_size / 2 {
            return Err(MetricsError::InvalidConfig(format!("{} mel bands for fft {}", self.n_mels, self.fft_size)));
        }
        Ok(())
    }
}

/// Periodic Hann window.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len() as isize;
    (-(pad as isize)..n + pad as isize)
        .map(|i| {
            let mut j = i;
            // numpy "reflect": mirror without repeating the edge sample
            while j < 0 || j >= n {
                j = if j < 0 { -j } else { 2 * (n - 1) - j };
            }
            x[j as usize]
        })
        .collect()
}

/// One-sided `|STFT|²` of the channel-averaged signal as a
/// `(fft_size/2 + 1) × frames` matrix. Frames are centred with reflective
/// padding; a signal shorter than one window yields a single zero-padded
/// frame.
pub fn stft_power(buffer: &AudioBuffer, config: &MelSpecConfig) -> Result<Matrix, MetricsError> {
    config.validate()?;
    let mono = buffer.to_mono();
    let x = mono.channel(0);
    let n_fft = config.fft_size;
    let bins = n_fft / 2 + 1;
    let window = hann_window(n_fft);
    let (padded, frames) = if x.len() < n_fft {
        let mut p = x.to_vec();
        p.resize(n_fft, 0.0);
        (p, 1)
    } else {
        (reflect_pad(x, n_fft / 2), 1 + x.len() / config.hop)
    };
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let columns: Vec<Vec<f64>> = (0..frames)
        .into_par_iter()
        .map(|t| {
            let start = t * config.hop;
            let mut frame: Vec<Complex64> = (0..n_fft)
                .map(|i| Complex64::new(padded.get(start + i).copied().unwrap_or(0.0) * window[i], 0.0))
                .collect();
            fft.process(&mut frame);
            frame[..bins].iter().map(|c| c.norm_sqr()).collect()
        })
        .collect();
    Ok(Matrix::from_fn(bins, frames, |k, t| columns[t][k]))
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Centre frequencies (Hz) of the mel filters, plus the two outer edges.
pub fn mel_edges(config: &MelSpecConfig, sample_rate: f64) -> Vec<f64> {
    let fmax = config.fmax.unwrap_or(sample_rate / 2.0);
    let (lo, hi) = (hz_to_mel(config.fmin), hz_to_mel(fmax));
    (0..config.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (config.n_mels + 1) as f64))
        .collect()
}

/// Triangular, area-normalised mel filterbank, `n_mels × (fft_size/2 + 1)`.
pub fn mel_filterbank(config: &MelSpecConfig, sample_rate: f64) -> Result<Matrix, MetricsError> {
    config.validate()?;
    let bins = config.fft_size / 2 + 1;
    let edges = mel_edges(config, sample_rate);
    let bin_hz = |k: usize| k as f64 * sample_rate / config.fft_size as f64;
    Ok(Matrix::from_fn(config.n_mels, bins, |m, k| {
        let (lower, center, upper) = (edges[m], edges[m + 1], edges[m + 2]);
        let f = bin_hz(k);
        let rising = (f - lower) / (center - lower);
        let falling = (upper - f) / (upper - center);
        rising.min(falling).max(0.0) * 2.0 / (upper - lower)
    }))
}

/// Mel-band power, `n_mels × frames`.
pub fn mel_power_spec(buffer: &AudioBuffer, config: &MelSpecConfig) -> Result<Matrix, MetricsError> {
    let fb = mel_filterbank(config, buffer.sample_rate() as f64)?;
    Ok(fb.matmul(&stft_power(buffer, config)?))
}

fn gaussian_window(size: usize) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..size).map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let outer: Vec<f64> = g.iter().flat_map(|a| g.iter().map(move |b| a * b)).collect();
    let total: f64 = outer.iter().sum();
    outer.into_iter().map(|w| w / total).collect()
}

/// Mean SSIM over all fully-contained Gaussian windows (7×7, σ = 1.5; the
/// window shrinks for matrices smaller than that) with stabilisers
/// `C1 = (0.01·L)²` and `C2 = (0.03·L)²`. A non-positive `data_range` is
/// replaced by 1.
pub fn ssim(a: &Matrix, b: &Matrix, data_range: f64) -> Result<f64, MetricsError> {
    if a.shape() != b.shape() {
        return Err(MetricsError::ShapeMismatch(a.shape(), b.shape()));
    }
    let mut size = SSIM_WINDOW.min(a.rows).min(a.cols);
    if size.is_multiple_of(2) {
        size -= 1;
    }
    if size == 0 {
        return Err(MetricsError::ShapeMismatch(a.shape(), b.shape()));
    }
    let w = gaussian_window(size);
    let l = if data_range > 0.0 && data_range.is_finite() { data_range } else { 1.0 };
    let c1 = (SSIM_K1 * l).powi(2);
    let c2 = (SSIM_K2 * l).powi(2);
    let out_rows = a.rows - size + 1;
    let out_cols = a.cols - size + 1;
    let row_means: Vec<f64> = (0..out_rows)
        .into_par_iter()
        .map(|r| {
            let values: Vec<f64> = (0..out_cols)
                .map(|c| {
                    let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                    for i in 0..size {
                        for j in 0..size {
                            let wt = w[i * size + j];
                            let x = a.get(r + i, c + j);
                            let y = b.get(r + i, c + j);
                            ma += wt * x;
                            mb += wt * y;
                            saa += wt * x * x;
                            sbb += wt * y * y;
                            sab += wt * x * y;
                        }
                    }
                    let va = saa - ma * ma;
                    let vb = sbb - mb * mb;
                    let cov = sab - ma * mb;
                    ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2))
                })
                .collect();
            pairwise_sum(&values) / values.len() as f64
        })
        .collect();
    Ok(pairwise_sum(&row_means) / row_means.len() as f64)
}

/// SSIM between the `log(1 + S)` compressed mel spectrograms, with `L` taken
/// as the range of the reference.
pub fn ssim_log_mel(estimate: &Matrix, reference: &Matrix) -> Result<f64, MetricsError> {
    let est = estimate.map(f64::ln_1p);
    let refm = reference.map(f64::ln_1p);
    let (lo, hi) = refm.data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    ssim(&est, &refm, hi - lo)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scale-invariant SDR in dB, clamped to ±100 dB.
pub fn si_sdr(estimate: &[f64], reference: &[f64]) -> Result<f64, MetricsError> {
    if estimate.len() != reference.len() {
        return Err(MetricsError::LengthMismatch { estimate: estimate.len(), reference: reference.len() });
    }
    let ref_energy = dot(reference, reference);
    if ref_energy == 0.0 {
        return Err(MetricsError::SilentReference);
    }
    let alpha = dot(estimate, reference) / ref_energy;
    let (mut target, mut residual) = (0.0, 0.0);
    for (e, r) in estimate.iter().zip(reference) {
        let t = alpha * r;
        target += t * t;
        residual += (t - e) * (t - e);
    }
    let value = if target == 0.0 {
        -SI_SDR_CLAMP_DB
    } else if residual == 0.0 {
        SI_SDR_CLAMP_DB
    } else {
        10.0 * (target / residual).log10()
    };
    Ok(value.clamp(-SI_SDR_CLAMP_DB, SI_SDR_CLAMP_DB))
}

/// SI-SDR of channel-averaged buffers.
pub fn si_sdr_buffers(estimate: &AudioBuffer, reference: &AudioBuffer) -> Result<f64, MetricsError> {
    si_sdr(estimate.to_mono().channel(0), reference.to_mono().channel(0))
}

/// Recursive pairwise summation; gives the same result on every platform.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentRef {
    pub pair: usize,
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    pub ci95: f64,
    pub segment_length_s: f64,
    pub segments: Vec<SegmentRef>,
    pub values: Vec<f64>,
    /// Segments left out because their reference was silent.
    pub skipped_segments: usize,
    pub metadata: EvalMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetadata {
    pub mel_scale: String,
    pub mel: MelSpecConfig,
    pub ssim_window: String,
    pub ssim_input: String,
    pub ssim_data_range: String,
    pub channel_handling: String,
    pub si_sdr_clamp_db: f64,
}

impl Default for EvalMetadata {
    fn default() -> Self {
        EvalMetadata {
            mel_scale: "htk: 2595*log10(1+f/700)".into(),
            mel: MelSpecConfig::default(),
            ssim_window: format!("gaussian {SSIM_WINDOW}x{SSIM_WINDOW}, sigma {SSIM_SIGMA}, valid region"),
            ssim_input: "log(1 + mel power)".into(),
            ssim_data_range: "max - min of reference log-mel".into(),
            channel_handling: "channels averaged to mono".into(),
            si_sdr_clamp_db: SI_SDR_CLAMP_DB,
        }
    }
}

impl EvalReport {
    pub fn from_values(metric: &str, segments: Vec<SegmentRef>, values: Vec<f64>, metadata: EvalMetadata) -> Self {
        let n = values.len();
        let (mean, ci95) = mean_ci95(&values);
        EvalReport {
            metric: metric.to_string(),
            n,
            mean,
            ci95,
            segment_length_s: SEGMENT_SECONDS,
            segments,
            values,
            skipped_segments: 0,
            metadata,
        }
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<(), MetricsError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| MetricsError::Output(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| MetricsError::Output(e.to_string()))
    }

    /// One CSV row per segment: `metric,pair,segment,value`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| MetricsError::Output(e.to_string());
        w.write_record(["metric", "pair", "segment", "value"]).map_err(err)?;
        for (s, v) in self.segments.iter().zip(&self.values) {
            w.write_record([self.metric.clone(), s.pair.to_string(), s.segment.to_string(), format!("{v:.17e}")])
                .map_err(err)?;
        }
        w.flush().map_err(|e| MetricsError::Output(e.to_string()))
    }
}

/// Mean and `1.96·σ/√n` half-width, with σ the sample standard deviation
/// (taken as 0 when n = 1).
pub fn mean_ci95(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let sd = (pairwise_sum(&sq) / (n - 1) as f64).sqrt();
    (mean, CI95_Z * sd / (n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub si_sdr: EvalReport,
    pub ssim_mel: EvalReport,
}

/// Scores every complete 10-second segment of every pair with both metrics.
pub fn evaluate_pairs(pairs: &[(AudioBuffer, AudioBuffer)], config: &MelSpecConfig) -> Result<EvalSummary, MetricsError> {
    config.validate()?;
    let mut jobs = Vec::new();
    for (p, (est, reference)) in pairs.iter().enumerate() {
        if est.sample_rate() != reference.sample_rate() {
            return Err(MetricsError::RateMismatch(est.sample_rate(), reference.sample_rate()));
        }
        if est.len() != reference.len() {
            return Err(MetricsError::LengthMismatch { estimate: est.len(), reference: reference.len() });
        }
        let seg_len = (SEGMENT_SECONDS * est.sample_rate() as f64).round() as usize;
        for s in 0..est.len() / seg_len {
            jobs.push((p, s, seg_len));
        }
    }
    if jobs.is_empty() {
        return Err(MetricsError::NoSegments(SEGMENT_SECONDS));
    }
    let scored: Vec<Option<(SegmentRef, f64, f64)>> = jobs
        .par_iter()
        .map(|&(p, s, seg_len)| {
            let (est, reference) = &pairs[p];
            let e = est.slice(s * seg_len, seg_len).expect("segment within bounds").to_mono();
            let r = reference.slice(s * seg_len, seg_len).expect("segment within bounds").to_mono();
            let sdr = match si_sdr(e.channel(0), r.channel(0)) {
                Ok(v) => v,
                Err(MetricsError::SilentReference) => return Ok(None),
                Err(other) => return Err(other),
            };
            let ssim = ssim_log_mel(&mel_power_spec(&e, config)?, &mel_power_spec(&r, config)?)?;
            Ok(Some((SegmentRef { pair: p, segment: s }, sdr, ssim)))
        })
        .collect::<Result<_, MetricsError>>()?;
    let skipped = scored.iter().filter(|s| s.is_none()).count();
    let kept: Vec<_> = scored.into_iter().flatten().collect();
    if kept.is_empty() {
        return Err(MetricsError::NoSegments(SEGMENT_SECONDS));
    }
    let segments: Vec<SegmentRef> = kept.iter().map(|k| k.0).collect();
    let metadata = EvalMetadata { mel: config.clone(), ..EvalMetadata::default() };
    let mut si = EvalReport::from_values("si_sdr", segments.clone(), kept.iter().map(|k| k.1).collect(), metadata.clone());
    let mut ss = EvalReport::from_values("ssim_mel", segments, kept.iter().map(|k| k.2).collect(), metadata);
    si.skipped_segments = skipped;
    ss.skipped_segments = skipped;
    Ok(EvalSummary { si_sdr: si, ssim_mel: ss })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn htk_mel_reference() {
        assert!((hz_to_mel(1000.0) - 999.9855).abs() < 1e-3);
        assert!((mel_to_hz(hz_to_mel(3210.0)) - 3210.0).abs() < 1e-9);
    }

    #[test]
    fn dc_energy_stays_in_main_lobe() {
        let cfg = MelSpecConfig::default();
        let b = AudioBuffer::mono(44100, vec![1.0; 44100]).unwrap();
        let p = stft_power(&b, &cfg).unwrap();
        let t = p.cols / 2;
        let dc = p.get(0, t);
        for k in 2..p.rows {
            assert!(10.0 * (p.get(k, t) / dc).max(1e-300).log10() < -31.0);
        }
    }

    #[test]
    fn frame_count_and_short_signals() {
        let cfg = MelSpecConfig::default();
        let b = AudioBuffer::mono(44100, vec![0.1; 10_000]).unwrap();
        assert_eq!(stft_power(&b, &cfg).unwrap().cols, 1 + 10_000 / 1024);
        let short = AudioBuffer::mono(44100, vec![0.1; 100]).unwrap();
        let p = stft_power(&short, &cfg).unwrap();
        assert_eq!(p.shape(), (2049, 1));
        let silent = AudioBuffer::silence(44100, 2, 8000).unwrap();
        assert!(stft_power(&silent, &cfg).unwrap().data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reflect_padding_matches_numpy() {
        assert_eq!(reflect_pad(&[1.0, 2.0, 3.0, 4.0], 2), vec![3.0, 2.0, 1.0, 2.0, 3.0, 4.0, 3.0, 2.0]);
    }

    #[test]
    fn filterbank_shape() {
        let cfg = MelSpecConfig::default();
        let fb = mel_filterbank(&cfg, 44100.0).unwrap();
        assert_eq!(fb.shape(), (256, 2049));
        for m in 0..fb.rows {
            let row = fb.row(m);
            assert!(row.iter().all(|&v| v >= 0.0));
            let peak = row.iter().cloned().enumerate().max_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap().0;
            assert!(row[..peak].windows(2).all(|w| w[0] <= w[1]));
            assert!(row[peak..].windows(2).all(|w| w[0] >= w[1]));
        }
        let edges = mel_edges(&cfg, 44100.0);
        assert!(edges.windows(2).all(|w| w[0] < w[1]));
        let first = (edges[1] / (44100.0 / 4096.0)).ceil() as usize;
        let last = (edges[256] / (44100.0 / 4096.0)).floor() as usize;
        for k in first..=last {
            assert!((0..fb.rows).map(|m| fb.get(m, k)).sum::<f64>() > 0.0, "bin {k}");
        }
    }

    #[test]
    fn mel_power_coverage_and_scaling() {
        let cfg = MelSpecConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise: Vec<f64> = (0..44100).map(|_| rng.random_range(-0.5..0.5)).collect();
        let b = AudioBuffer::mono(44100, noise.clone()).unwrap();
        let m = mel_power_spec(&b, &cfg).unwrap();
        for r in 0..m.rows {
            assert!(m.row(r).iter().sum::<f64>() > 0.0, "band {r}");
        }
        let b2 = AudioBuffer::mono(44100, noise.iter().map(|v| 2.0 * v).collect()).unwrap();
        let m2 = mel_power_spec(&b2, &cfg).unwrap();
        for (x, y) in m.data.iter().zip(&m2.data) {
            assert!((y - 4.0 * x).abs() <= 1e-6 * (4.0 * x).abs().max(1e-30));
        }
    }

    #[test]
    fn ssim_identity_and_constants() {
        let m = Matrix::from_fn(20, 30, |r, c| ((r * 7 + c * 3) % 11) as f64);
        assert_eq!(ssim(&m, &m, 10.0).unwrap(), 1.0);
        let c = Matrix::from_fn(10, 10, |_, _| 3.0);
        assert_eq!(ssim(&c, &c, 0.0).unwrap(), 1.0);
        assert!(ssim(&m, &c, 1.0).is_err());
    }

    #[test]
    fn si_sdr_cases() {
        let s: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.01).sin()).collect();
        assert_eq!(si_sdr(&s, &s).unwrap(), SI_SDR_CLAMP_DB);
        let scaled: Vec<f64> = s.iter().map(|v| -3.0 * v).collect();
        assert_eq!(si_sdr(&scaled, &s).unwrap(), SI_SDR_CLAMP_DB);
        assert_eq!(si_sdr(&s, &vec![0.0; 1000]), Err(MetricsError::SilentReference));
        assert!(si_sdr(&s[..10], &s).is_err());
        assert_eq!(si_sdr(&vec![0.0; 1000], &s).unwrap(), -SI_SDR_CLAMP_DB);
    }

    #[test]
    fn ci_conventions() {
        assert_eq!(mean_ci95(&[3.0]), (3.0, 0.0));
        let (m, ci) = mean_ci95(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((ci - 1.96 * 2f64.sqrt() / 2f64.sqrt()).abs() < 1e-12);
    }
}
