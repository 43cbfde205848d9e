//! Random degradation chains and training-pair generation.
//!
//! A target group and (optionally) a background group are each degraded by
//! an independently sampled stem chain, mixed at a random SNR, and the
//! mixture then passes through a mixture chain. Every sampled value lands in
//! a [`DegradationRecord`], which [`replay`] turns back into the exact same
//! audio.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::audio::{add_gaussian_noise, apply_gain, resample, rms_db_full, AudioBuffer, AudioError};
use crate::codec::{encode_decode_mp3, encoder_version, CodecError, CodecParams, VBR_QUALITY_RANGE};
use crate::effects::{
    compress, distort, freeverb, limit, CompressorParams, DistortionParams, EffectError, LimiterParams, ReverbParams,
};
use crate::effects::{
    COMP_ATTACK_RANGE_MS, COMP_RATIO_RANGE, COMP_THRESHOLD_RANGE_DB, DAMPING_RANGE, DRIVE_RANGE_DB,
    LIMIT_THRESHOLD_RANGE_DB, RELEASE_RANGE_MS, ROOM_SIZE_RANGE, WET_LEVEL_RANGE, WIDTH_RANGE,
};
use crate::filters::{
    graphic_eq, parametric_eq, process_sos, sample_filter_design_in, sample_graphic_eq_in, sample_parametric_eq_in,
    EqRanges, FilterDesignSpec, FilterError, GraphicEqSettings, ParametricBand,
};

pub const RECORD_VERSION: u32 = 1;
/// Cutoffs above this fraction of the sample rate are pulled down to it.
pub const MAX_CUTOFF_FRACTION: f64 = 0.45;

pub const SNR_RANGE_DB: (f64, f64) = (-5.0, 20.0);
pub const NOISE_SIGMA_RANGE: (f64, f64) = (0.001, 0.005);
pub const GAIN_RANGE: (f64, f64) = (0.5, 2.0);
pub const RESAMPLE_RATES: [u32; 4] = [8000, 16000, 22050, 32000];

#[derive(Debug, Error)]
pub enum DegradeError {
    #[error("invalid chain config: {0}")]
    Config(String),
    #[error("codec step sampled but the codec is disabled")]
    CodecDisabled,
    #[error("at least one target stem is required")]
    NoTargets,
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Effect(#[from] EffectError),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Application probability for each optional effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectProbabilities {
    pub equalizer: f64,
    pub resample: f64,
    pub compressor: f64,
    pub distortion: f64,
    pub reverb: f64,
    pub limiter: f64,
    pub mixture_resample: f64,
    pub codec: f64,
    pub noise: f64,
}

impl Default for EffectProbabilities {
    fn default() -> Self {
        EffectProbabilities {
            equalizer: 0.5,
            resample: 0.5,
            compressor: 0.5,
            distortion: 0.5,
            reverb: 0.5,
            limiter: 0.5,
            mixture_resample: 0.5,
            codec: 0.5,
            noise: 0.5,
        }
    }
}

impl EffectProbabilities {
    fn all(&self) -> [(&'static str, f64); 9] {
        [
            ("equalizer", self.equalizer),
            ("resample", self.resample),
            ("compressor", self.compressor),
            ("distortion", self.distortion),
            ("reverb", self.reverb),
            ("limiter", self.limiter),
            ("mixture_resample", self.mixture_resample),
            ("codec", self.codec),
            ("noise", self.noise),
        ]
    }
}

/// Sampling configuration. Every field has a default, so a config file only
/// needs the values it changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub probabilities: EffectProbabilities,
    pub gain_range: (f64, f64),
    pub eq: EqRanges,
    pub resample_rates: Vec<u32>,
    pub compressor_threshold_db: (f64, f64),
    pub compressor_ratio: (f64, f64),
    pub compressor_attack_ms: (f64, f64),
    pub compressor_release_ms: (f64, f64),
    pub drive_db: (f64, f64),
    pub room_size: (f64, f64),
    pub damping: (f64, f64),
    pub wet_level: (f64, f64),
    pub width: (f64, f64),
    pub limiter_threshold_db: (f64, f64),
    pub limiter_release_ms: (f64, f64),
    pub vbr_quality: (f64, f64),
    pub snr_range_db: (f64, f64),
    pub noise_sigma_range: (f64, f64),
    pub codec_enabled: bool,
    /// Degraded groups whose peak exceeds this get a fresh gain draw.
    pub max_peak: f64,
    pub max_gain_redraws: u32,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            probabilities: EffectProbabilities::default(),
            gain_range: GAIN_RANGE,
            eq: EqRanges::default(),
            resample_rates: RESAMPLE_RATES.to_vec(),
            compressor_threshold_db: COMP_THRESHOLD_RANGE_DB,
            compressor_ratio: COMP_RATIO_RANGE,
            compressor_attack_ms: COMP_ATTACK_RANGE_MS,
            compressor_release_ms: RELEASE_RANGE_MS,
            drive_db: DRIVE_RANGE_DB,
            room_size: ROOM_SIZE_RANGE,
            damping: DAMPING_RANGE,
            wet_level: WET_LEVEL_RANGE,
            width: WIDTH_RANGE,
            limiter_threshold_db: LIMIT_THRESHOLD_RANGE_DB,
            limiter_release_ms: RELEASE_RANGE_MS,
            vbr_quality: VBR_QUALITY_RANGE,
            snr_range_db: SNR_RANGE_DB,
            noise_sigma_range: NOISE_SIGMA_RANGE,
            codec_enabled: true,
            max_peak: 4.0,
            max_gain_redraws: 8,
        }
    }
}

fn named_ranges(c: &ChainConfig) -> Vec<(&'static str, (f64, f64), (f64, f64))> {
    use crate::filters::{ATTENUATION_RANGE_DB, EQ_GAIN_RANGE_DB, Q_RANGE, RIPPLE_RANGE_DB};
    vec![
        ("eq.gain_db", c.eq.gain_db, EQ_GAIN_RANGE_DB),
        ("eq.q", c.eq.q, Q_RANGE),
        ("eq.ripple_db", c.eq.ripple_db, RIPPLE_RANGE_DB),
        ("eq.attenuation_db", c.eq.attenuation_db, ATTENUATION_RANGE_DB),
        ("compressor_threshold_db", c.compressor_threshold_db, COMP_THRESHOLD_RANGE_DB),
        ("compressor_ratio", c.compressor_ratio, COMP_RATIO_RANGE),
        ("compressor_attack_ms", c.compressor_attack_ms, COMP_ATTACK_RANGE_MS),
        ("compressor_release_ms", c.compressor_release_ms, RELEASE_RANGE_MS),
        ("drive_db", c.drive_db, DRIVE_RANGE_DB),
        ("room_size", c.room_size, ROOM_SIZE_RANGE),
        ("damping", c.damping, DAMPING_RANGE),
        ("wet_level", c.wet_level, WET_LEVEL_RANGE),
        ("width", c.width, WIDTH_RANGE),
        ("limiter_threshold_db", c.limiter_threshold_db, LIMIT_THRESHOLD_RANGE_DB),
        ("limiter_release_ms", c.limiter_release_ms, RELEASE_RANGE_MS),
        ("vbr_quality", c.vbr_quality, VBR_QUALITY_RANGE),
        ("snr_range_db", c.snr_range_db, SNR_RANGE_DB),
        ("noise_sigma_range", c.noise_sigma_range, NOISE_SIGMA_RANGE),
    ]
}

impl ChainConfig {
    pub fn from_json(text: &str) -> Result<Self, DegradeError> {
        serde_json::from_str(text).map_err(|e| DegradeError::Config(e.to_string()))
    }

    /// Checks probabilities and that ranges are non-empty; with
    /// `paper_strict`, also that every range sits inside the published one.
    pub fn validate(&self, paper_strict: bool) -> Result<(), DegradeError> {
        let bad = |msg: String| Err(DegradeError::Config(msg));
        for (name, p) in self.probabilities.all() {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("probability {name} = {p} outside [0, 1]"));
            }
        }
        let mut ranges = named_ranges(self);
        ranges.push(("gain_range", self.gain_range, self.gain_range));
        for (name, (lo, hi), (plo, phi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad(format!("{name} = [{lo}, {hi}] is empty or not finite"));
            }
            if paper_strict && (lo < plo || hi > phi) {
                return bad(format!("{name} = [{lo}, {hi}] exceeds published range [{plo}, {phi}]"));
            }
        }
        if self.gain_range.0 <= 0.0 {
            return bad(format!("gain_range lower bound {} must be > 0", self.gain_range.0));
        }
        if self.noise_sigma_range.0 < 0.0 {
            return bad("noise sigma must be >= 0".into());
        }
        if self.resample_rates.is_empty() || self.resample_rates.contains(&0) {
            return bad("resample_rates must be non-empty and positive".into());
        }
        if !(self.max_peak > 0.0) {
            return bad(format!("max_peak {}", self.max_peak));
        }
        Ok(())
    }

    /// Hex SHA-256 of the config's JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        hex(&Sha256::digest(json.as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// One applied degradation with its full parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    Gain { gain: f64 },
    GraphicEq { settings: GraphicEqSettings },
    ParametricEq { bands: Vec<ParametricBand> },
    Filter { design: FilterDesignSpec },
    /// Down to `rate` and back to the original rate.
    Resample { rate: u32 },
    Compressor(CompressorParams),
    Distortion(DistortionParams),
    Reverb(ReverbParams),
    Limiter(LimiterParams),
    Codec { vbr_quality: f64 },
    /// A codec draw that was not applied because the codec is disabled.
    CodecSkipped { vbr_quality: f64 },
}

impl Effect {
    pub fn name(&self) -> &'static str {
        match self {
            Effect::Gain { .. } => "gain",
            Effect::GraphicEq { .. } => "graphic_eq",
            Effect::ParametricEq { .. } => "parametric_eq",
            Effect::Filter { .. } => "filter",
            Effect::Resample { .. } => "resample",
            Effect::Compressor(_) => "compressor",
            Effect::Distortion(_) => "distortion",
            Effect::Reverb(_) => "reverb",
            Effect::Limiter(_) => "limiter",
            Effect::Codec { .. } => "codec",
            Effect::CodecSkipped { .. } => "codec_skipped",
        }
    }

    /// Pulls frequencies above `MAX_CUTOFF_FRACTION · fs` down to that
    /// limit. Idempotent, so fitted effects replay unchanged.
    pub fn fit_to_rate(&self, sample_rate: f64) -> Effect {
        let limit = MAX_CUTOFF_FRACTION * sample_rate;
        match self {
            Effect::ParametricEq { bands } => Effect::ParametricEq {
                bands: bands.iter().map(|b| ParametricBand { fc: b.fc.min(limit), ..*b }).collect(),
            },
            Effect::Filter { design } => {
                let mut d = design.clone();
                let top = d.cutoff2_hz.unwrap_or(d.cutoff_hz);
                if top > limit {
                    let scale = limit / top;
                    d.cutoff_hz *= scale;
                    d.cutoff2_hz = d.cutoff2_hz.map(|f| f * scale);
                }
                Effect::Filter { design: d }
            }
            other => other.clone(),
        }
    }

    pub fn apply(&self, buffer: &AudioBuffer) -> Result<AudioBuffer, DegradeError> {
        let fs = buffer.sample_rate() as f64;
        Ok(match self {
            Effect::Gain { gain } => apply_gain(buffer, *gain)?,
            Effect::GraphicEq { settings } => process_sos(&graphic_eq(settings, fs)?, buffer),
            Effect::ParametricEq { bands } => process_sos(&parametric_eq(bands, fs)?, buffer),
            Effect::Filter { design } => process_sos(&design.design(fs)?, buffer),
            Effect::Resample { rate } => {
                if *rate >= buffer.sample_rate() {
                    buffer.clone()
                } else {
                    resample(&resample(buffer, *rate)?, buffer.sample_rate())?.with_len(buffer.len())
                }
            }
            Effect::Compressor(p) => compress(buffer, p)?,
            Effect::Distortion(p) => distort(buffer, p)?,
            Effect::Reverb(p) => freeverb(buffer, p)?,
            Effect::Limiter(p) => limit(buffer, p)?,
            Effect::Codec { vbr_quality } => encode_decode_mp3(buffer, &CodecParams { vbr_quality: *vbr_quality })?,
            Effect::CodecSkipped { .. } => buffer.clone(),
        })
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo < hi {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn sample_gain<R: Rng + ?Sized>(rng: &mut R, config: &ChainConfig) -> Effect {
    Effect::Gain { gain: uniform(rng, config.gain_range) }
}

fn sample_resample<R: Rng + ?Sized>(rng: &mut R, config: &ChainConfig) -> Effect {
    Effect::Resample { rate: config.resample_rates[rng.random_range(0..config.resample_rates.len())] }
}

/// Gain first, then equalizer, resample, compressor, distortion and reverb,
/// each kept independently with its configured probability.
pub fn sample_stem_chain<R: Rng + ?Sized>(rng: &mut R, config: &ChainConfig) -> Vec<Effect> {
    let p = &config.probabilities;
    let mut chain = vec![sample_gain(rng, config)];
    if rng.random_bool(p.equalizer) {
        chain.push(match rng.random_range(0..3) {
            0 => Effect::GraphicEq { settings: sample_graphic_eq_in(rng, &config.eq) },
            1 => Effect::ParametricEq { bands: sample_parametric_eq_in(rng, &config.eq) },
            _ => Effect::Filter { design: sample_filter_design_in(rng, &config.eq) },
        });
    }
    if rng.random_bool(p.resample) {
        chain.push(sample_resample(rng, config));
    }
    if rng.random_bool(p.compressor) {
        chain.push(Effect::Compressor(CompressorParams {
            threshold_db: uniform(rng, config.compressor_threshold_db),
            ratio: uniform(rng, config.compressor_ratio),
            attack_ms: uniform(rng, config.compressor_attack_ms),
            release_ms: uniform(rng, config.compressor_release_ms),
        }));
    }
    if rng.random_bool(p.distortion) {
        chain.push(Effect::Distortion(DistortionParams { drive_db: uniform(rng, config.drive_db) }));
    }
    if rng.random_bool(p.reverb) {
        chain.push(Effect::Reverb(ReverbParams {
            room_size: uniform(rng, config.room_size),
            damping: uniform(rng, config.damping),
            wet_level: uniform(rng, config.wet_level),
            width: uniform(rng, config.width),
        }));
    }
    chain
}

/// Target-to-background level difference in dB.
pub fn sample_snr<R: Rng + ?Sized>(rng: &mut R, config: &ChainConfig) -> f64 {
    uniform(rng, config.snr_range_db)
}

/// Zero-mean Gaussian noise; `sigma` is the drawn "noise mean" value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureChain {
    pub effects: Vec<Effect>,
    pub noise: Option<NoiseSpec>,
}

/// Limiter, resample and codec, each with its probability, then the noise
/// decision. A codec draw with the codec disabled is kept as
/// [`Effect::CodecSkipped`] unless `strict`, where it is an error.
pub fn sample_mixture_chain<R: Rng + ?Sized>(
    rng: &mut R,
    config: &ChainConfig,
    strict: bool,
) -> Result<MixtureChain, DegradeError> {
    let p = &config.probabilities;
    let mut effects = Vec::new();
    if rng.random_bool(p.limiter) {
        effects.push(Effect::Limiter(LimiterParams {
            threshold_db: uniform(rng, config.limiter_threshold_db),
            release_ms: uniform(rng, config.limiter_release_ms),
        }));
    }
    if rng.random_bool(p.mixture_resample) {
        effects.push(sample_resample(rng, config));
    }
    if rng.random_bool(p.codec) {
        let vbr_quality = uniform(rng, config.vbr_quality);
        if config.codec_enabled {
            effects.push(Effect::Codec { vbr_quality });
        } else if strict {
            return Err(DegradeError::CodecDisabled);
        } else {
            effects.push(Effect::CodecSkipped { vbr_quality });
        }
    }
    let noise = rng.random_bool(p.noise).then(|| NoiseSpec {
        sigma: uniform(rng, config.noise_sigma_range),
        seed: rng.random(),
    });
    Ok(MixtureChain { effects, noise })
}

/// Applies effects in order. Returns the output and the effects as actually
/// applied (frequencies fitted to the buffer's rate).
pub fn apply_chain(buffer: &AudioBuffer, chain: &[Effect]) -> Result<(AudioBuffer, Vec<Effect>), DegradeError> {
    let fs = buffer.sample_rate() as f64;
    let mut out = buffer.clone();
    let mut applied = Vec::with_capacity(chain.len());
    for effect in chain {
        let effect = effect.fit_to_rate(fs);
        out = effect.apply(&out)?;
        applied.push(effect);
    }
    Ok((out, applied))
}

pub fn apply_mixture_chain(buffer: &AudioBuffer, chain: &MixtureChain) -> Result<(AudioBuffer, MixtureChain), DegradeError> {
    let (mut out, effects) = apply_chain(buffer, &chain.effects)?;
    if let Some(n) = chain.noise {
        out = add_gaussian_noise(&out, n.sigma, n.seed)?;
    }
    Ok((out, MixtureChain { effects, noise: chain.noise }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecInfo {
    pub enabled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoder_version: Option<String>,
}

/// Everything needed to regenerate a training example from its clean stems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationRecord {
    pub version: u32,
    pub seed: u64,
    pub config_digest: String,
    pub sample_rate: u32,
    pub length: usize,
    pub stem_chain: Vec<Effect>,
    pub background_chain: Vec<Effect>,
    pub mixture_chain: Vec<Effect>,
    /// The drawn SNR; kept even when the SNR stage was skipped.
    pub snr_db: f64,
    pub snr_applied: bool,
    /// Linear gain applied to the degraded background.
    pub background_gain: f64,
    pub noise: Option<NoiseSpec>,
    pub codec: CodecInfo,
    pub events: Vec<String>,
    /// Where the clean stems came from, when generated from a dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<ExampleSource>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSource {
    pub song_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub background_song_id: Option<String>,
    pub target_paths: Vec<String>,
    pub background_paths: Vec<String>,
    /// First sample of the excerpt within the stems.
    pub offset: usize,
}

impl DegradationRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialises") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, DegradeError> {
        serde_json::from_str(text).map_err(|e| DegradeError::Config(format!("record: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub mixture: AudioBuffer,
    /// Sum of the raw target stems.
    pub target: AudioBuffer,
    pub record: DegradationRecord,
}

fn mix(target: &AudioBuffer, background: Option<&AudioBuffer>, gain: f64) -> Result<AudioBuffer, DegradeError> {
    Ok(match background {
        Some(bg) => target.add(&apply_gain(bg, gain)?)?,
        None => target.clone(),
    })
}

/// Degrades `clean` with a fresh chain, re-drawing the leading gain while the
/// result peaks above `config.max_peak`.
fn degrade_group(
    clean: &AudioBuffer,
    rng: &mut ChaCha8Rng,
    config: &ChainConfig,
    what: &str,
    events: &mut Vec<String>,
) -> Result<(AudioBuffer, Vec<Effect>), DegradeError> {
    let mut chain = sample_stem_chain(rng, config);
    let mut attempt = 0;
    loop {
        let (out, applied) = apply_chain(clean, &chain)?;
        if out.peak() <= config.max_peak || attempt >= config.max_gain_redraws {
            if out.peak() > config.max_peak {
                events.push(format!("{what}: peak {:.3} still above {} after {attempt} gain redraws", out.peak(), config.max_peak));
            }
            return Ok((out, applied));
        }
        attempt += 1;
        chain[0] = sample_gain(rng, config);
        events.push(format!("{what}: peak {:.3} above {}, gain redrawn", out.peak(), config.max_peak));
    }
}

/// Builds one training pair. All stems must share a sample rate; they are
/// trimmed to the shortest one.
pub fn build_training_example(
    targets: &[AudioBuffer],
    backgrounds: &[AudioBuffer],
    seed: u64,
    config: &ChainConfig,
    strict: bool,
) -> Result<TrainingExample, DegradeError> {
    config.validate(strict)?;
    if targets.is_empty() {
        return Err(DegradeError::NoTargets);
    }
    let rate = targets[0].sample_rate();
    if targets.iter().chain(backgrounds).any(|b| b.sample_rate() != rate) {
        return Err(AudioError::Mismatch("stems differ in sample rate".into()).into());
    }
    let len = targets.iter().chain(backgrounds).map(|b| b.len()).min().unwrap_or(0);
    let clean_target = AudioBuffer::sum(targets.iter().map(|b| b.with_len(len)).collect::<Vec<_>>().iter())?;
    let clean_background = if backgrounds.is_empty() {
        None
    } else {
        Some(AudioBuffer::sum(backgrounds.iter().map(|b| b.with_len(len)).collect::<Vec<_>>().iter())?)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let (degraded_target, stem_chain) = degrade_group(&clean_target, &mut rng, config, "target", &mut events)?;
    let (degraded_background, background_chain) = match &clean_background {
        Some(bg) => {
            let (b, c) = degrade_group(bg, &mut rng, config, "background", &mut events)?;
            (Some(b), c)
        }
        None => (None, Vec::new()),
    };
    let snr_db = sample_snr(&mut rng, config);
    let mixture_plan = sample_mixture_chain(&mut rng, config, strict)?;

    let (snr_applied, background_gain) = match &degraded_background {
        None => {
            events.push("no background stems: snr stage skipped".into());
            (false, 0.0)
        }
        Some(bg) => {
            let t = rms_db_full(&degraded_target)?;
            let b = rms_db_full(bg)?;
            if t.is_silence() || b.is_silence() {
                events.push("silent group after degradation: snr stage skipped, plain sum used".into());
                (false, 1.0)
            } else {
                (true, 10f64.powf((t.0 - b.0 - snr_db) / 20.0))
            }
        }
    };
    let premix = mix(&degraded_target, degraded_background.as_ref(), background_gain)?;
    let (mixture, mixture_applied) = apply_mixture_chain(&premix, &mixture_plan)?;
    if mixture_applied.effects.iter().any(|e| matches!(e, Effect::CodecSkipped { .. })) {
        events.push("codec step skipped: codec disabled".into());
    }
    let encoder = if mixture_applied.effects.iter().any(|e| matches!(e, Effect::Codec { .. })) {
        encoder_version().ok()
    } else {
        None
    };

    let record = DegradationRecord {
        version: RECORD_VERSION,
        seed,
        config_digest: config.digest(),
        sample_rate: rate,
        length: len,
        stem_chain,
        background_chain,
        mixture_chain: mixture_applied.effects,
        snr_db,
        snr_applied,
        background_gain,
        noise: mixture_applied.noise,
        codec: CodecInfo { enabled: config.codec_enabled, encoder_version: encoder },
        events,
        source: None,
    };
    Ok(TrainingExample { mixture, target: clean_target, record })
}

/// Re-applies a record to the clean stems, returning `(mixture, target)`.
pub fn replay(
    record: &DegradationRecord,
    targets: &[AudioBuffer],
    backgrounds: &[AudioBuffer],
) -> Result<(AudioBuffer, AudioBuffer), DegradeError> {
    if targets.is_empty() {
        return Err(DegradeError::NoTargets);
    }
    let len = record.length;
    let target = AudioBuffer::sum(targets.iter().map(|b| b.with_len(len)).collect::<Vec<_>>().iter())?;
    let (degraded_target, _) = apply_chain(&target, &record.stem_chain)?;
    let degraded_background = if backgrounds.is_empty() {
        None
    } else {
        let bg = AudioBuffer::sum(backgrounds.iter().map(|b| b.with_len(len)).collect::<Vec<_>>().iter())?;
        Some(apply_chain(&bg, &record.background_chain)?.0)
    };
    let premix = mix(&degraded_target, degraded_background.as_ref(), record.background_gain)?;
    let plan = MixtureChain { effects: record.mixture_chain.clone(), noise: record.noise };
    let (mixture, _) = apply_mixture_chain(&premix, &plan)?;
    Ok((mixture, target))
}
