//! Feed-forward compressor and limiter.
//!
//! Both use a hard-knee static curve in dB and stereo-linked detection (the
//! maximum absolute sample across channels). The compressor's detector is a
//! peak follower with instantaneous attack that decays with the release time
//! constant; the resulting gain reduction is then smoothed with attack (when
//! reduction grows) and release (when it shrinks) one-pole ballistics. The
//! limiter reacts instantly to every sample above the ceiling and only the
//! release is smoothed.

use serde::{Deserialize, Serialize};

use super::{check_range, one_pole_coeff, EffectError};
use crate::audio::AudioBuffer;

pub const COMP_THRESHOLD_RANGE_DB: (f64, f64) = (-20.0, 0.0);
pub const COMP_RATIO_RANGE: (f64, f64) = (1.5, 10.0);
pub const COMP_ATTACK_RANGE_MS: (f64, f64) = (1.0, 10.0);
pub const RELEASE_RANGE_MS: (f64, f64) = (50.0, 200.0);
pub const LIMIT_THRESHOLD_RANGE_DB: (f64, f64) = (-10.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressorParams {
    pub threshold_db: f64,
    pub ratio: f64,
    pub attack_ms: f64,
    pub release_ms: f64,
}

impl CompressorParams {
    /// Physical validity: finite threshold, ratio ≥ 1, positive times.
    pub fn validate(&self) -> Result<(), EffectError> {
        let bad = |reason: String| Err(EffectError::InvalidParameter { effect: "compressor", reason });
        if !self.threshold_db.is_finite() {
            return bad(format!("threshold {}", self.threshold_db));
        }
        if !(self.ratio >= 1.0) || !self.ratio.is_finite() {
            return bad(format!("ratio {} must be >= 1", self.ratio));
        }
        if !(self.attack_ms > 0.0 && self.release_ms > 0.0) {
            return bad(format!("attack {} ms / release {} ms", self.attack_ms, self.release_ms));
        }
        Ok(())
    }

    pub fn check_paper_ranges(&self) -> Result<(), EffectError> {
        check_range("compressor", "threshold_db", self.threshold_db, COMP_THRESHOLD_RANGE_DB)?;
        check_range("compressor", "ratio", self.ratio, COMP_RATIO_RANGE)?;
        check_range("compressor", "attack_ms", self.attack_ms, COMP_ATTACK_RANGE_MS)?;
        check_range("compressor", "release_ms", self.release_ms, RELEASE_RANGE_MS)
    }

    pub fn static_curve(&self, input_db: f64) -> f64 {
        if input_db <= self.threshold_db {
            input_db
        } else {
            self.threshold_db + (input_db - self.threshold_db) / self.ratio
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimiterParams {
    pub threshold_db: f64,
    pub release_ms: f64,
}

impl LimiterParams {
    pub fn validate(&self) -> Result<(), EffectError> {
        if !self.threshold_db.is_finite() || !(self.release_ms > 0.0) {
            return Err(EffectError::InvalidParameter {
                effect: "limiter",
                reason: format!("threshold {} dB / release {} ms", self.threshold_db, self.release_ms),
            });
        }
        Ok(())
    }

    pub fn check_paper_ranges(&self) -> Result<(), EffectError> {
        check_range("limiter", "threshold_db", self.threshold_db, LIMIT_THRESHOLD_RANGE_DB)?;
        check_range("limiter", "release_ms", self.release_ms, RELEASE_RANGE_MS)
    }

    pub fn static_curve(&self, input_db: f64) -> f64 {
        input_db.min(self.threshold_db)
    }
}

/// Either dynamics processor, for code that only needs the static mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dynamics {
    Compressor(CompressorParams),
    Limiter(LimiterParams),
}

/// Static input → output level mapping in dB, without ballistics.
pub fn static_gain_curve(params: &Dynamics, input_db: f64) -> f64 {
    match params {
        Dynamics::Compressor(p) => p.static_curve(input_db),
        Dynamics::Limiter(p) => p.static_curve(input_db),
    }
}

fn linked_peak(buffer: &AudioBuffer, i: usize) -> f64 {
    buffer.data().iter().fold(0.0_f64, |m, c| m.max(c[i].abs()))
}

fn to_db(x: f64) -> f64 {
    if x > 0.0 {
        20.0 * x.log10()
    } else {
        f64::NEG_INFINITY
    }
}

fn apply_gain_reduction(buffer: &AudioBuffer, reduction_db: &[f64]) -> AudioBuffer {
    let gains: Vec<f64> = reduction_db.iter().map(|r| 10f64.powf(-r / 20.0)).collect();
    buffer.map_channels(|c| c.iter().zip(&gains).map(|(x, g)| x * g).collect())
}

/// Per-sample gain reduction in dB produced by the compressor.
pub fn compressor_gain_reduction(buffer: &AudioBuffer, params: &CompressorParams) -> Result<Vec<f64>, EffectError> {
    params.validate()?;
    let fs = buffer.sample_rate() as f64;
    let attack = one_pole_coeff(params.attack_ms, fs);
    let release = one_pole_coeff(params.release_ms, fs);
    let mut envelope = 0.0_f64;
    let mut reduction = 0.0_f64;
    Ok((0..buffer.len())
        .map(|i| {
            let peak = linked_peak(buffer, i);
            envelope = if peak > envelope { peak } else { release * envelope + (1.0 - release) * peak };
            let level = to_db(envelope);
            let target = if level > params.threshold_db { level - params.static_curve(level) } else { 0.0 };
            let coeff = if target > reduction { attack } else { release };
            reduction = coeff * reduction + (1.0 - coeff) * target;
            reduction
        })
        .collect())
}

pub fn compress(buffer: &AudioBuffer, params: &CompressorParams) -> Result<AudioBuffer, EffectError> {
    let reduction = compressor_gain_reduction(buffer, params)?;
    Ok(apply_gain_reduction(buffer, &reduction))
}

/// Per-sample gain reduction in dB produced by the limiter.
pub fn limiter_gain_reduction(buffer: &AudioBuffer, params: &LimiterParams) -> Result<Vec<f64>, EffectError> {
    params.validate()?;
    let release = one_pole_coeff(params.release_ms, buffer.sample_rate() as f64);
    let mut reduction = 0.0_f64;
    Ok((0..buffer.len())
        .map(|i| {
            let level = to_db(linked_peak(buffer, i));
            let target = (level - params.threshold_db).max(0.0);
            reduction = if target >= reduction { target } else { release * reduction + (1.0 - release) * target };
            reduction
        })
        .collect())
}

pub fn limit(buffer: &AudioBuffer, params: &LimiterParams) -> Result<AudioBuffer, EffectError> {
    let reduction = limiter_gain_reduction(buffer, params)?;
    Ok(apply_gain_reduction(buffer, &reduction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const FS: u32 = 44100;

    fn db_to_amp(db: f64) -> f64 {
        10f64.powf(db / 20.0)
    }

    fn sine(peak_db: f64, seconds: f64) -> Vec<f64> {
        let n = (seconds * FS as f64) as usize;
        (0..n).map(|i| db_to_amp(peak_db) * (2.0 * PI * 1000.0 * i as f64 / FS as f64).sin()).collect()
    }

    fn tail_peak_db(x: &[f64], seconds: f64) -> f64 {
        let n = (seconds * FS as f64) as usize;
        to_db(x[x.len() - n..].iter().fold(0.0_f64, |m, v| m.max(v.abs())))
    }

    fn comp(threshold_db: f64, ratio: f64) -> CompressorParams {
        CompressorParams { threshold_db, ratio, attack_ms: 5.0, release_ms: 100.0 }
    }

    #[test]
    fn static_curve_points() {
        let c = comp(-20.0, 10.0);
        assert_eq!(static_gain_curve(&Dynamics::Compressor(c), -20.0), -20.0);
        assert!((static_gain_curve(&Dynamics::Compressor(c), 0.0) + 18.0).abs() < 1e-12);
        let l = LimiterParams { threshold_db: -10.0, release_ms: 100.0 };
        assert_eq!(static_gain_curve(&Dynamics::Limiter(l), 0.0), -10.0);
        assert_eq!(static_gain_curve(&Dynamics::Limiter(l), -30.0), -30.0);
    }

    #[test]
    fn below_threshold_passthrough() {
        let b = AudioBuffer::mono(FS, sine(-30.0, 0.5)).unwrap();
        let y = compress(&b, &comp(-20.0, 4.0)).unwrap();
        assert!((tail_peak_db(y.channel(0), 0.1) + 30.0).abs() < 0.05);
    }

    #[test]
    fn steady_state_follows_static_curve() {
        let b = AudioBuffer::mono(FS, sine(-8.0, 1.0)).unwrap();
        let y = compress(&b, &comp(-20.0, 4.0)).unwrap();
        assert!((tail_peak_db(y.channel(0), 0.1) + 17.0).abs() < 0.1);
    }

    #[test]
    fn attack_time_constant() {
        for attack_ms in [1.0, 4.0, 10.0] {
            let params = CompressorParams { threshold_db: -20.0, ratio: 4.0, attack_ms, release_ms: 100.0 };
            let pre = (0.05 * FS as f64) as usize;
            let mut x = vec![db_to_amp(-40.0); pre];
            x.extend(vec![db_to_amp(-8.0); FS as usize / 2]);
            let b = AudioBuffer::mono(FS, x).unwrap();
            let gr = compressor_gain_reduction(&b, &params).unwrap();
            let last = *gr.last().unwrap();
            assert!((last - 9.0).abs() < 1e-6);
            let reach = gr[pre..].iter().position(|g| *g >= 0.632 * last).unwrap() + 1;
            let expected = attack_ms / 1000.0 * FS as f64;
            assert!((reach as f64 / expected - 1.0).abs() < 0.2, "{reach} vs {expected}");
        }
    }

    #[test]
    fn near_unity_ratio_is_identity() {
        let b = AudioBuffer::mono(FS, sine(-3.0, 0.5)).unwrap();
        let y = compress(&b, &comp(-20.0, 1.001)).unwrap();
        assert!((tail_peak_db(y.channel(0), 0.1) + 3.0).abs() < 0.1);
    }

    #[test]
    fn limiter_ceiling_and_release() {
        let params = LimiterParams { threshold_db: -10.0, release_ms: 80.0 };
        let quiet = AudioBuffer::mono(FS, sine(-15.0, 0.3)).unwrap();
        let y = limit(&quiet, &params).unwrap();
        assert!((tail_peak_db(y.channel(0), 0.1) + 15.0).abs() < 0.05);

        let mut x = sine(-3.0, 0.3);
        let loud_len = x.len();
        x.extend(sine(-30.0, 1.0));
        let b = AudioBuffer::mono(FS, x).unwrap();
        let y = limit(&b, &params).unwrap();
        let over = y.channel(0)[..loud_len].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(to_db(over) <= -9.9);
        let gr = limiter_gain_reduction(&b, &params).unwrap();
        let settle = loud_len + (5.0 * 0.08 * FS as f64) as usize;
        assert!(10f64.powf(-gr[settle] / 20.0) > 0.99);
    }

    #[test]
    fn stereo_linked_detection() {
        let loud = sine(-3.0, 0.2);
        let silent = vec![0.0; loud.len()];
        let b = AudioBuffer::new(FS, vec![loud, silent.clone()]).unwrap();
        let y = compress(&b, &comp(-20.0, 4.0)).unwrap();
        assert_eq!(y.channel(1), silent.as_slice());
        let q = sine(-30.0, 0.2);
        let b = AudioBuffer::new(FS, vec![sine(-3.0, 0.2), q.clone()]).unwrap();
        let y = compress(&b, &comp(-20.0, 4.0)).unwrap();
        assert!(tail_peak_db(y.channel(1), 0.05) < -30.0 - 5.0);
    }

    #[test]
    fn invalid_params() {
        let b = AudioBuffer::mono(FS, vec![0.0; 10]).unwrap();
        assert!(compress(&b, &comp(-20.0, 0.5)).is_err());
        assert!(limit(&b, &LimiterParams { threshold_db: f64::NAN, release_ms: 50.0 }).is_err());
        assert!(comp(-30.0, 4.0).check_paper_ranges().is_err());
        assert!(comp(-10.0, 4.0).check_paper_ranges().is_ok());
    }
}
