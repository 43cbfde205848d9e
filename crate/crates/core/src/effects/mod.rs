//! Dynamics, saturation and reverberation.
//!
//! Every effect processes a whole buffer with freshly reset state, so the same
//! input and parameters always give bit-identical output.

mod distortion;
mod dynamics;
mod reverb;

pub use distortion::{distort, DistortionParams, DRIVE_RANGE_DB};
pub use dynamics::{
    compress, compressor_gain_reduction, limit, limiter_gain_reduction, static_gain_curve, CompressorParams, Dynamics,
    LimiterParams, COMP_ATTACK_RANGE_MS, COMP_RATIO_RANGE, COMP_THRESHOLD_RANGE_DB, LIMIT_THRESHOLD_RANGE_DB,
    RELEASE_RANGE_MS,
};
pub use reverb::{freeverb, ReverbParams, DAMPING_RANGE, ROOM_SIZE_RANGE, WET_LEVEL_RANGE, WIDTH_RANGE};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectError {
    #[error("invalid {effect} parameter: {reason}")]
    InvalidParameter { effect: &'static str, reason: String },
}

pub(crate) fn check_range(
    effect: &'static str,
    name: &str,
    value: f64,
    (lo, hi): (f64, f64),
) -> Result<(), EffectError> {
    if value >= lo && value <= hi {
        Ok(())
    } else {
        Err(EffectError::InvalidParameter {
            effect,
            reason: format!("{name} = {value} outside [{lo}, {hi}]"),
        })
    }
}

/// One-pole smoothing coefficient reaching 63% of a step after `time_ms`.
pub(crate) fn one_pole_coeff(time_ms: f64, sample_rate: f64) -> f64 {
    if time_ms <= 0.0 {
        0.0
    } else {
        (-1.0 / (sample_rate * time_ms / 1000.0)).exp()
    }
}
