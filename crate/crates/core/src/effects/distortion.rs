use serde::{Deserialize, Serialize};

use super::{check_range, EffectError};
use crate::audio::AudioBuffer;

pub const DRIVE_RANGE_DB: (f64, f64) = (0.0, 5.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistortionParams {
    pub drive_db: f64,
}

impl DistortionParams {
    pub fn validate(&self) -> Result<(), EffectError> {
        if self.drive_db.is_finite() {
            Ok(())
        } else {
            Err(EffectError::InvalidParameter { effect: "distortion", reason: "non-finite drive".into() })
        }
    }

    pub fn check_paper_ranges(&self) -> Result<(), EffectError> {
        check_range("distortion", "drive_db", self.drive_db, DRIVE_RANGE_DB)
    }
}

/// `y = tanh(g·x)` with `g = 10^(drive_db/20)`.
pub fn distort(buffer: &AudioBuffer, params: &DistortionParams) -> Result<AudioBuffer, EffectError> {
    params.validate()?;
    let g = 10f64.powf(params.drive_db / 20.0);
    Ok(buffer.map_channels(|c| c.iter().map(|x| (g * x).tanh()).collect()))
}
