// Freeverb: eight parallel lowpass-feedback combs followed by four series
// allpasses per channel, with the public-domain tuning constants. Delay
// lengths are given at 44.1 kHz and scaled to the buffer's rate.

use serde::{Deserialize, Serialize};

use super::{check_range, EffectError};
use crate::audio::AudioBuffer;

pub const ROOM_SIZE_RANGE: (f64, f64) = (0.1, 1.0);
pub const DAMPING_RANGE: (f64, f64) = (0.1, 1.0);
pub const WET_LEVEL_RANGE: (f64, f64) = (0.1, 0.5);
pub const WIDTH_RANGE: (f64, f64) = (0.1, 1.0);

mod tuning {
    pub const FIXED_GAIN: f64 = 0.015;
    pub const SCALE_WET: f64 = 3.0;
    pub const SCALE_DAMP: f64 = 0.4;
    pub const SCALE_ROOM: f64 = 0.28;
    pub const OFFSET_ROOM: f64 = 0.7;
    pub const STEREO_SPREAD: usize = 23;
    pub const COMB_DELAYS: [usize; 8] = [1116, 1188, 1277, 1356, 1422, 1491, 1557, 1617];
    pub const ALLPASS_DELAYS: [usize; 4] = [556, 441, 341, 225];
    pub const ALLPASS_FEEDBACK: f64 = 0.5;
    pub const REFERENCE_RATE: f64 = 44100.0;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReverbParams {
    pub room_size: f64,
    pub damping: f64,
    pub wet_level: f64,
    pub width: f64,
}

impl ReverbParams {
    /// Accepts anything in `[0, 1]`, including a dry-only wet level of 0.
    pub fn validate(&self) -> Result<(), EffectError> {
        check_range("reverb", "room_size", self.room_size, (0.0, 1.0))?;
        check_range("reverb", "damping", self.damping, (0.0, 1.0))?;
        check_range("reverb", "wet_level", self.wet_level, (0.0, 1.0))?;
        check_range("reverb", "width", self.width, (0.0, 1.0))
    }

    pub fn check_paper_ranges(&self) -> Result<(), EffectError> {
        check_range("reverb", "room_size", self.room_size, ROOM_SIZE_RANGE)?;
        check_range("reverb", "damping", self.damping, DAMPING_RANGE)?;
        check_range("reverb", "wet_level", self.wet_level, WET_LEVEL_RANGE)?;
        check_range("reverb", "width", self.width, WIDTH_RANGE)
    }

    pub fn comb_feedback(&self) -> f64 {
        self.room_size * tuning::SCALE_ROOM + tuning::OFFSET_ROOM
    }
}

struct Comb {
    buffer: Vec<f64>,
    index: usize,
    store: f64,
    feedback: f64,
    damp1: f64,
    damp2: f64,
}

impl Comb {
    fn new(len: usize, feedback: f64, damp: f64) -> Self {
        Comb { buffer: vec![0.0; len], index: 0, store: 0.0, feedback, damp1: damp, damp2: 1.0 - damp }
    }

    fn process(&mut self, input: f64) -> f64 {
        let out = self.buffer[self.index];
        self.store = out * self.damp2 + self.store * self.damp1;
        self.buffer[self.index] = input + self.store * self.feedback;
        self.index += 1;
        if self.index == self.buffer.len() {
            self.index = 0;
        }
        out
    }
}

struct Allpass {
    buffer: Vec<f64>,
    index: usize,
}

impl Allpass {
    fn new(len: usize) -> Self {
        Allpass { buffer: vec![0.0; len], index: 0 }
    }

    fn process(&mut self, input: f64) -> f64 {
        let buffered = self.buffer[self.index];
        let out = buffered - input;
        self.buffer[self.index] = input + buffered * tuning::ALLPASS_FEEDBACK;
        self.index += 1;
        if self.index == self.buffer.len() {
            self.index = 0;
        }
        out
    }
}

/// One channel's worth of combs and allpasses.
struct Tank {
    combs: Vec<Comb>,
    allpasses: Vec<Allpass>,
}

impl Tank {
    fn new(params: &ReverbParams, sample_rate: f64, spread: usize) -> Self {
        let scale = |d: usize| (((d + spread) as f64) * sample_rate / tuning::REFERENCE_RATE).round().max(1.0) as usize;
        let damp = params.damping * tuning::SCALE_DAMP;
        Tank {
            combs: tuning::COMB_DELAYS.iter().map(|&d| Comb::new(scale(d), params.comb_feedback(), damp)).collect(),
            allpasses: tuning::ALLPASS_DELAYS.iter().map(|&d| Allpass::new(scale(d))).collect(),
        }
    }

    fn process(&mut self, input: f64) -> f64 {
        let summed: f64 = self.combs.iter_mut().map(|c| c.process(input)).sum();
        self.allpasses.iter_mut().fold(summed, |x, a| a.process(x))
    }
}

/// Reverberates the buffer. Stereo input feeds both tanks with the summed
/// channels; the right tank's delays are offset by the stereo spread and
/// `width` cross-mixes the two wet outputs. Mono input uses the left tank.
pub fn freeverb(buffer: &AudioBuffer, params: &ReverbParams) -> Result<AudioBuffer, EffectError> {
    params.validate()?;
    if params.wet_level == 0.0 {
        return Ok(buffer.clone());
    }
    let fs = buffer.sample_rate() as f64;
    let dry = 1.0 - params.wet_level;
    let wet1 = params.width / 2.0 + 0.5;
    let wet2 = (1.0 - params.width) / 2.0;
    let wet_gain = params.wet_level * tuning::SCALE_WET;
    let mut left = Tank::new(params, fs, 0);

    if buffer.channels() == 1 {
        let x = buffer.channel(0);
        let out = x
            .iter()
            .map(|&s| {
                let input = 2.0 * s * tuning::FIXED_GAIN;
                s * dry + wet_gain * left.process(input)
            })
            .collect();
        return Ok(AudioBuffer::mono(buffer.sample_rate(), out).expect("same shape as input"));
    }

    let mut right = Tank::new(params, fs, tuning::STEREO_SPREAD);
    let (l, r) = (buffer.channel(0), buffer.channel(1));
    let mut out_l = Vec::with_capacity(l.len());
    let mut out_r = Vec::with_capacity(r.len());
    for (&xl, &xr) in l.iter().zip(r) {
        let input = (xl + xr) * tuning::FIXED_GAIN;
        let wl = left.process(input);
        let wr = right.process(input);
        out_l.push(xl * dry + wet_gain * (wl * wet1 + wr * wet2));
        out_r.push(xr * dry + wet_gain * (wr * wet1 + wl * wet2));
    }
    Ok(AudioBuffer::new(buffer.sample_rate(), vec![out_l, out_r]).expect("same shape as input"))
}
