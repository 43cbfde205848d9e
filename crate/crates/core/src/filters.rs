//! Spectral filtering: analog prototype design for five IIR families, band
//! transformations and bilinear discretisation into second-order sections,
//! audio-cookbook parametric biquads, the 16-band graphic equalizer and the
//! random EQ samplers.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioBuffer;

type C64 = Complex64;

/// Stability margin required of every pole magnitude.
pub const STABILITY_MARGIN: f64 = 1e-9;

/// Tolerance for the Landen descending-modulus iteration.
const LANDEN_TOL: f64 = 1e-14;

/// Graphic EQ band centres in Hz.
pub const GRAPHIC_EQ_CENTERS: [f64; 16] = [
    25.0, 40.0, 63.0, 100.0, 160.0, 250.0, 400.0, 630.0, 1000.0, 1600.0, 2500.0, 4000.0, 6300.0,
    10000.0, 16000.0, 20000.0,
];

/// Scale factor applied to the centre/bandwidth ratio of each graphic EQ band.
pub const GRAPHIC_EQ_Q_SCALE: f64 = 2.5;

pub const EQ_GAIN_RANGE_DB: (f64, f64) = (-6.0, 6.0);
pub const Q_RANGE: (f64, f64) = (0.5, 10.0);
pub const RIPPLE_RANGE_DB: (f64, f64) = (0.1, 3.0);
pub const ATTENUATION_RANGE_DB: (f64, f64) = (20.0, 60.0);
pub const FILTER_ORDERS: [usize; 4] = [2, 4, 6, 8];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("unsupported filter order {0} (expected an even order in 2..=8)")]
    UnsupportedOrder(usize),
    #[error("passband ripple {0:?} dB outside [0.1, 3.0]")]
    Ripple(Option<f64>),
    #[error("stopband attenuation {0:?} dB outside [20, 60]")]
    Attenuation(Option<f64>),
    #[error("frequency {freq} Hz must lie in (0, {nyquist}) Hz")]
    Nyquist { freq: f64, nyquist: f64 },
    #[error("band edges must satisfy f1 < f2 (got {0} and {1})")]
    BandEdges(f64, f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("designed filter is unstable (pole magnitude {0})")]
    Unstable(f64),
}

/// Biquad transfer function with `a0` normalised to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiquadCoeffs {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl BiquadCoeffs {
    pub const IDENTITY: BiquadCoeffs = BiquadCoeffs { b0: 1.0, b1: 0.0, b2: 0.0, a1: 0.0, a2: 0.0 };

    fn normalized(b: [f64; 3], a: [f64; 3]) -> Self {
        BiquadCoeffs { b0: b[0] / a[0], b1: b[1] / a[0], b2: b[2] / a[0], a1: a[1] / a[0], a2: a[2] / a[0] }
    }

    /// Roots of `z² + a1·z + a2`.
    pub fn poles(&self) -> [C64; 2] {
        quadratic_roots(self.a1, self.a2)
    }

    pub fn max_pole_magnitude(&self) -> f64 {
        let [p, q] = self.poles();
        p.norm().max(q.norm())
    }

    pub fn is_stable(&self) -> bool {
        self.max_pole_magnitude() < 1.0 - STABILITY_MARGIN
            && [self.b0, self.b1, self.b2, self.a1, self.a2].iter().all(|c| c.is_finite())
    }

    /// Complex response at `z = e^{jω}`.
    pub fn response(&self, omega: f64) -> C64 {
        let z1 = C64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        (self.b0 + z1 * self.b1 + z2 * self.b2) / (1.0 + z1 * self.a1 + z2 * self.a2)
    }
}

fn quadratic_roots(b: f64, c: f64) -> [C64; 2] {
    let disc = C64::new(b * b - 4.0 * c, 0.0).sqrt();
    [(-b + disc) / 2.0, (-b - disc) / 2.0]
}

/// Cascade of biquads with an overall linear gain. An empty chain is the
/// identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SosChain {
    pub sections: Vec<BiquadCoeffs>,
    pub overall_gain: f64,
}

impl Default for SosChain {
    fn default() -> Self {
        SosChain { sections: Vec::new(), overall_gain: 1.0 }
    }
}

impl SosChain {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_sections(sections: Vec<BiquadCoeffs>) -> Self {
        SosChain { sections, overall_gain: 1.0 }
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(BiquadCoeffs::is_stable)
    }

    pub fn max_pole_magnitude(&self) -> f64 {
        self.sections.iter().map(BiquadCoeffs::max_pole_magnitude).fold(0.0, f64::max)
    }

    /// Series connection: `self` followed by `other`.
    pub fn then(mut self, other: SosChain) -> SosChain {
        self.sections.extend(other.sections);
        self.overall_gain *= other.overall_gain;
        self
    }

    pub fn response(&self, freq_hz: f64, sample_rate: f64) -> C64 {
        let omega = 2.0 * PI * freq_hz / sample_rate;
        self.sections
            .iter()
            .fold(C64::new(self.overall_gain, 0.0), |h, s| h * s.response(omega))
    }

    /// Runs the cascade over one channel with zero initial state.
    pub fn process_slice(&self, input: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = input.iter().map(|x| x * self.overall_gain).collect();
        for s in &self.sections {
            let (mut s1, mut s2) = (0.0, 0.0);
            for v in out.iter_mut() {
                let x = *v;
                let y = s.b0 * x + s1;
                s1 = s.b1 * x - s.a1 * y + s2;
                s2 = s.b2 * x - s.a2 * y;
                *v = y;
            }
        }
        out
    }
}

/// Transposed direct-form II filtering of every channel.
pub fn process_sos(chain: &SosChain, buffer: &AudioBuffer) -> AudioBuffer {
    if chain.sections.is_empty() && chain.overall_gain == 1.0 {
        return buffer.clone();
    }
    buffer.map_channels(|c| chain.process_slice(c))
}

/// Magnitude response in dB at each frequency.
pub fn frequency_response(chain: &SosChain, freqs: &[f64], sample_rate: f64) -> Vec<f64> {
    freqs
        .iter()
        .map(|&f| 20.0 * chain.response(f, sample_rate).norm().log10())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterFamily {
    Butterworth,
    Chebyshev1,
    Chebyshev2,
    Elliptic,
    Bessel,
}

impl FilterFamily {
    pub const ALL: [FilterFamily; 5] = [
        FilterFamily::Butterworth,
        FilterFamily::Chebyshev1,
        FilterFamily::Chebyshev2,
        FilterFamily::Elliptic,
        FilterFamily::Bessel,
    ];

    pub fn uses_ripple(self) -> bool {
        matches!(self, FilterFamily::Chebyshev1 | FilterFamily::Elliptic)
    }

    pub fn uses_attenuation(self) -> bool {
        matches!(self, FilterFamily::Chebyshev2 | FilterFamily::Elliptic)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Bandpass,
    Bandstop,
}

impl FilterKind {
    pub const ALL: [FilterKind; 4] =
        [FilterKind::Lowpass, FilterKind::Highpass, FilterKind::Bandpass, FilterKind::Bandstop];

    pub fn is_band(self) -> bool {
        matches!(self, FilterKind::Bandpass | FilterKind::Bandstop)
    }
}

/// Normalised analog lowpass prototype in zero/pole/gain form.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogPrototype {
    pub zeros: Vec<C64>,
    pub poles: Vec<C64>,
    pub gain: f64,
}

impl AnalogPrototype {
    pub fn response(&self, omega: f64) -> C64 {
        let s = C64::new(0.0, omega);
        let num = self.zeros.iter().fold(C64::new(self.gain, 0.0), |acc, z| acc * (s - z));
        self.poles.iter().fold(num, |acc, p| acc / (s - p))
    }

    pub fn magnitude_db(&self, omega: f64) -> f64 {
        20.0 * self.response(omega).norm().log10()
    }
}

/// Complete description of a standalone family filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDesignSpec {
    pub family: FilterFamily,
    pub kind: FilterKind,
    pub order: usize,
    /// Cutoff for low/high-pass, lower band edge for band kinds.
    pub cutoff_hz: f64,
    /// Upper band edge for band kinds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff2_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passband_ripple_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stopband_atten_db: Option<f64>,
}

impl FilterDesignSpec {
    /// Band edges around a single centre frequency: fractional bandwidth 1/Q
    /// when a Q is given, otherwise one octave, both geometric about `center`.
    pub fn band_edges(center_hz: f64, q: Option<f64>) -> (f64, f64) {
        match q {
            Some(q) => {
                let bw = 1.0 / q;
                // f2 - f1 = center/q and f1·f2 = center²
                let half = bw / 2.0;
                let ratio = half + (half * half + 1.0).sqrt();
                (center_hz / ratio, center_hz * ratio)
            }
            None => (center_hz / 2f64.sqrt(), center_hz * 2f64.sqrt()),
        }
    }

    pub fn validate(&self, sample_rate: f64) -> Result<(), FilterError> {
        if self.order < 2 || self.order > 8 || !self.order.is_multiple_of(2) {
            return Err(FilterError::UnsupportedOrder(self.order));
        }
        let nyquist = sample_rate / 2.0;
        let check = |f: f64| {
            if f > 0.0 && f < nyquist && f.is_finite() {
                Ok(())
            } else {
                Err(FilterError::Nyquist { freq: f, nyquist })
            }
        };
        check(self.cutoff_hz)?;
        if self.kind.is_band() {
            let f2 = self
                .cutoff2_hz
                .ok_or_else(|| FilterError::InvalidParameter("band filter needs an upper edge".into()))?;
            check(f2)?;
            if self.cutoff_hz >= f2 {
                return Err(FilterError::BandEdges(self.cutoff_hz, f2));
            }
        }
        check_prototype_params(self.family, self.passband_ripple_db, self.stopband_atten_db)
    }

    pub fn prototype(&self) -> Result<AnalogPrototype, FilterError> {
        design_prototype(self.family, self.order, self.passband_ripple_db, self.stopband_atten_db)
    }

    pub fn design(&self, sample_rate: f64) -> Result<SosChain, FilterError> {
        self.validate(sample_rate)?;
        let cutoffs = match self.kind {
            FilterKind::Lowpass | FilterKind::Highpass => vec![self.cutoff_hz],
            _ => vec![self.cutoff_hz, self.cutoff2_hz.unwrap_or_default()],
        };
        bilinear_to_sos(&self.prototype()?, self.kind, &cutoffs, sample_rate)
    }

    /// Maps a digital frequency to the magnitude of the corresponding
    /// normalised prototype frequency (|Ω| ≤ 1 is the prototype passband for
    /// every family except Chebyshev II, whose unit frequency is the stopband
    /// edge).
    pub fn prototype_frequency(&self, freq_hz: f64, sample_rate: f64) -> f64 {
        let warp = |f: f64| 2.0 * sample_rate * (PI * f / sample_rate).tan();
        let w = warp(freq_hz);
        let w1 = warp(self.cutoff_hz);
        match self.kind {
            FilterKind::Lowpass => w / w1,
            FilterKind::Highpass => w1 / w,
            FilterKind::Bandpass | FilterKind::Bandstop => {
                let w2 = warp(self.cutoff2_hz.unwrap_or(self.cutoff_hz));
                let bw = w2 - w1;
                let w0sq = w1 * w2;
                if self.kind == FilterKind::Bandpass {
                    ((w * w - w0sq) / (w * bw)).abs()
                } else {
                    (w * bw / (w0sq - w * w)).abs()
                }
            }
        }
    }

    /// Prototype frequency at which the designed stopband attenuation is
    /// reached, for the families that specify one.
    pub fn prototype_stopband_edge(&self) -> Option<f64> {
        match self.family {
            FilterFamily::Chebyshev2 => Some(1.0),
            FilterFamily::Elliptic => {
                let k = elliptic_selectivity(self.order, self.passband_ripple_db?, self.stopband_atten_db?);
                Some(1.0 / k)
            }
            _ => None,
        }
    }
}

fn check_prototype_params(family: FilterFamily, ripple: Option<f64>, atten: Option<f64>) -> Result<(), FilterError> {
    let within = |v: Option<f64>, (lo, hi): (f64, f64)| matches!(v, Some(x) if x >= lo && x <= hi);
    if family.uses_ripple() && !within(ripple, RIPPLE_RANGE_DB) {
        return Err(FilterError::Ripple(ripple));
    }
    if family.uses_attenuation() && !within(atten, ATTENUATION_RANGE_DB) {
        return Err(FilterError::Attenuation(atten));
    }
    Ok(())
}

/// Normalised analog lowpass prototype.
///
/// Butterworth, Chebyshev I, Elliptic and Bessel prototypes have their
/// passband edge (−3 dB for Butterworth and Bessel, −ripple for Chebyshev I and
/// Elliptic) at 1 rad/s; Chebyshev II has its stopband edge there.
pub fn design_prototype(
    family: FilterFamily,
    order: usize,
    ripple_db: Option<f64>,
    atten_db: Option<f64>,
) -> Result<AnalogPrototype, FilterError> {
    if !(2..=8).contains(&order) || !order.is_multiple_of(2) {
        return Err(FilterError::UnsupportedOrder(order));
    }
    check_prototype_params(family, ripple_db, atten_db)?;
    let proto = match family {
        FilterFamily::Butterworth => butterworth(order),
        FilterFamily::Chebyshev1 => chebyshev1(order, ripple_db.unwrap_or_default()),
        FilterFamily::Chebyshev2 => chebyshev2(order, atten_db.unwrap_or_default()),
        FilterFamily::Elliptic => elliptic(order, ripple_db.unwrap_or_default(), atten_db.unwrap_or_default()),
        FilterFamily::Bessel => bessel(order),
    };
    Ok(proto)
}

/// `m = -N+1, -N+3, ..., N-1`
fn odd_indices(order: usize) -> impl Iterator<Item = f64> {
    let n = order as i64;
    (0..order as i64).map(move |i| (-n + 1 + 2 * i) as f64)
}

fn real_product(values: impl Iterator<Item = C64>) -> C64 {
    values.fold(C64::new(1.0, 0.0), |acc, v| acc * v)
}

fn butterworth(order: usize) -> AnalogPrototype {
    let n = order as f64;
    let poles = odd_indices(order).map(|m| -C64::from_polar(1.0, PI * m / (2.0 * n))).collect();
    AnalogPrototype { zeros: Vec::new(), poles, gain: 1.0 }
}

fn chebyshev1(order: usize, ripple_db: f64) -> AnalogPrototype {
    let n = order as f64;
    let eps = (10f64.powf(0.1 * ripple_db) - 1.0).sqrt();
    let mu = (1.0 / eps).asinh() / n;
    let poles: Vec<C64> = odd_indices(order)
        .map(|m| {
            let theta = PI * m / (2.0 * n);
            -C64::new(mu.sinh() * theta.cos(), -mu.cosh() * theta.sin())
        })
        .collect();
    let mut gain = real_product(poles.iter().map(|p| -p)).re;
    if order.is_multiple_of(2) {
        gain /= (1.0 + eps * eps).sqrt();
    }
    AnalogPrototype { zeros: Vec::new(), poles, gain }
}

fn chebyshev2(order: usize, atten_db: f64) -> AnalogPrototype {
    let n = order as f64;
    let de = 1.0 / (10f64.powf(0.1 * atten_db) - 1.0).sqrt();
    let mu = (1.0 / de).asinh() / n;
    let zeros: Vec<C64> = odd_indices(order)
        .map(|m| -(C64::new(0.0, 1.0) / (m * PI / (2.0 * n)).sin()).conj())
        .collect();
    let poles: Vec<C64> = odd_indices(order)
        .map(|m| {
            let p = -C64::from_polar(1.0, PI * m / (2.0 * n));
            1.0 / C64::new(mu.sinh() * p.re, mu.cosh() * p.im)
        })
        .collect();
    let gain = (real_product(poles.iter().map(|p| -p)) / real_product(zeros.iter().map(|z| -z))).re;
    AnalogPrototype { zeros, poles, gain }
}

/// Descending Landen sequence of moduli, stopping once below the tolerance.
fn landen(k: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut k = k;
    while k > LANDEN_TOL && v.len() < 64 {
        let kp = ((1.0 - k) * (1.0 + k)).sqrt();
        k = (k / (1.0 + kp)).powi(2);
        v.push(k);
    }
    v
}

/// Complete elliptic integral K(k) via the Landen sequence.
pub fn elliptic_k(k: f64) -> f64 {
    landen(k).iter().fold(PI / 2.0, |acc, v| acc * (1.0 + v))
}

/// Jacobi cd(u·K, k) for complex normalised argument `u`.
fn cde(u: C64, k: f64) -> C64 {
    let v = landen(k);
    let mut w = (u * (PI / 2.0)).cos();
    for vn in v.iter().rev() {
        w = (1.0 + vn) * w / (1.0 + vn * w * w);
    }
    w
}

/// Jacobi sn(u·K, k) for complex normalised argument `u`.
fn sne(u: C64, k: f64) -> C64 {
    let v = landen(k);
    let mut w = (u * (PI / 2.0)).sin();
    for vn in v.iter().rev() {
        w = (1.0 + vn) * w / (1.0 + vn * w * w);
    }
    w
}

/// Inverse of [`sne`]: returns `u` with sn(u·K, k) = w.
fn asne(w: C64, k: f64) -> C64 {
    let v = landen(k);
    let mut w = w;
    let mut prev = k;
    for &vn in &v {
        w = w / (1.0 + (1.0 - w * w * prev * prev).sqrt()) * (2.0 / (1.0 + vn));
        prev = vn;
    }
    w.asin() * (2.0 / PI)
}

/// Solves the elliptic degree equation for the selectivity modulus `k`
/// (ratio of passband to stopband edge) given order, ripple and attenuation.
pub fn elliptic_selectivity(order: usize, ripple_db: f64, atten_db: f64) -> f64 {
    let ep = (10f64.powf(ripple_db / 10.0) - 1.0).sqrt();
    let es = (10f64.powf(atten_db / 10.0) - 1.0).sqrt();
    elliptic_degree(order, ep / es)
}

fn elliptic_degree(order: usize, k1: f64) -> f64 {
    let n = order as f64;
    let k1p = ((1.0 - k1) * (1.0 + k1)).sqrt();
    let prod = (1..=order / 2)
        .map(|i| sne(C64::new((2 * i - 1) as f64 / n, 0.0), k1p).re)
        .product::<f64>();
    let kp = k1p.powi(order as i32) * prod.powi(4);
    ((1.0 - kp) * (1.0 + kp)).sqrt()
}

fn elliptic(order: usize, ripple_db: f64, atten_db: f64) -> AnalogPrototype {
    let n = order as f64;
    let ep = (10f64.powf(ripple_db / 10.0) - 1.0).sqrt();
    let es = (10f64.powf(atten_db / 10.0) - 1.0).sqrt();
    let k1 = ep / es;
    let k = elliptic_degree(order, k1);
    let j = C64::new(0.0, 1.0);
    let v0 = (-j * asne(j / ep, k1) / n).re;

    let mut zeros = Vec::with_capacity(order);
    let mut poles = Vec::with_capacity(order);
    for i in 1..=order / 2 {
        let u = (2 * i - 1) as f64 / n;
        let zeta = cde(C64::new(u, 0.0), k);
        let z = j / (zeta * k);
        zeros.push(z);
        zeros.push(z.conj());
        let p = j * cde(C64::new(u, -v0), k);
        poles.push(p);
        poles.push(p.conj());
    }
    let h0 = 1.0 / (1.0 + ep * ep).sqrt();
    let gain = h0 * real_product(poles.iter().copied()).norm() / real_product(zeros.iter().copied()).norm();
    AnalogPrototype { zeros, poles, gain }
}

/// Reverse Bessel polynomial coefficients, ascending powers.
fn reverse_bessel_coeffs(order: usize) -> Vec<f64> {
    let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    (0..=order)
        .map(|k| fact(2 * order - k) / (2f64.powi((order - k) as i32) * fact(k) * fact(order - k)))
        .collect()
}

/// Durand–Kerner iteration for all roots of a real polynomial (ascending
/// coefficients), polished with Newton steps.
fn polynomial_roots(coeffs: &[f64]) -> Vec<C64> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: C64| monic.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c);
    let deriv = |z: C64| {
        monic
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, (i, &c)| acc * z + c * i as f64)
    };
    let radius = monic[0].abs().powf(1.0 / degree as f64).max(1.0);
    let seed = C64::new(0.4, 0.9);
    let mut roots: Vec<C64> = (0..degree).map(|i| seed.powu(i as u32 + 1) * radius).collect();
    for _ in 0..2000 {
        let mut delta = 0.0_f64;
        for i in 0..degree {
            let denom = (0..degree)
                .filter(|&j| j != i)
                .fold(C64::new(1.0, 0.0), |acc, j| acc * (roots[i] - roots[j]));
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm() / roots[i].norm().max(1e-300));
        }
        if delta < 1e-15 {
            break;
        }
    }
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let d = deriv(*r);
            if d.norm() > 0.0 {
                *r -= eval(*r) / d;
            }
        }
    }
    roots
}

fn bessel(order: usize) -> AnalogPrototype {
    let coeffs = reverse_bessel_coeffs(order);
    let mut poles = polynomial_roots(&coeffs);
    // enforce exact conjugate symmetry
    poles.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
    let half = order / 2;
    for i in 0..half {
        let p = C64::new((poles[i].re + poles[order - 1 - i].re) / 2.0, (poles[i].im - poles[order - 1 - i].im) / 2.0);
        poles[i] = p.conj();
        poles[order - 1 - i] = p;
    }
    let proto = |poles: Vec<C64>| {
        let gain = real_product(poles.iter().map(|p| -p)).re;
        AnalogPrototype { zeros: Vec::new(), poles, gain }
    };
    let delay_normalized = proto(poles.clone());
    // bisection for the −3 dB frequency
    let target = 0.5_f64;
    let (mut lo, mut hi) = (1e-3_f64, 1e3_f64);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if delay_normalized.response(mid).norm_sqr() > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w3 = (lo * hi).sqrt();
    proto(poles.iter().map(|p| p / w3).collect())
}

fn zpk_degree(zeros: &[C64], poles: &[C64]) -> usize {
    poles.len() - zeros.len()
}

fn lp2lp(p: &AnalogPrototype, wo: f64) -> AnalogPrototype {
    let d = zpk_degree(&p.zeros, &p.poles);
    AnalogPrototype {
        zeros: p.zeros.iter().map(|z| z * wo).collect(),
        poles: p.poles.iter().map(|x| x * wo).collect(),
        gain: p.gain * wo.powi(d as i32),
    }
}

fn lp2hp(p: &AnalogPrototype, wo: f64) -> AnalogPrototype {
    let d = zpk_degree(&p.zeros, &p.poles);
    let mut zeros: Vec<C64> = p.zeros.iter().map(|z| wo / z).collect();
    zeros.extend(std::iter::repeat_n(C64::new(0.0, 0.0), d));
    let gain = p.gain
        * (real_product(p.zeros.iter().map(|z| -z)) / real_product(p.poles.iter().map(|x| -x))).re;
    AnalogPrototype { zeros, poles: p.poles.iter().map(|x| wo / x).collect(), gain }
}

fn split_band(roots: impl Iterator<Item = C64>, wo: f64) -> Vec<C64> {
    let roots: Vec<C64> = roots.collect();
    let mut out = Vec::with_capacity(roots.len() * 2);
    for r in &roots {
        out.push(r + (r * r - wo * wo).sqrt());
    }
    for r in &roots {
        out.push(r - (r * r - wo * wo).sqrt());
    }
    out
}

fn lp2bp(p: &AnalogPrototype, wo: f64, bw: f64) -> AnalogPrototype {
    let d = zpk_degree(&p.zeros, &p.poles);
    let mut zeros = split_band(p.zeros.iter().map(|z| z * bw / 2.0), wo);
    zeros.extend(std::iter::repeat_n(C64::new(0.0, 0.0), d));
    AnalogPrototype {
        zeros,
        poles: split_band(p.poles.iter().map(|x| x * bw / 2.0), wo),
        gain: p.gain * bw.powi(d as i32),
    }
}

fn lp2bs(p: &AnalogPrototype, wo: f64, bw: f64) -> AnalogPrototype {
    let d = zpk_degree(&p.zeros, &p.poles);
    let mut zeros = split_band(p.zeros.iter().map(|z| (bw / 2.0) / z), wo);
    zeros.extend(std::iter::repeat_n(C64::new(0.0, wo), d));
    zeros.extend(std::iter::repeat_n(C64::new(0.0, -wo), d));
    let gain = p.gain
        * (real_product(p.zeros.iter().map(|z| -z)) / real_product(p.poles.iter().map(|x| -x))).re;
    AnalogPrototype { zeros, poles: split_band(p.poles.iter().map(|x| (bw / 2.0) / x), wo), gain }
}

struct DigitalZpk {
    zeros: Vec<C64>,
    poles: Vec<C64>,
    gain: f64,
}

fn bilinear_zpk(p: &AnalogPrototype, fs: f64) -> DigitalZpk {
    let fs2 = 2.0 * fs;
    let d = zpk_degree(&p.zeros, &p.poles);
    let mut zeros: Vec<C64> = p.zeros.iter().map(|z| (fs2 + z) / (fs2 - z)).collect();
    zeros.extend(std::iter::repeat_n(C64::new(-1.0, 0.0), d));
    let gain = p.gain
        * (real_product(p.zeros.iter().map(|z| fs2 - z)) / real_product(p.poles.iter().map(|x| fs2 - x))).re;
    DigitalZpk { zeros, poles: p.poles.iter().map(|x| (fs2 + x) / (fs2 - x)).collect(), gain }
}

/// Splits roots into conjugate pairs (taking the upper-half-plane member) and
/// real roots.
fn conjugate_pairs(roots: &[C64]) -> (Vec<C64>, Vec<f64>) {
    let tol = 1e-9;
    let mut complex = Vec::new();
    let mut real = Vec::new();
    for r in roots {
        if r.im.abs() <= tol * r.norm().max(1.0) {
            real.push(r.re);
        } else if r.im > 0.0 {
            complex.push(*r);
        }
    }
    real.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (complex, real)
}

/// Groups digital poles and zeros into biquads: pole pairs nearest the unit
/// circle first, each matched with its nearest remaining zeros.
fn zpk_to_sos(zpk: &DigitalZpk) -> SosChain {
    let (cpoles, rpoles) = conjugate_pairs(&zpk.poles);
    let mut pole_pairs: Vec<(C64, C64)> = cpoles.iter().map(|p| (*p, p.conj())).collect();
    for pair in rpoles.chunks(2) {
        let second = pair.get(1).copied().unwrap_or(0.0);
        pole_pairs.push((C64::new(pair[0], 0.0), C64::new(second, 0.0)));
    }
    pole_pairs.sort_by(|a, b| {
        let ma = a.0.norm().max(a.1.norm());
        let mb = b.0.norm().max(b.1.norm());
        mb.partial_cmp(&ma).unwrap()
    });

    let (czeros, rzeros) = conjugate_pairs(&zpk.zeros);
    let mut czeros = czeros;
    let mut rzeros = rzeros;
    let mut sections = Vec::with_capacity(pole_pairs.len());
    for (p1, p2) in pole_pairs {
        let nearest_complex = czeros
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (z - p1).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let nearest_real = rzeros
            .iter()
            .enumerate()
            .map(|(i, z)| (i, (C64::new(*z, 0.0) - p1).norm()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let use_complex = match (nearest_complex, nearest_real) {
            (Some(c), Some(r)) => c.1 <= r.1 || rzeros.len() < 2,
            (Some(_), None) => true,
            _ => false,
        };
        let b = if use_complex {
            let z = czeros.remove(nearest_complex.unwrap().0);
            [1.0, -2.0 * z.re, z.norm_sqr()]
        } else if !rzeros.is_empty() {
            let z1 = rzeros.remove(nearest_real.unwrap().0);
            let z2 = if rzeros.is_empty() {
                None
            } else {
                let j = rzeros
                    .iter()
                    .enumerate()
                    .min_by(|a, b| {
                        (C64::new(*a.1, 0.0) - p2).norm().partial_cmp(&(C64::new(*b.1, 0.0) - p2).norm()).unwrap()
                    })
                    .unwrap()
                    .0;
                Some(rzeros.remove(j))
            };
            match z2 {
                Some(z2) => [1.0, -(z1 + z2), z1 * z2],
                None => [1.0, -z1, 0.0],
            }
        } else {
            [1.0, 0.0, 0.0]
        };
        let a = [1.0, -(p1 + p2).re, (p1 * p2).re];
        sections.push(BiquadCoeffs::normalized(b, a));
    }
    SosChain { sections, overall_gain: zpk.gain }
}

/// Frequency-transforms the prototype (with bilinear pre-warping of every
/// edge) and discretises it into second-order sections.
pub fn bilinear_to_sos(
    prototype: &AnalogPrototype,
    kind: FilterKind,
    cutoffs_hz: &[f64],
    sample_rate: f64,
) -> Result<SosChain, FilterError> {
    let nyquist = sample_rate / 2.0;
    for &f in cutoffs_hz {
        if !(f > 0.0 && f < nyquist) {
            return Err(FilterError::Nyquist { freq: f, nyquist });
        }
    }
    let warp = |f: f64| 2.0 * sample_rate * (PI * f / sample_rate).tan();
    let analog = match (kind, cutoffs_hz) {
        (FilterKind::Lowpass, [f, ..]) => lp2lp(prototype, warp(*f)),
        (FilterKind::Highpass, [f, ..]) => lp2hp(prototype, warp(*f)),
        (FilterKind::Bandpass | FilterKind::Bandstop, [f1, f2, ..]) => {
            if f1 >= f2 {
                return Err(FilterError::BandEdges(*f1, *f2));
            }
            let (w1, w2) = (warp(*f1), warp(*f2));
            let (wo, bw) = ((w1 * w2).sqrt(), w2 - w1);
            if kind == FilterKind::Bandpass {
                lp2bp(prototype, wo, bw)
            } else {
                lp2bs(prototype, wo, bw)
            }
        }
        _ => {
            return Err(FilterError::InvalidParameter(format!(
                "{kind:?} needs {} cutoff(s)",
                if kind.is_band() { 2 } else { 1 }
            )))
        }
    };
    let chain = zpk_to_sos(&bilinear_zpk(&analog, sample_rate));
    if !chain.is_stable() {
        return Err(FilterError::Unstable(chain.max_pole_magnitude()));
    }
    Ok(chain)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandType {
    Lowpass,
    Highpass,
    Bandpass,
    Bandstop,
    Peak,
    Lowshelf,
    Highshelf,
}

impl BandType {
    pub const ALL: [BandType; 7] = [
        BandType::Lowpass,
        BandType::Highpass,
        BandType::Bandpass,
        BandType::Bandstop,
        BandType::Peak,
        BandType::Lowshelf,
        BandType::Highshelf,
    ];

    /// Centre/corner frequency range in Hz used by the parametric sampler.
    pub fn frequency_range(self) -> (f64, f64) {
        match self {
            BandType::Lowpass => (200.0, 8000.0),
            BandType::Highpass => (20.0, 2000.0),
            BandType::Bandpass | BandType::Bandstop | BandType::Peak => (100.0, 8000.0),
            BandType::Lowshelf => (50.0, 1000.0),
            BandType::Highshelf => (1000.0, 10000.0),
        }
    }

    pub fn uses_gain(self) -> bool {
        matches!(self, BandType::Peak | BandType::Lowshelf | BandType::Highshelf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParametricBand {
    pub band_type: BandType,
    pub fc: f64,
    pub q: f64,
    pub gain_db: f64,
}

impl ParametricBand {
    /// Checks the sampler ranges for frequency, Q and gain.
    pub fn check_ranges(&self) -> Result<(), FilterError> {
        let (lo, hi) = self.band_type.frequency_range();
        if !(self.fc >= lo && self.fc <= hi) {
            return Err(FilterError::InvalidParameter(format!(
                "{:?} frequency {} Hz outside [{lo}, {hi}]",
                self.band_type, self.fc
            )));
        }
        if !(self.q >= Q_RANGE.0 && self.q <= Q_RANGE.1) {
            return Err(FilterError::InvalidParameter(format!("Q {} outside [0.5, 10]", self.q)));
        }
        if !(self.gain_db >= EQ_GAIN_RANGE_DB.0 && self.gain_db <= EQ_GAIN_RANGE_DB.1) {
            return Err(FilterError::InvalidParameter(format!("gain {} dB outside [-6, 6]", self.gain_db)));
        }
        Ok(())
    }
}

/// Audio-EQ-cookbook biquad for one parametric band.
pub fn rbj_biquad(band: &ParametricBand, sample_rate: f64) -> Result<BiquadCoeffs, FilterError> {
    let nyquist = sample_rate / 2.0;
    if !(band.fc > 0.0 && band.fc < nyquist) {
        return Err(FilterError::Nyquist { freq: band.fc, nyquist });
    }
    if !(band.q > 0.0) || !band.gain_db.is_finite() {
        return Err(FilterError::InvalidParameter(format!("Q {} / gain {}", band.q, band.gain_db)));
    }
    let w0 = 2.0 * PI * band.fc / sample_rate;
    let (sin, cos) = w0.sin_cos();
    let alpha = sin / (2.0 * band.q);
    let a = 10f64.powf(band.gain_db / 40.0);
    let (b, den) = match band.band_type {
        BandType::Lowpass => (
            [(1.0 - cos) / 2.0, 1.0 - cos, (1.0 - cos) / 2.0],
            [1.0 + alpha, -2.0 * cos, 1.0 - alpha],
        ),
        BandType::Highpass => (
            [(1.0 + cos) / 2.0, -(1.0 + cos), (1.0 + cos) / 2.0],
            [1.0 + alpha, -2.0 * cos, 1.0 - alpha],
        ),
        BandType::Bandpass => ([alpha, 0.0, -alpha], [1.0 + alpha, -2.0 * cos, 1.0 - alpha]),
        BandType::Bandstop => ([1.0, -2.0 * cos, 1.0], [1.0 + alpha, -2.0 * cos, 1.0 - alpha]),
        BandType::Peak => (
            [1.0 + alpha * a, -2.0 * cos, 1.0 - alpha * a],
            [1.0 + alpha / a, -2.0 * cos, 1.0 - alpha / a],
        ),
        BandType::Lowshelf => {
            let k = 2.0 * a.sqrt() * alpha;
            (
                [
                    a * ((a + 1.0) - (a - 1.0) * cos + k),
                    2.0 * a * ((a - 1.0) - (a + 1.0) * cos),
                    a * ((a + 1.0) - (a - 1.0) * cos - k),
                ],
                [(a + 1.0) + (a - 1.0) * cos + k, -2.0 * ((a - 1.0) + (a + 1.0) * cos), (a + 1.0) + (a - 1.0) * cos - k],
            )
        }
        BandType::Highshelf => {
            let k = 2.0 * a.sqrt() * alpha;
            (
                [
                    a * ((a + 1.0) + (a - 1.0) * cos + k),
                    -2.0 * a * ((a - 1.0) + (a + 1.0) * cos),
                    a * ((a + 1.0) + (a - 1.0) * cos - k),
                ],
                [(a + 1.0) - (a - 1.0) * cos + k, 2.0 * ((a - 1.0) - (a + 1.0) * cos), (a + 1.0) - (a - 1.0) * cos - k],
            )
        }
    };
    Ok(BiquadCoeffs::normalized(b, den))
}

/// Cascade of cookbook biquads in the given band order.
pub fn parametric_eq(bands: &[ParametricBand], sample_rate: f64) -> Result<SosChain, FilterError> {
    Ok(SosChain::from_sections(
        bands.iter().map(|b| rbj_biquad(b, sample_rate)).collect::<Result<_, _>>()?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphicEqSettings {
    pub gains_db: [f64; 16],
}

impl GraphicEqSettings {
    pub fn flat() -> Self {
        GraphicEqSettings { gains_db: [0.0; 16] }
    }
}

/// Lower and upper edges of graphic EQ band `index`: geometric means of
/// adjacent centres, extrapolated symmetrically (in log frequency) at both
/// ends.
pub fn graphic_eq_band_edges(index: usize) -> (f64, f64) {
    let c = &GRAPHIC_EQ_CENTERS;
    let last = c.len() - 1;
    let lower = if index == 0 { c[0] / (c[1] / c[0]).sqrt() } else { (c[index - 1] * c[index]).sqrt() };
    let upper = if index == last {
        c[last] * (c[last] / c[last - 1]).sqrt()
    } else {
        (c[index] * c[index + 1]).sqrt()
    };
    (lower, upper)
}

pub fn graphic_eq_q(index: usize) -> f64 {
    let (lower, upper) = graphic_eq_band_edges(index);
    GRAPHIC_EQ_CENTERS[index] / (upper - lower) * GRAPHIC_EQ_Q_SCALE
}

/// One peak biquad per band in ascending frequency. Bands whose centre is at
/// or above Nyquist cannot be realised and are left out.
pub fn graphic_eq(settings: &GraphicEqSettings, sample_rate: f64) -> Result<SosChain, FilterError> {
    let nyquist = sample_rate / 2.0;
    let mut sections = Vec::with_capacity(16);
    for (i, (&fc, &gain_db)) in GRAPHIC_EQ_CENTERS.iter().zip(&settings.gains_db).enumerate() {
        if fc >= nyquist {
            continue;
        }
        let band = ParametricBand { band_type: BandType::Peak, fc, q: graphic_eq_q(i), gain_db };
        sections.push(rbj_biquad(&band, sample_rate)?);
    }
    Ok(SosChain::from_sections(sections))
}

/// Sampling ranges shared by the three equalizer variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EqRanges {
    pub gain_db: (f64, f64),
    pub q: (f64, f64),
    pub ripple_db: (f64, f64),
    pub attenuation_db: (f64, f64),
}

impl Default for EqRanges {
    fn default() -> Self {
        EqRanges { gain_db: EQ_GAIN_RANGE_DB, q: Q_RANGE, ripple_db: RIPPLE_RANGE_DB, attenuation_db: ATTENUATION_RANGE_DB }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo < hi {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn sample_parametric_eq<R: Rng + ?Sized>(rng: &mut R) -> Vec<ParametricBand> {
    sample_parametric_eq_in(rng, &EqRanges::default())
}

/// One to five bands of uniformly chosen type, each parameter uniform over
/// its range.
pub fn sample_parametric_eq_in<R: Rng + ?Sized>(rng: &mut R, ranges: &EqRanges) -> Vec<ParametricBand> {
    let count = rng.random_range(1..=5);
    (0..count)
        .map(|_| {
            let band_type = BandType::ALL[rng.random_range(0..BandType::ALL.len())];
            ParametricBand {
                band_type,
                fc: uniform(rng, band_type.frequency_range()),
                q: uniform(rng, ranges.q),
                gain_db: uniform(rng, ranges.gain_db),
            }
        })
        .collect()
}

pub fn sample_graphic_eq<R: Rng + ?Sized>(rng: &mut R) -> GraphicEqSettings {
    sample_graphic_eq_in(rng, &EqRanges::default())
}

pub fn sample_graphic_eq_in<R: Rng + ?Sized>(rng: &mut R, ranges: &EqRanges) -> GraphicEqSettings {
    let mut gains_db = [0.0; 16];
    for g in gains_db.iter_mut() {
        *g = uniform(rng, ranges.gain_db);
    }
    GraphicEqSettings { gains_db }
}

/// Cutoff (low/high-pass) or centre (band kinds) range in Hz for sampled
/// family filters.
pub fn design_frequency_range(kind: FilterKind) -> (f64, f64) {
    match kind {
        FilterKind::Lowpass => BandType::Lowpass.frequency_range(),
        FilterKind::Highpass => BandType::Highpass.frequency_range(),
        FilterKind::Bandpass | FilterKind::Bandstop => BandType::Bandpass.frequency_range(),
    }
}

pub fn sample_filter_design<R: Rng + ?Sized>(rng: &mut R) -> FilterDesignSpec {
    sample_filter_design_in(rng, &EqRanges::default())
}

pub fn sample_filter_design_in<R: Rng + ?Sized>(rng: &mut R, ranges: &EqRanges) -> FilterDesignSpec {
    let family = FilterFamily::ALL[rng.random_range(0..FilterFamily::ALL.len())];
    let kind = FilterKind::ALL[rng.random_range(0..FilterKind::ALL.len())];
    let order = FILTER_ORDERS[rng.random_range(0..FILTER_ORDERS.len())];
    let freq = uniform(rng, design_frequency_range(kind));
    let (cutoff_hz, cutoff2_hz) = if kind.is_band() {
        let (f1, f2) = FilterDesignSpec::band_edges(freq, None);
        (f1, Some(f2))
    } else {
        (freq, None)
    };
    let passband_ripple_db = family.uses_ripple().then(|| uniform(rng, ranges.ripple_db));
    let stopband_atten_db = family.uses_attenuation().then(|| uniform(rng, ranges.attenuation_db));
    FilterDesignSpec { family, kind, order, cutoff_hz, cutoff2_hz, passband_ripple_db, stopband_atten_db }
}
