//! Receive-side estimation chain.
//!
//! 1. [`average_spectrum`]: mean magnitude spectrum over (overlapping) windows
//!    that each span a whole number of code periods, so every harmonic lands
//!    on an FFT bin.
//! 2. [`detect_harmonics`]: read the line magnitude `M_n` at `center + n f0`,
//!    either with a known `f0` or after a blind comb search.
//! 3. [`estimate_aoa`]: weight each harmonic pattern by its measured
//!    magnitude, sum, and take the peak.

use std::collections::BTreeSet;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::PatternLibrary;
use crate::channel::Waveform;

/// Minimum comb prominence accepted by blind detection.
pub const DEFAULT_COMB_THRESHOLD: f64 = 0.2;

/// Spectrum bins above this multiple of the median count as lines.
const LINE_FLOOR_FACTOR: f64 = 6.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReceiverError {
    #[error("waveform has {samples} samples but a window needs {window}")]
    TooShort { samples: usize, window: usize },
    #[error("invalid receiver setting: {0}")]
    Invalid(String),
    #[error("spectrum resolution {resolution} Hz is not finer than f0/4 = {limit} Hz")]
    CoarseResolution { resolution: f64, limit: f64 },
    #[error("no harmonic comb found (confidence {confidence:.3} < {threshold})")]
    NoCombFound { confidence: f64, threshold: f64 },
    #[error(
        "measurement covers |n| <= {measurement} but the pattern library covers |n| <= {library}"
    )]
    OrderMismatch { measurement: i64, library: i64 },
    #[error("no harmonic orders left after exclusion")]
    EmptyAfterExclusion,
    #[error("included harmonic magnitudes are negligible next to the excluded ones")]
    NoSignal,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, schemars::JsonSchema,
)]
#[serde(rename_all = "snake_case")]
pub enum WindowFunction {
    #[default]
    Rectangular,
    Hann,
}

impl WindowFunction {
    fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Self::Rectangular => vec![1.0; len],
            Self::Hann => (0..len)
                .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / len as f64).cos())
                .collect(),
        }
    }
}

/// How measured magnitudes and patterns are combined.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, schemars::JsonSchema,
)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    /// Linear field magnitudes.
    #[default]
    Linear,
    /// Squared magnitudes on both factors.
    Power,
}

/// How library patterns are scaled before they are weighted and summed.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, schemars::JsonSchema,
)]
#[serde(rename_all = "snake_case")]
pub enum PatternScaling {
    /// One scale for all orders, so relative harmonic gains survive.
    #[default]
    Common,
    /// Each order divided by its own peak.
    PerHarmonic,
    /// Common scale, then each angle divided by the norm of its pattern
    /// vector (a normalized matched filter).
    Matched,
}

/// Mean magnitude spectrum, bins in ascending frequency (negative first).
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedSpectrum {
    pub frequencies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub window_length: usize,
    pub hop: usize,
    pub num_windows: usize,
    pub sample_rate: f64,
}

impl AveragedSpectrum {
    pub fn resolution(&self) -> f64 {
        self.sample_rate / self.window_length as f64
    }

    /// Fractional bin index of `freq` in the shifted layout.
    fn position(&self, freq: f64) -> f64 {
        freq / self.resolution() + (self.window_length / 2) as f64
    }

    pub fn nearest_bin(&self, freq: f64) -> Option<usize> {
        let p = self.position(freq).round();
        (p >= 0.0 && (p as usize) < self.magnitudes.len()).then_some(p as usize)
    }

    /// Quadratic interpolation through the three bins around `freq`,
    /// evaluated at `freq` itself.
    pub fn interpolate(&self, freq: f64) -> f64 {
        let pos = self.position(freq);
        let k = pos.round();
        if k < 0.0 || k as usize >= self.magnitudes.len() {
            return 0.0;
        }
        let k = k as usize;
        let y0 = self.magnitudes[k];
        if k == 0 || k + 1 >= self.magnitudes.len() {
            return y0;
        }
        let (ym, yp) = (self.magnitudes[k - 1], self.magnitudes[k + 1]);
        let d = pos - k as f64;
        (y0 + 0.5 * d * (yp - ym) + 0.5 * d * d * (yp - 2.0 * y0 + ym)).max(0.0)
    }

    fn median(&self) -> f64 {
        let mut sorted = self.magnitudes.clone();
        sorted.sort_by(f64::total_cmp);
        sorted[sorted.len() / 2]
    }

    /// CSV with header `freq_hz,magnitude`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["freq_hz", "magnitude"])?;
        for (f, m) in self.frequencies.iter().zip(&self.magnitudes) {
            wtr.write_record([f.to_string(), m.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Averages the magnitude spectra of windows spanning `window_periods` code
/// periods, advancing by `(1 - overlap_fraction)` of a window each time.
pub fn average_spectrum(
    w: &Waveform,
    window_periods: usize,
    overlap_fraction: f64,
    window: WindowFunction,
) -> Result<AveragedSpectrum, ReceiverError> {
    if window_periods == 0 {
        return Err(ReceiverError::Invalid(
            "window must span at least one code period".into(),
        ));
    }
    if w.f0().is_nan() || w.f0() <= 0.0 {
        return Err(ReceiverError::Invalid(
            "waveform carries no code frequency".into(),
        ));
    }
    let len = (window_periods as f64 * w.sample_rate() / w.f0()).round() as usize;
    average_spectrum_samples(w, len, overlap_fraction, window)
}

/// Same as [`average_spectrum`] with the window length given in samples.
pub fn average_spectrum_samples(
    w: &Waveform,
    window_length: usize,
    overlap_fraction: f64,
    window: WindowFunction,
) -> Result<AveragedSpectrum, ReceiverError> {
    if !(0.0..1.0).contains(&overlap_fraction) {
        return Err(ReceiverError::Invalid(format!(
            "overlap must lie in [0, 1), got {overlap_fraction}"
        )));
    }
    if window_length < 2 {
        return Err(ReceiverError::Invalid(
            "window must contain at least two samples".into(),
        ));
    }
    if w.len() < window_length {
        return Err(ReceiverError::TooShort {
            samples: w.len(),
            window: window_length,
        });
    }
    let hop = ((window_length as f64 * (1.0 - overlap_fraction)).round() as usize)
        .clamp(1, window_length);
    let num_windows = (w.len() - window_length) / hop + 1;
    let coeffs = window.coefficients(window_length);
    let gain: f64 = coeffs.iter().sum();
    let fft = FftPlanner::new().plan_fft_forward(window_length);

    let mut acc = vec![0.0; window_length];
    let mut buf = vec![Complex64::new(0.0, 0.0); window_length];
    for k in 0..num_windows {
        let start = k * hop;
        for (b, (s, c)) in buf
            .iter_mut()
            .zip(w.samples[start..start + window_length].iter().zip(&coeffs))
        {
            *b = s * c;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm();
        }
    }

    let fs = w.sample_rate();
    let half = window_length.div_ceil(2);
    let scale = 1.0 / (gain * num_windows as f64);
    let (frequencies, magnitudes) = (0..window_length)
        .map(|j| {
            let k = (j + half) % window_length;
            let signed = if k < half {
                k as f64
            } else {
                k as f64 - window_length as f64
            };
            (signed * fs / window_length as f64, acc[k] * scale)
        })
        .unzip();
    Ok(AveragedSpectrum {
        frequencies,
        magnitudes,
        window_length,
        hop,
        num_windows,
        sample_rate: fs,
    })
}

/// Line magnitudes `M_n` for `n` in `[-n_max, n_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMeasurement {
    pub n_max: i64,
    pub magnitudes: Vec<f64>,
    pub f0_hz: f64,
    pub center_hz: f64,
    pub confidence: f64,
    /// Orders flagged for exclusion from estimation (carrier leak sits at n = 0).
    pub excluded_orders: BTreeSet<i64>,
}

impl HarmonicMeasurement {
    /// Measurement with explicit magnitudes, mostly for tests and replay.
    pub fn from_magnitudes(magnitudes: Vec<f64>, f0_hz: f64) -> Self {
        let n_max = (magnitudes.len() as i64 - 1) / 2;
        Self {
            n_max,
            magnitudes,
            f0_hz,
            center_hz: 0.0,
            confidence: 1.0,
            excluded_orders: BTreeSet::from([0]),
        }
    }

    pub fn magnitude(&self, n: i64) -> Option<f64> {
        (n.abs() <= self.n_max).then(|| self.magnitudes[(n + self.n_max) as usize])
    }

    pub fn orders(&self) -> impl Iterator<Item = i64> {
        -self.n_max..=self.n_max
    }

    /// Order with the largest magnitude, ignoring the flagged exclusions.
    pub fn strongest(&self) -> Option<i64> {
        self.orders()
            .filter(|n| !self.excluded_orders.contains(n))
            .max_by(|a, b| {
                self.magnitude(*a)
                    .unwrap()
                    .total_cmp(&self.magnitude(*b).unwrap())
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectSettings {
    /// Comb center, e.g. a surface's frequency offset.
    pub center_hz: f64,
    pub threshold: f64,
    pub exclude_orders: BTreeSet<i64>,
}

impl Default for DetectSettings {
    fn default() -> Self {
        Self {
            center_hz: 0.0,
            threshold: DEFAULT_COMB_THRESHOLD,
            exclude_orders: BTreeSet::from([0]),
        }
    }
}

fn line_threshold(spec: &AveragedSpectrum) -> f64 {
    let peak = spec.magnitudes.iter().cloned().fold(0.0, f64::max);
    (LINE_FLOOR_FACTOR * spec.median()).max(1e-9 * peak)
}

/// Log-compressed so a comb is rewarded for how many lines it explains
/// rather than for landing one tooth on the loudest line.
fn comb_score(spec: &AveragedSpectrum, center: f64, f0: f64, n_max: i64, floor: f64) -> f64 {
    (-n_max..=n_max)
        .filter(|&n| n != 0)
        .map(|n| {
            (spec.interpolate(center + n as f64 * f0) / floor)
                .max(1.0)
                .ln()
        })
        .sum()
}

/// Frequency spacing of the strongest lines, used to bracket the comb search.
fn spacing_prior(spec: &AveragedSpectrum, center: f64, floor: f64) -> Option<f64> {
    let m = &spec.magnitudes;
    let peaks: Vec<f64> = (0..m.len())
        .filter(|&i| {
            m[i] > floor && (i == 0 || m[i] >= m[i - 1]) && (i + 1 == m.len() || m[i] >= m[i + 1])
        })
        .map(|i| spec.frequencies[i] - center)
        .collect();
    let min_gap = peaks
        .windows(2)
        .map(|p| p[1] - p[0])
        .filter(|&g| g > 1.5 * spec.resolution())
        .fold(f64::INFINITY, f64::min);
    if min_gap.is_finite() {
        Some(min_gap)
    } else {
        peaks
            .iter()
            .map(|f| f.abs())
            .find(|&f| f > 1.5 * spec.resolution())
    }
}

/// Reads `M_n` for `|n| <= n_max` at `center + n f0`.
///
/// Without `f0_hint` the fundamental comes from a comb search over
/// `[0.5, 1.5]` times the spacing of the strongest spectral lines. Its
/// confidence is how far the winning comb stands above the best candidate
/// outside its own peak, so a lone line that fits several fundamentals scores
/// near zero; below `settings.threshold` the search fails with
/// [`ReceiverError::NoCombFound`]. With a hint, the confidence is the fraction of
/// non-zero orders standing above the noise floor and never fails.
pub fn detect_harmonics(
    spec: &AveragedSpectrum,
    f0_hint: Option<f64>,
    n_max: i64,
    settings: &DetectSettings,
) -> Result<HarmonicMeasurement, ReceiverError> {
    if n_max < 0 {
        return Err(ReceiverError::Invalid("n_max must be >= 0".into()));
    }
    let floor = line_threshold(spec);
    let center = settings.center_hz;
    let (f0, confidence) = match f0_hint {
        Some(f0) => {
            if f0.is_nan() || f0 <= 0.0 {
                return Err(ReceiverError::Invalid(format!(
                    "f0 hint must be > 0, got {f0}"
                )));
            }
            let above = (-n_max..=n_max)
                .filter(|&n| n != 0 && spec.interpolate(center + n as f64 * f0) > floor)
                .count();
            let total = (2 * n_max).max(1) as f64;
            (f0, above as f64 / total)
        }
        None => blind_fundamental(spec, center, n_max, floor, settings.threshold)?,
    };
    let limit = f0 / 4.0;
    if spec.resolution() > limit * (1.0 + 1e-9) {
        return Err(ReceiverError::CoarseResolution {
            resolution: spec.resolution(),
            limit,
        });
    }
    let magnitudes = (-n_max..=n_max)
        .map(|n| spec.interpolate(center + n as f64 * f0))
        .collect();
    Ok(HarmonicMeasurement {
        n_max,
        magnitudes,
        f0_hz: f0,
        center_hz: center,
        confidence,
        excluded_orders: settings.exclude_orders.clone(),
    })
}

fn blind_fundamental(
    spec: &AveragedSpectrum,
    center: f64,
    n_max: i64,
    floor: f64,
    threshold: f64,
) -> Result<(f64, f64), ReceiverError> {
    let no_comb = |confidence| ReceiverError::NoCombFound {
        confidence,
        threshold,
    };
    if n_max == 0 {
        return Err(no_comb(0.0));
    }
    let prior = spacing_prior(spec, center, floor).ok_or_else(|| no_comb(0.0))?;
    let step = spec.resolution() / (4.0 * n_max as f64);
    let count = (prior / step).ceil() as usize;
    let scores: Vec<(f64, f64)> = (0..=count)
        .map(|i| {
            let f = 0.5 * prior + i as f64 * step;
            (f, comb_score(spec, center, f, n_max, floor))
        })
        .collect();
    let best_i = (0..scores.len()).fold(0, |b, i| if scores[i].1 > scores[b].1 { i } else { b });
    let (best_f, best) = scores[best_i];
    // walk down both flanks of the winning peak; anything beyond competes
    let mut lo = best_i;
    while lo > 0 && scores[lo - 1].1 <= scores[lo].1 {
        lo -= 1;
    }
    let mut hi = best_i;
    while hi + 1 < scores.len() && scores[hi + 1].1 <= scores[hi].1 {
        hi += 1;
    }
    let rival = scores[..lo]
        .iter()
        .chain(&scores[hi + 1..])
        .map(|s| s.1)
        .fold(0.0, f64::max);
    let confidence = if best > 0.0 {
        (best - rival) / best
    } else {
        0.0
    };
    if confidence < threshold {
        return Err(no_comb(confidence));
    }
    Ok((best_f, confidence))
}

/// Estimated angle of arrival with the combined profile it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AoaEstimate {
    pub angle_deg: f64,
    /// `[angle_deg, value]` pairs.
    pub profile: Vec<(f64, f64)>,
    /// Main peak over the strongest other local maximum; `None` when the
    /// profile has a single local maximum.
    pub psr: Option<f64>,
    pub excluded_orders: Vec<i64>,
    pub f0_used: f64,
}

impl AoaEstimate {
    pub fn peak_to_second_peak_ratio(&self) -> f64 {
        self.psr.unwrap_or(f64::INFINITY)
    }
}

/// Sums the library patterns weighted by the measured magnitudes and returns
/// the peak; equal peaks resolve toward the smaller |angle|.
pub fn estimate_aoa(
    meas: &HarmonicMeasurement,
    library: &PatternLibrary,
    exclude: &BTreeSet<i64>,
    combination: Combination,
    scaling: PatternScaling,
) -> Result<AoaEstimate, ReceiverError> {
    if meas.n_max != library.n_max() {
        return Err(ReceiverError::OrderMismatch {
            measurement: meas.n_max,
            library: library.n_max(),
        });
    }
    let included: Vec<i64> = meas.orders().filter(|n| !exclude.contains(n)).collect();
    if included.is_empty() {
        return Err(ReceiverError::EmptyAfterExclusion);
    }
    let m_peak = included
        .iter()
        .map(|&n| meas.magnitude(n).unwrap())
        .fold(0.0, f64::max);
    let all_peak = meas.magnitudes.iter().cloned().fold(0.0, f64::max);
    if m_peak.is_nan() || m_peak <= 1e-9 * all_peak {
        return Err(ReceiverError::NoSignal);
    }

    let shape = |v: f64| match combination {
        Combination::Linear => v,
        Combination::Power => v * v,
    };
    let peak_of = |p: &[f64]| p.iter().cloned().fold(0.0, f64::max);
    let common = included
        .iter()
        .map(|&n| peak_of(library.pattern(n).unwrap()))
        .fold(0.0, f64::max);

    let angles = library.angles();
    let mut profile = vec![0.0; angles.len()];
    let mut norm = vec![0.0; angles.len()];
    for &n in &included {
        let pattern = library.pattern(n).unwrap();
        let scale = match scaling {
            PatternScaling::PerHarmonic => peak_of(pattern),
            PatternScaling::Common | PatternScaling::Matched => common,
        };
        if scale == 0.0 {
            continue;
        }
        let weight = shape(meas.magnitude(n).unwrap() / m_peak);
        for ((acc, nrm), p) in profile.iter_mut().zip(norm.iter_mut()).zip(pattern) {
            let value = shape(p / scale);
            *acc += weight * value;
            *nrm += value * value;
        }
    }
    if scaling == PatternScaling::Matched {
        for (acc, nrm) in profile.iter_mut().zip(&norm) {
            *acc = if *nrm > 0.0 { *acc / nrm.sqrt() } else { 0.0 };
        }
    }

    let peak = profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = peak.abs() * 1e-12;
    let best = (0..profile.len())
        .filter(|&i| profile[i] >= peak - tol)
        .min_by(|&a, &b| angles[a].abs().total_cmp(&angles[b].abs()))
        .unwrap();
    let second = local_maxima(&profile)
        .filter(|&i| i != best && (angles[i] - angles[best]).abs() > 1e-9)
        .map(|i| profile[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let psr = (second > 0.0).then(|| profile[best] / second);

    Ok(AoaEstimate {
        angle_deg: angles[best],
        profile: angles
            .iter()
            .copied()
            .zip(profile.iter().copied())
            .collect(),
        psr,
        excluded_orders: exclude.iter().copied().collect(),
        f0_used: meas.f0_hz,
    })
}

fn local_maxima(p: &[f64]) -> impl Iterator<Item = usize> + '_ {
    (0..p.len()).filter(move |&i| {
        let left = i == 0 || p[i] > p[i - 1];
        let right = i + 1 == p.len() || p[i] >= p[i + 1];
        left && right
    })
}

/// Width of one of the ~3L angular partitions in front of an L-column surface.
pub fn angular_resolution(code_len: usize) -> f64 {
    180.0 / (3.0 * code_len as f64)
}

/// Receiver settings for the full chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    pub window_periods: usize,
    pub overlap: f64,
    pub window: WindowFunction,
    /// `None` runs blind comb detection.
    pub f0_hint: Option<f64>,
    pub detect: DetectSettings,
    pub combination: Combination,
    pub scaling: PatternScaling,
}

impl Default for Receiver {
    fn default() -> Self {
        Self {
            window_periods: 4,
            overlap: 0.0,
            window: WindowFunction::Rectangular,
            f0_hint: None,
            detect: DetectSettings::default(),
            combination: Combination::Linear,
            scaling: PatternScaling::Common,
        }
    }
}

/// Everything the chain produced for one capture.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub spectrum: AveragedSpectrum,
    pub measurement: HarmonicMeasurement,
    pub estimate: AoaEstimate,
}

impl Receiver {
    pub fn with_f0(f0: f64) -> Self {
        Self {
            f0_hint: Some(f0),
            ..Self::default()
        }
    }

    pub fn excluding(mut self, orders: impl IntoIterator<Item = i64>) -> Self {
        self.detect.exclude_orders = orders.into_iter().collect();
        self
    }

    pub fn run(
        &self,
        w: &Waveform,
        library: &PatternLibrary,
    ) -> Result<PipelineOutput, ReceiverError> {
        let spectrum = average_spectrum(w, self.window_periods, self.overlap, self.window)?;
        let measurement = detect_harmonics(&spectrum, self.f0_hint, library.n_max(), &self.detect)?;
        let estimate = estimate_aoa(
            &measurement,
            library,
            &self.detect.exclude_orders,
            self.combination,
            self.scaling,
        )?;
        Ok(PipelineOutput {
            spectrum,
            measurement,
            estimate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering_angle, ElementTaper, RisConfig};
    use crate::channel::{synthesize_received, Capture, ChannelConfig};
    use crate::code::{BinaryCode, CodeSchedule};
    use approx::assert_relative_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(size: usize) -> (RisConfig, CodeSchedule, PatternLibrary) {
        let ris = RisConfig::half_wave(size, 5.385e9).unwrap();
        let code = BinaryCode::single_bit(size, 0, 1.87e-3).unwrap();
        let sched = CodeSchedule::unit_shifts(code, size);
        let lib = PatternLibrary::build(&ris, &sched, 0.1, ElementTaper::None).unwrap();
        (ris, sched, lib)
    }

    fn tone(freq: f64, fs: f64, n: usize, f0: f64) -> Waveform {
        let s = (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * freq * i as f64 / fs))
            .collect();
        Waveform::from_samples(s, fs, f0)
    }

    #[test]
    fn pure_tone_lands_on_one_bin() {
        let (f0, fs) = (25.0, 1600.0);
        let w = tone(f0, fs, 4 * 64, f0);
        let spec = average_spectrum(&w, 1, 0.0, WindowFunction::Rectangular).unwrap();
        assert_eq!(spec.num_windows, 4);
        let k = spec.nearest_bin(f0).unwrap();
        assert_relative_eq!(spec.frequencies[k], f0, epsilon = 1e-9);
        assert_relative_eq!(spec.magnitudes[k], 1.0, epsilon = 1e-12);
        let rest = spec
            .magnitudes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .map(|(_, m)| *m);
        assert!(rest.fold(0.0, f64::max) < 1e-12);
        // identical windows: per-window magnitudes do not vary
        let per: Vec<f64> = (0..4)
            .map(|i| {
                let part = Waveform::from_samples(w.samples[i * 64..(i + 1) * 64].to_vec(), fs, f0);
                let s = average_spectrum(&part, 1, 0.0, WindowFunction::Rectangular).unwrap();
                s.magnitudes[s.nearest_bin(f0).unwrap()]
            })
            .collect();
        let mean = per.iter().sum::<f64>() / 4.0;
        let sd = (per.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!(sd / mean < 1e-10);
    }

    #[test]
    fn spectrum_layout_and_overlap() {
        let w = tone(0.0, 100.0, 50, 10.0);
        let spec = average_spectrum_samples(&w, 10, 0.5, WindowFunction::Rectangular).unwrap();
        assert_eq!(spec.hop, 5);
        assert_eq!(spec.num_windows, 9);
        assert_eq!(spec.frequencies[0], -50.0);
        assert_eq!(spec.frequencies[5], 0.0);
        assert!(spec.frequencies.windows(2).all(|p| p[0] < p[1]));
        let odd = average_spectrum_samples(&w, 5, 0.0, WindowFunction::Rectangular).unwrap();
        assert_eq!(odd.frequencies, vec![-40.0, -20.0, 0.0, 20.0, 40.0]);
        assert!(matches!(
            average_spectrum_samples(&w, 60, 0.0, WindowFunction::Rectangular),
            Err(ReceiverError::TooShort { .. })
        ));
        assert!(average_spectrum_samples(&w, 10, 1.0, WindowFunction::Rectangular).is_err());
        let hann = average_spectrum_samples(&w, 10, 0.0, WindowFunction::Hann).unwrap();
        assert_relative_eq!(
            hann.magnitudes[hann.nearest_bin(0.0).unwrap()],
            1.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn window_count_does_not_change_noiseless_lines() {
        let (ris, sched, _) = setup(16);
        let capture = Capture::periods(&sched, 32, 64);
        let w =
            synthesize_received(&ris, &sched, 13.0, &ChannelConfig::noiseless(), &capture).unwrap();
        let one = average_spectrum(&w, 32, 0.0, WindowFunction::Rectangular).unwrap();
        let eight = average_spectrum(&w, 4, 0.0, WindowFunction::Rectangular).unwrap();
        assert_eq!(eight.num_windows, 8);
        let f0 = sched.base().modulation_frequency();
        for n in -8..=8 {
            let f = n as f64 * f0;
            assert!((one.interpolate(f) - eight.interpolate(f)).abs() < 1e-9);
        }
    }

    #[test]
    fn averaging_shrinks_spread() {
        let (ris, sched, _) = setup(16);
        let f0 = sched.base().modulation_frequency();
        let angle = 9.0;
        let spread = |windows: usize| {
            let capture = Capture::periods(&sched, 4 * windows, 64);
            let vals: Vec<f64> = (0..300)
                .map(|seed| {
                    let w = synthesize_received(
                        &ris,
                        &sched,
                        angle,
                        &ChannelConfig::with_snr(0.0, seed),
                        &capture,
                    )
                    .unwrap();
                    let spec = average_spectrum(&w, 4, 0.0, WindowFunction::Rectangular).unwrap();
                    assert_eq!(spec.num_windows, windows);
                    spec.interpolate(f0)
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
        };
        let ratio = spread(1) / spread(4);
        assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn hinted_detection_picks_steered_order() {
        let (ris, sched, lib) = setup(16);
        let f0 = sched.base().modulation_frequency();
        let capture = Capture::periods(&sched, 16, 64);
        let angle = steering_angle(3, 16, 0.5).unwrap();
        let w = synthesize_received(&ris, &sched, angle, &ChannelConfig::noiseless(), &capture)
            .unwrap();
        let spec = average_spectrum(&w, 4, 0.0, WindowFunction::Rectangular).unwrap();
        let meas =
            detect_harmonics(&spec, Some(f0), lib.n_max(), &DetectSettings::default()).unwrap();
        assert_eq!(meas.strongest(), Some(3));
    }

    #[test]
    fn blind_detection_recovers_f0() {
        let (ris, sched, lib) = setup(16);
        let f0 = sched.base().modulation_frequency();
        assert_relative_eq!(f0, 33.42, epsilon = 0.01);
        let capture = Capture::periods(&sched, 16, 64);
        for angle in [-47.0, -10.3, 4.0, 25.0, 52.5] {
            let w = synthesize_received(&ris, &sched, angle, &ChannelConfig::noiseless(), &capture)
                .unwrap();
            let spec = average_spectrum(&w, 4, 0.0, WindowFunction::Rectangular).unwrap();
            let meas =
                detect_harmonics(&spec, None, lib.n_max(), &DetectSettings::default()).unwrap();
            let step = spec.resolution() / (4.0 * lib.n_max() as f64);
            assert!(
                (meas.f0_hz - f0).abs() <= step,
                "angle {angle}: {} vs {f0}",
                meas.f0_hz
            );
            assert!(meas.confidence >= DEFAULT_COMB_THRESHOLD);
        }
    }

    #[test]
    fn blind_detection_never_trusts_an_alias() {
        // at 22 deg one line dominates; under noise it fits f0, 1.5 f0 and 3 f0 alike
        let (ris, sched, lib) = setup(16);
        let f0 = sched.base().modulation_frequency();
        let capture = Capture::periods(&sched, 32, 64);
        for seed in 0..20 {
            let ch = ChannelConfig::with_snr(15.0, seed);
            let w = synthesize_received(&ris, &sched, 22.0, &ch, &capture).unwrap();
            let spec = average_spectrum(&w, 4, 0.0, WindowFunction::Rectangular).unwrap();
            match detect_harmonics(&spec, None, lib.n_max(), &DetectSettings::default()) {
                Ok(meas) => assert!((meas.f0_hz - f0).abs() < 0.5, "seed {seed}: {}", meas.f0_hz),
                Err(e) => assert!(matches!(e, ReceiverError::NoCombFound { .. })),
            }
        }
    }

    #[test]
    fn blind_detection_rejects_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for windows in [1usize, 8] {
            let s: Vec<Complex64> = (0..512 * windows)
                .map(|_| {
                    Complex64::new(
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                    )
                })
                .collect();
            let w = Waveform::from_samples(s, 2048.0, 16.0);
            let spec = average_spectrum_samples(&w, 512, 0.0, WindowFunction::Rectangular).unwrap();
            assert!(matches!(
                detect_harmonics(&spec, None, 8, &DetectSettings::default()),
                Err(ReceiverError::NoCombFound { .. })
            ));
        }
    }

    #[test]
    fn coarse_spectrum_is_rejected() {
        let w = tone(10.0, 160.0, 64, 10.0);
        let spec = average_spectrum(&w, 1, 0.0, WindowFunction::Rectangular).unwrap();
        assert!(matches!(
            detect_harmonics(&spec, Some(10.0), 2, &DetectSettings::default()),
            Err(ReceiverError::CoarseResolution { .. })
        ));
    }

    #[test]
    fn single_line_measurements_map_to_steering_angles() {
        let (_, _, lib) = setup(16);
        let none = BTreeSet::new();
        for (n, expect) in [(4_i64, 30.0), (-4, -30.0)] {
            let mut m = vec![0.0; 17];
            m[(n + 8) as usize] = 1.0;
            let meas = HarmonicMeasurement::from_magnitudes(m, 33.4);
            let est = estimate_aoa(
                &meas,
                &lib,
                &none,
                Combination::Linear,
                PatternScaling::Common,
            )
            .unwrap();
            assert!(
                (est.angle_deg - expect).abs() <= 0.1,
                "{n}: {}",
                est.angle_deg
            );
            assert!(est.peak_to_second_peak_ratio() >= 1.0);
        }
    }

    #[test]
    fn forward_model_round_trip() {
        let (_, _, lib) = setup(16);
        let none = BTreeSet::new();
        let width = angular_resolution(16);
        // u = +-1 alias at half-wave spacing, so endfire itself is ambiguous
        for (i, &truth) in lib
            .angles()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.abs() <= 89.0)
        {
            let m: Vec<f64> = lib.orders().map(|n| lib.pattern(n).unwrap()[i]).collect();
            let meas = HarmonicMeasurement::from_magnitudes(m, 33.4);
            let est = estimate_aoa(
                &meas,
                &lib,
                &none,
                Combination::Linear,
                PatternScaling::Common,
            )
            .unwrap();
            assert!(
                (est.angle_deg - truth).abs() <= width,
                "{truth}: {}",
                est.angle_deg
            );
            let est = estimate_aoa(
                &meas,
                &lib,
                &none,
                Combination::Linear,
                PatternScaling::Matched,
            )
            .unwrap();
            assert!(
                (est.angle_deg - truth).abs() < 1e-9,
                "{truth}: {}",
                est.angle_deg
            );
        }
    }

    #[test]
    fn common_scale_does_not_move_estimate() {
        let (_, _, lib) = setup(8);
        let none = BTreeSet::new();
        let idx = lib.angles().iter().position(|&a| a == 23.0).unwrap();
        let m: Vec<f64> = lib.orders().map(|n| lib.pattern(n).unwrap()[idx]).collect();
        let a = estimate_aoa(
            &HarmonicMeasurement::from_magnitudes(m.clone(), 1.0),
            &lib,
            &none,
            Combination::Power,
            PatternScaling::Common,
        )
        .unwrap();
        let scaled = m.iter().map(|v| v * 37.5).collect();
        let b = estimate_aoa(
            &HarmonicMeasurement::from_magnitudes(scaled, 1.0),
            &lib,
            &none,
            Combination::Power,
            PatternScaling::Common,
        )
        .unwrap();
        assert_eq!(a.angle_deg, b.angle_deg);
        for (x, y) in a.profile.iter().zip(&b.profile) {
            assert_relative_eq!(x.1, y.1, max_relative = 1e-12);
        }
    }

    #[test]
    fn estimation_errors() {
        let (_, _, lib) = setup(8);
        let meas = HarmonicMeasurement::from_magnitudes(vec![1.0; 9], 1.0);
        let all: BTreeSet<i64> = (-4..=4).collect();
        assert_eq!(
            estimate_aoa(
                &meas,
                &lib,
                &all,
                Combination::Linear,
                PatternScaling::Common
            ),
            Err(ReceiverError::EmptyAfterExclusion)
        );
        let short = HarmonicMeasurement::from_magnitudes(vec![1.0; 5], 1.0);
        assert!(matches!(
            estimate_aoa(
                &short,
                &lib,
                &BTreeSet::new(),
                Combination::Linear,
                PatternScaling::Common
            ),
            Err(ReceiverError::OrderMismatch { .. })
        ));
        let dark = HarmonicMeasurement::from_magnitudes(vec![0.0; 9], 1.0);
        assert_eq!(
            estimate_aoa(
                &dark,
                &lib,
                &BTreeSet::new(),
                Combination::Linear,
                PatternScaling::Common
            ),
            Err(ReceiverError::NoSignal)
        );
    }

    #[test]
    fn tie_prefers_broadside() {
        let (_, _, lib) = setup(8);
        // +-1 equally strong: symmetric profile, tie resolved toward 0 deg side
        let mut m = vec![0.0; 9];
        m[3] = 1.0;
        m[5] = 1.0;
        let est = estimate_aoa(
            &HarmonicMeasurement::from_magnitudes(m, 1.0),
            &lib,
            &BTreeSet::new(),
            Combination::Linear,
            PatternScaling::Common,
        )
        .unwrap();
        assert!(est.angle_deg.abs() < 14.5);
        let mirrored = est.profile.iter().find(|p| p.0 == -est.angle_deg).unwrap();
        assert_relative_eq!(
            mirrored.1,
            est.profile.iter().map(|p| p.1).fold(0.0, f64::max),
            max_relative = 1e-12
        );
    }

    #[test]
    fn broadside_without_dc_has_no_signal() {
        let (ris, sched, lib) = setup(8);
        let f0 = sched.base().modulation_frequency();
        let capture = Capture::periods(&sched, 16, 32);
        let w =
            synthesize_received(&ris, &sched, 0.0, &ChannelConfig::noiseless(), &capture).unwrap();
        // every n != 0 order of the unit-shift schedule has a null at broadside
        assert_eq!(
            Receiver::with_f0(f0).excluding([0]).run(&w, &lib).err(),
            Some(ReceiverError::NoSignal)
        );
        let est = Receiver::with_f0(f0).excluding([]).run(&w, &lib).unwrap();
        assert_eq!(est.estimate.angle_deg, 0.0);
    }

    #[test]
    fn resolution_values() {
        assert_eq!(angular_resolution(8), 7.5);
        assert_relative_eq!(angular_resolution(60), 1.0);
        assert_eq!(angular_resolution(16), 3.75);
    }

    #[test]
    fn excluding_dc_stays_within_partition() {
        let (ris, sched, lib) = setup(16);
        let f0 = sched.base().modulation_frequency();
        let capture = Capture::periods(&sched, 16, 64);
        let width = angular_resolution(16);
        for truth in [-70.0, -33.0, -5.0, 5.0, 18.0, 44.0, 75.0] {
            let w = synthesize_received(&ris, &sched, truth, &ChannelConfig::noiseless(), &capture)
                .unwrap();
            let with = Receiver::with_f0(f0).excluding([]).run(&w, &lib).unwrap();
            let without = Receiver::with_f0(f0).excluding([0]).run(&w, &lib).unwrap();
            for est in [with.estimate.angle_deg, without.estimate.angle_deg] {
                assert!((est - truth).abs() <= width, "{truth}: {est}");
            }
        }
    }
}
