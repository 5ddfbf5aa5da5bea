//! Complex-baseband signal seen by a receiver in front of one or more coded
//! surfaces.
//!
//! Two synthesis routes produce the same physical signal:
//!
//! * [`SynthesisMode::HarmonicDomain`] sums the radiating harmonics
//!   `A_n(theta) exp(j 2 pi n f0 t)` for `|n| <= n_max`.
//! * [`SynthesisMode::TimeDomain`] evaluates the instantaneous reflection
//!   state of every column at each sample instant and sums the columns with
//!   their spatial phase toward the receiver.
//!
//! The time-domain route is a sample-and-hold view of a stepped waveform, so
//! [`line_amplitudes`] removes the hold response before comparing lines.

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{ArrayError, ElementTaper, HarmonicArray, RisConfig};
use crate::code::{sinc, CodeSchedule};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("capture of {duration} s is shorter than two code periods ({min} s)")]
    TooShort { duration: f64, min: f64 },
    #[error(
        "sample rate {rate} Hz cannot resolve harmonics up to order {n_max} (need > {min} Hz)"
    )]
    Undersampled { rate: f64, n_max: i64, min: f64 },
    #[error("receiver angle {0} deg lies outside [-90, 90]")]
    AngleOutOfRange(f64),
    #[error("invalid channel: {0}")]
    Invalid(String),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error("waveform file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, schemars::JsonSchema,
)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMode {
    #[default]
    HarmonicDomain,
    TimeDomain,
}

/// Delayed, scaled copy of the surface field leaving toward `arrival_angle_deg`.
///
/// The delay acts on the modulation envelope; carrier phase rotation is part
/// of `gain`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathTap {
    pub delay_s: f64,
    pub gain: Complex64,
    pub arrival_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Total radiated harmonic power at the receiver angle over per-sample
    /// noise power. `None` is noiseless.
    pub snr_db: Option<f64>,
    /// Unmodulated direct-path amplitude at zero offset.
    pub carrier_leak: f64,
    pub multipath: Vec<MultipathTap>,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn noiseless() -> Self {
        Self {
            snr_db: None,
            carrier_leak: 0.0,
            multipath: Vec::new(),
            seed: 0,
        }
    }

    pub fn with_snr(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db: Some(snr_db),
            seed,
            ..Self::noiseless()
        }
    }

    fn validate(&self) -> Result<(), ChannelError> {
        if let Some(snr) = self.snr_db {
            if !snr.is_finite() {
                return Err(ChannelError::Invalid(format!(
                    "snr_db must be finite, got {snr}"
                )));
            }
        }
        if !self.carrier_leak.is_finite() {
            return Err(ChannelError::Invalid("carrier_leak must be finite".into()));
        }
        for tap in &self.multipath {
            if !(tap.delay_s >= 0.0 && tap.delay_s.is_finite()) {
                return Err(ChannelError::Invalid(format!(
                    "tap delay must be >= 0, got {}",
                    tap.delay_s
                )));
            }
            if !(-90.0..=90.0).contains(&tap.arrival_angle_deg) {
                return Err(ChannelError::AngleOutOfRange(tap.arrival_angle_deg));
            }
        }
        Ok(())
    }
}

/// Receiver capture settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capture {
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    pub mode: SynthesisMode,
    pub taper: ElementTaper,
}

impl Capture {
    /// `periods` whole code periods at `samples_per_period` samples each.
    pub fn periods(schedule: &CodeSchedule, periods: usize, samples_per_period: usize) -> Self {
        let t0 = schedule.base().period();
        Self {
            duration_s: periods as f64 * t0,
            sample_rate_hz: samples_per_period as f64 / t0,
            mode: SynthesisMode::HarmonicDomain,
            taper: ElementTaper::None,
        }
    }

    pub fn with_mode(mut self, mode: SynthesisMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_taper(mut self, taper: ElementTaper) -> Self {
        self.taper = taper;
        self
    }

    pub fn num_samples(&self) -> usize {
        (self.duration_s * self.sample_rate_hz).round() as usize
    }
}

/// One coded surface as seen from the receiver.
#[derive(Debug, Clone, Copy)]
pub struct SurfaceLink<'a> {
    pub ris: &'a RisConfig,
    pub schedule: &'a CodeSchedule,
    pub rx_angle_deg: f64,
    /// Frequency offset of this surface's harmonic comb.
    pub offset_hz: f64,
}

/// Values recorded in a waveform's JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformMeta {
    pub sample_rate: f64,
    pub f_0: f64,
    #[serde(rename = "L")]
    pub code_len: usize,
    pub n_max: i64,
    pub duration: f64,
    pub mode: SynthesisMode,
    pub rx_angle_deg: f64,
    pub offset_hz: f64,
    /// Harmonic power the SNR refers to.
    pub signal_power: f64,
    pub noise_power: f64,
    pub channel: ChannelConfig,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    pub meta: WaveformMeta,
}

impl Waveform {
    /// Builds a waveform from raw samples, e.g. a test tone.
    pub fn from_samples(samples: Vec<Complex64>, sample_rate: f64, f0: f64) -> Self {
        let duration = samples.len() as f64 / sample_rate;
        Self {
            samples,
            meta: WaveformMeta {
                sample_rate,
                f_0: f0,
                code_len: 0,
                n_max: 0,
                duration,
                mode: SynthesisMode::HarmonicDomain,
                rx_angle_deg: 0.0,
                offset_hz: 0.0,
                signal_power: 0.0,
                noise_power: 0.0,
                channel: ChannelConfig::noiseless(),
                seed: 0,
            },
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.meta.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.meta.duration
    }

    pub fn f0(&self) -> f64 {
        self.meta.f_0
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.meta.sample_rate
    }

    /// CSV with header `t,re,im`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ChannelError> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["t", "re", "im"])?;
        for (i, s) in self.samples.iter().enumerate() {
            wtr.write_record([self.time(i).to_string(), s.re.to_string(), s.im.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_sidecar<W: Write>(&self, out: W) -> Result<(), ChannelError> {
        serde_json::to_writer_pretty(out, &self.meta)?;
        Ok(())
    }

    pub fn read<R: Read, S: Read>(csv_in: R, sidecar: S) -> Result<Self, ChannelError> {
        let meta: WaveformMeta = serde_json::from_reader(sidecar)?;
        let mut rdr = csv::Reader::from_reader(csv_in);
        let header = rdr.headers()?.clone();
        if header.iter().collect::<Vec<_>>() != ["t", "re", "im"] {
            return Err(ChannelError::Format(format!(
                "expected header t,re,im, got {:?}",
                header
            )));
        }
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64, ChannelError> {
                rec.get(i)
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| {
                        ChannelError::Format(format!("bad number in row {}", samples.len() + 1))
                    })
            };
            samples.push(Complex64::new(parse(1)?, parse(2)?));
        }
        Ok(Self { samples, meta })
    }
}

/// Sample rate the synthesizer requires (strictly exceeded) for a comb of
/// `n_max` orders spaced `f0` apart and centered at `offset_hz`.
pub fn required_sample_rate(f0: f64, n_max: i64, offset_hz: f64) -> f64 {
    let n = n_max as f64;
    (4.0 * f0 * n).max(2.0 * (offset_hz.abs() + f0 * n))
}

/// Smallest `2L * 2^k` samples per period that satisfies
/// [`required_sample_rate`].
pub fn min_samples_per_period(code_len: usize, n_max: i64, offset_hz: f64, f0: f64) -> usize {
    samples_for_rate(code_len, required_sample_rate(f0, n_max, offset_hz) / f0)
}

/// Smallest `2L * 2^k` strictly above `rate_per_f0`.
pub fn samples_for_rate(code_len: usize, rate_per_f0: f64) -> usize {
    let mut spp = 2 * code_len.max(1);
    while spp as f64 <= rate_per_f0 * (1.0 + 1e-12) {
        spp *= 2;
    }
    spp
}

/// Signal received at `rx_angle_deg` from one coded surface.
pub fn synthesize_received(
    ris: &RisConfig,
    schedule: &CodeSchedule,
    rx_angle_deg: f64,
    channel: &ChannelConfig,
    capture: &Capture,
) -> Result<Waveform, ChannelError> {
    let link = SurfaceLink {
        ris,
        schedule,
        rx_angle_deg,
        offset_hz: 0.0,
    };
    synthesize_superposed(&[link], channel, capture)
}

/// Sum of several surfaces' contributions (each on its own comb offset)
/// through one shared channel. Noise is referenced to the total direct-path
/// harmonic power of all links.
pub fn synthesize_superposed(
    links: &[SurfaceLink<'_>],
    channel: &ChannelConfig,
    capture: &Capture,
) -> Result<Waveform, ChannelError> {
    channel.validate()?;
    let first = links
        .first()
        .ok_or_else(|| ChannelError::Invalid("no surface to synthesize".into()))?;
    let fs = capture.sample_rate_hz;
    if !(fs.is_finite() && fs > 0.0) {
        return Err(ChannelError::Invalid(format!(
            "sample rate must be > 0, got {fs}"
        )));
    }

    let mut arrays = Vec::with_capacity(links.len());
    for link in links {
        if !(-90.0..=90.0).contains(&link.rx_angle_deg) {
            return Err(ChannelError::AngleOutOfRange(link.rx_angle_deg));
        }
        let array = HarmonicArray::new(link.ris, link.schedule)?;
        let t0 = link.schedule.base().period();
        if capture.duration_s < 2.0 * t0 * (1.0 - 1e-12) {
            return Err(ChannelError::TooShort {
                duration: capture.duration_s,
                min: 2.0 * t0,
            });
        }
        let n_max = array.n_max();
        let min_rate = required_sample_rate(1.0 / t0, n_max, link.offset_hz);
        if fs <= min_rate {
            return Err(ChannelError::Undersampled {
                rate: fs,
                n_max,
                min: min_rate,
            });
        }
        arrays.push(array);
    }

    let n = capture.num_samples();
    let mut samples = vec![Complex64::new(channel.carrier_leak, 0.0); n];
    let mut signal_power = 0.0;

    for (link, array) in links.iter().zip(&arrays) {
        let n_max = array.n_max();
        signal_power += (-n_max..=n_max)
            .map(|k| {
                array
                    .amplitude(k, link.rx_angle_deg, capture.taper)
                    .norm_sqr()
            })
            .sum::<f64>();
        add_path(
            &mut samples,
            link,
            array,
            capture,
            link.rx_angle_deg,
            Complex64::new(1.0, 0.0),
            0.0,
        );
        for tap in &channel.multipath {
            add_path(
                &mut samples,
                link,
                array,
                capture,
                tap.arrival_angle_deg,
                tap.gain,
                tap.delay_s,
            );
        }
    }

    let noise_power = match channel.snr_db {
        Some(snr) => {
            let reference = if signal_power > 0.0 {
                signal_power
            } else {
                1.0
            };
            let power = reference / 10f64.powf(snr / 10.0);
            let sigma = (power / 2.0).sqrt();
            let mut rng = ChaCha8Rng::seed_from_u64(channel.seed);
            for s in samples.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *s += Complex64::new(re * sigma, im * sigma);
            }
            power
        }
        None => 0.0,
    };

    let base = first.schedule.base();
    Ok(Waveform {
        samples,
        meta: WaveformMeta {
            sample_rate: fs,
            f_0: base.modulation_frequency(),
            code_len: base.len(),
            n_max: arrays[0].n_max(),
            duration: n as f64 / fs,
            mode: capture.mode,
            rx_angle_deg: first.rx_angle_deg,
            offset_hz: first.offset_hz,
            signal_power,
            noise_power,
            channel: channel.clone(),
            seed: channel.seed,
        },
    })
}

fn add_path(
    samples: &mut [Complex64],
    link: &SurfaceLink<'_>,
    array: &HarmonicArray,
    capture: &Capture,
    angle_deg: f64,
    gain: Complex64,
    delay_s: f64,
) {
    let fs = capture.sample_rate_hz;
    let base = link.schedule.base();
    let f0 = base.modulation_frequency();
    let code_len = base.len() as i64;
    let carrier = |t: f64| Complex64::from_polar(1.0, 2.0 * PI * link.offset_hz * t);

    match capture.mode {
        SynthesisMode::HarmonicDomain => {
            let n_max = array.n_max();
            let lines: Vec<(f64, Complex64)> = (-n_max..=n_max)
                .map(|k| {
                    (
                        k as f64 * f0,
                        gain * array.amplitude(k, angle_deg, capture.taper),
                    )
                })
                .collect();
            for (i, s) in samples.iter_mut().enumerate() {
                let t = i as f64 / fs - delay_s;
                let sum: Complex64 = lines
                    .iter()
                    .map(|&(f, a)| a * Complex64::from_polar(1.0, 2.0 * PI * f * t))
                    .sum();
                *s += sum * carrier(t);
            }
        }
        SynthesisMode::TimeDomain => {
            let states: Vec<Complex64> = (0..code_len)
                .map(|slot| gain * array.instantaneous(slot, angle_deg, capture.taper))
                .collect();
            let samples_per_bit = fs * base.bit_duration();
            let delay_samples = delay_s * fs;
            for (i, s) in samples.iter_mut().enumerate() {
                let position = (i as f64 - delay_samples) / samples_per_bit;
                // nudge exact bit boundaries onto the left-inclusive slot
                let slot = (position + 1e-9).floor() as i64;
                let t = i as f64 / fs - delay_s;
                *s += states[slot.rem_euclid(code_len) as usize] * carrier(t);
            }
        }
    }
}

/// Complex amplitude of the lines at `offset_hz + n f0`, measured over the
/// largest whole number of code periods in the capture.
///
/// Time-domain captures are corrected for the sample-and-hold response
/// `exp(j pi n f0/fs) / sinc(pi n f0/fs)`, which makes the result the exact
/// Fourier coefficient when bit edges fall on sample instants.
pub fn line_amplitudes(w: &Waveform, orders: &[i64], offset_hz: f64) -> Vec<Complex64> {
    let fs = w.sample_rate();
    let f0 = w.f0();
    let per_period = fs / f0;
    let periods = (w.len() as f64 / per_period + 1e-9).floor();
    let count = ((periods * per_period).round() as usize).min(w.len());
    orders
        .iter()
        .map(|&n| {
            let f = offset_hz + n as f64 * f0;
            let acc: Complex64 = w.samples[..count]
                .iter()
                .enumerate()
                .map(|(i, s)| s * Complex64::from_polar(1.0, -2.0 * PI * f * i as f64 / fs))
                .sum();
            let x = acc / count as f64;
            match w.meta.mode {
                SynthesisMode::HarmonicDomain => x,
                SynthesisMode::TimeDomain => {
                    let r = PI * n as f64 * f0 / fs;
                    x * Complex64::from_polar(sinc(r), -r)
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::steering_angle;
    use crate::code::{BinaryCode, ReflectionMap};

    fn setup(size: usize) -> (RisConfig, CodeSchedule) {
        let ris = RisConfig::half_wave(size, 5.385e9).unwrap();
        let code = BinaryCode::single_bit(size, 0, 1.87e-3).unwrap();
        (ris, CodeSchedule::unit_shifts(code, size))
    }

    fn rel_err(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn modes_agree_on_line_amplitudes() {
        for size in [8usize, 16] {
            let (ris, sched) = setup(size);
            let capture = Capture::periods(&sched, 4, 8 * size);
            let orders: Vec<i64> = (-(size as i64) / 2..=size as i64 / 2).collect();
            for angle in [-61.0, -12.5, 0.0, 7.18, 40.0] {
                let ch = ChannelConfig::noiseless();
                let h = synthesize_received(&ris, &sched, angle, &ch, &capture).unwrap();
                let t = synthesize_received(
                    &ris,
                    &sched,
                    angle,
                    &ch,
                    &capture.with_mode(SynthesisMode::TimeDomain),
                )
                .unwrap();
                let lh = line_amplitudes(&h, &orders, 0.0);
                let lt = line_amplitudes(&t, &orders, 0.0);
                let peak = lh.iter().map(|c| c.norm()).fold(0.0, f64::max);
                for (a, b) in lt.iter().zip(&lh) {
                    if b.norm() > 1e-9 * peak {
                        assert!(rel_err(*a, *b) < 1e-6, "L={size} angle={angle}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn steered_receiver_sees_its_harmonic() {
        let (ris, sched) = setup(16);
        let capture = Capture::periods(&sched, 4, 64);
        let angle = steering_angle(2, 16, 0.5).unwrap();
        let w = synthesize_received(&ris, &sched, angle, &ChannelConfig::noiseless(), &capture)
            .unwrap();
        let orders: Vec<i64> = (-8..=8).collect();
        let lines = line_amplitudes(&w, &orders, 0.0);
        let best = orders
            .iter()
            .zip(&lines)
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .unwrap();
        assert_eq!(*best.0, 2);
    }

    #[test]
    fn dark_surface_gives_leak_plus_noise() {
        let ris = RisConfig::half_wave(8, 5.385e9).unwrap();
        let sched =
            CodeSchedule::unit_shifts(BinaryCode::from_bitstring("00000000", 1e-3).unwrap(), 8);
        let capture = Capture::periods(&sched, 2, 64);
        let ch = ChannelConfig {
            carrier_leak: 0.3,
            ..ChannelConfig::noiseless()
        };
        let w = synthesize_received(&ris, &sched, 10.0, &ch, &capture).unwrap();
        assert!(w
            .samples
            .iter()
            .all(|s| (s - Complex64::new(0.3, 0.0)).norm() < 1e-15));
        let noisy = synthesize_received(
            &ris,
            &sched,
            10.0,
            &ChannelConfig {
                snr_db: Some(0.0),
                ..ch
            },
            &capture,
        )
        .unwrap();
        assert_eq!(noisy.meta.signal_power, 0.0);
        assert_eq!(noisy.meta.noise_power, 1.0);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let (ris, sched) = setup(8);
        let capture = Capture::periods(&sched, 4, 64);
        let ch = ChannelConfig::with_snr(3.0, 42);
        let a = synthesize_received(&ris, &sched, 20.0, &ch, &capture).unwrap();
        let b = synthesize_received(&ris, &sched, 20.0, &ch, &capture).unwrap();
        assert_eq!(a, b);
        let c = synthesize_received(
            &ris,
            &sched,
            20.0,
            &ChannelConfig::with_snr(3.0, 43),
            &capture,
        )
        .unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn noiseless_signal_is_periodic() {
        let (ris, sched) = setup(16);
        let per = 64;
        for mode in [SynthesisMode::HarmonicDomain, SynthesisMode::TimeDomain] {
            let capture = Capture::periods(&sched, 3, per).with_mode(mode);
            let ch = ChannelConfig {
                carrier_leak: 0.1,
                multipath: vec![MultipathTap {
                    delay_s: 3.0 / capture.sample_rate_hz,
                    gain: Complex64::new(0.2, -0.1),
                    arrival_angle_deg: -35.0,
                }],
                ..ChannelConfig::noiseless()
            };
            let w = synthesize_received(&ris, &sched, 17.0, &ch, &capture).unwrap();
            let scale = w.samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
            for i in 0..w.len() - per {
                assert!((w.samples[i + per] - w.samples[i]).norm() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn noise_matches_requested_snr() {
        let (ris, sched) = setup(16);
        let capture = Capture::periods(&sched, 32, 64);
        let clean =
            synthesize_received(&ris, &sched, 11.0, &ChannelConfig::noiseless(), &capture).unwrap();
        for seed in 0..100 {
            let snr = -5.0 + (seed % 4) as f64 * 5.0;
            let w = synthesize_received(
                &ris,
                &sched,
                11.0,
                &ChannelConfig::with_snr(snr, seed),
                &capture,
            )
            .unwrap();
            let noise: f64 = w
                .samples
                .iter()
                .zip(&clean.samples)
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                / w.len() as f64;
            let measured = 10.0 * (w.meta.signal_power / noise).log10();
            assert!(
                (measured - snr).abs() < 0.5,
                "seed {seed}: {measured} vs {snr}"
            );
        }
    }

    #[test]
    fn preconditions() {
        let (ris, sched) = setup(16);
        let t0 = sched.base().period();
        let mut capture = Capture::periods(&sched, 4, 64);
        capture.duration_s = 1.5 * t0;
        assert!(matches!(
            synthesize_received(&ris, &sched, 0.0, &ChannelConfig::noiseless(), &capture),
            Err(ChannelError::TooShort { .. })
        ));
        let capture = Capture::periods(&sched, 4, 32);
        assert!(matches!(
            synthesize_received(&ris, &sched, 0.0, &ChannelConfig::noiseless(), &capture),
            Err(ChannelError::Undersampled { .. })
        ));
        let capture = Capture::periods(&sched, 4, 64);
        assert!(matches!(
            synthesize_received(&ris, &sched, 95.0, &ChannelConfig::noiseless(), &capture),
            Err(ChannelError::AngleOutOfRange(_))
        ));
    }

    #[test]
    fn waveform_files_round_trip() {
        let (ris, sched) = setup(8);
        let ris = ris.with_reflection_map(ReflectionMap::BINARY_PHASE);
        let capture = Capture::periods(&sched, 2, 32);
        let w = synthesize_received(
            &ris,
            &sched,
            -20.0,
            &ChannelConfig::with_snr(5.0, 9),
            &capture,
        )
        .unwrap();
        let (mut csv_buf, mut json_buf) = (Vec::new(), Vec::new());
        w.write_csv(&mut csv_buf).unwrap();
        w.write_sidecar(&mut json_buf).unwrap();
        assert!(String::from_utf8_lossy(&csv_buf).starts_with("t,re,im\n"));
        let back = Waveform::read(csv_buf.as_slice(), json_buf.as_slice()).unwrap();
        assert_eq!(back, w);
        let sidecar: serde_json::Value = serde_json::from_slice(&json_buf).unwrap();
        for key in ["sample_rate", "f_0", "L", "duration", "channel", "seed"] {
            assert!(sidecar.get(key).is_some(), "{key}");
        }
    }
}
