//! Periodic binary switching codes and their exact Fourier series.
//!
//! A code of `L` bits, each held for `tau` seconds, switches one surface
//! column between two reflection states with period `T0 = L * tau`. The
//! complex coefficient of harmonic `n` (offset `n * f0` from the carrier) is
//!
//! ```text
//! c_n = sum_{m=1..L} (A_m / L) * sinc(pi n / L) * exp(-j pi n (2m - 1) / L)
//! ```
//!
//! with the unnormalized `sinc(x) = sin(x) / x`, which is the Fourier
//! coefficient of a rectangular pulse occupying bit slot `m`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("code must contain at least one bit")]
    Empty,
    #[error("invalid bit character {0:?}, expected '0' or '1'")]
    InvalidBit(char),
    #[error("bit duration must be a positive finite number of seconds, got {0}")]
    InvalidBitDuration(f64),
    #[error("{samples} samples per period cannot resolve a {bits}-bit code (need at least {min})")]
    Undersampled {
        samples: usize,
        bits: usize,
        min: usize,
    },
    #[error("schedule has {shifts} column shifts but the surface has {columns} columns")]
    ShiftCountMismatch { shifts: usize, columns: usize },
}

/// Unnormalized sinc, `sin(x) / x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        x.sin() / x
    }
}

/// One column's switching waveform: `L` bits, each lasting `bit_duration` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryCode {
    bits: Vec<bool>,
    bit_duration: f64,
}

impl BinaryCode {
    pub fn new(bits: Vec<bool>, bit_duration: f64) -> Result<Self, CodeError> {
        if bits.is_empty() {
            return Err(CodeError::Empty);
        }
        if !(bit_duration.is_finite() && bit_duration > 0.0) {
            return Err(CodeError::InvalidBitDuration(bit_duration));
        }
        Ok(Self { bits, bit_duration })
    }

    /// Parses a compact bitstring such as `"0010000000000000"`.
    pub fn from_bitstring(bits: &str, bit_duration: f64) -> Result<Self, CodeError> {
        let bits = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(CodeError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(bits, bit_duration)
    }

    /// Length-`len` code with only bit `index` (zero-based) set.
    pub fn single_bit(len: usize, index: usize, bit_duration: f64) -> Result<Self, CodeError> {
        let mut bits = vec![false; len];
        if let Some(b) = bits.get_mut(index) {
            *b = true;
        }
        Self::new(bits, bit_duration)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit_duration(&self) -> f64 {
        self.bit_duration
    }

    /// Code period `T0 = L * tau` in seconds.
    pub fn period(&self) -> f64 {
        self.bits.len() as f64 * self.bit_duration
    }

    /// Modulation frequency `f0 = 1 / T0` in Hz.
    pub fn modulation_frequency(&self) -> f64 {
        1.0 / self.period()
    }

    /// True when exactly one bit is ON.
    pub fn is_single_bit(&self) -> bool {
        self.bits.iter().filter(|&&b| b).count() == 1
    }

    pub fn to_bitstring(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }

    /// Cyclic right shift by `k` bits (the code fires `k` slots later).
    pub fn shifted(&self, k: i64) -> Self {
        let len = self.bits.len();
        let k = k.rem_euclid(len as i64) as usize;
        let mut bits = self.bits.clone();
        bits.rotate_right(k);
        Self {
            bits,
            bit_duration: self.bit_duration,
        }
    }

    /// Exact Fourier coefficient of harmonic `n` for ON/OFF amplitudes `A_m in {0, 1}`.
    pub fn harmonic(&self, n: i64) -> HarmonicCoefficient {
        HarmonicCoefficient::from_complex(n, self.harmonic_complex(n))
    }

    pub fn harmonic_complex(&self, n: i64) -> Complex64 {
        let len = self.bits.len() as f64;
        let nf = n as f64;
        let envelope = sinc(PI * nf / len) / len;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(idx, _)| {
                let m = (idx + 1) as f64;
                Complex64::from_polar(envelope, -PI * nf * (2.0 * m - 1.0) / len)
            })
            .sum()
    }

    /// Harmonic coefficient of the waveform after mapping bit states to
    /// reflection coefficients: `map.on * c_n + map.off * (delta_n0 - c_n)`.
    pub fn mapped_harmonic(&self, n: i64, map: &ReflectionMap) -> Complex64 {
        let c = self.harmonic_complex(n);
        let delta = if n == 0 { 1.0 } else { 0.0 };
        map.on * c + map.off * (Complex64::new(delta, 0.0) - c)
    }

    /// Bit slot occupied at `frame` (mod `L`).
    pub fn bit_at(&self, frame: i64) -> bool {
        self.bits[frame.rem_euclid(self.bits.len() as i64) as usize]
    }

    /// One period of the piecewise-constant switching waveform, sample `i`
    /// taken at `i * T0 / samples_per_period` with left-inclusive bit slots.
    pub fn sample_waveform(
        &self,
        samples_per_period: usize,
        map: &ReflectionMap,
    ) -> Result<Vec<Complex64>, CodeError> {
        let len = self.bits.len();
        if samples_per_period < 2 * len {
            return Err(CodeError::Undersampled {
                samples: samples_per_period,
                bits: len,
                min: 2 * len,
            });
        }
        Ok((0..samples_per_period)
            .map(|i| map.value(self.bits[i * len / samples_per_period]))
            .collect())
    }
}

impl fmt::Display for BinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

/// Reflection coefficient assigned to each bit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionMap {
    pub off: Complex64,
    pub on: Complex64,
}

impl ReflectionMap {
    /// ON reflects fully, OFF absorbs.
    pub const ON_OFF: Self = Self {
        off: Complex64::new(0.0, 0.0),
        on: Complex64::new(1.0, 0.0),
    };

    /// Binary phase states (0, pi).
    pub const BINARY_PHASE: Self = Self {
        off: Complex64::new(-1.0, 0.0),
        on: Complex64::new(1.0, 0.0),
    };

    pub fn new(off: Complex64, on: Complex64) -> Self {
        Self { off, on }
    }

    pub fn value(&self, bit: bool) -> Complex64 {
        if bit {
            self.on
        } else {
            self.off
        }
    }

    pub fn is_real(&self) -> bool {
        self.off.im == 0.0 && self.on.im == 0.0
    }
}

impl Default for ReflectionMap {
    fn default() -> Self {
        Self::ON_OFF
    }
}

/// Magnitude and phase of one harmonic, `c_n = S_n * exp(j Theta_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCoefficient {
    pub order: i64,
    pub magnitude: f64,
    /// Radians in `(-pi, pi]`; zero when the magnitude vanishes.
    pub phase: f64,
}

impl HarmonicCoefficient {
    pub fn from_complex(order: i64, c: Complex64) -> Self {
        let magnitude = c.norm();
        let phase = if magnitude == 0.0 {
            0.0
        } else {
            let p = c.arg();
            if p <= -PI {
                PI
            } else {
                p
            }
        };
        Self {
            order,
            magnitude,
            phase,
        }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// Phase advance of harmonic `n` per one-bit shift, `2 n pi / L` (not wrapped).
pub fn phase_shift_per_bit(n: i64, len: usize) -> f64 {
    2.0 * n as f64 * PI / len as f64
}

/// Base code plus one cyclic shift per surface column.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSchedule {
    base: BinaryCode,
    shifts: Vec<i64>,
}

impl CodeSchedule {
    /// Shifts are reduced modulo the code length.
    pub fn new(base: BinaryCode, shifts: Vec<i64>) -> Self {
        let len = base.len() as i64;
        let shifts = shifts.into_iter().map(|k| k.rem_euclid(len)).collect();
        Self { base, shifts }
    }

    /// Column `q` gets shift `q`.
    pub fn unit_shifts(base: BinaryCode, columns: usize) -> Self {
        Self::new(base, (0..columns as i64).collect())
    }

    pub fn base(&self) -> &BinaryCode {
        &self.base
    }

    pub fn shifts(&self) -> &[i64] {
        &self.shifts
    }

    pub fn num_columns(&self) -> usize {
        self.shifts.len()
    }

    pub fn code_len(&self) -> usize {
        self.base.len()
    }

    pub fn column_code(&self, column: usize) -> BinaryCode {
        self.base.shifted(self.shifts[column])
    }

    pub fn check_columns(&self, columns: usize) -> Result<(), CodeError> {
        if self.shifts.len() != columns {
            return Err(CodeError::ShiftCountMismatch {
                shifts: self.shifts.len(),
                columns,
            });
        }
        Ok(())
    }

    /// ON/OFF state of every element at time slot `frame`, as `rows x columns`.
    /// Column `q` reads base bit `(frame - shift_q) mod L`.
    pub fn state_matrix(&self, rows: usize, frame: u64) -> Vec<Vec<bool>> {
        let row: Vec<bool> = self
            .shifts
            .iter()
            .map(|&k| self.base.bit_at(frame as i64 - k))
            .collect();
        vec![row; rows]
    }
}

impl FromStr for BinaryCode {
    type Err = CodeError;

    /// Parses a bitstring with unit bit duration; set the real duration with
    /// [`BinaryCode::from_bitstring`].
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_bitstring(s, 1.0)
    }
}
