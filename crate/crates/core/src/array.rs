//! Far-field harmonic patterns of a column-coded surface (azimuth cut).
//!
//! Column `q` carries the base code shifted by its schedule entry, so its
//! `n`-th harmonic coefficient picks up a phase `-2 pi n k_q / L`. With unit
//! shifts the surface behaves like a uniform linear array with a progressive
//! phase per column, and harmonic `n` is steered to `asin(n / (L d/lambda))`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{CodeError, CodeSchedule, ReflectionMap};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Slack used when comparing `n / (L d/lambda)` against the visible-space edge.
const VISIBLE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrayError {
    #[error("harmonic {order} does not radiate: |n / (L d/lambda)| = {ratio:.4} > 1")]
    NonRadiating { order: i64, ratio: f64 },
    #[error("harmonic {order} is outside the inspectable range |n| <= {limit}")]
    OrderOutOfRange { order: i64, limit: i64 },
    #[error("invalid surface geometry: {0}")]
    Geometry(String),
    #[error("grid step must lie in (0, 5] degrees, got {0}")]
    GridStep(f64),
    #[error("angle grid must be strictly ascending within [-90, 90] degrees")]
    Grid,
    #[error(transparent)]
    Code(#[from] CodeError),
}

/// Element pattern applied on top of the array factor.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, schemars::JsonSchema,
)]
#[serde(rename_all = "snake_case")]
pub enum ElementTaper {
    #[default]
    None,
    /// `cos(theta)`, projected aperture shrinking toward endfire.
    Cosine,
}

impl ElementTaper {
    pub fn gain(self, angle_deg: f64) -> f64 {
        match self {
            Self::None => 1.0,
            Self::Cosine => angle_deg.to_radians().cos().max(0.0),
        }
    }
}

/// Surface geometry and element response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RisConfig {
    pub num_columns: usize,
    pub num_rows: usize,
    /// Column spacing in meters.
    pub spacing: f64,
    pub carrier_hz: f64,
    pub reflection_map: ReflectionMap,
}

impl RisConfig {
    pub fn new(
        num_columns: usize,
        num_rows: usize,
        spacing: f64,
        carrier_hz: f64,
        reflection_map: ReflectionMap,
    ) -> Result<Self, ArrayError> {
        let cfg = Self {
            num_columns,
            num_rows,
            spacing,
            carrier_hz,
            reflection_map,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Square surface with half-wavelength spacing at `carrier_hz`.
    pub fn half_wave(size: usize, carrier_hz: f64) -> Result<Self, ArrayError> {
        Self::new(
            size,
            size,
            SPEED_OF_LIGHT / carrier_hz / 2.0,
            carrier_hz,
            ReflectionMap::ON_OFF,
        )
    }

    pub fn with_reflection_map(mut self, map: ReflectionMap) -> Self {
        self.reflection_map = map;
        self
    }

    pub fn with_rows(mut self, rows: usize) -> Self {
        self.num_rows = rows;
        self
    }

    pub fn validate(&self) -> Result<(), ArrayError> {
        if self.num_columns == 0 || self.num_rows == 0 {
            return Err(ArrayError::Geometry(
                "surface needs at least one row and column".into(),
            ));
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(ArrayError::Geometry(format!(
                "spacing must be > 0 m, got {}",
                self.spacing
            )));
        }
        if !(self.carrier_hz.is_finite() && self.carrier_hz > 0.0) {
            return Err(ArrayError::Geometry(format!(
                "carrier frequency must be > 0 Hz, got {}",
                self.carrier_hz
            )));
        }
        if self.reflection_map.on.norm() > 1.0 + 1e-12
            || self.reflection_map.off.norm() > 1.0 + 1e-12
        {
            return Err(ArrayError::Geometry(
                "reflection coefficients must satisfy |r| <= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing / self.wavelength()
    }

    /// Spacing above half a wavelength admits grating lobes.
    pub fn has_grating_lobes(&self) -> bool {
        self.spacing_wavelengths() > 0.5 + VISIBLE_EPS
    }
}

/// Main-lobe direction of harmonic `n`, in degrees.
pub fn steering_angle(n: i64, code_len: usize, d_over_lambda: f64) -> Result<f64, ArrayError> {
    let ratio = n as f64 / (code_len as f64 * d_over_lambda);
    if ratio.abs() > 1.0 + VISIBLE_EPS {
        return Err(ArrayError::NonRadiating { order: n, ratio });
    }
    Ok(ratio.clamp(-1.0, 1.0).asin().to_degrees())
}

/// Largest order with a real steering angle, `floor(L d/lambda)`.
pub fn max_harmonic_order(code_len: usize, d_over_lambda: f64) -> i64 {
    (code_len as f64 * d_over_lambda + VISIBLE_EPS).floor() as i64
}

/// Uniform azimuth grid over [-90, 90] degrees; +90 is always included.
pub fn angle_grid(step_deg: f64) -> Result<Vec<f64>, ArrayError> {
    if !(step_deg > 0.0 && step_deg <= 5.0) {
        return Err(ArrayError::GridStep(step_deg));
    }
    let count = (180.0 / step_deg + 1e-9).floor() as usize;
    let mut grid: Vec<f64> = (0..=count)
        .map(|i| ((i as f64 * step_deg - 90.0) * 1e9).round() / 1e9)
        .collect();
    if *grid.last().unwrap() < 90.0 - 1e-9 {
        grid.push(90.0);
    }
    Ok(grid)
}

fn check_grid(grid: &[f64]) -> Result<(), ArrayError> {
    let in_range = grid.iter().all(|a| (-90.0..=90.0).contains(a));
    let ascending = grid.windows(2).all(|w| w[0] < w[1]);
    if grid.is_empty() || !in_range || !ascending {
        return Err(ArrayError::Grid);
    }
    Ok(())
}

/// Per-column harmonic coefficients of one schedule on one surface.
///
/// Shared by the pattern code and the receiver-side signal synthesis.
#[derive(Debug, Clone)]
pub struct HarmonicArray {
    columns: usize,
    rows: usize,
    d_over_lambda: f64,
    code_len: usize,
    map: ReflectionMap,
    schedule: CodeSchedule,
}

impl HarmonicArray {
    pub fn new(ris: &RisConfig, schedule: &CodeSchedule) -> Result<Self, ArrayError> {
        ris.validate()?;
        schedule.check_columns(ris.num_columns)?;
        Ok(Self {
            columns: ris.num_columns,
            rows: ris.num_rows,
            d_over_lambda: ris.spacing_wavelengths(),
            code_len: schedule.code_len(),
            map: ris.reflection_map,
            schedule: schedule.clone(),
        })
    }

    pub fn n_max(&self) -> i64 {
        max_harmonic_order(self.code_len, self.d_over_lambda)
    }

    pub fn d_over_lambda(&self) -> f64 {
        self.d_over_lambda
    }

    /// `c_n^{(q)}` for every column.
    pub fn column_coefficients(&self, n: i64) -> Vec<Complex64> {
        (0..self.columns)
            .map(|q| self.schedule.column_code(q).mapped_harmonic(n, &self.map))
            .collect()
    }

    /// Spatial phase of column `q` toward azimuth `angle_deg`.
    pub fn column_phase(&self, q: usize, angle_deg: f64) -> Complex64 {
        let psi = 2.0 * PI * self.d_over_lambda * angle_deg.to_radians().sin();
        Complex64::from_polar(1.0, psi * q as f64)
    }

    /// Complex far-field amplitude of harmonic `n` toward `angle_deg`,
    /// including the row multiplicity and the element taper.
    pub fn amplitude(&self, n: i64, angle_deg: f64, taper: ElementTaper) -> Complex64 {
        let coeffs = self.column_coefficients(n);
        self.amplitude_with(&coeffs, angle_deg, taper)
    }

    fn amplitude_with(
        &self,
        coeffs: &[Complex64],
        angle_deg: f64,
        taper: ElementTaper,
    ) -> Complex64 {
        let step = self.column_phase(1, angle_deg);
        let mut phasor = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for c in coeffs {
            acc += c * phasor;
            phasor *= step;
        }
        acc * (taper.gain(angle_deg) * self.rows as f64)
    }

    /// Instantaneous field toward `angle_deg` while the surface sits in bit slot `frame`.
    pub fn instantaneous(&self, frame: i64, angle_deg: f64, taper: ElementTaper) -> Complex64 {
        let step = self.column_phase(1, angle_deg);
        let mut phasor = Complex64::new(1.0, 0.0);
        let mut acc = Complex64::new(0.0, 0.0);
        for &k in self.schedule.shifts() {
            acc += self.map.value(self.schedule.base().bit_at(frame - k)) * phasor;
            phasor *= step;
        }
        acc * (taper.gain(angle_deg) * self.rows as f64)
    }

    pub fn pattern(
        &self,
        n: i64,
        grid: &[f64],
        taper: ElementTaper,
    ) -> Result<Vec<f64>, ArrayError> {
        let limit = self.n_max() + 2;
        if n.abs() > limit {
            return Err(ArrayError::OrderOutOfRange { order: n, limit });
        }
        check_grid(grid)?;
        let coeffs = self.column_coefficients(n);
        Ok(grid
            .iter()
            .map(|&a| self.amplitude_with(&coeffs, a, taper).norm())
            .collect())
    }
}

/// Linear field magnitude of harmonic `n` on `grid`.
pub fn harmonic_pattern(
    ris: &RisConfig,
    schedule: &CodeSchedule,
    n: i64,
    grid: &[f64],
    taper: ElementTaper,
) -> Result<Vec<f64>, ArrayError> {
    HarmonicArray::new(ris, schedule)?.pattern(n, grid, taper)
}

/// Grid index of the pattern maximum. Near-equal maxima (the n = +-L/2 lobes
/// at both endfire directions) resolve toward the side matching the sign of
/// `n`, then toward the smaller |angle|.
pub fn pattern_argmax(pattern: &[f64], grid: &[f64], n: i64) -> usize {
    let peak = pattern.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = peak.abs() * 1e-13;
    let side = |a: f64| -> i32 {
        if n == 0 || a == 0.0 || (a > 0.0) == (n > 0) {
            0
        } else {
            1
        }
    };
    (0..pattern.len())
        .filter(|&i| pattern[i] >= peak - tol)
        .min_by(|&a, &b| {
            side(grid[a])
                .cmp(&side(grid[b]))
                .then(grid[a].abs().total_cmp(&grid[b].abs()))
        })
        .unwrap_or(0)
}

/// Full width between the half-power (field / sqrt 2) points around the
/// pattern peak, linearly interpolated between grid points.
pub fn half_power_beamwidth(pattern: &[f64], grid: &[f64], peak: usize) -> f64 {
    let level = pattern[peak] / 2f64.sqrt();
    let crossing = |i: usize, j: usize| -> f64 {
        let (a, b) = (pattern[i], pattern[j]);
        grid[i] + (level - a) / (b - a) * (grid[j] - grid[i])
    };
    let left = (1..=peak)
        .rev()
        .find(|&i| pattern[i - 1] < level)
        .map(|i| crossing(i - 1, i))
        .unwrap_or(grid[0]);
    let right = (peak..pattern.len() - 1)
        .find(|&i| pattern[i + 1] < level)
        .map(|i| crossing(i, i + 1))
        .unwrap_or(grid[grid.len() - 1]);
    right - left
}

/// Metadata written next to an exported pattern library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSidecar {
    pub num_columns: usize,
    pub num_rows: usize,
    pub spacing_m: f64,
    pub spacing_wavelengths: f64,
    pub carrier_hz: f64,
    pub f0_hz: f64,
    pub code: String,
    pub bit_duration_s: f64,
    pub grid_step_deg: f64,
    pub taper: ElementTaper,
    pub n_max: i64,
    pub argmax_deg: Vec<(i64, f64)>,
}

/// Per-harmonic linear field magnitude over a fixed azimuth grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternLibrary {
    angles: Vec<f64>,
    n_max: i64,
    patterns: Vec<Vec<f64>>,
    argmax: Vec<f64>,
    sidecar: PatternSidecar,
}

impl PatternLibrary {
    pub fn build(
        ris: &RisConfig,
        schedule: &CodeSchedule,
        grid_step: f64,
        taper: ElementTaper,
    ) -> Result<Self, ArrayError> {
        let angles = angle_grid(grid_step)?;
        let array = HarmonicArray::new(ris, schedule)?;
        let n_max = array.n_max();
        let patterns = (-n_max..=n_max)
            .into_par_iter()
            .map(|n| array.pattern(n, &angles, taper))
            .collect::<Result<Vec<_>, _>>()?;
        let argmax: Vec<f64> = (-n_max..=n_max)
            .zip(&patterns)
            .map(|(n, p)| angles[pattern_argmax(p, &angles, n)])
            .collect();
        let sidecar = PatternSidecar {
            num_columns: ris.num_columns,
            num_rows: ris.num_rows,
            spacing_m: ris.spacing,
            spacing_wavelengths: ris.spacing_wavelengths(),
            carrier_hz: ris.carrier_hz,
            f0_hz: schedule.base().modulation_frequency(),
            code: schedule.base().to_bitstring(),
            bit_duration_s: schedule.base().bit_duration(),
            grid_step_deg: grid_step,
            taper,
            n_max,
            argmax_deg: (-n_max..=n_max).zip(argmax.iter().copied()).collect(),
        };
        Ok(Self {
            angles,
            n_max,
            patterns,
            argmax,
            sidecar,
        })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn orders(&self) -> impl Iterator<Item = i64> {
        -self.n_max..=self.n_max
    }

    pub fn pattern(&self, n: i64) -> Option<&[f64]> {
        if n.abs() > self.n_max {
            return None;
        }
        Some(&self.patterns[(n + self.n_max) as usize])
    }

    pub fn argmax_deg(&self, n: i64) -> Option<f64> {
        if n.abs() > self.n_max {
            return None;
        }
        Some(self.argmax[(n + self.n_max) as usize])
    }

    /// Order with the strongest field at grid index `idx`; `None` when two
    /// orders tie to within 1e-9 relative (a crossover).
    ///
    /// Orders `+-L/2` share the same column phase step (`+-pi`) and so have
    /// identical patterns; that pair resolves to the order on the same side
    /// as the angle.
    pub fn dominant_harmonic(&self, idx: usize) -> Option<i64> {
        let mut ranked: Vec<(i64, f64)> = self
            .orders()
            .map(|n| (n, self.patterns[(n + self.n_max) as usize][idx]))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        let angle = self.angles[idx];
        match ranked.as_slice() {
            [(n, a), (_, b), ..] if a - b > 1e-9 * a.abs() => Some(*n),
            [(n, _), (m, _), ..] if *n == -*m && self.is_degenerate_pair(*n) && angle != 0.0 => {
                Some(n.abs() * angle.signum() as i64)
            }
            [(n, _)] => Some(*n),
            _ => None,
        }
    }

    fn is_degenerate_pair(&self, n: i64) -> bool {
        n != 0 && 2 * n.unsigned_abs() as usize == self.sidecar.code.len()
    }

    pub fn sidecar(&self) -> &PatternSidecar {
        &self.sidecar
    }

    /// CSV with `angle_deg` followed by one `h{n}` column per harmonic.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> csv::Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["angle_deg".to_string()];
        header.extend(self.orders().map(|n| format!("h{n}")));
        wtr.write_record(&header)?;
        for (i, a) in self.angles.iter().enumerate() {
            let mut row = vec![a.to_string()];
            row.extend(self.patterns.iter().map(|p| p[i].to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}
