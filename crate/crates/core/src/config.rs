//! Experiment configuration: one JSON document drives every command.
//!
//! Parsing goes through typed sections whose field types reject bad values
//! at the offending JSON location, so errors carry a path and line. The
//! published schema is generated from the same types ([`schema_json`]).

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{max_harmonic_order, ElementTaper, RisConfig, SPEED_OF_LIGHT};
use crate::channel::{min_samples_per_period, Capture, ChannelConfig, MultipathTap, SynthesisMode};
use crate::code::{BinaryCode, CodeSchedule, ReflectionMap};
use crate::receiver::{Combination, DetectSettings, PatternScaling, Receiver, WindowFunction};
use crate::scenario::{Point2, RisPose, ScenarioKind, ScenarioSettings, Surface, World};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message} (line {line}, column {column})")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ConfigError {
    fn invalid(path: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }

    /// JSON path of the offending value.
    pub fn path(&self) -> String {
        match self {
            Self::Parse { path, .. } | Self::Invalid { path, .. } => path.clone(),
            Self::Read { path, .. } => path.display().to_string(),
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            Self::Parse { line, .. } => Some(*line),
            _ => None,
        }
    }
}

/// Finite number strictly greater than zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize, JsonSchema)]
#[serde(try_from = "f64", into = "f64")]
#[schemars(extend("exclusiveMinimum" = 0))]
pub struct Positive(f64);

impl Positive {
    pub const fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Positive {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if v.is_finite() && v > 0.0 {
            Ok(Self(v))
        } else {
            Err(format!("expected a finite number > 0, got {v}"))
        }
    }
}

impl From<Positive> for f64 {
    fn from(v: Positive) -> f64 {
        v.0
    }
}

/// Number in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize, JsonSchema)]
#[serde(try_from = "f64", into = "f64")]
#[schemars(extend("minimum" = 0, "exclusiveMaximum" = 1))]
pub struct Fraction(f64);

impl Fraction {
    pub const fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Fraction {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if (0.0..1.0).contains(&v) {
            Ok(Self(v))
        } else {
            Err(format!("expected a number in [0, 1), got {v}"))
        }
    }
}

impl From<Fraction> for f64 {
    fn from(v: Fraction) -> f64 {
        v.0
    }
}

/// Angle off boresight in `[-90, 90]` degrees.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize, JsonSchema)]
#[serde(try_from = "f64", into = "f64")]
#[schemars(extend("minimum" = -90, "maximum" = 90))]
pub struct Angle(f64);

impl Angle {
    pub const fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Angle {
    type Error = String;

    fn try_from(v: f64) -> Result<Self, String> {
        if (-90.0..=90.0).contains(&v) {
            Ok(Self(v))
        } else {
            Err(format!("expected an angle in [-90, 90] degrees, got {v}"))
        }
    }
}

impl From<Angle> for f64 {
    fn from(v: Angle) -> f64 {
        v.0
    }
}

/// Integer of at least one.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, JsonSchema,
)]
#[serde(try_from = "u64", into = "u64")]
#[schemars(extend("minimum" = 1))]
pub struct Count(usize);

impl Count {
    pub const fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<u64> for Count {
    type Error = String;

    fn try_from(v: u64) -> Result<Self, String> {
        if v >= 1 {
            usize::try_from(v).map(Self).map_err(|e| e.to_string())
        } else {
            Err("expected an integer >= 1".into())
        }
    }
}

impl From<Count> for u64 {
    fn from(v: Count) -> u64 {
        v.0 as u64
    }
}

/// Non-empty string of `0`/`1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(try_from = "String", into = "String")]
#[schemars(extend("pattern" = "^[01]+$"))]
pub struct Bitstring(String);

impl TryFrom<String> for Bitstring {
    type Error = String;

    fn try_from(v: String) -> Result<Self, String> {
        if !v.is_empty() && v.chars().all(|c| c == '0' || c == '1') {
            Ok(Self(v))
        } else {
            Err(format!("expected a non-empty string of 0 and 1, got {v:?}"))
        }
    }
}

impl From<Bitstring> for String {
    fn from(v: Bitstring) -> String {
        v.0
    }
}

const fn pos(v: f64) -> Positive {
    Positive(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ReflectionMapKind {
    /// 0 absorbs, 1 reflects.
    #[default]
    OnOff,
    /// 0 and 1 reflect with phases pi and 0.
    BinaryPhase,
}

impl ReflectionMapKind {
    pub fn map(self) -> ReflectionMap {
        match self {
            Self::OnOff => ReflectionMap::ON_OFF,
            Self::BinaryPhase => ReflectionMap::BINARY_PHASE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SurfaceSection {
    pub columns: Count,
    pub rows: Count,
    /// Column spacing in wavelengths; ignored when `spacing_m` is set.
    pub spacing_wavelengths: Positive,
    /// Column spacing in meters.
    pub spacing_m: Option<Positive>,
    pub carrier_hz: Positive,
    pub reflection_map: ReflectionMapKind,
}

impl Default for SurfaceSection {
    fn default() -> Self {
        Self {
            columns: Count(16),
            rows: Count(16),
            spacing_wavelengths: pos(0.5),
            spacing_m: None,
            carrier_hz: pos(5.385e9),
            reflection_map: ReflectionMapKind::OnOff,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct CodeSection {
    /// Base code; defaults to a single ON bit followed by `columns - 1` zeros.
    pub bits: Option<Bitstring>,
    pub bit_duration_s: Positive,
    /// Cyclic shift per column; defaults to column index.
    pub shifts: Option<Vec<i64>>,
}

impl Default for CodeSection {
    fn default() -> Self {
        Self {
            bits: None,
            bit_duration_s: pos(1.87e-3),
            shifts: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct TapSection {
    pub delay_s: f64,
    /// Complex gain as `[re, im]`.
    pub gain: [f64; 2],
    pub arrival_angle_deg: Angle,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// `null` is noiseless.
    pub snr_db: Option<f64>,
    pub carrier_leak: f64,
    pub multipath: Vec<TapSection>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct CaptureSection {
    /// Capture length in code periods.
    pub periods: Count,
    /// `null` picks the smallest power-of-two multiple of `2L` that satisfies
    /// the sampling precondition.
    pub samples_per_period: Option<Count>,
    pub mode: SynthesisMode,
    pub taper: ElementTaper,
}

impl Default for CaptureSection {
    fn default() -> Self {
        Self {
            periods: Count(32),
            samples_per_period: None,
            mode: SynthesisMode::HarmonicDomain,
            taper: ElementTaper::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverSection {
    /// Analysis window length in code periods (at least 4).
    pub window_periods: Count,
    pub overlap: Fraction,
    pub window: WindowFunction,
    /// Use the configured code's f0 instead of a blind comb search.
    pub known_f0: bool,
    pub exclude_orders: Vec<i64>,
    pub combination: Combination,
    pub scaling: PatternScaling,
    pub comb_threshold: Fraction,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        Self {
            window_periods: Count(4),
            overlap: Fraction(0.0),
            window: WindowFunction::Rectangular,
            known_f0: true,
            exclude_orders: vec![0],
            combination: Combination::Linear,
            scaling: PatternScaling::Common,
            comb_threshold: Fraction(0.2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct PatternSection {
    pub grid_step_deg: Positive,
}

impl Default for PatternSection {
    fn default() -> Self {
        Self {
            grid_step_deg: pos(0.1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Receiver angle off boresight.
    pub rx_angle_deg: Angle,
}

impl Default for SimulateSection {
    fn default() -> Self {
        Self {
            rx_angle_deg: Angle(22.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AngleRange {
    pub start: Angle,
    pub stop: Angle,
    pub step: Positive,
}

impl AngleRange {
    pub fn values(&self) -> Vec<f64> {
        let (start, stop, step) = (self.start.get(), self.stop.get(), self.step.get());
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Vec::new();
        }
        (0..=count as usize)
            .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub angles: AngleRange,
    /// One entry per SNR point; `null` is noiseless.
    pub snr_db: Vec<Option<f64>>,
    /// Noise realizations per (angle, SNR) point.
    pub seeds: Count,
    /// Half-width of the error band counted in the summary.
    pub error_band_deg: Positive,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            angles: AngleRange {
                start: Angle(-60.0),
                stop: Angle(60.0),
                step: pos(5.0),
            },
            snr_db: vec![Some(10.0)],
            seeds: Count(100),
            error_band_deg: pos(5.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub kind: ScenarioKind,
    /// Every surface uses the `surface` and `code` sections.
    pub surfaces: Vec<RisPose>,
    pub user: Point2,
    #[serde(default = "default_min_conditioning")]
    pub min_conditioning: f64,
}

fn default_min_conditioning() -> f64 {
    crate::scenario::DEFAULT_MIN_CONDITIONING
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub surface: SurfaceSection,
    #[serde(default)]
    pub code: CodeSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub capture: CaptureSection,
    #[serde(default)]
    pub receiver: ReceiverSection,
    #[serde(default)]
    pub pattern: PatternSection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub scenario: Option<ScenarioSection>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            surface: SurfaceSection::default(),
            code: CodeSection::default(),
            channel: ChannelSection::default(),
            capture: CaptureSection::default(),
            receiver: ReceiverSection::default(),
            pattern: PatternSection::default(),
            simulate: SimulateSection::default(),
            sweep: None,
            scenario: None,
            output_dir: default_output_dir(),
        }
    }
}

/// Pretty-printed JSON schema of [`ExperimentConfig`].
pub fn schema_json() -> String {
    let schema = schemars::schema_for!(ExperimentConfig);
    serde_json::to_string_pretty(&schema).expect("schema serializes") + "\n"
}

impl ExperimentConfig {
    /// Square `size x size` surface with its single-bit code, defaults elsewhere.
    pub fn square(size: usize) -> Self {
        let mut cfg = Self::default();
        cfg.surface.columns = Count(size.max(1));
        cfg.surface.rows = Count(size.max(1));
        cfg
    }

    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let (line, column) = locate_key(text, &path, inner.line(), inner.column());
            ConfigError::Parse {
                path,
                line,
                column,
                message: strip_position(&inner.to_string()),
            }
        })?;
        de.end().map_err(|e| ConfigError::Parse {
            path: ".".into(),
            line: e.line(),
            column: e.column(),
            message: strip_position(&e.to_string()),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    /// Cross-field checks the schema cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let columns = self.surface.columns.get();
        if let Some(shifts) = &self.code.shifts {
            if shifts.len() != columns {
                return Err(ConfigError::invalid(
                    "code.shifts",
                    format!("{} shifts for {columns} columns", shifts.len()),
                ));
            }
        }
        self.ris()
            .map_err(|e| ConfigError::invalid("surface", e.to_string()))?;
        let code_len = self.code_len();
        let n_max = max_harmonic_order(code_len, self.spacing_wavelengths());
        if n_max == 0 {
            return Err(ConfigError::invalid(
                "surface.spacing_wavelengths",
                "no harmonic order radiates at this spacing",
            ));
        }
        if self.receiver.window_periods.get() < 4 {
            return Err(ConfigError::invalid(
                "receiver.window_periods",
                "spectral resolution must be at least f0/4, so windows need >= 4 periods",
            ));
        }
        if self.capture.periods.get() < self.receiver.window_periods.get() {
            return Err(ConfigError::invalid(
                "capture.periods",
                "capture is shorter than one analysis window",
            ));
        }
        if let Some(spp) = self.capture.samples_per_period {
            let min = min_samples_per_period(code_len, n_max, 0.0, 1.0);
            if spp.get() < min {
                return Err(ConfigError::invalid(
                    "capture.samples_per_period",
                    format!("need at least {min} samples per period"),
                ));
            }
        }
        if let Some(snr) = self.channel.snr_db {
            if !snr.is_finite() {
                return Err(ConfigError::invalid("channel.snr_db", "must be finite"));
            }
        }
        for (i, tap) in self.channel.multipath.iter().enumerate() {
            if !(tap.delay_s.is_finite() && tap.delay_s >= 0.0) {
                return Err(ConfigError::invalid(
                    &format!("channel.multipath[{i}].delay_s"),
                    "delay must be >= 0",
                ));
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.angles.values().is_empty() {
                return Err(ConfigError::invalid("sweep.angles", "angle range is empty"));
            }
            if sweep.snr_db.is_empty() {
                return Err(ConfigError::invalid("sweep.snr_db", "SNR list is empty"));
            }
            if sweep.snr_db.iter().flatten().any(|s| !s.is_finite()) {
                return Err(ConfigError::invalid(
                    "sweep.snr_db",
                    "SNR values must be finite",
                ));
            }
        }
        if let Some(sc) = &self.scenario {
            let names: BTreeSet<&str> = sc.surfaces.iter().map(|s| s.name.as_str()).collect();
            if names.len() != sc.surfaces.len() {
                return Err(ConfigError::invalid(
                    "scenario.surfaces",
                    "surface names must be unique",
                ));
            }
            if !(sc.min_conditioning >= 0.0 && sc.min_conditioning <= 1.0) {
                return Err(ConfigError::invalid(
                    "scenario.min_conditioning",
                    "must lie in [0, 1]",
                ));
            }
        }
        Ok(())
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        match self.surface.spacing_m {
            Some(d) => d.get() * self.surface.carrier_hz.get() / SPEED_OF_LIGHT,
            None => self.surface.spacing_wavelengths.get(),
        }
    }

    pub fn ris(&self) -> Result<RisConfig, crate::array::ArrayError> {
        let s = &self.surface;
        let spacing = self.spacing_wavelengths() * SPEED_OF_LIGHT / s.carrier_hz.get();
        RisConfig::new(
            s.columns.get(),
            s.rows.get(),
            spacing,
            s.carrier_hz.get(),
            s.reflection_map.map(),
        )
    }

    pub fn code_len(&self) -> usize {
        match &self.code.bits {
            Some(b) => b.0.len(),
            None => self.surface.columns.get(),
        }
    }

    pub fn base_code(&self) -> BinaryCode {
        let tau = self.code.bit_duration_s.get();
        let code = match &self.code.bits {
            Some(b) => BinaryCode::from_bitstring(&b.0, tau),
            None => BinaryCode::single_bit(self.surface.columns.get(), 0, tau),
        };
        code.expect("validated code")
    }

    pub fn schedule(&self) -> CodeSchedule {
        let base = self.base_code();
        match &self.code.shifts {
            Some(shifts) => CodeSchedule::new(base, shifts.clone()),
            None => CodeSchedule::unit_shifts(base, self.surface.columns.get()),
        }
    }

    pub fn channel(&self) -> ChannelConfig {
        let c = &self.channel;
        ChannelConfig {
            snr_db: c.snr_db,
            carrier_leak: c.carrier_leak,
            multipath: c
                .multipath
                .iter()
                .map(|t| MultipathTap {
                    delay_s: t.delay_s,
                    gain: Complex64::new(t.gain[0], t.gain[1]),
                    arrival_angle_deg: t.arrival_angle_deg.get(),
                })
                .collect(),
            seed: c.seed,
        }
    }

    pub fn samples_per_period(&self) -> usize {
        match self.capture.samples_per_period {
            Some(spp) => spp.get(),
            None => {
                let len = self.code_len();
                min_samples_per_period(
                    len,
                    max_harmonic_order(len, self.spacing_wavelengths()),
                    0.0,
                    1.0,
                )
            }
        }
    }

    pub fn capture(&self) -> Capture {
        Capture::periods(
            &self.schedule(),
            self.capture.periods.get(),
            self.samples_per_period(),
        )
        .with_mode(self.capture.mode)
        .with_taper(self.capture.taper)
    }

    pub fn receiver(&self) -> Receiver {
        let r = &self.receiver;
        Receiver {
            window_periods: r.window_periods.get(),
            overlap: r.overlap.get(),
            window: r.window,
            f0_hint: r.known_f0.then(|| self.base_code().modulation_frequency()),
            detect: DetectSettings {
                center_hz: 0.0,
                threshold: r.comb_threshold.get(),
                exclude_orders: r.exclude_orders.iter().copied().collect(),
            },
            combination: r.combination,
            scaling: r.scaling,
        }
    }

    pub fn scenario_settings(&self) -> ScenarioSettings {
        ScenarioSettings {
            periods: self.capture.periods.get(),
            samples_per_period: self.capture.samples_per_period.map(Count::get),
            mode: self.capture.mode,
            taper: self.capture.taper,
            grid_step_deg: self.pattern.grid_step_deg.get(),
            receiver: self.receiver(),
            known_f0: self.receiver.known_f0,
            min_conditioning: self
                .scenario
                .as_ref()
                .map_or(crate::scenario::DEFAULT_MIN_CONDITIONING, |s| {
                    s.min_conditioning
                }),
        }
    }

    pub fn world(&self) -> Result<World, ConfigError> {
        let sc = self
            .scenario
            .as_ref()
            .ok_or_else(|| ConfigError::invalid("scenario", "missing scenario section"))?;
        let ris = self
            .ris()
            .map_err(|e| ConfigError::invalid("surface", e.to_string()))?;
        let schedule = self.schedule();
        Ok(World {
            surfaces: sc
                .surfaces
                .iter()
                .map(|pose| Surface {
                    pose: pose.clone(),
                    ris: ris.clone(),
                    schedule: schedule.clone(),
                })
                .collect(),
            user: Some(sc.user),
        })
    }

    /// Non-fatal remarks about the configuration.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.spacing_wavelengths() > 0.5 + 1e-12 {
            out.push(format!(
                "column spacing {:.3} wavelengths exceeds half a wavelength: grating lobes make harmonic beams ambiguous",
                self.spacing_wavelengths()
            ));
        }
        out
    }
}

/// Validation failures surface after the value has been consumed, so walk
/// back from the reported position to the last occurrence of the failing key.
fn locate_key(text: &str, path: &str, line: usize, column: usize) -> (usize, usize) {
    let key = path.rsplit('.').next().unwrap_or("");
    let key = key.split('[').next().unwrap_or("");
    if key.is_empty() || key == "?" || line == 0 {
        return (line, column);
    }
    let end: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum::<usize>()
        + column;
    let quoted = format!("\"{key}\"");
    match text[..end.min(text.len())].rfind(&quoted) {
        Some(at) => {
            let before = &text[..at];
            let line = before.matches('\n').count() + 1;
            let column = at - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            (line, column)
        }
        None => (line, column),
    }
}

/// serde_json appends " at line L column C"; the position is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_uses_defaults() {
        let cfg = ExperimentConfig::from_json_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.code_len(), 16);
        assert_eq!(cfg.base_code().to_bitstring(), "1000000000000000");
        assert_eq!(cfg.schedule().shifts().len(), 16);
        assert!((cfg.spacing_wavelengths() - 0.5).abs() < 1e-15);
        assert_eq!(cfg.samples_per_period(), 64);
        assert!(cfg.warnings().is_empty());
    }

    #[test]
    fn bad_values_report_path_and_line() {
        let text = "{\n  \"surface\": {\n    \"spacing_wavelengths\": -0.5\n  }\n}";
        let err = ExperimentConfig::from_json_str(text).unwrap_err();
        assert_eq!(err.path(), "surface.spacing_wavelengths");
        assert_eq!(err.line(), Some(3));
        assert!(
            matches!(err, ConfigError::Parse { column: 5, .. }),
            "{err:?}"
        );
        assert!(err.to_string().contains("> 0"), "{err}");

        let err = ExperimentConfig::from_json_str("{\"recevier\": {}}").unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");

        let err = ExperimentConfig::from_json_str("{\"code\": {\"bits\": \"10x\"}}").unwrap_err();
        assert_eq!(err.path(), "code.bits");

        let err =
            ExperimentConfig::from_json_str("{\"simulate\": {\"rx_angle_deg\": 91}}").unwrap_err();
        assert_eq!(err.path(), "simulate.rx_angle_deg");
    }

    #[test]
    fn cross_field_validation() {
        let err = ExperimentConfig::from_json_str("{\"code\": {\"shifts\": [0, 1]}}").unwrap_err();
        assert_eq!(err.path(), "code.shifts");
        let err =
            ExperimentConfig::from_json_str("{\"receiver\": {\"window_periods\": 2}}").unwrap_err();
        assert_eq!(err.path(), "receiver.window_periods");
        let text = r#"{"sweep": {"angles": {"start": 0, "stop": 10, "step": 1}, "snr_db": []}}"#;
        assert_eq!(
            ExperimentConfig::from_json_str(text).unwrap_err().path(),
            "sweep.snr_db"
        );
        let text = r#"{"sweep": {"angles": {"start": 10, "stop": 0, "step": 1}}}"#;
        assert_eq!(
            ExperimentConfig::from_json_str(text).unwrap_err().path(),
            "sweep.angles"
        );
    }

    #[test]
    fn grating_lobe_warning() {
        let cfg = ExperimentConfig::from_json_str(r#"{"surface": {"spacing_wavelengths": 0.7}}"#)
            .unwrap();
        assert_eq!(cfg.warnings().len(), 1);
    }

    #[test]
    fn angle_range_values() {
        let r = AngleRange {
            start: Angle(-60.0),
            stop: Angle(60.0),
            step: pos(5.0),
        };
        let v = r.values();
        assert_eq!(v.len(), 25);
        assert_eq!(v[0], -60.0);
        assert_eq!(v[24], 60.0);
        let r = AngleRange {
            start: Angle(0.0),
            stop: Angle(1.0),
            step: pos(0.1),
        };
        assert_eq!(r.values().len(), 11);
        assert_eq!(r.values()[3], 0.3);
    }

    #[test]
    fn schema_lists_defaults() {
        let schema: serde_json::Value = serde_json::from_str(&schema_json()).unwrap();
        let text = schema.to_string();
        assert!(text.contains("5385000000"), "carrier default missing");
        assert!(text.contains("exclusiveMinimum"));
        assert!(text.contains("multi_ris_fix"));
    }
}
