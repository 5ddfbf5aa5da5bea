//! Localization scenarios built on single-surface direction finding.
//!
//! The world is a 2D plane in meters. Bearings are degrees counter-clockwise
//! from the +x axis. A surface's local angle of arrival is measured from its
//! boresight, positive toward increasing bearing.

use std::collections::BTreeSet;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::array::{max_harmonic_order, ArrayError, ElementTaper, PatternLibrary, RisConfig};
use crate::channel::{
    required_sample_rate, samples_for_rate, synthesize_superposed, Capture, ChannelConfig,
    ChannelError, SurfaceLink, SynthesisMode,
};
use crate::code::CodeSchedule;
use crate::receiver::{
    average_spectrum_samples, detect_harmonics, estimate_aoa, DetectSettings, Receiver,
    ReceiverError,
};

/// Default minimum crossing-angle sine accepted by [`intersect_bearings`].
pub const DEFAULT_MIN_CONDITIONING: f64 = 0.05;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario needs {0}")]
    Missing(String),
    #[error("need at least two bearings, got {0}")]
    TooFewBearings(usize),
    #[error("bearings are ill-conditioned: crossing sine {conditioning:.3e} < {min}")]
    IllConditioned { conditioning: f64, min: f64 },
    #[error("intersection lies behind the ray from {0}")]
    BehindRay(String),
    #[error("{target} sits {angle_deg:.2} deg off the boresight of {surface}, outside [-90, 90]")]
    BehindSurface {
        surface: String,
        target: String,
        angle_deg: f64,
    },
    #[error("surfaces {a} and {b} have overlapping harmonic combs")]
    CombOverlap { a: String, b: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("{surface}: {source}")]
    Receiver {
        surface: String,
        source: ReceiverError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bearing from `self` toward `other`, in [0, 360).
    pub fn bearing_to(&self, other: &Point2) -> f64 {
        wrap_360((other.y - self.y).atan2(other.x - self.x).to_degrees())
    }
}

/// Placement of one surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct RisPose {
    pub name: String,
    pub position: Point2,
    /// World bearing of the surface normal.
    pub boresight_deg: f64,
    /// Where this surface's comb is centered relative to the carrier.
    #[serde(default)]
    pub f0_offset_hz: f64,
}

impl RisPose {
    pub fn new(name: impl Into<String>, position: Point2, boresight_deg: f64) -> Self {
        Self {
            name: name.into(),
            position,
            boresight_deg: wrap_360(boresight_deg),
            f0_offset_hz: 0.0,
        }
    }

    pub fn with_offset(mut self, offset_hz: f64) -> Self {
        self.f0_offset_hz = offset_hz;
        self
    }

    /// Angle of `target` off boresight, in (-180, 180].
    pub fn local_angle(&self, target: &Point2) -> f64 {
        wrap_180(self.position.bearing_to(target) - self.boresight_deg)
    }
}

fn wrap_360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

fn wrap_180(deg: f64) -> f64 {
    let w = wrap_360(deg);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

/// World bearing of a local angle of arrival.
pub fn world_bearing(pose: &RisPose, local_aoa_deg: f64) -> f64 {
    wrap_360(pose.boresight_deg + local_aoa_deg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PositionFix {
    pub position: Point2,
    /// RMS perpendicular distance from the fix to the bearing rays.
    pub residual: f64,
    /// Smallest pairwise |sin| of the bearing differences.
    pub conditioning: f64,
}

/// Least-squares point closest (in perpendicular distance) to every ray
/// `pose.position + t * dir(world_bearing(pose, aoa))`, `t >= 0`.
pub fn intersect_bearings(
    observations: &[(RisPose, f64)],
    min_conditioning: f64,
) -> Result<PositionFix, ScenarioError> {
    if observations.len() < 2 {
        return Err(ScenarioError::TooFewBearings(observations.len()));
    }
    let rays: Vec<(Point2, f64, f64)> = observations
        .iter()
        .map(|(pose, aoa)| {
            let b = world_bearing(pose, *aoa).to_radians();
            (pose.position, b.cos(), b.sin())
        })
        .collect();

    let mut conditioning = f64::INFINITY;
    for (i, a) in rays.iter().enumerate() {
        for b in &rays[i + 1..] {
            conditioning = conditioning.min((a.1 * b.2 - a.2 * b.1).abs());
        }
    }
    if conditioning < min_conditioning || conditioning == 0.0 {
        return Err(ScenarioError::IllConditioned {
            conditioning,
            min: min_conditioning,
        });
    }

    // sum (I - u u^T) x = sum (I - u u^T) p
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, ux, uy) in &rays {
        let (m11, m12, m22) = (1.0 - ux * ux, -ux * uy, 1.0 - uy * uy);
        a11 += m11;
        a12 += m12;
        a22 += m22;
        b1 += m11 * p.x + m12 * p.y;
        b2 += m12 * p.x + m22 * p.y;
    }
    let det = a11 * a22 - a12 * a12;
    let position = Point2::new((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);

    let mut sq = 0.0;
    for ((pose, _), (p, ux, uy)) in observations.iter().zip(&rays) {
        let (dx, dy) = (position.x - p.x, position.y - p.y);
        let along = dx * ux + dy * uy;
        if along < -1e-9 * (1.0 + dx.hypot(dy)) {
            return Err(ScenarioError::BehindRay(pose.name.clone()));
        }
        let perp = dx * uy - dy * ux;
        sq += perp * perp;
    }
    Ok(PositionFix {
        position,
        residual: (sq / rays.len() as f64).sqrt(),
        conditioning,
    })
}

/// Worst-case two-surface fix error when each bearing is off by at most
/// `error_deg`: `2 * range * tan(error) / conditioning`.
pub fn quantization_error_bound(max_range: f64, error_deg: f64, conditioning: f64) -> f64 {
    2.0 * max_range * error_deg.to_radians().tan() / conditioning
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// The user feeds back harmonic magnitudes; the network estimates the
    /// user's direction from the surface.
    NetworkSide,
    /// The user estimates its own direction from the surface.
    UserSide,
    /// The user finds the direction toward the surface.
    RisDiscovery,
    /// Several surfaces on distinct comb offsets give a position fix.
    MultiRisFix,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::NetworkSide => "network_side",
            Self::UserSide => "user_side",
            Self::RisDiscovery => "ris_discovery",
            Self::MultiRisFix => "multi_ris_fix",
        }
    }
}

/// One coded surface in the world.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    pub pose: RisPose,
    pub ris: RisConfig,
    pub schedule: CodeSchedule,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub surfaces: Vec<Surface>,
    pub user: Option<Point2>,
}

/// Capture and estimation settings shared by every surface in a run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSettings {
    pub periods: usize,
    /// `None` picks the smallest power-of-two multiple of `L` that satisfies
    /// the sampling precondition for every comb.
    pub samples_per_period: Option<usize>,
    pub mode: SynthesisMode,
    pub taper: ElementTaper,
    pub grid_step_deg: f64,
    pub receiver: Receiver,
    /// Hint each comb with its surface's own f0 instead of searching blind.
    pub known_f0: bool,
    pub min_conditioning: f64,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        Self {
            periods: 32,
            samples_per_period: None,
            mode: SynthesisMode::HarmonicDomain,
            taper: ElementTaper::None,
            grid_step_deg: 0.1,
            receiver: Receiver::default(),
            known_f0: true,
            min_conditioning: DEFAULT_MIN_CONDITIONING,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceEstimate {
    pub surface: String,
    pub f0_hz: f64,
    pub offset_hz: f64,
    pub true_local_deg: f64,
    pub est_local_deg: f64,
    pub err_deg: f64,
    pub true_bearing_deg: f64,
    pub est_bearing_deg: f64,
    pub confidence: f64,
    pub psr: Option<f64>,
    pub magnitudes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryReport {
    pub surface: String,
    /// Bearing from the user toward the surface.
    pub true_bearing_deg: f64,
    pub est_bearing_deg: f64,
    /// Angle of the surface relative to the user's line of sight back along
    /// the surface normal.
    pub true_relative_deg: f64,
    pub est_relative_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixReport {
    pub position: Point2,
    pub truth: Point2,
    pub error_m: f64,
    pub residual_m: f64,
    pub conditioning: f64,
    /// Error bound implied by one partition width per bearing.
    pub partition_bound_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: ScenarioKind,
    /// Node that runs the estimator.
    pub estimator: String,
    pub surfaces: Vec<RisPose>,
    pub user: Point2,
    pub channel: ChannelConfig,
    pub sample_rate_hz: f64,
    pub estimates: Vec<SurfaceEstimate>,
    pub discovery: Option<DiscoveryReport>,
    pub fix: Option<FixReport>,
}

impl ScenarioReport {
    pub fn write_json<W: Write>(&self, mut out: W) -> Result<(), ScenarioError> {
        serde_json::to_writer_pretty(&mut out, self)?;
        writeln!(out)?;
        Ok(())
    }

    /// One row per surface.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ScenarioError> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "scenario",
            "surface",
            "offset_hz",
            "true_local_deg",
            "est_local_deg",
            "err_deg",
            "true_bearing_deg",
            "est_bearing_deg",
            "fix_error_m",
        ])?;
        let fix_err = self
            .fix
            .as_ref()
            .map(|f| f.error_m.to_string())
            .unwrap_or_default();
        for e in &self.estimates {
            wtr.write_record([
                self.scenario.name().to_string(),
                e.surface.clone(),
                e.offset_hz.to_string(),
                e.true_local_deg.to_string(),
                e.est_local_deg.to_string(),
                e.err_deg.to_string(),
                e.true_bearing_deg.to_string(),
                e.est_bearing_deg.to_string(),
                fix_err.clone(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn samples_per_period(
    surfaces: &[&Surface],
    settings: &ScenarioSettings,
) -> Result<usize, ScenarioError> {
    if let Some(spp) = settings.samples_per_period {
        return Ok(spp);
    }
    let first = surfaces[0].schedule.base();
    let mut rate: f64 = 0.0;
    for s in surfaces {
        let f0 = s.schedule.base().modulation_frequency();
        rate = rate.max(required_sample_rate(f0, n_max(s), s.pose.f0_offset_hz));
    }
    let spp = samples_for_rate(first.len(), rate / first.modulation_frequency());
    if spp > 1 << 24 {
        return Err(ScenarioError::Invalid(
            "comb offsets need an impractical sample rate".into(),
        ));
    }
    Ok(spp)
}

fn n_max(s: &Surface) -> i64 {
    max_harmonic_order(s.schedule.code_len(), s.ris.spacing_wavelengths())
}

fn check_combs(surfaces: &[&Surface]) -> Result<(), ScenarioError> {
    for (i, a) in surfaces.iter().enumerate() {
        for b in &surfaces[i + 1..] {
            let f0 = a
                .schedule
                .base()
                .modulation_frequency()
                .max(b.schedule.base().modulation_frequency());
            let n_max = |s: &Surface| {
                crate::array::max_harmonic_order(s.schedule.code_len(), s.ris.spacing_wavelengths())
            };
            let span = (2 * n_max(a).max(n_max(b)) + 1) as f64 * f0;
            if (a.pose.f0_offset_hz - b.pose.f0_offset_hz).abs() < span * (1.0 - 1e-9) {
                return Err(ScenarioError::CombOverlap {
                    a: a.pose.name.clone(),
                    b: b.pose.name.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Simulates what `user` receives from `surfaces` (superposed) and estimates
/// each surface's local angle from its own comb.
pub fn estimate_surfaces(
    surfaces: &[&Surface],
    user: &Point2,
    channel: &ChannelConfig,
    settings: &ScenarioSettings,
) -> Result<(Vec<SurfaceEstimate>, f64), ScenarioError> {
    if surfaces.is_empty() {
        return Err(ScenarioError::Missing("at least one surface".into()));
    }
    check_combs(surfaces)?;
    let mut truths = Vec::with_capacity(surfaces.len());
    for s in surfaces {
        let angle = s.pose.local_angle(user);
        if angle.abs() > 90.0 {
            return Err(ScenarioError::BehindSurface {
                surface: s.pose.name.clone(),
                target: "user".into(),
                angle_deg: angle,
            });
        }
        truths.push(angle);
    }

    let spp = samples_per_period(surfaces, settings)?;
    let capture = Capture::periods(&surfaces[0].schedule, settings.periods, spp)
        .with_mode(settings.mode)
        .with_taper(settings.taper);
    let links: Vec<SurfaceLink<'_>> = surfaces
        .iter()
        .zip(&truths)
        .map(|(s, &angle)| SurfaceLink {
            ris: &s.ris,
            schedule: &s.schedule,
            rx_angle_deg: angle,
            offset_hz: s.pose.f0_offset_hz,
        })
        .collect();
    let waveform = synthesize_superposed(&links, channel, &capture)?;

    let rx = &settings.receiver;
    let mut out = Vec::with_capacity(surfaces.len());
    for (s, &truth) in surfaces.iter().zip(&truths) {
        let name = s.pose.name.clone();
        let wrap = |source| ScenarioError::Receiver {
            surface: name.clone(),
            source,
        };
        let f0 = s.schedule.base().modulation_frequency();
        let library =
            PatternLibrary::build(&s.ris, &s.schedule, settings.grid_step_deg, settings.taper)?;
        let window = (rx.window_periods as f64 * capture.sample_rate_hz / f0).round() as usize;
        let spectrum =
            average_spectrum_samples(&waveform, window, rx.overlap, rx.window).map_err(wrap)?;
        let detect = DetectSettings {
            center_hz: s.pose.f0_offset_hz,
            ..rx.detect.clone()
        };
        let hint = if settings.known_f0 {
            Some(f0)
        } else {
            rx.f0_hint
        };
        let meas = detect_harmonics(&spectrum, hint, library.n_max(), &detect).map_err(wrap)?;
        let est = estimate_aoa(
            &meas,
            &library,
            &detect.exclude_orders,
            rx.combination,
            rx.scaling,
        )
        .map_err(wrap)?;
        out.push(SurfaceEstimate {
            surface: s.pose.name.clone(),
            f0_hz: meas.f0_hz,
            offset_hz: s.pose.f0_offset_hz,
            true_local_deg: truth,
            est_local_deg: est.angle_deg,
            err_deg: est.angle_deg - truth,
            true_bearing_deg: world_bearing(&s.pose, truth),
            est_bearing_deg: world_bearing(&s.pose, est.angle_deg),
            confidence: meas.confidence,
            psr: est.psr,
            magnitudes: meas.magnitudes,
        });
    }
    Ok((out, capture.sample_rate_hz))
}

/// Runs one localization scenario end to end.
pub fn run_scenario(
    kind: ScenarioKind,
    world: &World,
    channel: &ChannelConfig,
    settings: &ScenarioSettings,
) -> Result<ScenarioReport, ScenarioError> {
    let user = world
        .user
        .ok_or_else(|| ScenarioError::Missing("a user position".into()))?;
    let surfaces: Vec<&Surface> = match kind {
        ScenarioKind::MultiRisFix => {
            if world.surfaces.len() < 2 {
                return Err(ScenarioError::Missing("at least two surfaces".into()));
            }
            world.surfaces.iter().collect()
        }
        _ => vec![world
            .surfaces
            .first()
            .ok_or_else(|| ScenarioError::Missing("a surface".into()))?],
    };
    let names: BTreeSet<&str> = surfaces.iter().map(|s| s.pose.name.as_str()).collect();
    if names.len() != surfaces.len() {
        return Err(ScenarioError::Invalid(
            "surface names must be unique".into(),
        ));
    }

    let (estimates, sample_rate_hz) = estimate_surfaces(&surfaces, &user, channel, settings)?;

    let discovery = (kind == ScenarioKind::RisDiscovery).then(|| {
        let e = &estimates[0];
        DiscoveryReport {
            surface: e.surface.clone(),
            true_bearing_deg: wrap_360(e.true_bearing_deg + 180.0),
            est_bearing_deg: wrap_360(e.est_bearing_deg + 180.0),
            true_relative_deg: -e.true_local_deg,
            est_relative_deg: -e.est_local_deg,
        }
    });

    let fix = if kind == ScenarioKind::MultiRisFix {
        let obs: Vec<(RisPose, f64)> = surfaces
            .iter()
            .zip(&estimates)
            .map(|(s, e)| (s.pose.clone(), e.est_local_deg))
            .collect();
        let fix = intersect_bearings(&obs, settings.min_conditioning)?;
        let range = surfaces
            .iter()
            .map(|s| s.pose.position.distance(&user))
            .fold(0.0, f64::max);
        let width = surfaces
            .iter()
            .map(|s| crate::receiver::angular_resolution(s.schedule.code_len()))
            .fold(0.0, f64::max);
        Some(FixReport {
            position: fix.position,
            truth: user,
            error_m: fix.position.distance(&user),
            residual_m: fix.residual,
            conditioning: fix.conditioning,
            partition_bound_m: quantization_error_bound(range, width, fix.conditioning),
        })
    } else {
        None
    };

    let estimator = match kind {
        ScenarioKind::NetworkSide => "network",
        _ => "user",
    };
    Ok(ScenarioReport {
        scenario: kind,
        estimator: estimator.into(),
        surfaces: surfaces.iter().map(|s| s.pose.clone()).collect(),
        user,
        channel: channel.clone(),
        sample_rate_hz,
        estimates,
        discovery,
        fix,
    })
}
