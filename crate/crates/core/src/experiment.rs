//! Command implementations behind the `ris-harmonics` binary.
//!
//! Each `run_*` function computes its result in memory; `write_to` puts the
//! result files into a directory. Nothing written depends on wall-clock time
//! or thread scheduling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::array::{steering_angle, ArrayError, PatternLibrary};
use crate::channel::{synthesize_received, ChannelConfig, ChannelError, Waveform};
use crate::config::{ConfigError, ExperimentConfig};
use crate::receiver::{
    average_spectrum, detect_harmonics, AveragedSpectrum, HarmonicMeasurement, PipelineOutput,
    ReceiverError,
};
use crate::scenario::{run_scenario, ScenarioError, ScenarioReport};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Array(#[from] ArrayError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Receiver(#[from] ReceiverError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl ExperimentError {
    /// 2 for configuration problems, 3 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            _ => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Config(_) => "config",
            Self::Array(_) => "array",
            Self::Channel(_) => "channel",
            Self::Receiver(_) => "receiver",
            Self::Scenario(_) => "scenario",
            Self::Output { .. } | Self::Csv(_) | Self::Json(_) => "output",
            Self::Pool(_) => "worker_pool",
        }
    }
}

type Result<T> = std::result::Result<T, ExperimentError>;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).map_err(|source| ExperimentError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|source| ExperimentError::Output { path, source })
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut out = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(|source| ExperimentError::Output {
            path: dir.join(name),
            source,
        })?;
    Ok(dir.join(name))
}

fn finish(mut out: BufWriter<File>, path: PathBuf) -> Result<PathBuf> {
    out.flush().map_err(|source| ExperimentError::Output {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn library(cfg: &ExperimentConfig) -> Result<PatternLibrary> {
    Ok(PatternLibrary::build(
        &cfg.ris()?,
        &cfg.schedule(),
        cfg.pattern.grid_step_deg.get(),
        cfg.capture.taper,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringRow {
    pub n: i64,
    /// Analytic steering angle; `None` for the broadside-only order 0 mapping
    /// or orders that do not radiate.
    pub steering_deg: Option<f64>,
    pub argmax_deg: f64,
}

pub struct PatternRun {
    pub library: PatternLibrary,
    pub steering: Vec<SteeringRow>,
}

pub fn run_pattern(cfg: &ExperimentConfig) -> Result<PatternRun> {
    let library = library(cfg)?;
    let len = cfg.code_len();
    let d = cfg.spacing_wavelengths();
    let steering = library
        .orders()
        .map(|n| SteeringRow {
            n,
            steering_deg: steering_angle(n, len, d).ok(),
            argmax_deg: library.argmax_deg(n).unwrap(),
        })
        .collect();
    Ok(PatternRun { library, steering })
}

impl PatternRun {
    /// `patterns.csv`, `patterns.json`, `steering.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let path = dir.join("patterns.csv");
        let mut out = create(dir, "patterns.csv")?;
        self.library.write_csv(&mut out)?;
        let mut files = vec![finish(out, path)?];
        files.push(write_json(dir, "patterns.json", self.library.sidecar())?);

        let path = dir.join("steering.csv");
        let mut wtr = csv::Writer::from_writer(create(dir, "steering.csv")?);
        wtr.write_record(["n", "steering_deg", "argmax_deg"])?;
        for r in &self.steering {
            wtr.write_record([
                r.n.to_string(),
                r.steering_deg.map(|v| v.to_string()).unwrap_or_default(),
                r.argmax_deg.to_string(),
            ])?;
        }
        wtr.flush().map_err(|source| ExperimentError::Output {
            path: path.clone(),
            source,
        })?;
        files.push(path);
        Ok(files)
    }

    /// Plain-text steering table.
    pub fn table(&self) -> String {
        let mut s = String::from("   n  steering_deg  argmax_deg\n");
        for r in &self.steering {
            let steer = r
                .steering_deg
                .map_or("-".to_string(), |v| format!("{v:.2}"));
            s += &format!("{:>4}  {:>12}  {:>10.2}\n", r.n, steer, r.argmax_deg);
        }
        s
    }
}

fn write_harmonics(dir: &Path, meas: &HarmonicMeasurement) -> Result<PathBuf> {
    let path = dir.join("harmonics.csv");
    let mut wtr = csv::Writer::from_writer(create(dir, "harmonics.csv")?);
    wtr.write_record(["n", "freq_hz", "magnitude", "excluded"])?;
    for n in meas.orders() {
        wtr.write_record([
            n.to_string(),
            (meas.center_hz + n as f64 * meas.f0_hz).to_string(),
            meas.magnitude(n).unwrap().to_string(),
            meas.excluded_orders.contains(&n).to_string(),
        ])?;
    }
    wtr.flush().map_err(|source| ExperimentError::Output {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

fn write_spectrum(dir: &Path, spectrum: &AveragedSpectrum) -> Result<PathBuf> {
    let path = dir.join("spectrum.csv");
    let mut out = create(dir, "spectrum.csv")?;
    spectrum.write_csv(&mut out)?;
    finish(out, path)
}

pub struct SimulateRun {
    pub waveform: Waveform,
    pub spectrum: AveragedSpectrum,
    /// Line magnitudes at the known comb positions.
    pub markers: HarmonicMeasurement,
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateRun> {
    let schedule = cfg.schedule();
    let waveform = synthesize_received(
        &cfg.ris()?,
        &schedule,
        cfg.simulate.rx_angle_deg.get(),
        &cfg.channel(),
        &cfg.capture(),
    )?;
    let rx = cfg.receiver();
    let spectrum = average_spectrum(&waveform, rx.window_periods, rx.overlap, rx.window)?;
    let markers = detect_harmonics(
        &spectrum,
        Some(schedule.base().modulation_frequency()),
        waveform.meta.n_max,
        &rx.detect,
    )?;
    Ok(SimulateRun {
        waveform,
        spectrum,
        markers,
    })
}

impl SimulateRun {
    /// `waveform.csv`, `waveform.json`, `spectrum.csv`, `harmonics.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let path = dir.join("waveform.csv");
        let mut out = create(dir, "waveform.csv")?;
        self.waveform.write_csv(&mut out)?;
        let mut files = vec![finish(out, path)?];
        files.push(write_json(dir, "waveform.json", &self.waveform.meta)?);
        files.push(write_spectrum(dir, &self.spectrum)?);
        files.push(write_harmonics(dir, &self.markers)?);
        Ok(files)
    }
}

/// Reads `waveform.csv` plus its JSON sidecar.
pub fn load_waveform(csv_path: &Path, sidecar: Option<&Path>) -> Result<Waveform> {
    let sidecar = sidecar
        .map(Path::to_path_buf)
        .unwrap_or_else(|| csv_path.with_extension("json"));
    let open = |p: &Path| {
        File::open(p).map_err(|source| {
            ExperimentError::Config(ConfigError::Read {
                path: p.to_path_buf(),
                source,
            })
        })
    };
    Ok(Waveform::read(
        std::io::BufReader::new(open(csv_path)?),
        std::io::BufReader::new(open(&sidecar)?),
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub angle_deg: f64,
    pub psr: Option<f64>,
    pub f0_hz: f64,
    pub confidence: f64,
    pub excluded_orders: Vec<i64>,
    pub magnitudes: Vec<(i64, f64)>,
    pub num_windows: usize,
    pub resolution_hz: f64,
}

pub struct EstimateRun {
    pub output: PipelineOutput,
}

/// Runs the receiver chain on a stored waveform with the configured surface.
pub fn run_estimate(cfg: &ExperimentConfig, waveform: &Waveform) -> Result<EstimateRun> {
    if waveform.meta.code_len != 0 && waveform.meta.code_len != cfg.code_len() {
        return Err(ConfigError::Invalid {
            path: "code".into(),
            message: format!(
                "waveform was made with a {}-bit code, config has {} bits",
                waveform.meta.code_len,
                cfg.code_len()
            ),
        }
        .into());
    }
    let library = library(cfg)?;
    let mut rx = cfg.receiver();
    if rx.f0_hint.is_some() && waveform.f0() > 0.0 {
        rx.f0_hint = Some(waveform.f0());
    }
    Ok(EstimateRun {
        output: rx.run(waveform, &library)?,
    })
}

impl EstimateRun {
    pub fn report(&self) -> EstimateReport {
        let o = &self.output;
        EstimateReport {
            angle_deg: o.estimate.angle_deg,
            psr: o.estimate.psr,
            f0_hz: o.measurement.f0_hz,
            confidence: o.measurement.confidence,
            excluded_orders: o.estimate.excluded_orders.clone(),
            magnitudes: o
                .measurement
                .orders()
                .map(|n| (n, o.measurement.magnitude(n).unwrap()))
                .collect(),
            num_windows: o.spectrum.num_windows,
            resolution_hz: o.spectrum.resolution(),
        }
    }

    /// `estimate.json`, `profile.csv`, `spectrum.csv`, `harmonics.csv`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let mut files = vec![write_json(dir, "estimate.json", &self.report())?];
        let path = dir.join("profile.csv");
        let mut wtr = csv::Writer::from_writer(create(dir, "profile.csv")?);
        wtr.write_record(["angle_deg", "value"])?;
        for (a, v) in &self.output.estimate.profile {
            wtr.write_record([a.to_string(), v.to_string()])?;
        }
        wtr.flush().map_err(|source| ExperimentError::Output {
            path: path.clone(),
            source,
        })?;
        files.push(path);
        files.push(write_spectrum(dir, &self.output.spectrum)?);
        files.push(write_harmonics(dir, &self.output.measurement)?);
        Ok(files)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub true_deg: f64,
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub est_deg: Option<f64>,
    pub err_deg: Option<f64>,
    /// `ok` or the estimation error.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepStats {
    pub snr_db: Option<f64>,
    pub points: usize,
    pub failures: usize,
    pub rms_deg: f64,
    pub median_abs_deg: f64,
    pub p90_abs_deg: f64,
    pub max_abs_deg: f64,
    /// Fraction of all points (failures count as misses) within the band.
    pub within_band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub code_len: usize,
    pub n_max: i64,
    pub periods: usize,
    pub window_periods: usize,
    pub windows: usize,
    pub sample_rate_hz: f64,
    pub channel: ChannelConfig,
    pub seeds_per_point: usize,
    pub angles_deg: Vec<f64>,
    pub error_band_deg: f64,
    pub stats: Vec<SweepStats>,
}

pub struct SweepRun {
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

/// Angle x SNR x seed grid. Seeds are `channel.seed + angle_index * seeds + k`,
/// shared across SNR points. Rows come back in sweep-index order.
pub fn run_sweep(cfg: &ExperimentConfig, workers: Option<usize>) -> Result<SweepRun> {
    let sweep = cfg.sweep.clone().ok_or_else(|| ConfigError::Invalid {
        path: "sweep".into(),
        message: "missing sweep section".into(),
    })?;
    let angles = sweep.angles.values();
    let seeds = sweep.seeds.get();
    let ris = cfg.ris()?;
    let schedule = cfg.schedule();
    let library = library(cfg)?;
    let capture = cfg.capture();
    let rx = cfg.receiver();
    let base = cfg.channel();

    let mut jobs = Vec::with_capacity(angles.len() * seeds * sweep.snr_db.len());
    for &snr in &sweep.snr_db {
        for (a, &angle) in angles.iter().enumerate() {
            for k in 0..seeds {
                jobs.push((snr, angle, base.seed + (a * seeds + k) as u64));
            }
        }
    }

    let run_one = |index: usize, &(snr, angle, seed): &(Option<f64>, f64, u64)| {
        let channel = ChannelConfig {
            snr_db: snr,
            seed,
            ..base.clone()
        };
        let result = synthesize_received(&ris, &schedule, angle, &channel, &capture)
            .map_err(|e| e.to_string())
            .and_then(|w| rx.run(&w, &library).map_err(|e| e.to_string()));
        match result {
            Ok(out) => SweepRow {
                index,
                true_deg: angle,
                snr_db: snr,
                seed,
                est_deg: Some(out.estimate.angle_deg),
                err_deg: Some(out.estimate.angle_deg - angle),
                status: "ok".into(),
            },
            Err(e) => SweepRow {
                index,
                true_deg: angle,
                snr_db: snr,
                seed,
                est_deg: None,
                err_deg: None,
                status: e,
            },
        }
    };
    let compute = || -> Vec<SweepRow> {
        jobs.par_iter()
            .enumerate()
            .map(|(i, job)| run_one(i, job))
            .collect()
    };
    let rows = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ExperimentError::Pool(e.to_string()))?
            .install(compute),
        None => compute(),
    };

    let band = sweep.error_band_deg.get();
    let stats = sweep
        .snr_db
        .iter()
        .map(|&snr| {
            let subset: Vec<&SweepRow> = rows.iter().filter(|r| r.snr_db == snr).collect();
            sweep_stats(snr, &subset, band)
        })
        .collect();
    let window = rx.window_periods;
    let hop = ((window as f64 * (1.0 - rx.overlap)).round() as usize).max(1);
    let summary = SweepSummary {
        code_len: cfg.code_len(),
        n_max: library.n_max(),
        periods: cfg.capture.periods.get(),
        window_periods: window,
        windows: (cfg.capture.periods.get() - window) / hop + 1,
        sample_rate_hz: capture.sample_rate_hz,
        channel: base,
        seeds_per_point: seeds,
        angles_deg: angles,
        error_band_deg: band,
        stats,
    };
    Ok(SweepRun { rows, summary })
}

fn sweep_stats(snr_db: Option<f64>, rows: &[&SweepRow], band: f64) -> SweepStats {
    let mut abs: Vec<f64> = rows
        .iter()
        .filter_map(|r| r.err_deg.map(f64::abs))
        .collect();
    abs.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        if abs.is_empty() {
            f64::NAN
        } else {
            let rank = ((q * abs.len() as f64).ceil() as usize).clamp(1, abs.len());
            abs[rank - 1]
        }
    };
    let median = if abs.is_empty() {
        f64::NAN
    } else if abs.len() % 2 == 1 {
        abs[abs.len() / 2]
    } else {
        0.5 * (abs[abs.len() / 2 - 1] + abs[abs.len() / 2])
    };
    let rms = if abs.is_empty() {
        f64::NAN
    } else {
        (abs.iter().map(|e| e * e).sum::<f64>() / abs.len() as f64).sqrt()
    };
    let within = abs.iter().filter(|&&e| e <= band + 1e-9).count();
    SweepStats {
        snr_db,
        points: rows.len(),
        failures: rows.len() - abs.len(),
        rms_deg: rms,
        median_abs_deg: median,
        p90_abs_deg: quantile(0.9),
        max_abs_deg: abs.last().copied().unwrap_or(f64::NAN),
        within_band: if rows.is_empty() {
            0.0
        } else {
            within as f64 / rows.len() as f64
        },
    }
}

impl SweepRun {
    /// `sweep.csv` and `sweep_summary.json`.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let path = dir.join("sweep.csv");
        let mut wtr = csv::Writer::from_writer(create(dir, "sweep.csv")?);
        wtr.write_record([
            "index", "true_deg", "snr_db", "seed", "est_deg", "err_deg", "status",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            wtr.write_record([
                r.index.to_string(),
                r.true_deg.to_string(),
                opt(r.snr_db),
                r.seed.to_string(),
                opt(r.est_deg),
                opt(r.err_deg),
                r.status.clone(),
            ])?;
        }
        wtr.flush().map_err(|source| ExperimentError::Output {
            path: path.clone(),
            source,
        })?;
        Ok(vec![
            path,
            write_json(dir, "sweep_summary.json", &self.summary)?,
        ])
    }
}

pub fn run_scenario_config(cfg: &ExperimentConfig) -> Result<ScenarioReport> {
    let kind = cfg
        .scenario
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid {
            path: "scenario".into(),
            message: "missing scenario section".into(),
        })?
        .kind;
    let world = cfg.world()?;
    Ok(run_scenario(
        kind,
        &world,
        &cfg.channel(),
        &cfg.scenario_settings(),
    )?)
}

/// `scenario.json` and `scenario.csv`.
pub fn write_scenario(report: &ScenarioReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let json = dir.join("scenario.json");
    let mut out = create(dir, "scenario.json")?;
    report.write_json(&mut out)?;
    let json = finish(out, json)?;
    let path = dir.join("scenario.csv");
    let mut out = create(dir, "scenario.csv")?;
    report.write_csv(&mut out)?;
    Ok(vec![json, finish(out, path)?])
}
