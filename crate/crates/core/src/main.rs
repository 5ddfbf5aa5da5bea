use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use ris_harmonics::config::{schema_json, ConfigError, ExperimentConfig};
use ris_harmonics::experiment::{self, ExperimentError};

/// Harmonic beam patterns and angle-of-arrival estimation for space-time
/// coded surfaces.
#[derive(Parser)]
#[command(name = "ris-harmonics", version)]
struct Cli {
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed; overrides `channel.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sweep worker threads.
    #[arg(long, global = true, env = "RIS_HARMONICS_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Harmonic pattern library and steering table.
    Pattern,
    /// Synthesize a received waveform and its averaged spectrum.
    Simulate,
    /// Run the receiver on a stored waveform.
    Estimate {
        #[arg(long)]
        waveform: PathBuf,
        /// Waveform sidecar; defaults to the waveform path with `.json`.
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },
    /// Angle x SNR x seed sweep.
    Sweep,
    /// Localization scenario.
    Scenario,
    /// Print the config JSON schema.
    Schema,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_path(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.channel.seed = seed;
    }
    if cli.workers == Some(0) {
        return Err(ConfigError::Invalid {
            path: "RIS_HARMONICS_WORKERS".into(),
            message: "worker count must be >= 1".into(),
        }
        .into());
    }
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), ExperimentError> {
    if let Command::Schema = cli.command {
        print!("{}", schema_json());
        return Ok(());
    }
    let cfg = load(cli)?;
    let dir = cfg.output_dir.clone();
    let files = match &cli.command {
        Command::Pattern => {
            let run = experiment::run_pattern(&cfg)?;
            print!("{}", run.table());
            run.write_to(&dir)?
        }
        Command::Simulate => experiment::run_simulate(&cfg)?.write_to(&dir)?,
        Command::Estimate { waveform, sidecar } => {
            let w = experiment::load_waveform(waveform, sidecar.as_deref())?;
            let run = experiment::run_estimate(&cfg, &w)?;
            println!("angle_deg {}", run.output.estimate.angle_deg);
            run.write_to(&dir)?
        }
        Command::Sweep => {
            let run = experiment::run_sweep(&cfg, cli.workers)?;
            for s in &run.summary.stats {
                let snr = s.snr_db.map_or("none".to_string(), |v| v.to_string());
                println!(
                    "snr_db {snr}: rms {:.3} deg, p90 {:.3} deg, within band {:.3}, failures {}",
                    s.rms_deg, s.p90_abs_deg, s.within_band, s.failures
                );
            }
            run.write_to(&dir)?
        }
        Command::Scenario => {
            let report = experiment::run_scenario_config(&cfg)?;
            for e in &report.estimates {
                println!(
                    "{}: local {:.2} deg (true {:.2})",
                    e.surface, e.est_local_deg, e.true_local_deg
                );
            }
            if let Some(fix) = &report.fix {
                println!(
                    "fix ({:.3}, {:.3}) m, error {:.3} m",
                    fix.position.x, fix.position.y, fix.error_m
                );
            }
            experiment::write_scenario(&report, &dir)?
        }
        Command::Schema => unreachable!(),
    };
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = json!({"error": "usage", "message": e.to_string().trim_end()});
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = json!({"error": e.kind(), "message": e.to_string()});
            if let ExperimentError::Config(c) = &e {
                msg["path"] = json!(c.path());
                if let Some(line) = c.line() {
                    msg["line"] = json!(line);
                }
            }
            eprintln!("{msg}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
