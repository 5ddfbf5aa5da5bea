//! Angle x SNR Monte-Carlo sweep driven by a config file, the same code path
//! as the `sweep` subcommand.
//!
//!     cargo run --release --example snr_sweep -- configs/desk_sweep_8x8.json

use ris_harmonics::config::ExperimentConfig;
use ris_harmonics::experiment::run_sweep;

const DEFAULT: &str = r#"{
    "surface": {"columns": 8, "rows": 8},
    "receiver": {"exclude_orders": []},
    "sweep": {"angles": {"start": -60, "stop": 60, "step": 10}, "snr_db": [-5, 5, 15], "seeds": 20}
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::from_path(path.as_ref())?,
        None => ExperimentConfig::from_json_str(DEFAULT)?,
    };
    let run = run_sweep(&cfg, None)?;
    let s = &run.summary;
    println!(
        "L = {}, {} windows of {} periods, {} seeds per point",
        s.code_len, s.windows, s.window_periods, s.seeds_per_point
    );
    for st in &s.stats {
        println!(
            "snr {:>5}: rms {:5.2}  median {:5.2}  p90 {:5.2}  within +-{} deg {:5.1}%",
            st.snr_db.map_or("inf".into(), |v| format!("{v}")),
            st.rms_deg,
            st.median_abs_deg,
            st.p90_abs_deg,
            s.error_band_deg,
            100.0 * st.within_band
        );
    }
    Ok(())
}
