//! Validates experiment configs and shows what they resolve to. Errors carry
//! the offending key path and line.
//!
//!     cargo run --example load_config -- configs/*.json

use ris_harmonics::config::ExperimentConfig;

fn main() {
    let paths: Vec<String> = std::env::args().skip(1).collect();
    if paths.is_empty() {
        let broken = "{\n  \"surface\": {\n    \"spacing_wavelengths\": 0\n  }\n}";
        match ExperimentConfig::from_json_str(broken) {
            Ok(_) => println!("unexpectedly valid"),
            Err(e) => println!("rejected: {e} (path {}, line {:?})", e.path(), e.line()),
        }
        return;
    }
    for path in paths {
        match ExperimentConfig::from_path(path.as_ref()) {
            Ok(cfg) => {
                let sched = cfg.schedule();
                println!(
                    "{path}: {}x{} surface, L = {}, f0 = {:.3} Hz, {} samples/period",
                    cfg.surface.columns.get(),
                    cfg.surface.rows.get(),
                    cfg.code_len(),
                    sched.base().modulation_frequency(),
                    cfg.samples_per_period()
                );
                for w in cfg.warnings() {
                    println!("  warning: {w}");
                }
            }
            Err(e) => println!("{path}: {e}"),
        }
    }
}
