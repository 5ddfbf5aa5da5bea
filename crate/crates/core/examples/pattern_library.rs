//! Harmonic beam patterns of a 16x16 surface driven by unit-shifted
//! single-bit codes. Prints each order's peak and -3 dB width, and optionally
//! writes the whole library as CSV.
//!
//!     cargo run --example pattern_library -- patterns.csv

use ris_harmonics::array::{half_power_beamwidth, ElementTaper, PatternLibrary, RisConfig};
use ris_harmonics::code::{BinaryCode, CodeSchedule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let size = 16;
    let ris = RisConfig::half_wave(size, 5.385e9)?;
    let schedule = CodeSchedule::unit_shifts(BinaryCode::single_bit(size, 0, 1.87e-3)?, size);
    let lib = PatternLibrary::build(&ris, &schedule, 0.1, ElementTaper::None)?;

    println!("order  peak_deg  hpbw_deg  peak_field");
    for n in lib.orders() {
        let p = lib.pattern(n).unwrap();
        let idx = lib
            .angles()
            .iter()
            .position(|&a| a == lib.argmax_deg(n).unwrap())
            .unwrap();
        println!(
            "{n:5} {:9.2} {:9.2} {:11.3}",
            lib.angles()[idx],
            half_power_beamwidth(p, lib.angles(), idx),
            p[idx]
        );
    }

    if let Some(path) = std::env::args().nth(1) {
        lib.write_csv(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
