//! Full receiver chain at a few angles and SNRs: average, pick the comb,
//! match the line magnitudes against the pattern library.

use ris_harmonics::array::{ElementTaper, PatternLibrary, RisConfig};
use ris_harmonics::channel::{synthesize_received, Capture, ChannelConfig};
use ris_harmonics::code::{BinaryCode, CodeSchedule};
use ris_harmonics::receiver::Receiver;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let size = 16;
    let ris = RisConfig::half_wave(size, 5.385e9)?;
    let schedule = CodeSchedule::unit_shifts(BinaryCode::single_bit(size, 0, 1.87e-3)?, size);
    let lib = PatternLibrary::build(&ris, &schedule, 0.1, ElementTaper::None)?;
    let capture = Capture::periods(&schedule, 32, 4 * size);
    let rx = Receiver::with_f0(schedule.base().modulation_frequency()).excluding([]);

    println!("true_deg  snr_db  est_deg  psr");
    for snr in [0.0, 10.0, 20.0] {
        for truth in [-47.0, -12.0, 5.0, 30.0, 61.0] {
            let w = synthesize_received(
                &ris,
                &schedule,
                truth,
                &ChannelConfig::with_snr(snr, 4),
                &capture,
            )?;
            let out = rx.run(&w, &lib)?;
            println!(
                "{truth:8.1} {snr:7.0} {:8.1} {:5.2}",
                out.estimate.angle_deg,
                out.estimate.peak_to_second_peak_ratio()
            );
        }
    }
    Ok(())
}
