//! Synthesizes what a receiver at 22 degrees sees from the coded surface and
//! shows the comb of harmonic lines in the averaged spectrum.

use ris_harmonics::array::RisConfig;
use ris_harmonics::channel::{synthesize_received, Capture, ChannelConfig};
use ris_harmonics::code::{BinaryCode, CodeSchedule};
use ris_harmonics::receiver::{average_spectrum, detect_harmonics, DetectSettings, WindowFunction};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let size = 16;
    let ris = RisConfig::half_wave(size, 5.385e9)?;
    let schedule = CodeSchedule::unit_shifts(BinaryCode::single_bit(size, 0, 1.87e-3)?, size);
    let capture = Capture::periods(&schedule, 32, 4 * size);
    let w = synthesize_received(
        &ris,
        &schedule,
        22.0,
        &ChannelConfig::with_snr(15.0, 1),
        &capture,
    )?;
    println!(
        "{} samples at {:.1} Hz, f0 = {:.3} Hz",
        w.len(),
        w.sample_rate(),
        w.f0()
    );

    let spectrum = average_spectrum(&w, 4, 0.0, WindowFunction::Rectangular)?;
    println!(
        "{} windows, resolution {:.3} Hz",
        spectrum.num_windows,
        spectrum.resolution()
    );

    let settings = DetectSettings {
        exclude_orders: Default::default(),
        ..DetectSettings::default()
    };
    // without a hint the fundamental has to be inferred from the line spacing,
    // which a single dominant line leaves ambiguous
    match detect_harmonics(&spectrum, None, size as i64 / 2, &settings) {
        Ok(m) => println!(
            "blind search: f0 {:.3} Hz (confidence {:.2})",
            m.f0_hz, m.confidence
        ),
        Err(e) => println!("blind search: {e}"),
    }
    let meas = detect_harmonics(&spectrum, Some(w.f0()), size as i64 / 2, &settings)?;
    let peak = meas.magnitudes.iter().cloned().fold(0.0, f64::max);
    for n in meas.orders() {
        let m = meas.magnitude(n).unwrap();
        println!(
            "{n:4} {:9.2} Hz {m:8.4} {}",
            n as f64 * meas.f0_hz,
            "#".repeat((40.0 * m / peak).round() as usize)
        );
    }
    Ok(())
}
