//! Two surfaces on separate comb offsets share one receiver. Each comb is
//! estimated on its own and the bearings give a position fix.

use ris_harmonics::array::RisConfig;
use ris_harmonics::channel::ChannelConfig;
use ris_harmonics::code::{BinaryCode, CodeSchedule};
use ris_harmonics::receiver::Receiver;
use ris_harmonics::scenario::{
    run_scenario, Point2, RisPose, ScenarioKind, ScenarioSettings, Surface, World,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let size = 16;
    let ris = RisConfig::half_wave(size, 5.385e9)?;
    let schedule = CodeSchedule::unit_shifts(BinaryCode::single_bit(size, 0, 1.87e-3)?, size);
    let surface = |pose: RisPose| Surface {
        pose,
        ris: ris.clone(),
        schedule: schedule.clone(),
    };
    let world = World {
        surfaces: vec![
            surface(RisPose::new("west", Point2::new(0.0, 0.0), 60.0)),
            surface(RisPose::new("east", Point2::new(12.0, 0.0), 120.0).with_offset(1200.0)),
        ],
        user: Some(Point2::new(5.0, 9.0)),
    };
    let settings = ScenarioSettings {
        receiver: Receiver::default().excluding([]),
        ..ScenarioSettings::default()
    };
    let report = run_scenario(
        ScenarioKind::MultiRisFix,
        &world,
        &ChannelConfig::with_snr(20.0, 13),
        &settings,
    )?;

    println!("shared sample rate {:.1} Hz", report.sample_rate_hz);
    for e in &report.estimates {
        println!(
            "{:5}: comb at {:6.0} Hz, local {:6.2} deg (true {:6.2}), bearing {:6.2}",
            e.surface, e.offset_hz, e.est_local_deg, e.true_local_deg, e.est_bearing_deg
        );
    }
    if let Some(fix) = report.fix {
        println!(
            "fix ({:.2}, {:.2}) m, error {:.3} m, quantization bound {:.3} m",
            fix.position.x, fix.position.y, fix.error_m, fix.partition_bound_m
        );
    }
    Ok(())
}
