//! Fourier coefficients of a periodic on/off code and what a cyclic shift
//! does to them.
//!
//!     cargo run --example harmonic_coefficients -- 0110000000000000

use ris_harmonics::array::steering_angle;
use ris_harmonics::code::{phase_shift_per_bit, BinaryCode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bits = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "1000000000000000".into());
    let code = BinaryCode::from_bitstring(&bits, 1.87e-3)?;
    let len = code.len();
    println!(
        "code {} (L = {len}, f0 = {:.3} Hz)",
        code.to_bitstring(),
        code.modulation_frequency()
    );

    let shifted = code.shifted(3);
    println!("   n     |c_n|   phase(rad)  phase after 3-bit shift  expected");
    for n in -(len as i64 / 2)..=len as i64 / 2 {
        let c = code.harmonic(n);
        let s = shifted.harmonic(n);
        let want = c.phase - 3.0 * phase_shift_per_bit(n, len);
        let want =
            (want + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
        println!(
            "{n:4} {:9.5} {:11.5} {:24.5} {:9.5}",
            c.magnitude, c.phase, s.phase, want
        );
    }

    // half-wave columns: every positive order up to L/2 gets its own direction
    println!("\nsteering at d = lambda/2:");
    for n in 1..=len as i64 / 2 {
        println!("  n = {n:2}: {:6.2} deg", steering_angle(n, len, 0.5)?);
    }
    Ok(())
}
