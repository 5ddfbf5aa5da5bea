//! Two surfaces each report a bearing; the rays are intersected in the least
//! squares sense. Shows how angle quantization turns into position error.

use ris_harmonics::receiver::angular_resolution;
use ris_harmonics::scenario::{intersect_bearings, quantization_error_bound, Point2, RisPose};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = RisPose::new("a", Point2::new(0.0, 0.0), 90.0);
    let b = RisPose::new("b", Point2::new(10.0, 0.0), 90.0);
    let step = angular_resolution(16);

    println!("user            exact fix        quantized fix    error_m  bound_m");
    for user in [
        Point2::new(5.0, 5.0),
        Point2::new(2.0, 12.0),
        Point2::new(9.0, 3.0),
        Point2::new(5.0, 25.0),
    ] {
        let la = a.local_angle(&user);
        let lb = b.local_angle(&user);
        let exact = intersect_bearings(&[(a.clone(), la), (b.clone(), lb)], 0.0)?;
        let q = |x: f64| (x / step).round() * step;
        let fix = intersect_bearings(&[(a.clone(), q(la)), (b.clone(), q(lb))], 0.0)?;
        let range = a.position.distance(&user).max(b.position.distance(&user));
        println!(
            "({:5.1},{:5.1})  ({:6.2},{:6.2})  ({:6.2},{:6.2})  {:7.3}  {:7.3}",
            user.x,
            user.y,
            exact.position.x,
            exact.position.y,
            fix.position.x,
            fix.position.y,
            fix.position.distance(&user),
            quantization_error_bound(range, step / 2.0, fix.conditioning)
        );
    }
    Ok(())
}
