//! Entropy of two perfect-conductor spheres against distance at
//! tau_R = 2 pi k_B T R/(hbar c) = 1 in three levels of approximation.
//!
//! ```text
//! cargo run --release --example entropy_vs_distance
//! ```

use casimir_core::mie::Material;
use casimir_core::thermo::{entropy_distance_scan, Mode, ENTROPY_TOLERANCE};

fn main() -> casimir_core::Result<()> {
    let ratios: Vec<f64> = (0..10).map(|i| 2.25 + 0.25 * i as f64).chain([5.0, 10.0, 20.0]).collect();
    let modes = [Mode::SingleRoundTripDipole, Mode::SingleRoundTrip, Mode::FullLogDet];
    let scan = entropy_distance_scan(&ratios, Material::perfect_conductor(), 1.0, &modes, 20, ENTROPY_TOLERANCE)?;
    println!("{:>6} {:>12} {:>12} {:>12} {:>10}", "d/R", "dipole", "srt", "full", "dip rel");
    for p in &scan {
        let s = |m| p.get(m).map_or(f64::NAN, |e| e.total);
        println!(
            "{:6.2} {:12.4e} {:12.4e} {:12.4e} {:10.4}",
            p.ratio,
            s(Mode::SingleRoundTripDipole),
            s(Mode::SingleRoundTrip),
            s(Mode::FullLogDet),
            p.relative_difference(Mode::SingleRoundTripDipole, Mode::FullLogDet).unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
