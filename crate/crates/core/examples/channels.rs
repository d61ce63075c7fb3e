//! Polarization channels of the free energy and entropy of two Drude
//! spheres, and the multipole pairs of two close perfect-conductor spheres.
//!
//! ```text
//! cargo run --release --example channels
//! ```

use std::f64::consts::PI;

use casimir_core::mie::Material;
use casimir_core::roundtrip::GeometryConfig;
use casimir_core::thermo::{Mode, SphereSphere, ENTROPY_TOLERANCE};

fn main() -> casimir_core::Result<()> {
    let ratio: f64 = 20.0;
    let drude = Material::drude(2.0 * PI * 400.0, 10.0)?;
    let sys = SphereSphere::new(GeometryConfig::symmetric(ratio)?, drude, drude, Mode::SingleRoundTripDipole, 1)?
        .with_tolerance(ENTROPY_TOLERANCE);
    let scale = ratio.powi(6);
    println!("scaled free energy (d/R)^6 F d/(hbar c) per channel");
    println!("{:>8} {:>12} {:>12} {:>12}", "tau", "TM", "TE", "mixing");
    for i in 0..=8 {
        let tau = 10f64.powf(-2.0 + 0.5 * i as f64);
        let c = sys.free_energy(tau)?.channels.expect("single round-trip resolves channels");
        println!("{tau:8.3} {:12.5e} {:12.5e} {:12.5e}", scale * c.tm, scale * c.te, scale * c.mixing());
    }

    let ht = sys.ht_asymptotics()?;
    println!("\nhigh-temperature shares: TM {:.4}, TE {:.4}, mixing {:.4}", ht.tm_share, ht.te_share, ht.mixing_share);

    let pec = Material::perfect_conductor();
    let close = SphereSphere::new(GeometryConfig::symmetric(2.75)?, pec, pec, Mode::SingleRoundTrip, 6)?
        .with_tolerance(ENTROPY_TOLERANCE)
        .with_pairs(true);
    let s = close.entropy(1.0)?;
    println!("\nd/R = 2.75, tau = 1, l_max = 6: S = {:.4e}", s.total);
    for ((l1, l2), v) in s.pairs.expect("pairs tracked").iter().filter(|((a, b), _)| a + b <= 4) {
        println!("  ({l1},{l2}) {v:+.4e}");
    }
    Ok(())
}
