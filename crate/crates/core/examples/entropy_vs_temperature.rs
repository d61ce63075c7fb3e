//! Entropy of two small spheres (R = d/20) against temperature, scaled by
//! the perfect-conductor high-temperature value.
//!
//! ```text
//! cargo run --release --example entropy_vs_temperature
//! ```

use std::f64::consts::PI;

use casimir_core::mie::Material;
use casimir_core::roundtrip::GeometryConfig;
use casimir_core::thermo::{Mode, SphereSphere, ENTROPY_TOLERANCE};

fn main() -> casimir_core::Result<()> {
    let geometry = GeometryConfig::symmetric(20.0)?;
    let materials = [
        ("pec", Material::perfect_conductor()),
        ("gamma d/c = 1e-2", Material::drude(2.0 * PI * 400.0, 1e-2)?),
        ("gamma d/c = 1e2", Material::drude(2.0 * PI * 400.0, 1e2)?),
        ("gamma d/c = 1e4", Material::drude(2.0 * PI * 400.0, 1e4)?),
    ];
    let systems: Vec<_> = materials
        .iter()
        .map(|(name, m)| {
            SphereSphere::new(geometry, *m, *m, Mode::SingleRoundTripDipole, 1)
                .map(|s| (*name, s.with_tolerance(ENTROPY_TOLERANCE)))
        })
        .collect::<Result<_, _>>()?;
    let s_ht = systems[0].1.ht_asymptotics()?.s_ht;

    print!("{:>8}", "tau");
    for (name, _) in &systems {
        print!(" {name:>17}");
    }
    println!();
    for i in 0..=12 {
        let tau = 10f64.powf(-1.0 + 0.25 * i as f64);
        print!("{tau:8.3}");
        for (_, sys) in &systems {
            print!(" {:17.5}", sys.entropy(tau)?.total / s_ht);
        }
        println!();
    }
    Ok(())
}
