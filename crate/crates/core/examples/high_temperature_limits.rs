//! Zero-frequency limits: the Drude reduction of the high-temperature
//! entropy for spheres and plates.
//!
//! ```text
//! cargo run --release --example high_temperature_limits
//! ```

use std::f64::consts::PI;

use casimir_core::lifshitz::{pp_entropy, PlanePlaneConfig};
use casimir_core::mie::Material;
use casimir_core::roundtrip::GeometryConfig;
use casimir_core::thermo::{ht_asymptotics, Mode};

fn main() -> casimir_core::Result<()> {
    let pec = Material::perfect_conductor();
    let drude = Material::drude(2.0 * PI * 400.0, 1e-2)?;
    let g = GeometryConfig::symmetric(20.0)?;

    for l_max in [1, 4] {
        let mode = if l_max == 1 { Mode::SingleRoundTripDipole } else { Mode::FullLogDet };
        let p = ht_asymptotics(g, pec, pec, mode, l_max)?;
        let d = ht_asymptotics(g, drude, drude, mode, l_max)?;
        println!(
            "spheres d/R = 20, l_max = {l_max}: (d/R)^6 S_HT = {:.6} pec, {:.6} drude, ratio {:.6}, TM share {:.6}",
            p.s_ht * 20f64.powi(6),
            d.s_ht * 20f64.powi(6),
            d.s_ht / p.s_ht,
            p.tm_share
        );
    }

    let tau = 50.0;
    let p = pp_entropy(&PlanePlaneConfig::new(pec, tau))?;
    let d = pp_entropy(&PlanePlaneConfig::new(drude, tau))?;
    println!("plates at tau = {tau}: S = {:.6} pec, {:.6} drude, ratio {:.6}", p.total, d.total, d.total / p.total);
    Ok(())
}
