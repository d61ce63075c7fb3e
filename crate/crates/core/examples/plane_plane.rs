//! Entropy per unit area of two parallel mirrors.
//!
//! ```text
//! cargo run --release --example plane_plane
//! ```

use std::f64::consts::PI;

use casimir_core::lifshitz::{pec_high_temperature_entropy, pp_entropy, PlanePlaneConfig};
use casimir_core::mie::Material;

fn main() -> casimir_core::Result<()> {
    let mirrors = [
        Material::perfect_conductor(),
        Material::drude(2.0 * PI * 400.0, 1e-2)?,
        Material::drude(2.0 * PI * 400.0, 1e2)?,
        Material::drude(2.0 * PI * 400.0, 1e4)?,
    ];
    let s_ht = pec_high_temperature_entropy();
    println!("S/S_HT for pec and Drude with gamma d/c = 1e-2, 1e2, 1e4");
    for i in 0..=12 {
        let tau = 10f64.powf(-1.0 + 0.25 * i as f64);
        print!("{tau:8.3}");
        for m in mirrors {
            print!(" {:10.5}", pp_entropy(&PlanePlaneConfig::new(m, tau))?.total / s_ht);
        }
        println!();
    }
    Ok(())
}
